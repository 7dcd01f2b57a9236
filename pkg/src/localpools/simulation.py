"""Synthetic two-expert study: data generation and replication experiments.

The process is a linear model y = c1*x1 + c2*x2 + noise with independent
standard-normal covariates.  Two deliberately misspecified regression
experts each see only one covariate, so each is good exactly where its
missing covariate happens to be near zero — local skill varies over the
covariate plane even though global skill is symmetric.

Two replication studies quantify the machinery against the quadrature
ground truth:

* ``estimator_error_study`` — sampling distribution of the caliper
  estimator's error (estimate minus that replication's true local skill)
  across caliper widths, exposing the width's bias/variance trade-off.
* ``pool_comparison_study`` — expected log score of pooled predictions
  under several weighting schemes at chosen query points, plus the
  all-data softmax max weight that documents the estimator's polarizing
  behaviour when the caliper stops being local.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densities import Mixture, PoolWeights
from .evaluation import (
    SCHEME_EQUAL,
    SCHEME_GLOBAL_OPT,
    SCHEME_LOCAL_OPT,
    SCHEME_LOCAL_SOFTMAX,
    EvaluationStream,
)
from .experts import (
    NigPosterior,
    design_matrix,
    design_vector,
    diffuse_nig,
    nig_log_scores,
    nig_predictive,
    nig_update,
)
from .history import History, PredictionRecord
from .local_elpd import LocalElpdEstimate, caliper_elpd, true_local_elpd
from .pools import NATURAL, equal_weights, optimize_pool_weights, softmax_weights

__all__ = [
    "DgpConfig",
    "SimulatedData",
    "generate_dgp",
    "default_experts",
    "nig_evaluation_stream",
    "ErrorStudyResult",
    "estimator_error_study",
    "PoolStudyResult",
    "pool_comparison_study",
    "DEFAULT_ERROR_WIDTHS",
    "DEFAULT_POOL_WIDTHS",
    "DEFAULT_POOL_SCHEMES",
    "DEFAULT_QUERY_POINTS",
]

# Error-study widths sit on the rising part of the bias curve so both the
# bias growth and the variance shrinkage are visible before saturation.
DEFAULT_ERROR_WIDTHS = (0.4, 0.8, 1.6)
# Pool-study widths span genuinely-local through effectively-global.
DEFAULT_POOL_WIDTHS = (0.5, 1.0, 2.0, 4.0, 8.0, 50.0)
DEFAULT_POOL_SCHEMES = (SCHEME_LOCAL_SOFTMAX, SCHEME_EQUAL, SCHEME_GLOBAL_OPT)
DEFAULT_QUERY_POINTS = ((2.0, 0.0), (0.0, 0.0))


@dataclass(frozen=True, eq=False)
class DgpConfig:
    """Linear-Gaussian data-generating process with iid N(0,1) covariates."""

    coefficients: tuple[float, ...] = (1.0, 1.0)
    noise_sd: float = 1.0
    sample_size: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs or not all(math.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be a nonempty finite vector")
        if not (float(self.noise_sd) > 0.0 and math.isfinite(float(self.noise_sd))):
            raise ValueError(f"noise_sd must be a positive real, got {self.noise_sd!r}")
        if int(self.sample_size) < 2:
            raise ValueError("sample_size must be at least 2")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "noise_sd", float(self.noise_sd))
        object.__setattr__(self, "sample_size", int(self.sample_size))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_covariates(self) -> int:
        return len(self.coefficients)

    def conditional_mean(self, point) -> float:
        """E[y | covariates = point]; the quadrature oracle integrates around it."""
        z = np.asarray(point, dtype=float).reshape(-1)
        if z.size != self.n_covariates:
            raise ValueError(f"point has {z.size} dims, process has {self.n_covariates}")
        return float(np.dot(self.coefficients, z))


@dataclass(frozen=True, eq=False)
class SimulatedData:
    """One realisation: (n, d) covariates and the n outcomes."""

    covariates: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.covariates, dtype=float)
        y = np.array(self.outcomes, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.size:
            raise ValueError("covariates must be (n, d) with one outcome per row")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "outcomes", y)

    @property
    def n_obs(self) -> int:
        return self.outcomes.size


def _generate(rng: np.random.Generator, config: DgpConfig) -> SimulatedData:
    x = rng.standard_normal((config.sample_size, config.n_covariates))
    noise = rng.standard_normal(config.sample_size)
    y = x @ np.asarray(config.coefficients) + config.noise_sd * noise
    return SimulatedData(covariates=x, outcomes=y)


def generate_dgp(config: DgpConfig) -> SimulatedData:
    """Draw one reproducible realisation of the process."""
    return _generate(np.random.default_rng(config.seed), config)


def default_experts() -> tuple[tuple[str, NigPosterior], ...]:
    """The two one-covariate regression experts, with diffuse priors."""
    return (
        ("expert_x1", diffuse_nig((0,))),
        ("expert_x2", diffuse_nig((1,))),
    )


def nig_evaluation_stream(
    data: SimulatedData,
    experts=None,
) -> EvaluationStream:
    """Score regression experts through the data, one step ahead.

    At each step every expert's current posterior predictive is scored
    against the realised outcome, and only then is the observation used
    to update that expert — the stream is safe for rolling evaluation.
    Pooling points are the raw covariate vectors.
    """
    if experts is None:
        experts = default_experts()
    names = tuple(name for name, _ in experts)
    posteriors = [posterior for _, posterior in experts]
    n = data.n_obs
    scores = np.empty((n, len(posteriors)))
    for t in range(n):
        x_t = data.covariates[t]
        y_t = float(data.outcomes[t])
        for k, posterior in enumerate(posteriors):
            xd = design_vector(posterior, x_t)
            scores[t, k] = nig_predictive(posterior, xd).log_density(y_t)
            posteriors[k] = nig_update(posterior, xd, y_t)
    return EvaluationStream(
        pooling_points=data.covariates,
        outcomes=data.outcomes,
        log_scores=scores,
        expert_names=names,
    )


def _fit_and_score_split(
    data: SimulatedData, experts, train_size: int
) -> tuple[list[NigPosterior], History]:
    """Fit each expert on the first ``train_size`` rows, score the rest.

    The posterior is frozen after the training batch; the held-out rows
    are scored under that single posterior and collected into a
    ``History`` keyed by the raw covariates.
    """
    names = [name for name, _ in experts]
    x_train = data.covariates[:train_size]
    y_train = data.outcomes[:train_size]
    x_held = data.covariates[train_size:]
    y_held = data.outcomes[train_size:]
    fitted: list[NigPosterior] = []
    held_scores = np.empty((x_held.shape[0], len(names)))
    for k, (_, prior) in enumerate(experts):
        posterior = nig_update(prior, design_matrix(prior, x_train), y_train)
        fitted.append(posterior)
        held_scores[:, k] = nig_log_scores(
            posterior, design_matrix(posterior, x_held), y_held
        )
    history = History(data.covariates.shape[1], len(names))
    for i in range(x_held.shape[0]):
        history.append(
            PredictionRecord(
                time_index=train_size + i,
                pooling_point=x_held[i],
                outcome=float(y_held[i]),
                log_scores=held_scores[i],
            )
        )
    return fitted, history


def _replication_seeds(seed: int, replications: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(replications)


@dataclass(frozen=True, eq=False)
class ErrorStudyResult:
    """Sampling distribution of the caliper estimator's error at one point.

    ``errors[r, w, k]`` is (caliper estimate − that replication's true
    local skill) for expert k at width ``width_grid[w]`` in replication
    r.  ``true_elpd[r, k]`` is the per-replication quadrature truth and
    ``neighbor_counts[r, w]`` the caliper occupancy.
    """

    query_point: np.ndarray
    width_grid: tuple[float, ...]
    expert_names: tuple[str, ...]
    errors: np.ndarray
    neighbor_counts: np.ndarray
    true_elpd: np.ndarray

    def mean_errors(self) -> np.ndarray:
        """(widths, experts) mean error — the bias picture."""
        return self.errors.mean(axis=0)

    def sd_errors(self) -> np.ndarray:
        """(widths, experts) error standard deviation — the variance picture."""
        return self.errors.std(axis=0, ddof=1)

    def t_statistics(self) -> np.ndarray:
        """(widths, experts) one-sample t statistics of the mean error."""
        r = self.errors.shape[0]
        return self.mean_errors() / (self.sd_errors() / math.sqrt(r))


def estimator_error_study(
    query_point,
    width_grid=DEFAULT_ERROR_WIDTHS,
    replications: int = 500,
    config: DgpConfig | None = None,
    *,
    experts=None,
    train_fraction: float = 0.5,
) -> ErrorStudyResult:
    """Monte Carlo error distribution of the caliper estimator.

    Each replication draws a fresh realisation, fits the experts on the
    first half, scores the second half under the frozen posteriors, and
    compares the caliper estimate at ``query_point`` with the
    replication's own true local skill from quadrature.
    """
    if replications < 100:
        raise ValueError("need at least 100 replications for a stable picture")
    config = config if config is not None else DgpConfig()
    if experts is None:
        experts = default_experts()
    z = np.asarray(query_point, dtype=float).reshape(-1)
    widths = tuple(float(w) for w in width_grid)
    names = tuple(name for name, _ in experts)
    k = len(names)
    train_size = int(round(train_fraction * config.sample_size))
    if not 1 <= train_size < config.sample_size:
        raise ValueError("train fraction leaves an empty batch")

    errors = np.empty((replications, len(widths), k))
    counts = np.empty((replications, len(widths)), dtype=int)
    truths = np.empty((replications, k))
    for r, child in enumerate(_replication_seeds(config.seed, replications)):
        data = _generate(np.random.default_rng(child), config)
        fitted, history = _fit_and_score_split(data, experts, train_size)
        for j, posterior in enumerate(fitted):
            predictive = nig_predictive(posterior, design_vector(posterior, z))
            truths[r, j] = true_local_elpd(config, predictive, z)
        for w, width in enumerate(widths):
            estimate = caliper_elpd(history, z, width)
            errors[r, w] = estimate.estimates - truths[r]
            counts[r, w] = estimate.neighbor_count
    return ErrorStudyResult(
        query_point=z,
        width_grid=widths,
        expert_names=names,
        errors=errors,
        neighbor_counts=counts,
        true_elpd=truths,
    )


@dataclass(frozen=True, eq=False)
class PoolStudyResult:
    """Expected pooled log scores per scheme across replications.

    ``scores[r, m, s, w]`` is the quadrature expected log score of the
    scheme-``s`` pool at query point ``m`` with caliper width
    ``width_grid[w]`` in replication r.  Schemes without a width (equal,
    global opt) repeat the same value across the width axis.
    ``full_data_max_weight[r]`` is the largest softmax weight under
    natural scaling when the caliper covers the whole history.
    """

    query_points: np.ndarray
    width_grid: tuple[float, ...]
    schemes: tuple[str, ...]
    scores: np.ndarray
    full_data_max_weight: np.ndarray

    def mean_scores(self) -> np.ndarray:
        return self.scores.mean(axis=0)

    def standard_errors(self) -> np.ndarray:
        r = self.scores.shape[0]
        return self.scores.std(axis=0, ddof=1) / math.sqrt(r)

    def paired_comparison(self, scheme_a: str, scheme_b: str):
        """Replication-paired contrast a − b: (mean, SE, z) per (point, width)."""
        ia = self.schemes.index(scheme_a)
        ib = self.schemes.index(scheme_b)
        diff = self.scores[:, :, ia, :] - self.scores[:, :, ib, :]
        r = diff.shape[0]
        mean = diff.mean(axis=0)
        se = diff.std(axis=0, ddof=1) / math.sqrt(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            zstat = np.where(se > 0, mean / se, 0.0)
        return mean, se, zstat


def pool_comparison_study(
    query_points=DEFAULT_QUERY_POINTS,
    width_grid=DEFAULT_POOL_WIDTHS,
    replications: int = 500,
    config: DgpConfig | None = None,
    *,
    schemes=DEFAULT_POOL_SCHEMES,
    experts=None,
    train_fraction: float = 0.5,
) -> PoolStudyResult:
    """Monte Carlo comparison of pooling schemes at fixed query points.

    Shares the split-fit design of the error study; each scheme's pooled
    mixture of the fitted posterior predictives is scored by quadrature
    against the true conditional law, so differences between schemes are
    purely about the weights.
    """
    if replications < 100:
        raise ValueError("need at least 100 replications for a stable picture")
    config = config if config is not None else DgpConfig()
    if experts is None:
        experts = default_experts()
    schemes = tuple(schemes)
    known = {SCHEME_LOCAL_SOFTMAX, SCHEME_EQUAL, SCHEME_GLOBAL_OPT, SCHEME_LOCAL_OPT}
    unknown = [s for s in schemes if s not in known]
    if unknown:
        raise ValueError(f"unknown schemes {unknown}")
    z_points = np.atleast_2d(np.asarray(query_points, dtype=float))
    widths = tuple(float(w) for w in width_grid)
    k = len(experts)
    train_size = int(round(train_fraction * config.sample_size))
    if not 1 <= train_size < config.sample_size:
        raise ValueError("train fraction leaves an empty batch")

    scores = np.empty((replications, z_points.shape[0], len(schemes), len(widths)))
    polarization = np.empty(replications)
    for r, child in enumerate(_replication_seeds(config.seed, replications)):
        data = _generate(np.random.default_rng(child), config)
        fitted, history = _fit_and_score_split(data, experts, train_size)
        n_history = len(history)
        score_matrix = history.score_matrix

        global_weights = None
        if SCHEME_GLOBAL_OPT in schemes:
            global_weights = optimize_pool_weights(score_matrix)

        # Polarizing-behaviour diagnostic: natural-scaling softmax with
        # the caliper covering every record, so the factor is the full
        # history length.
        all_data = LocalElpdEstimate(
            estimates=score_matrix.mean(axis=0),
            neighbor_count=n_history,
            width=math.inf,
        )
        polarization[r] = float(
            np.max(softmax_weights(all_data, NATURAL).values)
        )

        for m in range(z_points.shape[0]):
            z = z_points[m]
            predictives = tuple(
                nig_predictive(post, design_vector(post, z)) for post in fitted
            )

            def expected_score(weights: PoolWeights) -> float:
                return true_local_elpd(
                    config, Mixture(weights=weights, components=predictives), z
                )

            for s, scheme in enumerate(schemes):
                if scheme == SCHEME_EQUAL:
                    scores[r, m, s, :] = expected_score(equal_weights(k))
                elif scheme == SCHEME_GLOBAL_OPT:
                    scores[r, m, s, :] = expected_score(global_weights)
                else:
                    for w, width in enumerate(widths):
                        if scheme == SCHEME_LOCAL_SOFTMAX:
                            weights = softmax_weights(
                                caliper_elpd(history, z, width), NATURAL
                            )
                        else:  # SCHEME_LOCAL_OPT
                            idx = history.caliper_neighbors(z, width)
                            weights = (
                                optimize_pool_weights(score_matrix[idx])
                                if idx.size
                                else equal_weights(k)
                            )
                        scores[r, m, s, w] = expected_score(weights)
    return PoolStudyResult(
        query_points=z_points,
        width_grid=widths,
        schemes=schemes,
        scores=scores,
        full_data_max_weight=polarization,
    )
