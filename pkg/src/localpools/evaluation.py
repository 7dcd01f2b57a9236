"""Rolling one-step-ahead evaluation of pooling schemes.

The harness walks a scored prediction stream in time order and, at every
step, builds each scheme's weights from the history *strictly before*
that step, scores the pooled prediction against the realised outcome,
and only then lets the step join the history.  Nothing at time >= t ever
influences the weights used at t.

The stream is split into three consecutive batches:

* warmup — expert training only; steps are skipped entirely,
* history — predictions enter the history and candidate pools are scored
  (to seed hyperparameter selection) but no scheme results are reported,
* evaluation — full per-step results.

Schemes with hyperparameters pick them afresh at every reported step by
running one shadow pool per grid cell over the whole scored stretch and
selecting the cell whose *own* cumulative log score so far is highest
(ties fall to the earlier grid entry).  Each shadow pool keeps its own
frozen trajectory; past shadow scores are never revised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .densities import PoolWeights
from .history import History, PredictionRecord
from .local_elpd import caliper_elpd
from .pools import (
    NATURAL,
    FixedScaling,
    equal_weights,
    local_opt_weights,
    optimize_pool_weights,
    pooled_log_scores,
    softmax_weights,
)

__all__ = [
    "SCHEME_LOCAL_SOFTMAX",
    "SCHEME_EQUAL",
    "SCHEME_GLOBAL_OPT",
    "SCHEME_LOCAL_OPT",
    "ALL_SCHEMES",
    "DEFAULT_WIDTH_GRID",
    "DEFAULT_SCALING_GRID",
    "EvaluationConfig",
    "EvaluationStream",
    "StepResult",
    "EvaluationResult",
    "rolling_evaluate",
    "select_hyperparameters",
    "cumulative_scores",
]

SCHEME_LOCAL_SOFTMAX = "local_softmax"
SCHEME_EQUAL = "equal"
SCHEME_GLOBAL_OPT = "global_opt"
SCHEME_LOCAL_OPT = "local_opt"
ALL_SCHEMES = (
    SCHEME_LOCAL_SOFTMAX,
    SCHEME_EQUAL,
    SCHEME_GLOBAL_OPT,
    SCHEME_LOCAL_OPT,
)

DEFAULT_WIDTH_GRID = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, math.inf)
DEFAULT_SCALING_GRID = (
    FixedScaling(0.5),
    FixedScaling(1.0),
    FixedScaling(2.0),
    FixedScaling(5.0),
    FixedScaling(10.0),
    NATURAL,
)

_LOCAL_SCHEMES = frozenset({SCHEME_LOCAL_SOFTMAX, SCHEME_LOCAL_OPT})


@dataclass(frozen=True, eq=False)
class EvaluationConfig:
    """Batch sizes, hyperparameter grids, and scheme selection for one run."""

    warmup_size: int = 0
    history_size: int = 0
    width_grid: tuple[float, ...] = DEFAULT_WIDTH_GRID
    scaling_grid: tuple = DEFAULT_SCALING_GRID
    schemes: tuple[str, ...] = ALL_SCHEMES
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "warmup_size", int(self.warmup_size))
        object.__setattr__(self, "history_size", int(self.history_size))
        object.__setattr__(self, "seed", int(self.seed))
        if self.warmup_size < 0 or self.history_size < 0:
            raise ValueError("batch sizes cannot be negative")
        schemes = tuple(str(s) for s in self.schemes)
        if not schemes:
            raise ValueError("at least one scheme is required")
        unknown = [s for s in schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}; valid: {list(ALL_SCHEMES)}")
        if len(set(schemes)) != len(schemes):
            raise ValueError("schemes must be unique")
        object.__setattr__(self, "schemes", schemes)
        widths = tuple(float(w) for w in self.width_grid)
        scalings = tuple(self.scaling_grid)
        if _LOCAL_SCHEMES & set(schemes):
            if not widths:
                raise ValueError("local schemes need a nonempty caliper width grid")
            if any(not w > 0.0 for w in widths):
                raise ValueError("caliper widths must be positive")
        if SCHEME_LOCAL_SOFTMAX in schemes:
            if not scalings:
                raise ValueError("the softmax scheme needs a nonempty scaling grid")
            for rule in scalings:
                if not hasattr(rule, "factor"):
                    raise ValueError(f"{rule!r} is not a scaling rule")
        object.__setattr__(self, "width_grid", widths)
        object.__setattr__(self, "scaling_grid", scalings)


@dataclass(frozen=True, eq=False)
class EvaluationStream:
    """Time-ordered scored predictions ready for rolling evaluation.

    ``log_scores[t, k]`` is expert k's log predictive density of the
    outcome realised at step t, computed using only information before t
    (the stream producer is responsible for that discipline).
    """

    pooling_points: np.ndarray
    outcomes: np.ndarray
    log_scores: np.ndarray
    expert_names: tuple[str, ...]
    time_indices: np.ndarray | None = None

    def __post_init__(self) -> None:
        z = np.array(self.pooling_points, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        y = np.array(self.outcomes, dtype=float).reshape(-1)
        scores = np.array(self.log_scores, dtype=float)
        if z.ndim != 2 or scores.ndim != 2:
            raise ValueError("pooling_points and log_scores must be 2-D")
        n = z.shape[0]
        if y.size != n or scores.shape[0] != n:
            raise ValueError(
                f"stream lengths disagree: {n} points, {y.size} outcomes, "
                f"{scores.shape[0]} score rows"
            )
        if n == 0:
            raise ValueError("stream is empty")
        names = tuple(str(s) for s in self.expert_names)
        if len(names) != scores.shape[1]:
            raise ValueError(
                f"{len(names)} expert names for {scores.shape[1]} score columns"
            )
        if len(set(names)) != len(names):
            raise ValueError("expert names must be unique")
        if not np.all(np.isfinite(z)):
            raise ValueError("pooling points must be finite")
        if not np.all(np.isfinite(y)):
            raise ValueError("outcomes must be finite")
        if np.any(np.isnan(scores)) or np.any(scores == np.inf):
            raise ValueError("log scores must be NaN-free and below +inf")
        if self.time_indices is None:
            times = np.arange(n)
        else:
            times = np.array(self.time_indices, dtype=int).reshape(-1)
            if times.size != n:
                raise ValueError("time_indices length mismatch")
            if np.any(np.diff(times) <= 0):
                raise ValueError("time_indices must be strictly increasing")
        for arr in (z, y, scores, times):
            arr.flags.writeable = False
        object.__setattr__(self, "pooling_points", z)
        object.__setattr__(self, "outcomes", y)
        object.__setattr__(self, "log_scores", scores)
        object.__setattr__(self, "expert_names", names)
        object.__setattr__(self, "time_indices", times)

    @property
    def n_steps(self) -> int:
        return self.pooling_points.shape[0]

    @property
    def n_experts(self) -> int:
        return self.log_scores.shape[1]

    @property
    def n_pooling_dims(self) -> int:
        return self.pooling_points.shape[1]


@dataclass(frozen=True, eq=False)
class StepResult:
    """Everything produced at one reported evaluation step."""

    time_index: int
    pooling_point: np.ndarray
    outcome: float
    expert_log_scores: np.ndarray
    weights: dict[str, PoolWeights]
    pooled_log_scores: dict[str, float]
    chosen_width: dict[str, float]
    chosen_scaling: dict[str, str]


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    """Reported steps plus the bookkeeping needed to audit them.

    ``candidate_log_scores[scheme]`` holds one shadow-pool log score per
    scored step (history batch and evaluation batch alike, in time
    order) and per grid cell, so the selection made at any reported step
    can be re-derived by summing rows strictly before it.
    """

    config: EvaluationConfig
    expert_names: tuple[str, ...]
    steps: tuple[StepResult, ...]
    history: History
    candidate_labels: dict[str, tuple[str, ...]] = field(default_factory=dict)
    candidate_log_scores: dict[str, np.ndarray] = field(default_factory=dict)
    candidate_times: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def totals(self) -> dict[str, float]:
        """Total reported log score per scheme (the headline comparison)."""
        return {
            scheme: float(sum(s.pooled_log_scores[scheme] for s in self.steps))
            for scheme in self.config.schemes
        }

    def cumulative(self) -> dict[str, np.ndarray]:
        return cumulative_scores(self.steps, self.config.schemes)


def select_hyperparameters(candidate_cumulative) -> int:
    """Index of the best-scoring grid cell; ties fall to the earliest one.

    With no scored steps yet every cumulative score is zero and the
    first grid cell wins, which is the declared cold-start choice.
    """
    arr = np.asarray(candidate_cumulative, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("need a nonempty 1-D vector of candidate scores")
    if np.any(np.isnan(arr)):
        raise ValueError("candidate scores must be NaN-free")
    return int(np.argmax(arr))


def cumulative_scores(steps, schemes=None) -> dict[str, np.ndarray]:
    """Per-scheme running sums of reported pooled log scores."""
    steps = list(steps)
    if schemes is None:
        schemes = steps[0].pooled_log_scores.keys() if steps else ()
    return {
        scheme: np.cumsum([s.pooled_log_scores[scheme] for s in steps])
        for scheme in schemes
    }


def _softmax_weights_at(history: History, point, width: float, scaling) -> PoolWeights:
    return softmax_weights(caliper_elpd(history, point, width), scaling)


def _global_opt_weights(history: History) -> PoolWeights:
    if len(history) == 0:
        return equal_weights(history.n_experts)
    return optimize_pool_weights(history.score_matrix)


def rolling_evaluate(stream: EvaluationStream, config: EvaluationConfig) -> EvaluationResult:
    """Run the three-batch rolling protocol over a scored stream.

    Requires ``warmup_size + history_size < len(stream)`` so that at
    least one step is reported.  Returns the reported steps together
    with the final history and the full shadow-pool score ledger.
    """
    T = stream.n_steps
    if config.warmup_size + config.history_size >= T:
        raise ValueError(
            f"stream has {T} steps; warmup {config.warmup_size} + history "
            f"{config.history_size} leaves nothing to evaluate"
        )
    k = stream.n_experts
    history = History(stream.n_pooling_dims, k)
    schemes = config.schemes

    # One shadow pool per grid cell, per scheme family that selects
    # hyperparameters.  Cells are laid out width-major / scaling-minor,
    # matching the declared tie-break order.
    families: dict[str, list] = {}
    labels: dict[str, tuple[str, ...]] = {}
    if SCHEME_LOCAL_SOFTMAX in schemes:
        cells = [(w, s) for w in config.width_grid for s in config.scaling_grid]
        families[SCHEME_LOCAL_SOFTMAX] = cells
        labels[SCHEME_LOCAL_SOFTMAX] = tuple(
            f"width={w:g},{s.label()}" for w, s in cells
        )
    if SCHEME_LOCAL_OPT in schemes:
        families[SCHEME_LOCAL_OPT] = list(config.width_grid)
        labels[SCHEME_LOCAL_OPT] = tuple(f"width={w:g}" for w in config.width_grid)

    cand_rows: dict[str, list[np.ndarray]] = {name: [] for name in families}
    cand_cum: dict[str, np.ndarray] = {
        name: np.zeros(len(cells)) for name, cells in families.items()
    }
    cand_times: list[int] = []
    steps: list[StepResult] = []
    eval_start = config.warmup_size + config.history_size

    for t in range(config.warmup_size, T):
        time_index = int(stream.time_indices[t])
        z = stream.pooling_points[t]
        outcome = float(stream.outcomes[t])
        expert_row = stream.log_scores[t]

        if t >= eval_start:
            weights: dict[str, PoolWeights] = {}
            pooled: dict[str, float] = {}
            chosen_width: dict[str, float] = {}
            chosen_scaling: dict[str, str] = {}
            for scheme in schemes:
                if scheme == SCHEME_EQUAL:
                    w = equal_weights(k)
                elif scheme == SCHEME_GLOBAL_OPT:
                    w = _global_opt_weights(history)
                elif scheme == SCHEME_LOCAL_SOFTMAX:
                    pick = select_hyperparameters(cand_cum[scheme])
                    width, rule = families[scheme][pick]
                    chosen_width[scheme] = width
                    chosen_scaling[scheme] = rule.label()
                    w = _softmax_weights_at(history, z, width, rule)
                else:  # SCHEME_LOCAL_OPT
                    pick = select_hyperparameters(cand_cum[scheme])
                    width = families[scheme][pick]
                    chosen_width[scheme] = width
                    w = local_opt_weights(history, z, width)
                weights[scheme] = w
                pooled[scheme] = float(
                    pooled_log_scores(w, expert_row[None, :])[0]
                )
            steps.append(
                StepResult(
                    time_index=time_index,
                    pooling_point=z,
                    outcome=outcome,
                    expert_log_scores=expert_row,
                    weights=weights,
                    pooled_log_scores=pooled,
                    chosen_width=chosen_width,
                    chosen_scaling=chosen_scaling,
                )
            )

        # Shadow pools are scored at every non-warmup step, including the
        # history batch, so selection has something to go on when
        # reporting starts.  Scored strictly before the record lands.
        for name, cells in families.items():
            row = np.empty(len(cells))
            for j, cell in enumerate(cells):
                if name == SCHEME_LOCAL_SOFTMAX:
                    width, rule = cell
                    wj = _softmax_weights_at(history, z, width, rule)
                else:
                    wj = local_opt_weights(history, z, cell)
                row[j] = pooled_log_scores(wj, expert_row[None, :])[0]
            cand_rows[name].append(row)
            cand_cum[name] = cand_cum[name] + row
        cand_times.append(time_index)

        history.append(
            PredictionRecord(
                time_index=time_index,
                pooling_point=z,
                outcome=outcome,
                log_scores=expert_row,
            )
        )

    return EvaluationResult(
        config=config,
        expert_names=stream.expert_names,
        steps=tuple(steps),
        history=history,
        candidate_labels=labels,
        candidate_log_scores={
            name: np.array(rows).reshape(len(cand_times), len(families[name]))
            for name, rows in cand_rows.items()
        },
        candidate_times=np.array(cand_times, dtype=int),
    )
