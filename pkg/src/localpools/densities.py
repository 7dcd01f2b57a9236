"""Univariate predictive distributions and stable log-domain pooling.

Everything downstream works with log densities, so the arithmetic here is
deliberately defensive: sums of exponentials are always max-subtracted,
log densities of exactly-zero density are ``-inf`` (never NaN), and a
weighted combination of identical log densities reproduces them bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "PoolWeights",
    "PredictiveDensity",
    "Gaussian",
    "StudentT",
    "Mixture",
    "pooled_log_density",
]

_LOG_2PI = math.log(2.0 * math.pi)

# Simplex membership is enforced to this absolute tolerance on the sum.
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PoolWeights:
    """A point on the unit simplex: one nonnegative weight per expert.

    The vector is validated on construction (finite, each entry in [0, 1],
    sum within ``WEIGHT_SUM_TOL`` of one) and frozen so that a weight vector
    can be shared between pools without defensive copies.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("weights must form a nonempty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("weights must be finite")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValueError("each weight must lie in [0, 1]")
        total = math.fsum(values.tolist())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL:g}; got {total!r}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, index):
        return self.values[index]


class PredictiveDensity:
    """Base class for one-dimensional predictive distributions."""

    def log_density(self, y):
        """Log density at ``y`` (scalar or array); ``-inf`` where density is 0."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Draw from the distribution using the supplied generator."""
        raise NotImplementedError


def _validate_finite_scalar(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def _match_input(y_in, out: np.ndarray):
    """Return ``out`` as a float when the input was scalar-like."""
    if np.ndim(y_in) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Gaussian(PredictiveDensity):
    """Normal distribution with mean ``mean`` and standard deviation ``stddev``."""

    mean: float
    stddev: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", _validate_finite_scalar("mean", self.mean))
        object.__setattr__(self, "stddev", _validate_finite_scalar("stddev", self.stddev))
        if self.stddev <= 0.0:
            raise ValueError(f"stddev must be > 0, got {self.stddev!r}")

    def log_density(self, y):
        arr = np.asarray(y, dtype=float)
        z = (arr - self.mean) / self.stddev
        out = -0.5 * (_LOG_2PI + z * z) - math.log(self.stddev)
        return _match_input(y, out)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.normal(self.mean, self.stddev, size=size)


@dataclass(frozen=True)
class StudentT(PredictiveDensity):
    """Location-scale Student-t with ``dof`` degrees of freedom."""

    location: float
    scale: float
    dof: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "location", _validate_finite_scalar("location", self.location))
        object.__setattr__(self, "scale", _validate_finite_scalar("scale", self.scale))
        object.__setattr__(self, "dof", _validate_finite_scalar("dof", self.dof))
        if self.scale <= 0.0:
            raise ValueError(f"scale must be > 0, got {self.scale!r}")
        if self.dof <= 0.0:
            raise ValueError(f"dof must be > 0, got {self.dof!r}")

    def log_density(self, y):
        arr = np.asarray(y, dtype=float)
        nu = self.dof
        z = (arr - self.location) / self.scale
        out = (
            gammaln(0.5 * (nu + 1.0))
            - gammaln(0.5 * nu)
            - 0.5 * math.log(nu * math.pi)
            - math.log(self.scale)
            - 0.5 * (nu + 1.0) * np.log1p(z * z / nu)
        )
        return _match_input(y, out)

    def sample(self, rng: np.random.Generator, size=None):
        return self.location + self.scale * rng.standard_t(self.dof, size=size)


@dataclass(frozen=True, eq=False)
class Mixture(PredictiveDensity):
    """Finite mixture of predictive densities with simplex weights."""

    weights: PoolWeights
    components: tuple[PredictiveDensity, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.weights, PoolWeights):
            object.__setattr__(self, "weights", PoolWeights(np.asarray(self.weights, dtype=float)))
        components = tuple(self.components)
        if len(components) != len(self.weights):
            raise ValueError(
                f"got {len(self.weights)} weights for {len(components)} components"
            )
        for c in components:
            if not isinstance(c, PredictiveDensity):
                raise TypeError(f"mixture component {c!r} is not a PredictiveDensity")
        object.__setattr__(self, "components", components)

    def log_density(self, y):
        w = self.weights.values
        active = np.flatnonzero(w > 0.0)
        arr = np.asarray(y, dtype=float)
        # Zero-weight components are skipped entirely.
        stacked = np.stack(
            [np.atleast_1d(self.components[k].log_density(arr)) for k in active]
        )
        out = _weighted_logsumexp(w[active], stacked)
        if np.ndim(y) == 0:
            return float(out[0])
        return out

    def sample(self, rng: np.random.Generator, size=None):
        w = self.weights.values
        k = len(self.components)
        if size is None:
            idx = rng.choice(k, p=w)
            return self.components[idx].sample(rng)
        idx = rng.choice(k, size=size, p=w)
        out = np.empty(np.shape(idx), dtype=float)
        for j in range(k):
            mask = idx == j
            n = int(mask.sum())
            if n:
                out[mask] = self.components[j].sample(rng, size=n)
        return out


def _weighted_logsumexp(weights: np.ndarray, log_values: np.ndarray) -> np.ndarray:
    """log(sum_k w_k exp(lp_k) / sum_k w_k) along axis 0, max-subtracted.

    ``log_values`` has shape (K,) or (K, n); entries may be ``-inf`` (zero
    density) but not NaN or ``+inf``.  Dividing by the weight sum (== 1 up to
    float noise by the simplex contract) makes the combination of identical
    log values exact: if every lp_k equals c the result is exactly c.
    """
    m = np.max(log_values, axis=0)
    w_total = np.sum(weights)
    if log_values.ndim == 1:
        if m == -np.inf:
            return np.float64(-np.inf)
        s = np.sum(weights * np.exp(log_values - m))
        return m + (np.log(s) - np.log(w_total))
    out = np.full(m.shape, -np.inf)
    ok = m > -np.inf
    if np.any(ok):
        shifted = log_values[:, ok] - m[ok]
        s = np.sum(weights[:, None] * np.exp(shifted), axis=0)
        out[ok] = m[ok] + (np.log(s) - np.log(w_total))
    return out


def pooled_log_density(weights: PoolWeights, expert_log_densities) -> float:
    """Log density of the linear pool: log sum_k w_k exp(lp_k).

    Parameters
    ----------
    weights : PoolWeights
        Simplex weights, one per expert.
    expert_log_densities : array_like
        Per-expert log densities at a single outcome.  Entries may be
        ``-inf``; NaN and ``+inf`` are rejected.

    Returns
    -------
    float
        ``-inf`` exactly when every positively weighted expert reports
        zero density.  Bounded above by ``max_k lp_k`` and below by
        ``max_k (log w_k + lp_k)``.
    """
    if not isinstance(weights, PoolWeights):
        weights = PoolWeights(np.asarray(weights, dtype=float))
    lp = np.asarray(expert_log_densities, dtype=float)
    if lp.ndim != 1:
        raise ValueError("expert log densities must form a 1-D vector")
    if lp.size != len(weights):
        raise ValueError(
            f"got {len(weights)} weights for {lp.size} expert log densities"
        )
    if np.any(np.isnan(lp)):
        raise ValueError("log densities must not be NaN")
    if np.any(lp == np.inf):
        raise ValueError("log densities must not be +inf")
    active = weights.values > 0.0
    return float(_weighted_logsumexp(weights.values[active], lp[active]))
