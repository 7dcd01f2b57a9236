"""Append-only record of scored predictions, indexed by pooling point.

``History`` is the substrate the local skill estimates are built on: each
entry pairs the point in pooling space at which a prediction was issued
with every expert's realised log predictive score.  Neighbourhood lookups
standardise coordinates by the history's own per-dimension mean and
standard deviation, so calipers are expressed in comparable units
regardless of covariate scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PredictionRecord", "History"]

# A pooling dimension that never varies carries no distance information;
# dividing by its (near-)zero spread would blow every distance up to inf.
_DEGENERATE_STD = 1e-12


@dataclass(frozen=True, eq=False)
class PredictionRecord:
    """One scored prediction: where it was made and how each expert did."""

    time_index: int
    pooling_point: np.ndarray
    outcome: float
    log_scores: np.ndarray

    def __post_init__(self) -> None:
        z = np.array(self.pooling_point, dtype=float).reshape(-1)
        s = np.array(self.log_scores, dtype=float).reshape(-1)
        if z.size == 0:
            raise ValueError("pooling_point must have at least one dimension")
        if s.size == 0:
            raise ValueError("log_scores must cover at least one expert")
        if not np.all(np.isfinite(z)):
            raise ValueError("pooling_point must be finite")
        if np.any(np.isnan(s)) or np.any(s == np.inf):
            raise ValueError("log_scores must be NaN-free and below +inf")
        z.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "time_index", int(self.time_index))
        object.__setattr__(self, "pooling_point", z)
        object.__setattr__(self, "outcome", float(self.outcome))
        object.__setattr__(self, "log_scores", s)


class History:
    """Time-ordered scored predictions with caliper neighbourhood queries.

    Appends must carry strictly increasing ``time_index`` values and a
    consistent pooling dimension / expert count.  Standardisation moments
    are cached and recomputed only after the history has grown.
    """

    def __init__(self, n_pooling_dims: int, n_experts: int) -> None:
        if n_pooling_dims < 1:
            raise ValueError("need at least one pooling dimension")
        if n_experts < 1:
            raise ValueError("need at least one expert")
        self._n_dims = int(n_pooling_dims)
        self._n_experts = int(n_experts)
        self._times: list[int] = []
        self._points: list[np.ndarray] = []
        self._outcomes: list[float] = []
        self._scores: list[np.ndarray] = []
        self._stats_version = -1
        self._cached_points: np.ndarray | None = None
        self._cached_scores: np.ndarray | None = None
        self._mean: np.ndarray | None = None
        self._std: np.ndarray | None = None

    # -- growth -------------------------------------------------------

    def append(self, record: PredictionRecord) -> None:
        if record.pooling_point.size != self._n_dims:
            raise ValueError(
                f"pooling point has {record.pooling_point.size} dims, history expects {self._n_dims}"
            )
        if record.log_scores.size != self._n_experts:
            raise ValueError(
                f"record scores {record.log_scores.size} experts, history expects {self._n_experts}"
            )
        if self._times and record.time_index <= self._times[-1]:
            raise ValueError(
                f"time_index {record.time_index} not after last recorded {self._times[-1]}"
            )
        self._times.append(record.time_index)
        self._points.append(record.pooling_point)
        self._outcomes.append(record.outcome)
        self._scores.append(record.log_scores)

    def extend(self, records) -> None:
        for record in records:
            self.append(record)

    @classmethod
    def from_records(cls, records) -> "History":
        records = list(records)
        if not records:
            raise ValueError("cannot infer dimensions from an empty record list")
        first = records[0]
        out = cls(first.pooling_point.size, first.log_scores.size)
        out.extend(records)
        return out

    # -- views --------------------------------------------------------

    def __len__(self) -> int:
        return len(self._times)

    @property
    def n_pooling_dims(self) -> int:
        return self._n_dims

    @property
    def n_experts(self) -> int:
        return self._n_experts

    @property
    def time_indices(self) -> np.ndarray:
        return np.array(self._times, dtype=int)

    @property
    def pooling_points(self) -> np.ndarray:
        """(n, d) matrix of pooling points, rebuilt lazily."""
        self._refresh_cache()
        assert self._cached_points is not None
        return self._cached_points

    @property
    def score_matrix(self) -> np.ndarray:
        """(n, K) matrix of realised expert log scores."""
        self._refresh_cache()
        assert self._cached_scores is not None
        return self._cached_scores

    @property
    def outcomes(self) -> np.ndarray:
        return np.array(self._outcomes, dtype=float)

    # -- standardisation and neighbourhoods ----------------------------

    def _refresh_cache(self) -> None:
        if self._stats_version == len(self._times):
            return
        points = np.array(self._points, dtype=float).reshape(len(self._times), self._n_dims)
        scores = np.array(self._scores, dtype=float).reshape(len(self._times), self._n_experts)
        mean = points.mean(axis=0) if len(self._times) else np.zeros(self._n_dims)
        std = points.std(axis=0) if len(self._times) else np.ones(self._n_dims)
        std = np.where(std < _DEGENERATE_STD, 1.0, std)
        points.flags.writeable = False
        scores.flags.writeable = False
        self._cached_points = points
        self._cached_scores = scores
        self._mean = mean
        self._std = std
        self._stats_version = len(self._times)

    @property
    def standardizing_mean(self) -> np.ndarray:
        self._refresh_cache()
        assert self._mean is not None
        return self._mean.copy()

    @property
    def standardizing_std(self) -> np.ndarray:
        self._refresh_cache()
        assert self._std is not None
        return self._std.copy()

    def standardize(self, point) -> np.ndarray:
        """Map a pooling point into the history's standardised coordinates."""
        z = np.asarray(point, dtype=float).reshape(-1)
        if z.size != self._n_dims:
            raise ValueError(f"point has {z.size} dims, history expects {self._n_dims}")
        self._refresh_cache()
        assert self._mean is not None and self._std is not None
        return (z - self._mean) / self._std

    def distances(self, point) -> np.ndarray:
        """Standardised Euclidean distance from ``point`` to every record."""
        if len(self._times) == 0:
            return np.empty(0)
        target = self.standardize(point)
        assert self._mean is not None and self._std is not None
        standardized = (self.pooling_points - self._mean) / self._std
        return np.sqrt(np.sum((standardized - target) ** 2, axis=1))

    def caliper_neighbors(self, point, width: float) -> np.ndarray:
        """Row indices whose standardised distance to ``point`` is <= width.

        The boundary is inclusive: a record exactly ``width`` away counts.
        """
        if not (width >= 0.0):
            raise ValueError(f"caliper width must be nonnegative, got {width!r}")
        if len(self._times) == 0:
            return np.empty(0, dtype=int)
        return np.nonzero(self.distances(point) <= width)[0]
