"""Independent oracles the test suite checks the package against.

Everything here deliberately avoids the package's own algorithms:
brute-force simplex grids instead of EM, adaptive quadrature instead of
Gauss-Hermite, posterior sampling and marginal-likelihood ratios instead
of the closed-form predictive.  Slow and dumb on purpose.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln
from scipy.stats import norm


def pooled_objective(score_matrix: np.ndarray, w: np.ndarray) -> float:
    """Mean over rows of log sum_k w_k exp(score_tk), max-stabilised."""
    row_max = score_matrix.max(axis=1)
    return float(np.mean(np.log(np.exp(score_matrix - row_max[:, None]) @ w) + row_max))


def _objective_many(score_matrix: np.ndarray, W: np.ndarray) -> np.ndarray:
    """pooled_objective for every weight row in W, chunked to bound memory."""
    row_max = score_matrix.max(axis=1)
    A = np.exp(score_matrix - row_max[:, None])  # (T, K)
    out = np.empty(W.shape[0])
    chunk = 200_000
    for lo in range(0, W.shape[0], chunk):
        block = W[lo : lo + chunk]
        out[lo : lo + chunk] = np.log(block @ A.T).mean(axis=1)
    return out + row_max.mean()


def simplex_grid(n_experts: int, resolution: float) -> np.ndarray:
    """All weight vectors on the simplex lattice with the given step."""
    m = int(round(1.0 / resolution))
    if n_experts == 2:
        w1 = np.arange(m + 1) / m
        return np.column_stack([w1, 1.0 - w1])
    if n_experts == 3:
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        keep = (i + j) <= m
        w1 = i[keep] / m
        w2 = j[keep] / m
        return np.column_stack([w1, w2, 1.0 - w1 - w2])
    raise NotImplementedError("grid oracle covers K = 2 or 3")


def grid_search_best(score_matrix: np.ndarray, resolution: float = 1e-3):
    """Best objective on the simplex lattice: (objective, weights)."""
    W = simplex_grid(score_matrix.shape[1], resolution)
    vals = _objective_many(score_matrix, W)
    best = int(np.argmax(vals))
    return float(vals[best]), W[best]


def refined_grid_best(
    score_matrix: np.ndarray,
    coarse_resolution: float = 1e-3,
    fine_resolution: float = 2e-5,
):
    """Two-stage grid search: coarse lattice, then a fine lattice around
    the coarse argmax (one coarse cell in every direction).  The fine
    stage shrinks the lattice-vs-optimum gap by (fine/coarse)^2, far
    below 1e-6 nats for the matrices used in the tests.
    """
    k = score_matrix.shape[1]
    coarse_val, coarse_w = grid_search_best(score_matrix, coarse_resolution)
    steps = int(round(2 * coarse_resolution / fine_resolution))
    offsets = (np.arange(steps + 1) * fine_resolution) - coarse_resolution
    if k == 2:
        w1 = np.clip(coarse_w[0] + offsets, 0.0, 1.0)
        W = np.column_stack([w1, 1.0 - w1])
    elif k == 3:
        o1, o2 = np.meshgrid(offsets, offsets, indexing="ij")
        w1 = (coarse_w[0] + o1).ravel()
        w2 = (coarse_w[1] + o2).ravel()
        keep = (w1 >= 0.0) & (w2 >= 0.0) & (w1 + w2 <= 1.0)
        W = np.column_stack([w1[keep], w2[keep], 1.0 - w1[keep] - w2[keep]])
    else:
        raise NotImplementedError
    vals = _objective_many(score_matrix, W)
    best = int(np.argmax(vals))
    return max(float(vals[best]), coarse_val), W[best]


def expected_log_score_quad(log_density, mean: float, sd: float) -> float:
    """E[log_density(y)] for y ~ N(mean, sd^2), by adaptive quadrature."""
    value, _ = quad(
        lambda y: log_density(y) * norm.pdf(y, mean, sd),
        mean - 12 * sd,
        mean + 12 * sd,
        limit=200,
    )
    return value


def nig_predictive_logpdf_by_evidence_ratio(
    m0, P0, a0: float, b0: float, X, y, x_new, y_new: float
) -> float:
    """log p(y_new | x_new, data) as a ratio of NIG model evidences.

    Uses its own posterior algebra (residual form of the rate update)
    and the marginal-likelihood identity
    p(y*) = Z(data + y*) / Z(data), so it shares no code with the
    package's Student-t predictive.
    """

    def posterior(m_prior, P_prior, a_prior, b_prior, X_obs, y_obs):
        P_post = P_prior + X_obs.T @ X_obs
        m_post = np.linalg.solve(P_post, P_prior @ m_prior + X_obs.T @ y_obs)
        resid = y_obs - X_obs @ m_post
        a_post = a_prior + 0.5 * y_obs.size
        b_post = b_prior + 0.5 * (resid @ y_obs + (m_prior - m_post) @ P_prior @ m_prior)
        return m_post, P_post, a_post, b_post

    def log_evidence(P_prior, a_prior, b_prior, P_post, a_post, b_post, n_obs):
        sign0, logdet0 = np.linalg.slogdet(P_prior)
        sign1, logdet1 = np.linalg.slogdet(P_post)
        assert sign0 > 0 and sign1 > 0
        return (
            -0.5 * n_obs * math.log(2.0 * math.pi)
            + 0.5 * (logdet0 - logdet1)
            + a_prior * math.log(b_prior)
            - a_post * math.log(b_post)
            + gammaln(a_post)
            - gammaln(a_prior)
        )

    m_n, P_n, a_n, b_n = posterior(m0, P0, a0, b0, X, y)
    X_aug = np.vstack([X, x_new])
    y_aug = np.append(y, y_new)
    m_a, P_a, a_a, b_a = posterior(m0, P0, a0, b0, X_aug, y_aug)
    ev_n = log_evidence(P0, a0, b0, P_n, a_n, b_n, y.size)
    ev_a = log_evidence(P0, a0, b0, P_a, a_a, b_a, y_aug.size)
    return ev_a - ev_n


def sample_nig_predictive(
    coefficient_mean,
    precision_matrix,
    shape_a: float,
    rate_b: float,
    x,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Draws from the posterior predictive by explicit parameter sampling."""
    cov_unscaled = np.linalg.inv(precision_matrix)
    chol = np.linalg.cholesky(cov_unscaled)
    sigma2 = 1.0 / rng.gamma(shape=shape_a, scale=1.0 / rate_b, size=size)
    p = coefficient_mean.size
    beta = (
        coefficient_mean[None, :]
        + np.sqrt(sigma2)[:, None] * (rng.standard_normal((size, p)) @ chol.T)
    )
    return beta @ x + np.sqrt(sigma2) * rng.standard_normal(size)
