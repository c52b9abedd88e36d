"""Column screening and leading-singular-vector machinery.

The screen keeps the columns whose standardized squared norm
Q(j) = (||x_j||^2 - n) / sqrt(2n) clears sqrt(2 q log p). The cluster
direction is then read off the top left singular vector of the
surviving submatrix, computed by power iteration on the small n-by-n
Gram matrix (n << p makes the Gram product the dominant cost).

Closed-form predictions for the screen are also provided: survival
probabilities of null and signal columns, the expected selected count,
the fat/skinny crossover exponent, and the eigenvalue band that the
post-selection noise Gram matrix should occupy. These are what the
Monte Carlo harness checks empirical spectra against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ArwParams
from .numerics import chisq_sf, noncentral_chisq_sf, std_normal_sf

__all__ = [
    "ScreenResult",
    "SingularPair",
    "SpectralPrediction",
    "chi2_scores",
    "select_features",
    "screen_threshold",
    "leading_left_singular",
    "predict_selection",
    "predict_null_selection",
    "pi1_normal_approx",
    "q_star",
    "q_tilde",
    "signal_exponent",
]


@dataclass
class ScreenResult:
    scores: np.ndarray
    selected: np.ndarray
    q: float
    threshold: float


@dataclass
class SingularPair:
    vector: np.ndarray
    value: float
    iterations: int
    converged: bool


@dataclass
class SpectralPrediction:
    pi0: float
    pi1: float
    m_q: float
    q_tilde: float
    regime: str  # "fat" or "skinny"
    eigen_range: tuple[float, float]


def chi2_scores(X: np.ndarray) -> np.ndarray:
    """Standardized squared column norms (mean 0, variance 1 under noise)."""
    n = X.shape[0]
    return (np.sum(X * X, axis=0) - n) / math.sqrt(2 * n)


def screen_threshold(p: int, q: float) -> float:
    if q <= 0:
        raise ValueError("q must be positive")
    return math.sqrt(2 * q * math.log(p))


def select_features(scores: np.ndarray, p: int, q: float) -> ScreenResult:
    """Indices with score >= sqrt(2 q log p); equality is kept.

    An empty selection is a legal result and is returned as such.
    """
    thr = screen_threshold(p, q)
    return ScreenResult(
        scores=scores,
        selected=np.flatnonzero(scores >= thr),
        q=q,
        threshold=thr,
    )


_START_SEED = 0x5EEDCA7  # fixed internal seed: deterministic start vector


def leading_left_singular(M: np.ndarray, tol: float = 1e-8, max_iter: int = 2000) -> SingularPair:
    """Top left singular vector of M by power iteration on M @ M.T.

    Stops when the Rayleigh quotient is stable to ``tol`` relatively and
    the iterate moves by less than ``tol`` in norm. On a flat leading
    spectrum (two equal top singular values) convergence may never
    trigger; the best iterate is then returned with converged=False.

    Sign convention: the first nonzero coordinate is made positive.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0 or not np.any(M):
        raise ValueError("M must be a nonzero 2-d matrix")
    n = M.shape[0]
    G = M @ M.T
    rng = np.random.default_rng(_START_SEED)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam_prev = float(v @ G @ v)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = G @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v landed in the kernel; restart deterministically
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            lam_prev = float(v @ G @ v)
            continue
        w /= norm_w
        lam = float(w @ G @ w)
        drift = np.linalg.norm(w - v if w @ v >= 0 else w + v)
        v = w
        if abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300) and drift <= tol:
            converged = True
            lam_prev = lam
            break
        lam_prev = lam
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return SingularPair(
        vector=v,
        value=math.sqrt(max(lam_prev, 0.0)),
        iterations=it,
        converged=converged,
    )


def q_star(theta: float, beta: float, r: float) -> float:
    """Screening exponent that optimizes the post-selection signal share."""
    low = (beta - theta / 2) / 3
    if r < low:
        return 4 * r
    return (beta - theta / 2 + r) ** 2 / (4 * r)


def q_tilde(beta: float, theta: float, r: float) -> float:
    """Fat/skinny crossover: selected count and sample count balance here."""
    if beta > 1 - theta:
        return 1 - theta
    return max(1 - theta, (math.sqrt(1 - beta - theta) + math.sqrt(r)) ** 2)


def signal_exponent(q: float, beta: float, theta: float, r: float) -> float:
    """Growth exponent (base p) of the rank-one signal eigenvalue after screening."""
    gap = max(math.sqrt(q) - math.sqrt(r), 0.0)
    return 1 + theta / 2 - beta - gap * gap


def pi1_normal_approx(q: float, r: float, p: int) -> float:
    """Normal-limit approximation to the signal-column survival probability."""
    return std_normal_sf((math.sqrt(q) - math.sqrt(r)) * math.sqrt(2 * math.log(p)))


def _eigen_band(n: int, m_q: float, logp: float, q: float, qt: float, band_constant: float):
    regime = "fat" if q < qt else "skinny"
    center = m_q if regime == "fat" else float(n)
    half = band_constant * math.sqrt(n * m_q * logp)
    return regime, (center - half, center + half)


def predict_selection(params: ArwParams, q: float, band_constant: float = 3.0) -> SpectralPrediction:
    """Closed-form screen predictions under the log-adjusted calibration.

    pi0/pi1 are exact chi-square survival values at the screening cut
    (pi1 through the noncentral series; see :func:`pi1_normal_approx`
    for the labeled normal shortcut). The expected selected count mixes
    them by the expected signal count, and the eigenvalue band uses the
    expected count as a stand-in for its trace-weighted counterpart
    (the two agree to first order).
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if params.r is None:
        raise ValueError("predict_selection needs the log-adjusted (r) calibration")
    n = params.n
    p = params.p
    logp = math.log(p)
    cut = n + 2 * math.sqrt(q * n * logp)
    pi0 = chisq_sf(cut, n)
    lam = n * params.tau**2
    pi1 = noncentral_chisq_sf(cut, n, lam)
    s = params.expected_signals
    m_q = (p - s) * pi0 + s * pi1
    qt = q_tilde(params.beta, params.theta, params.r)
    regime, band = _eigen_band(n, m_q, logp, q, qt, band_constant)
    return SpectralPrediction(pi0=pi0, pi1=pi1, m_q=m_q, q_tilde=qt, regime=regime, eigen_range=band)


def predict_null_selection(p: int, theta: float, q: float, band_constant: float = 3.0) -> SpectralPrediction:
    """Screen predictions for pure-noise data (no signal columns at all).

    The crossover reduces to 1 - theta and the expected count to p * pi0.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    n = int(math.floor(p**theta + 0.5))
    logp = math.log(p)
    cut = n + 2 * math.sqrt(q * n * logp)
    pi0 = chisq_sf(cut, n)
    m_q = p * pi0
    qt = 1 - theta
    regime, band = _eigen_band(n, m_q, logp, q, qt, band_constant)
    return SpectralPrediction(pi0=pi0, pi1=0.0, m_q=m_q, q_tilde=qt, regime=regime, eigen_range=band)
