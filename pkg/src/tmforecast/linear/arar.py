"""ARAR: memory-shortening filter followed by a subset AR model on lags (1, l1, l2, l3)."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..errors import DegenerateFitError, InsufficientDataError
from .arma import sample_acvf

MIN_LENGTH = 20
LAG_CAP = 26
MAX_TAU = 15
MAX_PASSES = 3
LONG_MEMORY_PHI = 0.93


def _best_lag_filter(y: np.ndarray):
    """For tau = 1..15 find phi(tau) minimizing the relative lag-tau residual; return the best."""
    n = y.size
    best = None
    for tau in range(1, min(MAX_TAU, n - 1) + 1):
        cur, lag = y[tau:], y[:-tau]
        denom = lag @ lag
        if denom == 0.0:
            continue
        phi = (cur @ lag) / denom
        norm = cur @ cur
        if norm == 0.0:
            continue
        err = float(np.sum((cur - phi * lag) ** 2) / norm)
        if best is None or err < best[2]:
            best = (tau, float(phi), err)
    return best


def arar_shorten(series) -> tuple[np.ndarray, np.ndarray, int]:
    """Apply memory-shortening filters until the series is classified short-memory.

    Returns ``(shortened, psi, k)`` where ``shortened[t] = sum_j psi_j Y[t + k - j]``
    with ``psi_0 = 1``; ``psi`` holds psi_1..psi_k (possibly empty).

    Each pass picks the lag tau <= 15 with the smallest relative residual
    Err(tau) of ``Y_t - phi Y_{t-tau}``. If Err <= 8/n, or phi >= 0.93 with
    tau > 2, the lag-tau filter is applied. If phi >= 0.93 with tau <= 2, an
    AR(2) filter fitted by least squares is applied. Otherwise the series is
    short-memory. At most three passes run.
    """
    y = np.asarray(series, dtype=float)
    if y.size < MIN_LENGTH:
        raise InsufficientDataError(f"memory shortening needs at least {MIN_LENGTH} points, got {y.size}")
    psi_poly = np.array([1.0])
    for _ in range(MAX_PASSES):
        n = y.size
        best = _best_lag_filter(y)
        if best is None:
            break
        tau, phi, err = best
        if err <= 8.0 / n or (phi >= LONG_MEMORY_PHI and tau > 2):
            filt = np.zeros(tau + 1)
            filt[0], filt[tau] = 1.0, -phi
            y = y[tau:] - phi * y[:-tau]
        elif phi >= LONG_MEMORY_PHI:
            A = np.column_stack([y[1:-1], y[:-2]])
            coef, *_ = np.linalg.lstsq(A, y[2:], rcond=None)
            filt = np.array([1.0, -coef[0], -coef[1]])
            y = y[2:] - coef[0] * y[1:-1] - coef[1] * y[:-2]
        else:
            break
        psi_poly = np.convolve(psi_poly, filt)
        if y.size < MIN_LENGTH:
            break
    return y, psi_poly[1:], psi_poly.size - 1


@dataclass(frozen=True)
class ArarModel:
    """Fitted ARAR model.

    ``psi`` are the shortening coefficients psi_1..psi_k of
    ``psi(B) = 1 + psi_1 B + ... + psi_k B^k``; ``phi`` are the AR coefficients
    at ``lags`` so that ``phi(B) = 1 - sum phi_l B^l``. ``xi`` (derived) holds
    xi_1..xi_{k+l3} of the product ``psi(B) phi(B)``.
    """

    psi: tuple[float, ...]
    phi: tuple[float, float, float, float]
    lags: tuple[int, int, int, int]
    sample_mean: float
    noise_variance: float
    xi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(float(c) for c in self.psi))
        object.__setattr__(self, "phi", tuple(float(c) for c in self.phi))
        object.__setattr__(self, "lags", tuple(int(l) for l in self.lags))
        if len(self.phi) != len(self.lags):
            raise ValueError("phi and lags must have equal length")
        if list(self.lags) != sorted(set(self.lags)) or self.lags[0] < 1:
            raise ValueError(f"lags must be strictly increasing and positive, got {self.lags}")
        phi_poly = np.zeros(self.lags[-1] + 1)
        phi_poly[0] = 1.0
        for lag, c in zip(self.lags, self.phi):
            phi_poly[lag] -= c
        xi = np.convolve(np.r_[1.0, self.psi], phi_poly)
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi[1:])

    @property
    def k(self) -> int:
        return len(self.psi)

    @property
    def phi_at_one(self) -> float:
        return 1.0 - sum(self.phi)

    @property
    def constant(self) -> float:
        return self.phi_at_one * self.sample_mean

    @property
    def required_history(self) -> int:
        return self.k + self.lags[-1]


def _subset_yule_walker_grid(x: np.ndarray, lag_cap: int):
    """Evaluate Yule-Walker fits on lags (1, l1, l2, l3) for every 1 < l1 < l2 < l3 <= lag_cap."""
    gamma = sample_acvf(x, lag_cap)
    if gamma.size <= lag_cap:
        raise InsufficientDataError("series too short for the ARAR lag search")
    if not gamma[0] > 0:
        raise DegenerateFitError("mean-corrected series has zero variance")
    combos = np.array([(1, a, b, c) for a, b, c in combinations(range(2, lag_cap + 1), 3)])
    G = gamma[np.abs(combos[:, :, None] - combos[:, None, :])]
    rhs = gamma[combos]
    cond = np.linalg.cond(G)
    ok = cond < 1e12
    if not np.any(ok):
        raise DegenerateFitError("every Yule-Walker system in the lag search is singular")
    coefs = np.full(rhs.shape, np.nan)
    coefs[ok] = np.linalg.solve(G[ok], rhs[ok][..., None])[..., 0]
    sigma2 = np.where(ok, gamma[0] - np.sum(coefs * rhs, axis=1), np.inf)
    return combos, coefs, sigma2


def arar_fit(series, lag_cap: int = LAG_CAP) -> ArarModel:
    """Shorten memory, mean-correct, and pick the lag set minimizing the noise variance."""
    y = np.asarray(series, dtype=float)
    s, psi, k = arar_shorten(y)
    if s.size <= lag_cap + 1:
        raise InsufficientDataError(
            f"shortened series has {s.size} points; ARAR needs more than {lag_cap + 1}"
        )
    s_bar = float(np.mean(s))
    x = s - s_bar
    combos, coefs, sigma2 = _subset_yule_walker_grid(x, lag_cap)
    best = int(np.argmin(sigma2))
    return ArarModel(
        tuple(psi), tuple(coefs[best]), tuple(combos[best]), s_bar, max(float(sigma2[best]), 0.0)
    )


def arar_predict(model: ArarModel, history, h: int = 1) -> np.ndarray:
    """h-step forecasts P_n Y_{n+1..n+h}; unobserved values are replaced by their forecasts."""
    y = np.asarray(history, dtype=float)
    if h < 1:
        raise ValueError("horizon must be at least 1")
    depth = model.xi.size
    if y.size < depth:
        raise InsufficientDataError(f"history of {y.size} points shorter than k + l3 = {depth}")
    buf = list(y[-depth:]) if depth else []
    out = np.empty(h)
    for step in range(h):
        # buf[-j] is P_n Y_{n+step+1-j}
        pred = model.constant - sum(model.xi[j - 1] * buf[-j] for j in range(1, depth + 1))
        out[step] = pred
        buf.append(pred)
    return out


def arar_prediction_path(model: ArarModel, series) -> np.ndarray:
    """One-step forecasts for every index with enough history (NaN before that).

    Element ``t`` predicts ``series[t]`` from ``series[:t]``; the final element
    forecasts the next unobserved value.
    """
    y = np.asarray(series, dtype=float)
    depth = model.xi.size
    out = np.full(y.size + 1, np.nan)
    if y.size < depth:
        return out
    pred = np.full(y.size + 1 - depth, model.constant)
    for j in range(1, depth + 1):
        pred -= model.xi[j - 1] * y[depth - j : y.size + 1 - j]
    out[depth:] = pred
    return out
