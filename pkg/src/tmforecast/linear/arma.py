"""ARMA / ARIMA one-step prediction via the innovations algorithm."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import DegenerateFitError, InsufficientDataError, InvalidModelError


def _roots_outside_unit_circle(poly_coefs: np.ndarray) -> bool:
    """``poly_coefs`` are c_1..c_k of ``1 + c_1 z + ... + c_k z^k``."""
    coefs = np.trim_zeros(np.asarray(poly_coefs, dtype=float), "b")
    if coefs.size == 0:
        return True
    roots = np.roots(np.r_[coefs[::-1], 1.0])
    return bool(np.all(np.abs(roots) > 1.0 + 1e-10))


@dataclass(frozen=True)
class ArmaModel:
    """Zero-mean ARMA(p, q) after subtracting ``mean``.

    X_t - phi_1 X_{t-1} - ... - phi_p X_{t-p} = Z_t + theta_1 Z_{t-1} + ... + theta_q Z_{t-q}
    """

    phi: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    noise_variance: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(c) for c in self.phi))
        object.__setattr__(self, "theta", tuple(float(c) for c in self.theta))
        if not (np.isfinite(self.noise_variance) and self.noise_variance > 0):
            raise InvalidModelError(f"noise variance must be positive, got {self.noise_variance}")
        if not np.isfinite(self.mean):
            raise InvalidModelError("mean must be finite")
        if not _roots_outside_unit_circle(-np.asarray(self.phi)):
            raise InvalidModelError(f"AR polynomial is not causal: phi={self.phi}")
        if not _roots_outside_unit_circle(np.asarray(self.theta)):
            raise InvalidModelError(f"MA polynomial is not invertible: theta={self.theta}")

    @property
    def p(self) -> int:
        return len(self.phi)

    @property
    def q(self) -> int:
        return len(self.theta)

    @property
    def m(self) -> int:
        return max(self.p, self.q)

    def psi_weights(self, n: int) -> np.ndarray:
        """First ``n`` coefficients of the causal MA(infinity) representation."""
        psi = np.zeros(n)
        psi[0] = 1.0
        for j in range(1, n):
            acc = self.theta[j - 1] if j <= self.q else 0.0
            for k in range(1, min(j, self.p) + 1):
                acc += self.phi[k - 1] * psi[j - k]
            psi[j] = acc
        return psi

    def acvf(self, nlags: int) -> np.ndarray:
        """Autocovariances gamma(0..nlags) of the zero-mean process.

        Solves the linear difference equations for gamma(0..p) exactly, then
        extends with the homogeneous recursion.
        """
        p, q = self.p, self.q
        phi = np.asarray(self.phi)
        theta = np.r_[1.0, self.theta]
        psi = self.psi_weights(q + 1)
        # rhs_k = sigma^2 * sum_{j=k}^{q} theta_j psi_{j-k}
        rhs = np.array([
            self.noise_variance * sum(theta[j] * psi[j - k] for j in range(k, q + 1))
            for k in range(max(p, q) + 1)
        ])
        size = p + 1
        A = np.zeros((size, size))
        for k in range(size):
            A[k, k] += 1.0
            for j in range(1, p + 1):
                A[k, abs(k - j)] -= phi[j - 1]
        gamma = np.zeros(max(nlags, max(p, q)) + 1)
        gamma[:size] = np.linalg.solve(A, rhs[:size])
        for k in range(size, gamma.size):
            g = sum(phi[j - 1] * gamma[k - j] for j in range(1, p + 1))
            if k <= q:
                g += rhs[k]
            gamma[k] = g
        return gamma[: nlags + 1]


@dataclass(frozen=True)
class InnovationsState:
    """``theta_nj[n][j-1]`` holds theta_{n,j} for 1 <= j <= n; ``v[n]`` is v_n."""

    theta_nj: list[np.ndarray]
    v: np.ndarray
    m: int = 0

    def theta(self, n: int, j: int) -> float:
        row = self.theta_nj[n]
        return float(row[j - 1]) if j <= row.size else 0.0


def _innovations_kernel(kappa: Callable[[int, int], float], n: int, band: int | None = None,
                        band_from: int = 0) -> InnovationsState:
    """Innovations recursion on a covariance kernel ``kappa(i, j)`` (1-based indices).

    For n > ``band_from`` only theta_{n,j} with j <= ``band`` are computed; the
    rest are known to vanish (an MA(band) structure in the transformed process).
    """
    v = np.zeros(n + 1)
    v[0] = kappa(1, 1)
    if not v[0] > 0:
        raise InvalidModelError("the innovations algorithm requires kappa(1, 1) > 0")
    rows: list[np.ndarray] = [np.zeros(0)]
    # rev[k] stores theta_{k, k-j} at index j, i.e. row k reversed, for the inner sum
    for i in range(1, n + 1):
        row = np.zeros(i)
        lo = 0
        if band is not None and i > band_from:
            lo = max(0, i - band)
        for k in range(lo, i):
            # theta_{i, i-k} = (kappa(i+1, k+1) - sum_{j<k} theta_{k,k-j} theta_{i,i-j} v_j) / v_k
            acc = kappa(i + 1, k + 1)
            if k > 0:
                j = np.arange(max(lo, 0), k)
                if j.size:
                    acc -= float(np.sum(rows[k][k - j - 1] * row[i - j - 1] * v[j]))
            row[i - k - 1] = acc / v[k]
        v[i] = kappa(i + 1, i + 1) - float(np.sum(row[::-1] ** 2 * v[:i]))
        if not v[i] > 0:
            # numerically singular: the process is perfectly predictable from here on
            v[i] = np.finfo(float).tiny
        rows.append(row)
    return InnovationsState(rows, v)


def innovations(acvf: Sequence[float], n: int) -> InnovationsState:
    """Innovations coefficients theta_{nj} and MSEs v_0..v_n for a stationary autocovariance."""
    acvf = np.asarray(acvf, dtype=float)
    if n < 1:
        raise InvalidModelError("n must be at least 1")
    if acvf.size == 0 or not acvf[0] > 0:
        raise InvalidModelError("acvf[0] must be positive")

    def kappa(i, j):
        lag = abs(i - j)
        return float(acvf[lag]) if lag < acvf.size else 0.0

    return _innovations_kernel(kappa, n)


def arma_kappa(model: ArmaModel) -> Callable[[int, int], float]:
    """Covariance kernel of W_t = X_t / sigma (t <= m), phi(B) X_t / sigma (t > m)."""
    p, q, m = model.p, model.q, model.m
    s2 = model.noise_variance
    gamma = model.acvf(2 * m + p + 1)
    theta = np.r_[1.0, model.theta]
    phi = model.phi

    def g(h):
        return gamma[abs(h)]

    def kappa(i, j):
        lo, hi = min(i, j), max(i, j)
        d = hi - lo
        if hi <= m:
            return g(d) / s2
        if lo <= m < hi <= 2 * m:
            return (g(d) - sum(phi[r - 1] * g(r - d) for r in range(1, p + 1))) / s2
        if lo > m:
            return float(sum(theta[r] * theta[r + d] for r in range(0, q - d + 1))) if d <= q else 0.0
        return 0.0

    return kappa


def arma_innovations(model: ArmaModel, n: int) -> InnovationsState:
    """Innovations table of the transformed ARMA process; v is rescaled by sigma^2."""
    state = _innovations_kernel(arma_kappa(model), n, band=model.q, band_from=model.m)
    return InnovationsState(state.theta_nj, state.v * model.noise_variance, model.m)


def arma_prediction_path(model: ArmaModel, history: Sequence[float]) -> np.ndarray:
    """One-step predictions X-hat_1 .. X-hat_{n+1} for a history of length n.

    Element ``t`` predicts ``history[t]`` from ``history[:t]``; the last element
    is the forecast of the next, unobserved value. The mean is added back.
    """
    x = np.asarray(history, dtype=float) - model.mean
    n = x.size
    state = arma_innovations(model, max(n, 1))
    p, q, m = model.p, model.q, model.m
    phi = model.phi
    xhat = np.zeros(n + 1)
    for k in range(1, n + 1):
        # xhat[k] is X-hat_{k+1}; observed X_j lives at x[j-1]
        row = state.theta_nj[k]
        # at n == m both branches are admissible; the n >= m form is used
        if k < m:
            terms = range(1, k + 1)
            ar = 0.0
        else:
            terms = range(1, min(q, k) + 1)
            ar = sum(phi[i - 1] * x[k - i] for i in range(1, p + 1) if k - i >= 0)
        ma = sum(row[j - 1] * (x[k - j] - xhat[k - j]) for j in terms)
        xhat[k] = ar + ma
    return xhat + model.mean


def arma_predict_one_step(model: ArmaModel, history: Sequence[float]) -> float:
    """Best linear one-step forecast of the next value given the observed history."""
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        raise InsufficientDataError("history must be nonempty")
    return float(arma_prediction_path(model, history)[-1])


def sample_acvf(x: np.ndarray, nlags: int) -> np.ndarray:
    """Biased (divide-by-n) sample autocovariances of an already-centred series."""
    x = np.asarray(x, dtype=float)
    n = x.size
    nlags = min(nlags, n - 1)
    full = np.correlate(x, x, mode="full")[n - 1 : n + nlags]
    return full / n


def fit_ar_yule_walker(series: Sequence[float], lags: Sequence[int]) -> tuple[np.ndarray, float]:
    """Yule-Walker AR coefficients restricted to ``lags`` for a zero-mean series.

    Returns ``(coefficients, noise_variance)`` with coefficients ordered like ``lags``.
    """
    x = np.asarray(series, dtype=float)
    lags = np.asarray(sorted(lags), dtype=int)
    if lags.size == 0 or lags[0] < 1:
        raise DegenerateFitError("lags must be positive")
    if x.size <= lags[-1]:
        raise InsufficientDataError(f"series of length {x.size} too short for lag {lags[-1]}")
    gamma = sample_acvf(x, int(lags[-1]))
    G = gamma[np.abs(lags[:, None] - lags[None, :])]
    rhs = gamma[lags]
    if not gamma[0] > 0 or np.linalg.cond(G) > 1e12:
        raise DegenerateFitError("Yule-Walker system is singular")
    coefs = np.linalg.solve(G, rhs)
    sigma2 = float(gamma[0] - coefs @ rhs)
    return coefs, max(sigma2, 0.0)


def fit_arma(series: Sequence[float], p: int = 1, q: int = 0) -> ArmaModel:
    """Estimate mean, coefficients and noise variance for fixed orders.

    q = 0 uses Yule-Walker. q > 0 uses the Hannan-Rissanen two-stage
    regression; estimates that land outside the causal/invertible region are
    shrunk toward zero until they are admissible.
    """
    x = np.asarray(series, dtype=float)
    mean = float(np.mean(x)) if x.size else 0.0
    z = x - mean
    if p < 0 or q < 0:
        raise InvalidModelError("orders must be nonnegative")
    if x.size < 2 * (p + q) + 3:
        raise InsufficientDataError(f"{x.size} observations too few for ARMA({p},{q})")
    gamma0 = float(np.mean(z * z))
    if not gamma0 > 0:
        raise DegenerateFitError("series has zero variance")
    if p == 0 and q == 0:
        return ArmaModel((), (), gamma0, mean)
    if q == 0:
        phi, sigma2 = fit_ar_yule_walker(z, range(1, p + 1))
        return ArmaModel(tuple(phi), (), max(sigma2, 1e-12 * gamma0), mean)

    # Hannan-Rissanen
    long_order = int(min(max(p + q + 5, 10 * np.log10(x.size)), x.size // 4))
    ar_long, _ = fit_ar_yule_walker(z, range(1, long_order + 1))
    resid = np.zeros_like(z)
    for t in range(long_order, z.size):
        resid[t] = z[t] - ar_long @ z[t - long_order : t][::-1]
    start = long_order + q
    rows = []
    for t in range(start, z.size):
        rows.append(np.r_[z[t - p : t][::-1] if p else [], resid[t - q : t][::-1]])
    A = np.asarray(rows)
    y = z[start:]
    if A.shape[0] <= A.shape[1]:
        raise InsufficientDataError("too few observations for Hannan-Rissanen regression")
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    sigma2 = float(np.mean((y - A @ beta) ** 2))
    phi, theta = beta[:p], beta[p:]
    for _ in range(200):
        if _roots_outside_unit_circle(-phi) and _roots_outside_unit_circle(theta):
            break
        phi, theta = phi * 0.95, theta * 0.95
    return ArmaModel(tuple(phi), tuple(theta), max(sigma2, 1e-12 * gamma0), mean)
