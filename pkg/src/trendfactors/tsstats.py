"""Foundational time-series statistics.

Sample autocovariances (divisor ``n`` at every lag), autocorrelations,
the Ljung-Box portmanteau test with its chi-square tail, and the dense
symmetric eigensolver contract used by every downstream stage.

All functions are pure: they never mutate their inputs and hold no state,
so they are safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, DegenerateSeriesError

__all__ = [
    "TimeSeriesPanel",
    "AutocovMatrix",
    "EigenDecomposition",
    "as_panel",
    "sample_autocov",
    "sample_acf",
    "ljung_box",
    "chi2_sf",
    "sym_eigen",
]


@dataclass(frozen=True)
class TimeSeriesPanel:
    """An ``n x p`` panel of observations; row ``t`` is the time-``t`` vector."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ArgumentError(f"panel must be 2-dimensional, got ndim={arr.ndim}")
        n, p = arr.shape
        if n < 2 or p < 1:
            raise ArgumentError(f"panel needs n >= 2 and p >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("panel contains non-finite entries")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


def as_panel(panel) -> TimeSeriesPanel:
    """Coerce an array-like (or pass through a panel) to :class:`TimeSeriesPanel`."""
    if isinstance(panel, TimeSeriesPanel):
        return panel
    return TimeSeriesPanel(np.asarray(panel, dtype=float))


@dataclass(frozen=True)
class AutocovMatrix:
    """Lag-``k`` sample covariance matrix of a panel."""

    lag: int
    matrix: np.ndarray


@dataclass(frozen=True)
class EigenDecomposition:
    """Real symmetric eigendecomposition with eigenvalues sorted descending.

    ``vectors[:, i]`` is the orthonormal eigenvector paired with ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray


def sample_autocov(panel, k: int) -> AutocovMatrix:
    """Lag-``k`` sample covariance matrix.

    Returns ``(1/n) * sum_{t=k+1..n} (y_t - ybar)(y_{t-k} - ybar)'`` with
    ``ybar`` the full-sample mean.  The divisor is ``n`` at every lag, which
    keeps the Ljung-Box inputs consistent with the matrix statistics built
    downstream.

    Parameters
    ----------
    panel : TimeSeriesPanel or array-like, shape (n, p)
    k : int
        Lag, ``0 <= k <= n - 2``.
    """
    pan = as_panel(panel)
    y = pan.data
    n = pan.n
    # k = n - 1 keeps exactly one summand and stays well defined
    if not 0 <= k <= n - 1:
        raise ArgumentError(f"lag k={k} outside [0, {n - 1}] for n={n}")
    yc = y - y.mean(axis=0)
    mat = yc[k:].T @ yc[: n - k] / n
    return AutocovMatrix(lag=k, matrix=mat)


def _centered(series) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 2:
        raise ArgumentError("series needs at least 2 observations")
    if not np.all(np.isfinite(x)):
        raise ArgumentError("series contains non-finite entries")
    return x - x.mean()


def _gamma0_floor(xc: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(xc), initial=0.0)))
    return (1e-13 * scale) ** 2


def sample_acf(series, k: int) -> float:
    """Lag-``k`` sample autocorrelation of a univariate series.

    Uses divisor-``n`` autocovariances, so the value always lies in [-1, 1].
    Raises :class:`DegenerateSeriesError` for a constant series.
    """
    xc = _centered(series)
    n = xc.size
    if not 0 <= k <= n - 2:
        raise ArgumentError(f"lag k={k} outside [0, {n - 2}] for n={n}")
    gamma0 = float(xc @ xc) / n
    if gamma0 <= _gamma0_floor(xc):
        raise DegenerateSeriesError("constant series has no autocorrelation")
    if k == 0:
        return 1.0
    gamma_k = float(xc[k:] @ xc[: n - k]) / n
    return gamma_k / gamma0


class LjungBoxResult(NamedTuple):
    statistic: float
    pvalue: float


def ljung_box(series, m: int) -> LjungBoxResult:
    """Ljung-Box portmanteau statistic ``Q(m)`` and its chi-square p-value.

    ``Q = n(n+2) * sum_{k=1..m} acf(k)^2 / (n-k)``; the p-value is the
    upper tail of a chi-square with ``m`` degrees of freedom.
    """
    xc = _centered(series)
    n = xc.size
    if not 1 <= m <= n - 2:
        raise ArgumentError(f"m={m} outside [1, {n - 2}] for n={n}")
    gamma0 = float(xc @ xc) / n
    if gamma0 <= _gamma0_floor(xc):
        raise DegenerateSeriesError("constant series: Ljung-Box undefined")
    q = 0.0
    for k in range(1, m + 1):
        rho = (float(xc[k:] @ xc[: n - k]) / n) / gamma0
        q += rho * rho / (n - k)
    q *= n * (n + 2)
    return LjungBoxResult(statistic=q, pvalue=chi2_sf(q, m))


def _lower_gamma_series(a: float, x: float) -> float:
    # regularized lower incomplete gamma P(a, x), valid for x < a + 1
    ap = a
    total = 1.0 / a
    delta = total
    for _ in range(1000):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _upper_gamma_cf(a: float, x: float) -> float:
    # regularized upper incomplete gamma Q(a, x) by modified Lentz continued
    # fraction, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        factor = d * c
        h *= factor
        if abs(factor - 1.0) < 1e-17:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail probability of a chi-square distribution.

    Evaluates the regularized incomplete gamma function directly (power
    series below the ``a + 1`` turnover, continued fraction above), so the
    result is testable against closed forms such as ``exp(-x/2)`` at df=2.
    """
    if df < 1 or int(df) != df:
        raise ArgumentError(f"df must be a positive integer, got {df}")
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ArgumentError(f"x must be finite and >= 0, got {x}")
    if x == 0.0:
        return 1.0
    a = df / 2.0
    xx = x / 2.0
    if xx < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, xx)))
    return min(1.0, max(0.0, _upper_gamma_cf(a, xx)))


def sym_eigen(matrix) -> EigenDecomposition:
    """Full eigendecomposition of a real symmetric matrix.

    The input is symmetrized as ``(M + M') / 2`` before factorization and
    must already be symmetric to 1e-10 relative.  Eigenvalues come back in
    descending order; each eigenvector is sign-fixed so its largest-magnitude
    entry is positive, which makes snapshots deterministic (every downstream
    quantity is invariant to these sign flips).
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ArgumentError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ArgumentError("matrix contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if float(np.max(np.abs(m - m.T), initial=0.0)) > 1e-10 * scale:
        raise ArgumentError("matrix is not symmetric within 1e-10 relative")
    sym = (m + m.T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    for j in range(vectors.shape[1]):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return EigenDecomposition(values=values, vectors=vectors)
