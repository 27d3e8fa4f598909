"""Counting white-noise components among the transformed stationary series.

Two procedures determine how many of the eigen-transformed components are
white noise (and hence how many stationary factors remain): a bottom-up
per-component Ljung-Box scan for low dimensions, and a sequential
high-dimensional multi-series test for larger panels, optionally preceded by
reordering the components by their Ljung-Box p-values so the most serially
dependent ones are examined first.

The multi-series statistic is the scaled maximum absolute cross-correlation
over all component pairs and lags, compared against a Bonferroni-Gaussian
threshold.  It is conservative by construction; its empirical size is pinned
by the test suite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .errors import ArgumentError

__all__ = [
    "OrderedComponents",
    "lb_order",
    "hd_wn_test",
    "estimate_r2_small",
    "estimate_r2_large",
    "ljung_box_pvalues",
]


@dataclass(frozen=True)
class OrderedComponents:
    """Components with a testing order and aligned Ljung-Box p-values.

    ``order`` is a permutation of ``0..d-1``; position ``i`` of the testing
    sequence is column ``order[i]`` of ``series``.  ``pvalues[i]`` and
    ``degenerate[i]`` describe that same position.
    """

    series: np.ndarray
    order: np.ndarray
    pvalues: np.ndarray
    degenerate: np.ndarray

    def ordered(self) -> np.ndarray:
        """The component panel with columns permuted into testing order."""
        return self.series[:, self.order]


def ljung_box_pvalues(xi: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-column Ljung-Box p-values; constant columns get p-value 1.

    Returns ``(pvalues, degenerate)`` aligned to the input columns.  The
    vectorized computation matches :func:`trendfactors.tsstats.ljung_box`
    column by column.
    """
    from .tsstats import chi2_sf

    x = np.asarray(xi, dtype=float)
    n, d = x.shape
    if not 1 <= m <= n - 2:
        raise ArgumentError(f"m={m} outside [1, {n - 2}] for n={n}")
    xc = x - x.mean(axis=0)
    gamma0 = np.einsum("ti,ti->i", xc, xc) / n
    floor = (1e-13 * np.maximum(1.0, np.max(np.abs(xc), axis=0, initial=0.0))) ** 2
    degenerate = gamma0 <= floor
    safe_gamma0 = np.where(degenerate, 1.0, gamma0)
    q = np.zeros(d)
    for k in range(1, m + 1):
        rho = (np.einsum("ti,ti->i", xc[k:], xc[: n - k]) / n) / safe_gamma0
        q += rho * rho / (n - k)
    q *= n * (n + 2)
    pvalues = np.array([chi2_sf(v, m) for v in q])
    pvalues[degenerate] = 1.0
    return pvalues, degenerate


def lb_order(xi, m: int, reorder: bool) -> OrderedComponents:
    """Order components for white-noise testing.

    With ``reorder=True`` the permutation sorts the Ljung-Box p-values
    ascending, so the most serially dependent components come first; ties
    keep their original relative order.  Degenerate (constant) components are
    flagged, assigned p-value 1, and pushed to the very end.
    """
    x = np.asarray(xi, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ArgumentError(f"component panel must be n x d with d >= 1, got {x.shape}")
    pvalues, degenerate = ljung_box_pvalues(x, m)
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} constant component(s) treated as white noise",
            stacklevel=2,
        )
    if reorder:
        order = np.lexsort((np.arange(x.shape[1]), pvalues, degenerate.astype(int)))
    elif degenerate.any():
        order = np.lexsort((np.arange(x.shape[1]), degenerate.astype(int)))
    else:
        order = np.arange(x.shape[1])
    order = np.asarray(order, dtype=int)
    return OrderedComponents(
        series=x,
        order=order,
        pvalues=pvalues[order],
        degenerate=degenerate[order],
    )


class HdWnResult(NamedTuple):
    reject: bool
    statistic: float
    threshold: float


def _abs_corr_tensor(x: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Absolute cross-correlations ``|rho_ij(k)|`` for lags 1..m.

    Returns ``(tensor of shape (m, d, d), degenerate column mask)``; rows and
    columns of degenerate components are zeroed so they never enter a max.
    """
    n, d = x.shape
    xc = x - x.mean(axis=0)
    gamma0 = np.einsum("ti,ti->i", xc, xc) / n
    floor = (1e-13 * np.maximum(1.0, np.max(np.abs(xc), axis=0, initial=0.0))) ** 2
    degenerate = gamma0 <= floor
    sd = np.sqrt(np.where(degenerate, 1.0, gamma0))
    tensor = np.empty((m, d, d))
    for k in range(1, m + 1):
        cov = xc[k:].T @ xc[: n - k] / n
        tensor[k - 1] = np.abs(cov / np.outer(sd, sd))
    if degenerate.any():
        tensor[:, degenerate, :] = 0.0
        tensor[:, :, degenerate] = 0.0
    return tensor, degenerate


def _bonferroni_threshold(d: int, m: int, alpha: float) -> float:
    return float(ndtri(1.0 - alpha / (2.0 * d * d * m)))


def hd_wn_test(xi, m: int, alpha: float) -> HdWnResult:
    """Multi-series white-noise test via the maximum cross-correlation.

    The statistic is ``sqrt(n) * max |rho_ij(k)|`` over lags ``1..m`` and all
    ``d^2`` component pairs; the threshold is the Gaussian quantile at
    ``1 - alpha / (2 d^2 m)``.  Degenerate components are excluded from the
    max (with a warning) but still count toward ``d`` in the threshold.
    """
    x = np.asarray(xi, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ArgumentError(f"component panel must be n x d with d >= 1, got {x.shape}")
    n, d = x.shape
    if not 1 <= m <= n - 2:
        raise ArgumentError(f"m={m} outside [1, {n - 2}] for n={n}")
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    tensor, degenerate = _abs_corr_tensor(x, m)
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} constant component(s) excluded from the test statistic",
            stacklevel=2,
        )
    statistic = float(np.sqrt(n) * tensor.max(initial=0.0))
    threshold = _bonferroni_threshold(d, m, alpha)
    return HdWnResult(reject=statistic > threshold, statistic=statistic, threshold=threshold)


def estimate_r2_small(xi, m: int, alpha: float) -> tuple[int, int]:
    """Bottom-up factor count for low-dimensional component panels.

    Tests the components one at a time with the Ljung-Box statistic, starting
    from the last (least dependent) one; the count of stationary factors is
    the position of the first non-white component found.
    """
    x = np.asarray(xi, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ArgumentError(f"component panel must be n x d with d >= 1, got {x.shape}")
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    d = x.shape[1]
    pvalues, _ = ljung_box_pvalues(x, m)
    for i in range(d, 0, -1):
        if pvalues[i - 1] < alpha:
            return i, d - i
    return 0, d


def estimate_r2_large(
    xi, m: int, alpha: float, reorder: bool, epsilon: float = 0.75
) -> tuple[int, int]:
    """Sequential high-dimensional factor count.

    Runs the multi-series white-noise test on the ordered components, dropping
    the leading (most dependent) component after each rejection; the number of
    drops is the factor count ``r2`` and ``v = d - r2``.  When the panel is at
    least as wide as it is long, only the leading ``floor(epsilon * n)``
    components enter the testing loop and the truncated tail (the least
    dependent components) is counted as white noise.
    """
    x = np.asarray(xi, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ArgumentError(f"component panel must be n x d with d >= 1, got {x.shape}")
    if not 0.0 < epsilon <= 1.0:
        raise ArgumentError(f"epsilon must lie in (0, 1], got {epsilon}")
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    n, d = x.shape
    ordered = lb_order(x, m, reorder).ordered()
    if d >= n:
        keep = int(np.floor(epsilon * n))
        if keep < 1:
            raise ArgumentError(f"epsilon={epsilon} keeps no components at n={n}")
        ordered = ordered[:, : min(keep, d)]
    r2 = _drop_count(ordered, m, alpha)
    return r2, d - r2


def _drop_count(ordered: np.ndarray, m: int, alpha: float) -> int:
    """Number of leading components dropped before the remainder tests white."""
    kept = ordered.shape[1]
    n = ordered.shape[0]
    if not 1 <= m <= n - 2:
        raise ArgumentError(f"m={m} outside [1, {n - 2}] for n={n}")
    tensor, _ = _abs_corr_tensor(ordered, m)
    sqrt_n = np.sqrt(n)
    for j in range(kept):
        d_cur = kept - j
        statistic = sqrt_n * tensor[:, j:, j:].max(initial=0.0)
        if statistic <= _bonferroni_threshold(d_cur, m, alpha):
            return j
    return kept
