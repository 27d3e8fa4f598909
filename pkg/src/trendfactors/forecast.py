"""Factor-based forecasting, error metrics, and equal-predictive-ability tests.

Fits simple dynamics to the extracted factors (a VAR(1) on the differenced
trend paths, scalar AR(1) models on the stationary factors), produces
multi-step forecasts of the observed panel, and evaluates them against
baseline methods over expanding-window origins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, DegenerateSeriesError
from .pipeline import PipelineConfig, decompose
from .tsstats import as_panel, sym_eigen

__all__ = [
    "Ar1Fit",
    "Var1Fit",
    "FactorModelFit",
    "DmResult",
    "ForecastReport",
    "fit_ar1",
    "fit_var1_diff",
    "fit_factor_models",
    "forecast_path",
    "forecast_y",
    "fe_h",
    "rmsfe",
    "dm_test",
    "baseline_dfar",
    "baseline_pca",
    "evaluate_forecasts",
    "FORECAST_METHODS",
]

FORECAST_METHODS = ("gt", "dfar", "pca_levels", "pca_diff")


class Ar1Fit(NamedTuple):
    phi: float
    intercept: float
    explosive: bool


@dataclass(frozen=True)
class Var1Fit:
    """Least-squares VAR(1) with intercept; no stationarity restriction."""

    coef: np.ndarray
    intercept: np.ndarray
    condition_number: float
    ill_conditioned: bool


@dataclass(frozen=True)
class FactorModelFit:
    """Dynamics fitted to the extracted factor paths.

    ``nonstat`` holds the VAR(1)-on-differences fit for the trend paths
    (``None`` when there are no trends); ``stat`` holds one scalar AR(1) fit
    per stationary factor.
    """

    nonstat: Var1Fit | None
    stat: tuple[Ar1Fit, ...]


def fit_ar1(series) -> Ar1Fit:
    """OLS regression of ``x_t`` on ``(1, x_{t-1})``.

    No stationarity clamp is applied; an explosive estimate (``|phi| >= 1``)
    is flagged rather than truncated.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 3:
        raise ArgumentError(f"AR(1) fit needs n >= 3, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ArgumentError("series contains non-finite entries")
    lagged, current = x[:-1], x[1:]
    sxx = float(np.var(lagged))
    if sxx <= (1e-13 * max(1.0, float(np.max(np.abs(lagged))))) ** 2:
        raise DegenerateSeriesError("constant regressor in AR(1) fit")
    phi = float(np.cov(lagged, current, bias=True)[0, 1] / sxx)
    intercept = float(current.mean() - phi * lagged.mean())
    return Ar1Fit(phi=phi, intercept=intercept, explosive=abs(phi) >= 1.0)


def fit_var1_diff(panel) -> Var1Fit:
    """VAR(1) with intercept on first differences of a panel.

    Rank-deficient designs are solved in the least-squares sense; the design
    condition number is reported and flagged above 1e12.
    """
    y = np.asarray(panel.data if hasattr(panel, "data") else panel, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    r = y.shape[1]
    if y.shape[0] < r + 3:
        raise ArgumentError(f"VAR(1)-on-differences needs n >= r + 3 = {r + 3}")
    d = np.diff(y, axis=0)
    design = np.hstack([np.ones((d.shape[0] - 1, 1)), d[:-1]])
    target = d[1:]
    beta, _, _, sv = np.linalg.lstsq(design, target, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return Var1Fit(
        coef=beta[1:].T,
        intercept=beta[0],
        condition_number=cond,
        ill_conditioned=not cond < 1e12,
    )


def _ar1_or_constant(series: np.ndarray) -> Ar1Fit:
    # a constant factor path forecasts as its own continuation
    try:
        return fit_ar1(series)
    except DegenerateSeriesError:
        return Ar1Fit(phi=0.0, intercept=float(np.mean(series)), explosive=False)


def fit_factor_models(x1: np.ndarray, z2: np.ndarray) -> FactorModelFit:
    """Fit the trend VAR(1)-on-differences and per-factor AR(1) models."""
    x1 = np.asarray(x1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    nonstat = fit_var1_diff(x1) if x1.shape[1] >= 1 else None
    stat = tuple(_ar1_or_constant(z2[:, i]) for i in range(z2.shape[1]))
    return FactorModelFit(nonstat=nonstat, stat=stat)


def _trend_forecast(x1: np.ndarray, fit: Var1Fit | None, h_max: int) -> np.ndarray:
    """Iterate the differenced VAR forecast and re-integrate, all horizons."""
    r = x1.shape[1]
    out = np.zeros((h_max, r))
    if r == 0 or fit is None:
        return out
    level = x1[-1].copy()
    delta = x1[-1] - x1[-2]
    for j in range(h_max):
        delta = fit.intercept + fit.coef @ delta
        level = level + delta
        out[j] = level
    return out


def _stationary_forecast(z2: np.ndarray, fits: tuple[Ar1Fit, ...], h_max: int) -> np.ndarray:
    out = np.zeros((h_max, len(fits)))
    if not fits:
        return out
    state = z2[-1].copy()
    phi = np.array([f.phi for f in fits])
    c = np.array([f.intercept for f in fits])
    for j in range(h_max):
        state = c + phi * state
        out[j] = state
    return out


def forecast_path(split, fit: FactorModelFit, sf, h_max: int) -> np.ndarray:
    """Forecasts of the observed panel for every horizon ``1..h_max``.

    ``split`` supplies the loadings and trend paths (``A1``, ``A2``, ``x1``),
    ``sf`` the stationary-factor pieces (``U1``, ``z2``); a ``Decomposition``
    can serve as both.  Each row is
    ``A1 x1_{n+h} + A2 U1 z2_{n+h}`` with the factor forecasts iterated from
    the fitted recursions (trend differences re-integrated).
    """
    if h_max < 1:
        raise ArgumentError(f"horizon must be >= 1, got {h_max}")
    x1f = _trend_forecast(split.x1, fit.nonstat, h_max)
    z2f = _stationary_forecast(sf.z2, fit.stat, h_max)
    trend_part = x1f @ split.A1.T
    factor_part = z2f @ (split.A2 @ sf.U1).T if sf.U1.shape[1] else 0.0
    return trend_part + factor_part


def forecast_y(split, fit: FactorModelFit, sf, h: int) -> np.ndarray:
    """The ``h``-step-ahead forecast vector of the observed panel."""
    return forecast_path(split, fit, sf, h)[h - 1]


def fe_h(forecasts, actuals) -> float:
    """Average scaled forecast error over origins.

    Rows are forecast origins; the per-origin error is the Euclidean norm of
    the error vector divided by ``sqrt(p)``.
    """
    f = np.atleast_2d(np.asarray(forecasts, dtype=float))
    a = np.atleast_2d(np.asarray(actuals, dtype=float))
    if f.shape != a.shape:
        raise ArgumentError(f"shape mismatch: {f.shape} vs {a.shape}")
    if f.size == 0:
        raise ArgumentError("empty evaluation window")
    p = f.shape[1]
    return float(np.mean(np.linalg.norm(f - a, axis=1) / math.sqrt(p)))


def rmsfe(forecasts_i, actuals_i) -> float:
    """Per-series root mean squared forecast error over origins."""
    f = np.asarray(forecasts_i, dtype=float).ravel()
    a = np.asarray(actuals_i, dtype=float).ravel()
    if f.shape != a.shape:
        raise ArgumentError(f"shape mismatch: {f.shape} vs {a.shape}")
    if f.size == 0:
        raise ArgumentError("empty evaluation window")
    return float(np.sqrt(np.mean((f - a) ** 2)))


class DmResult(NamedTuple):
    statistic: float
    lrv: float
    pvalue: float
    degenerate: bool
    bandwidth: int


def _ndtr(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def dm_test(loss_a, loss_b, bandwidth: int | None = None) -> DmResult:
    """Equal-predictive-ability test on two aligned loss series.

    The statistic is the mean loss differential scaled by its Bartlett-kernel
    long-run variance (bandwidth ``floor(1.2 N^{1/3})`` unless supplied); the
    one-sided p-value is the lower Gaussian tail, small when method ``a``
    loses less than method ``b``.
    """
    a = np.asarray(loss_a, dtype=float).ravel()
    b = np.asarray(loss_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ArgumentError(f"loss series lengths differ: {a.size} vs {b.size}")
    n = a.size
    if n < 8:
        raise ArgumentError(f"need at least 8 losses, got {n}")
    d = a - b
    dbar = float(d.mean())
    if bandwidth is None:
        bandwidth = int(math.floor(1.2 * n ** (1.0 / 3.0)))
    if bandwidth < 0 or bandwidth >= n:
        raise ArgumentError(f"bandwidth {bandwidth} outside [0, {n - 1}]")
    dc = d - dbar
    lrv = float(dc @ dc) / n
    for k in range(1, bandwidth + 1):
        gamma = float(dc[k:] @ dc[:-k]) / n
        lrv += 2.0 * (1.0 - k / (bandwidth + 1.0)) * gamma
    lrv = max(lrv, 0.0)
    scale = float(np.max(np.abs(d), initial=0.0))
    if lrv <= (1e-13 * max(1.0, scale)) ** 2:
        if abs(dbar) <= 1e-13 * max(1.0, scale):
            return DmResult(0.0, 0.0, 0.5, True, bandwidth)
        stat = math.inf if dbar > 0 else -math.inf
        return DmResult(stat, 0.0, _ndtr(stat), True, bandwidth)
    stat = dbar / math.sqrt(lrv / n)
    return DmResult(stat, lrv, _ndtr(stat), False, bandwidth)


def _ar1_delta_forecast(series: np.ndarray, h_max: int) -> np.ndarray:
    """Differenced AR(1) forecast of one series, re-integrated; constant-safe."""
    d = np.diff(series)
    try:
        f = fit_ar1(d)
        phi, c = f.phi, f.intercept
    except DegenerateSeriesError:
        phi, c = 0.0, float(d.mean())
    level = float(series[-1])
    delta = float(d[-1])
    out = np.empty(h_max)
    for j in range(h_max):
        delta = c + phi * delta
        level += delta
        out[j] = level
    return out


def baseline_dfar(panel, h_max: int) -> np.ndarray:
    """Per-series AR(1) on first differences, re-integrated over horizons.

    A constant differenced series (e.g. an exact linear trend) falls back to
    continuing its mean difference, which reproduces the trend exactly.
    """
    pan = as_panel(panel)
    if h_max < 1:
        raise ArgumentError(f"horizon must be >= 1, got {h_max}")
    if pan.n < 3:
        raise ArgumentError("differenced AR(1) needs n >= 3")
    out = np.empty((h_max, pan.p))
    for i in range(pan.p):
        out[:, i] = _ar1_delta_forecast(pan.data[:, i], h_max)
    return out


def _var1_thresholded(f: np.ndarray) -> Var1Fit:
    """VAR(1) with intercept; coefficients with |t| < 1.96 are zeroed."""
    design = np.hstack([np.ones((f.shape[0] - 1, 1)), f[:-1]])
    target = f[1:]
    gram = design.T @ design
    beta, _, _, sv = np.linalg.lstsq(design, target, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    resid = target - design @ beta
    dof = max(design.shape[0] - design.shape[1], 1)
    sigma2 = (resid**2).sum(axis=0) / dof
    gram_inv_diag = np.diag(np.linalg.pinv(gram))
    se = np.sqrt(np.outer(gram_inv_diag, sigma2))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, np.abs(beta / se), np.inf)
    coef = beta[1:].T.copy()
    coef[(tstat[1:] < 1.96).T] = 0.0
    return Var1Fit(coef=coef, intercept=beta[0], condition_number=cond,
                   ill_conditioned=not cond < 1e12)


def baseline_pca(panel, nfac: int, mode: str, h_max: int) -> np.ndarray:
    """Principal-component forecasts on levels or standardized differences.

    Levels mode extracts components from the level covariance and forecasts
    each component with a differenced AR(1); differences mode extracts
    components from standardized first differences, forecasts them with a
    significance-thresholded VAR(1), and re-integrates.  ``nfac = 0``
    degenerates to the sample-mean path (levels) or a frozen last level
    (differences).
    """
    pan = as_panel(panel)
    if not 0 <= nfac <= pan.p:
        raise ArgumentError(f"nfac={nfac} outside [0, {pan.p}]")
    if mode not in ("levels", "differences"):
        raise ArgumentError(f"mode must be 'levels' or 'differences', got {mode!r}")
    if h_max < 1:
        raise ArgumentError(f"horizon must be >= 1, got {h_max}")
    y = pan.data
    if mode == "levels":
        mean = y.mean(axis=0)
        if nfac == 0:
            return np.tile(mean, (h_max, 1))
        yc = y - mean
        loadings = sym_eigen(yc.T @ yc / pan.n).vectors[:, :nfac]
        factors = yc @ loadings
        ffc = np.empty((h_max, nfac))
        for i in range(nfac):
            ffc[:, i] = _ar1_delta_forecast(factors[:, i], h_max)
        return ffc @ loadings.T + mean
    d = np.diff(y, axis=0)
    if d.shape[0] < 4:
        raise ArgumentError("differences mode needs n >= 5")
    if nfac == 0:
        return np.tile(y[-1], (h_max, 1))
    dmean = d.mean(axis=0)
    dsd = d.std(axis=0)
    dsd = np.where(dsd > 0, dsd, 1.0)
    z = (d - dmean) / dsd
    loadings = sym_eigen(z.T @ z / z.shape[0]).vectors[:, :nfac]
    factors = z @ loadings
    fit = _var1_thresholded(factors)
    state = factors[-1].copy()
    level = y[-1].copy()
    out = np.empty((h_max, pan.p))
    for j in range(h_max):
        state = fit.intercept + fit.coef @ state
        level = level + (state @ loadings.T) * dsd + dmean
        out[j] = level
    return out


@dataclass(frozen=True)
class ForecastReport:
    """Expanding-window evaluation plus full-sample forecasts.

    ``fe[method][h]`` is the average scaled error, ``rmsfe_series[method]``
    an ``(H, p)`` array of per-series errors, ``dm[(a, b)][h]`` the
    equal-predictive-ability test of method ``a`` against ``b``, and
    ``forecasts[method]`` the ``(H, p)`` forecasts issued from the full
    sample.
    """

    horizons: tuple[int, ...]
    methods: tuple[str, ...]
    window_start: int
    origins: dict
    forecasts: dict
    fe: dict
    rmsfe_series: dict
    dm: dict
    meta: dict = field(default_factory=dict)


def _gt_forecast(y: np.ndarray, config: PipelineConfig, h_max: int) -> np.ndarray:
    dec = decompose(y, config)
    fit = fit_factor_models(dec.x1, dec.z2)
    return forecast_path(dec, fit, dec, h_max)


def make_forecaster(method: str, config: PipelineConfig, nfac_levels: int, nfac_diff: int):
    """Bind a method name to a ``(train, h_max) -> forecasts`` callable."""
    if method == "gt":
        return lambda y, h: _gt_forecast(y, config, h)
    if method == "dfar":
        return baseline_dfar
    if method == "pca_levels":
        return lambda y, h: baseline_pca(y, nfac_levels, "levels", h)
    if method == "pca_diff":
        return lambda y, h: baseline_pca(y, nfac_diff, "differences", h)
    raise ArgumentError(f"unknown forecast method {method!r}; choose from {FORECAST_METHODS}")


def evaluate_forecasts(
    panel,
    config: PipelineConfig = PipelineConfig(),
    methods: tuple[str, ...] = FORECAST_METHODS,
    pca_nfac_levels: int | None = None,
    pca_nfac_diff: int | None = None,
) -> ForecastReport:
    """Expanding-window forecast evaluation on one panel.

    Models are re-estimated on ``y[1..tau]`` for every origin ``tau`` from
    ``window_start`` through ``n - h``; forecast errors are averaged per
    horizon, per-series errors are aggregated into RMSFE values, and the
    first method is tested pairwise against the others for equal predictive
    ability.  Default PCA factor counts come from the decomposition of the
    first training window: the trend count for levels, total factor count
    for differences.
    """
    pan = as_panel(panel)
    y = pan.data
    n, p = pan.n, pan.p
    horizons = tuple(sorted(set(config.horizons)))
    h_max = max(horizons)
    w = config.window_start if config.window_start is not None else max(int(0.8 * n), 20)
    if not 3 <= w < n:
        raise ArgumentError(f"window_start={w} outside [3, {n - 1}]")
    if w + min(horizons) > n:
        raise ArgumentError("window too short: no forecast origin fits before the data end")
    if methods and methods[0] != "gt" and "gt" in methods:
        methods = ("gt",) + tuple(m for m in methods if m != "gt")
    if pca_nfac_levels is None or pca_nfac_diff is None:
        dec0 = decompose(y[:w], config)
        if pca_nfac_levels is None:
            pca_nfac_levels = max(dec0.r1_hat, 1)
        if pca_nfac_diff is None:
            pca_nfac_diff = min(max(dec0.r1_hat + dec0.r2_hat, 1), p)
    forecasters = {m: make_forecaster(m, config, pca_nfac_levels, pca_nfac_diff) for m in methods}

    per_origin: dict = {m: {h: [] for h in horizons} for m in methods}
    actual_rows = {h: [] for h in horizons}
    for tau in range(w, n - min(horizons) + 1):
        paths = {m: forecasters[m](y[:tau], h_max) for m in methods}
        for h in horizons:
            if tau + h > n:
                continue
            actual_rows[h].append(y[tau + h - 1])
            for m in methods:
                per_origin[m][h].append(paths[m][h - 1])

    fe: dict = {m: {} for m in methods}
    rmsfe_series: dict = {}
    losses: dict = {m: {} for m in methods}
    for m in methods:
        series_err = np.full((len(horizons), p), np.nan)
        for hi, h in enumerate(horizons):
            fc = np.asarray(per_origin[m][h])
            ac = np.asarray(actual_rows[h])
            fe[m][h] = fe_h(fc, ac)
            losses[m][h] = np.linalg.norm(fc - ac, axis=1) / math.sqrt(p)
            for i in range(p):
                series_err[hi, i] = rmsfe(fc[:, i], ac[:, i])
        rmsfe_series[m] = series_err

    dm: dict = {}
    if len(methods) > 1:
        lead = methods[0]
        for other in methods[1:]:
            dm[(lead, other)] = {
                h: dm_test(losses[lead][h], losses[other][h]) for h in horizons
            }

    forecasts = {m: forecasters[m](y, h_max)[[h - 1 for h in horizons]] for m in methods}
    return ForecastReport(
        horizons=horizons,
        methods=tuple(methods),
        window_start=w,
        origins={h: len(actual_rows[h]) for h in horizons},
        forecasts=forecasts,
        fe=fe,
        rmsfe_series=rmsfe_series,
        dm=dm,
        meta={"pca_nfac_levels": pca_nfac_levels, "pca_nfac_diff": pca_nfac_diff},
    )
