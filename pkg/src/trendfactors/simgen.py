"""Data-generating processes, subspace metrics, and the Monte Carlo driver.

Two synthetic designs exercise the pipeline: a small-dimension design with an
orthonormal mixing matrix (example 1) and a high-dimensional design with
factor-strength scalings and prominent noise directions (example 2).  Both
share random-walk trends, diagonal-AR stationary factors, and i.i.d. Gaussian
idiosyncratic noise.

Every draw is deterministic given the spec's 64-bit seed; the Monte Carlo
driver derives independent per-replication streams from (base seed, cell
index, rep index) so replications can run in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .errors import ArgumentError
from .pipeline import PipelineConfig
from .stationary import build_M2, estimate_K, estimate_V2, projected_S, recover_z2
from .tsstats import TimeSeriesPanel, sym_eigen
from .unitroot import acf_profile, build_M1, probe_lags, scan_r1
from .whitenoise import (
    _abs_corr_tensor,
    _bonferroni_threshold,
    estimate_r2_small,
    ljung_box_pvalues,
)

__all__ = [
    "DgpSpec",
    "GroundTruth",
    "Mixing",
    "MonteCarloResult",
    "CellResult",
    "random_orthonormal",
    "draw_mixing",
    "draw_panel",
    "gen_example1",
    "gen_example2",
    "generate",
    "metric_D",
    "metric_Dbar",
    "rmse_factors",
    "run_montecarlo",
    "derive_seed",
    "VARIANTS",
]

VARIANTS = ("a*w*", "aw", "a*w", "aw*")


@dataclass(frozen=True)
class DgpSpec:
    """A single Monte Carlo cell: dimensions, factor counts, and seed."""

    p: int
    n: int
    r1: int = 2
    r2: int = 2
    K: int = 0
    delta: float = 0.0
    example: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n < 2:
            raise ArgumentError(f"need p >= 1 and n >= 2, got p={self.p}, n={self.n}")
        if self.r1 < 0 or self.r2 < 0:
            raise ArgumentError("factor counts must be >= 0")
        if self.r1 + self.r2 > self.p:
            raise ArgumentError(f"r1 + r2 = {self.r1 + self.r2} exceeds p = {self.p}")
        v = self.p - self.r1 - self.r2
        if not 0 <= self.K < max(v, 1):
            raise ArgumentError(f"K={self.K} not an admissible noise rank (v={v})")
        if not 0.0 <= self.delta < 1.0:
            raise ArgumentError(f"delta must lie in [0, 1), got {self.delta}")
        if self.example not in (1, 2):
            raise ArgumentError(f"example must be 1 or 2, got {self.example}")
        if self.example == 1 and self.delta != 0.0:
            raise ArgumentError("example 1 requires delta = 0")
        if self.example == 1 and self.K != 0:
            raise ArgumentError("example 1 has no prominent noise; require K = 0")

    @property
    def v(self) -> int:
        return self.p - self.r1 - self.r2


@dataclass(frozen=True)
class GroundTruth:
    """Generative quantities retained for evaluation.

    ``A1``/``A2`` are the orthonormal mixing blocks used to build the panel,
    ``U22_1``/``U22_2`` the stationary mixing blocks, ``phi`` the AR
    coefficients, and ``x1``/``f2``/``eps`` the latent paths (in example 2
    the strength exponent lives on the ``x1`` increments).
    """

    A1: np.ndarray
    A2: np.ndarray
    U22_1: np.ndarray
    U22_2: np.ndarray
    phi: np.ndarray
    x1: np.ndarray
    f2: np.ndarray
    eps: np.ndarray

    def trend_paths(self) -> np.ndarray:
        """The trend contribution ``A1 x1_t`` of every observation."""
        return self.x1 @ self.A1.T

    def factor_paths(self) -> np.ndarray:
        """The stationary-factor contribution ``A2 U22_1 f2_t``."""
        return self.f2 @ self.U22_1.T @ self.A2.T


@dataclass(frozen=True)
class Mixing:
    """Mixing matrices and AR coefficients, fixed across replications of a cell."""

    A: np.ndarray
    U22_1: np.ndarray
    U22_2: np.ndarray
    phi: np.ndarray


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_orthonormal(p: int, seed) -> np.ndarray:
    """Random ``p x p`` orthonormal matrix, deterministic per seed.

    QR factorization of a uniform(-2, 2) matrix with the positive-diagonal
    convention on ``R``; only orthonormality matters downstream.
    """
    if p < 1:
        raise ArgumentError(f"p must be >= 1, got {p}")
    rng = _as_rng(seed)
    m = rng.uniform(-2.0, 2.0, (p, p))
    q, r = np.linalg.qr(m)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def draw_mixing(spec: DgpSpec, seed) -> Mixing:
    """Draw the mixing matrices and AR coefficients for a cell.

    Example 1 uses an orthonormal mixing matrix and scales the noise block by
    ``1/sqrt(p)`` to balance factor and noise variances.  Example 2 takes the
    left singular basis of a uniform(-2, 2) matrix as the (orthonormal)
    mixing, divides ``U22_1`` by ``p^{delta/2}``, the first ``K`` columns of
    ``U22_2`` by ``p^{delta/2}``, and the remaining ``v - K`` columns by
    ``p``, so factor strength scales as ``p^{(1-delta)/2}`` and exactly ``K``
    noise covariance eigenvalues diverge with the dimension; the trend
    strength lives on the trend increments (see :func:`draw_panel`).
    """
    rng = _as_rng(seed)
    d = spec.p - spec.r1
    if spec.example == 1:
        a = random_orthonormal(spec.p, rng)
        u221 = rng.uniform(-1.0, 1.0, (d, spec.r2))
        u222 = rng.uniform(-1.0, 1.0, (d, spec.v)) / np.sqrt(spec.p)
    else:
        m = rng.uniform(-2.0, 2.0, (spec.p, spec.p))
        u_left, _, _ = np.linalg.svd(m)
        a = u_left
        u221 = rng.uniform(-1.0, 1.0, (d, spec.r2)) / spec.p ** (spec.delta / 2.0)
        u222 = rng.uniform(-1.0, 1.0, (d, spec.v))
        u222[:, : spec.K] /= spec.p ** (spec.delta / 2.0)
        u222[:, spec.K :] /= float(spec.p)
    phi = rng.uniform(0.5, 0.9, spec.r2)
    return Mixing(A=a, U22_1=u221, U22_2=u222, phi=phi)


def draw_panel(spec: DgpSpec, mixing: Mixing, seed) -> tuple[TimeSeriesPanel, GroundTruth]:
    """Draw one panel from fresh innovations under a fixed mixing.

    Trends are random walks started at zero with standard normal increments;
    stationary factors follow the diagonal AR(1) recursion from zero; the
    idiosyncratic noise is i.i.d. standard normal.  Draw order: trend
    increments, factor innovations, noise.
    """
    rng = _as_rng(seed)
    n, r1, r2 = spec.n, spec.r1, spec.r2
    x1 = np.cumsum(rng.standard_normal((n, r1)), axis=0) if r1 else np.zeros((n, 0))
    if spec.example == 2:
        # the trend block carries the strength exponent: increment scale
        # p^{(1-delta)/2} against unit-variance factors, keeping the trend
        # eigenvalues separated from the factor block as the dimension grows
        x1 = x1 * spec.p ** ((1.0 - spec.delta) / 2.0)
    eta2 = rng.standard_normal((n, r2))
    f2 = np.empty((n, r2))
    for i in range(r2):
        # innovation variance 1 - phi^2 gives unit stationary factor variance,
        # the normalization the model identifies the factors under
        f2[:, i] = lfilter([1.0], [1.0, -mixing.phi[i]], eta2[:, i]) * np.sqrt(
            1.0 - mixing.phi[i] ** 2
        )
    eps = rng.standard_normal((n, spec.v))
    a1, a2 = mixing.A[:, :r1], mixing.A[:, r1:]
    x2 = f2 @ mixing.U22_1.T + eps @ mixing.U22_2.T
    y = x1 @ a1.T + x2 @ a2.T
    truth = GroundTruth(
        A1=a1, A2=a2, U22_1=mixing.U22_1, U22_2=mixing.U22_2,
        phi=mixing.phi, x1=x1, f2=f2, eps=eps,
    )
    return TimeSeriesPanel(y), truth


def gen_example1(spec: DgpSpec) -> tuple[TimeSeriesPanel, GroundTruth]:
    """Generate one example-1 panel; mixing and paths share the spec seed."""
    if spec.example != 1:
        raise ArgumentError("spec.example must be 1")
    rng = _as_rng(spec.seed)
    return draw_panel(spec, draw_mixing(spec, rng), rng)


def gen_example2(spec: DgpSpec) -> tuple[TimeSeriesPanel, GroundTruth]:
    """Generate one example-2 panel; mixing and paths share the spec seed."""
    if spec.example != 2:
        raise ArgumentError("spec.example must be 2")
    rng = _as_rng(spec.seed)
    return draw_panel(spec, draw_mixing(spec, rng), rng)


def generate(spec: DgpSpec) -> tuple[TimeSeriesPanel, GroundTruth]:
    """Dispatch to the example-1 or example-2 generator."""
    return gen_example1(spec) if spec.example == 1 else gen_example2(spec)


def metric_D(h1: np.ndarray, h2: np.ndarray) -> float:
    """Distance in [0, 1] between the spans of two half-orthonormal bases.

    0 means equal spans, 1 means orthogonal spans.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    if h1.shape != h2.shape:
        raise ArgumentError(f"shape mismatch: {h1.shape} vs {h2.shape}")
    r = h1.shape[1]
    if r < 1:
        raise ArgumentError("need at least one column")
    for h in (h1, h2):
        if float(np.max(np.abs(h.T @ h - np.eye(r)))) > 1e-8:
            raise ArgumentError("input is not half-orthonormal")
    overlap = float(np.sum((h1.T @ h2) ** 2))
    return float(np.sqrt(max(0.0, 1.0 - overlap / r)))


def metric_Dbar(h1: np.ndarray, h2: np.ndarray) -> float:
    """Projector-based span distance for full-column-rank matrices.

    Reduces to :func:`metric_D` when both inputs are half-orthonormal with
    equal width; 0 whenever one span nests inside the other.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    if h1.ndim != 2 or h2.ndim != 2 or h1.shape[0] != h2.shape[0]:
        raise ArgumentError("inputs must share the row dimension")
    d1, d2 = h1.shape[1], h2.shape[1]
    if min(d1, d2) < 1:
        raise ArgumentError("need at least one column")
    q1 = np.linalg.qr(h1)[0]
    q2 = np.linalg.qr(h2)[0]
    if np.linalg.matrix_rank(h1) < d1 or np.linalg.matrix_rank(h2) < d2:
        raise ArgumentError("inputs must have full column rank")
    overlap = float(np.sum((q1.T @ q2) ** 2))
    return float(np.sqrt(max(0.0, 1.0 - overlap / max(d1, d2))))


def rmse_factors(estimate: np.ndarray, truth: np.ndarray, normalization: str = "small") -> float:
    """Root-mean-square error between reconstructed and true factor paths.

    ``small`` averages squared per-time errors over time only; ``large``
    additionally divides by the dimension, which is the scaling used when
    the panel width grows.
    """
    est = np.asarray(estimate, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ArgumentError(f"shape mismatch: {est.shape} vs {tru.shape}")
    if normalization not in ("small", "large"):
        raise ArgumentError(f"normalization must be 'small' or 'large', got {normalization!r}")
    n, p = est.shape
    denom = n if normalization == "small" else n * p
    return float(np.sqrt(np.sum((est - tru) ** 2) / denom))


def _parse_variant(name: str) -> tuple[bool, bool]:
    if name not in VARIANTS:
        raise ArgumentError(f"unknown method variant {name!r}; choose from {VARIANTS}")
    return name.startswith("a*"), name.endswith("w*")


def derive_seed(base_seed: int, cell_index: int, rep_index: int | None = None) -> int:
    """Deterministic 64-bit stream seed from (base, cell[, rep]).

    With ``rep_index=None`` this is the cell-level stream used for the mixing
    draw; otherwise the per-replication shock stream.
    """
    entropy = (int(base_seed), int(cell_index))
    if rep_index is not None:
        entropy += (int(rep_index),)
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class CellResult:
    """Per-cell Monte Carlo summary."""

    spec: DgpSpec
    reps: int
    failures: int
    probs: dict
    metric_quartiles: dict
    rmse_normalization: str


@dataclass(frozen=True)
class MonteCarloResult:
    """Empirical probabilities and metric distributions over a grid."""

    cells: list
    methods: tuple
    reps: int
    base_seed: int

    def rows(self) -> list[dict]:
        """One flat record per cell x method x statistic (for CSV export)."""
        out = []
        for cell in self.cells:
            base = {
                "example": cell.spec.example,
                "p": cell.spec.p,
                "n": cell.spec.n,
                "delta": cell.spec.delta,
                "r1": cell.spec.r1,
                "r2": cell.spec.r2,
                "K": cell.spec.K,
                "reps": cell.reps,
                "failures": cell.failures,
            }
            for method in self.methods:
                for stat, value in cell.probs[method].items():
                    out.append({**base, "method": method, "statistic": stat, "value": value})
            for name, (q1, q2, q3) in cell.metric_quartiles.items():
                for q, v in (("q25", q1), ("median", q2), ("q75", q3)):
                    out.append(
                        {**base, "method": self.methods[0], "statistic": f"{name}_{q}", "value": v}
                    )
        return out


def _stage2_counts(
    x2: np.ndarray, config: PipelineConfig, reorder_variants: set[bool]
) -> tuple[dict, np.ndarray, dict]:
    """Factor/noise counts per reordering variant, sharing all heavy pieces.

    Returns ``(counts, W, extras)`` where ``counts[reorder] = (r2, v)``, ``W``
    is the eigenvector matrix of the second-stage statistic, and ``extras``
    carries the component order per variant for downstream loading selection.
    """
    n, d = x2.shape
    eig2 = sym_eigen(build_M2(x2, config.j0))
    w = eig2.vectors
    xi = x2 @ w
    counts: dict = {}
    orders: dict = {}
    if d <= config.small_p_threshold:
        r2, v = estimate_r2_small(xi, config.m, config.alpha)
        for reorder in reorder_variants:
            counts[reorder] = (r2, v)
            orders[reorder] = np.arange(d)
        return counts, w, {"orders": orders, "M2_eigenvalues": eig2.values}
    pvalues, degenerate = ljung_box_pvalues(xi, config.m)
    tensor, _ = _abs_corr_tensor(xi, config.m)
    sqrt_n = np.sqrt(n)
    for reorder in reorder_variants:
        if reorder:
            order = np.lexsort((np.arange(d), pvalues, degenerate.astype(int)))
        else:
            order = np.arange(d)
        kept = order
        if d >= n:
            keep = int(np.floor(config.epsilon * n))
            if keep < 1:
                raise ArgumentError(f"epsilon={config.epsilon} keeps no components at n={n}")
            kept = order[: min(keep, d)]
        sub = tensor[np.ix_(range(config.m), kept, kept)]
        r2 = len(kept)
        for j in range(len(kept)):
            d_cur = len(kept) - j
            stat = sqrt_n * sub[:, j:, j:].max(initial=0.0)
            if stat <= _bonferroni_threshold(d_cur, config.m, config.alpha):
                r2 = j
                break
        counts[reorder] = (r2, d - r2)
        orders[reorder] = order
    return counts, w, {"orders": orders, "M2_eigenvalues": eig2.values}


def _replication(
    panel: TimeSeriesPanel,
    truth: GroundTruth,
    spec: DgpSpec,
    config: PipelineConfig,
    variants: list[str],
) -> tuple[dict, dict]:
    """Counts for every requested variant plus metrics for the first one."""
    y = panel.data
    eig1 = sym_eigen(build_M1(panel, config.k0))
    rho = acf_profile(y @ eig1.vectors, probe_lags(config.r1_params))
    need_abs = {_parse_variant(v)[0] for v in variants}
    r1_by_abs = {a: scan_r1(rho, config.c0, a) for a in need_abs}

    stage2_by_r1: dict = {}
    for absolute in need_abs:
        r1 = r1_by_abs[absolute]
        if r1 in stage2_by_r1 or r1 >= spec.p:
            continue
        x2 = y @ eig1.vectors[:, r1:]
        reorders = {_parse_variant(v)[1] for v in variants}
        stage2_by_r1[r1] = _stage2_counts(x2, config, reorders)

    indicators = {}
    for name in variants:
        absolute, reorder = _parse_variant(name)
        r1 = r1_by_abs[absolute]
        if r1 >= spec.p:
            r2, v = 0, 0
        else:
            r2, v = stage2_by_r1[r1][0][reorder]
        indicators[name] = {
            "r1": float(r1 == spec.r1),
            "r2": float(r2 == spec.r2),
            "total": float(r1 + r2 == spec.r1 + spec.r2),
        }

    # span/path accuracy metrics, computed under the first requested variant
    absolute, reorder = _parse_variant(variants[0])
    r1 = r1_by_abs[absolute]
    a1_hat = eig1.vectors[:, :r1]
    a2_hat = eig1.vectors[:, r1:]
    metrics = {
        "Dbar_A1": metric_Dbar(a1_hat, truth.A1) if r1 >= 1 else np.nan,
        "Dbar_A2": metric_Dbar(a2_hat, truth.A2) if r1 <= spec.p - 1 else np.nan,
    }
    norm = "small" if spec.example == 1 else "large"
    metrics["rmse_trend"] = rmse_factors(
        (y @ a1_hat) @ a1_hat.T, truth.trend_paths(), norm
    )
    metrics["Dbar_A2U1"] = np.nan
    metrics["rmse_stationary"] = np.nan
    if r1 < spec.p:
        counts, w, extras = stage2_by_r1[r1]
        r2, v = counts[reorder]
        if r2 >= 1:
            order = extras["orders"][reorder]
            u1 = w[:, order[:r2]]
            v1 = w[:, order[r2:]]
            x2 = y @ eig1.vectors[:, r1:]
            s_matrix = projected_S(x2, v1)
            d = spec.p - r1
            if config.K_override is not None:
                k_hat = min(config.K_override, d - r2)
            elif d <= config.small_p_threshold or v <= 1:
                k_hat = 0
            else:
                eig_s = sym_eigen(s_matrix)
                k_hat = estimate_K(eig_s.values, max_k=min(config.max_k, v - 1), tau=config.tau)
            v2 = estimate_V2(s_matrix, u1, r2, k_hat)
            z2 = recover_z2(v2, u1, x2)
            a2u1_hat = a2_hat @ u1
            if spec.r2 >= 1:
                metrics["Dbar_A2U1"] = metric_Dbar(a2u1_hat, truth.A2 @ truth.U22_1)
            metrics["rmse_stationary"] = rmse_factors(
                z2 @ a2u1_hat.T, truth.factor_paths(), norm
            )
    return indicators, metrics


def run_montecarlo(
    grid,
    reps: int,
    methods=("a*w*", "aw"),
    base_seed: int = 0,
    config: PipelineConfig = PipelineConfig(),
) -> MonteCarloResult:
    """Empirical count probabilities and accuracy metrics over a grid of cells.

    Mixing matrices and AR coefficients are drawn once per cell (stream
    derived from ``(base_seed, cell index)``), after which the panel is
    regenerated ``reps`` times from independent per-replication shock streams
    derived from ``(base_seed, cell index, rep index)``; every requested
    method variant is evaluated on the same draws.  Per-replication failures
    are recorded and skipped rather than aborting the grid.  Aggregation is a
    plain order-independent average.
    """
    if reps < 1:
        raise ArgumentError(f"reps must be >= 1, got {reps}")
    methods = tuple(methods)
    for name in methods:
        _parse_variant(name)
    cells = []
    for ci, spec in enumerate(grid):
        sums = {name: {"r1": 0.0, "r2": 0.0, "total": 0.0} for name in methods}
        metric_samples: dict = {}
        failures = 0
        cell_spec = replace(spec, seed=derive_seed(base_seed, ci))
        mixing = draw_mixing(cell_spec, cell_spec.seed)
        for rep in range(reps):
            rep_spec = replace(spec, seed=derive_seed(base_seed, ci, rep))
            try:
                panel, truth = draw_panel(rep_spec, mixing, rep_spec.seed)
                indicators, metrics = _replication(panel, truth, rep_spec, config, list(methods))
            except Exception:
                failures += 1
                continue
            for name in methods:
                for key in sums[name]:
                    sums[name][key] += indicators[name][key]
            for key, value in metrics.items():
                metric_samples.setdefault(key, []).append(value)
        good = reps - failures
        probs = {
            name: {key: (total / good if good else np.nan) for key, total in stat.items()}
            for name, stat in sums.items()
        }
        quartiles = {}
        for key, values in metric_samples.items():
            arr = np.asarray(values, dtype=float)
            if np.all(np.isnan(arr)):
                quartiles[key] = (np.nan, np.nan, np.nan)
            else:
                quartiles[key] = tuple(np.nanquantile(arr, [0.25, 0.5, 0.75]))
        cells.append(
            CellResult(
                spec=spec,
                reps=reps,
                failures=failures,
                probs=probs,
                metric_quartiles=quartiles,
                rmse_normalization="small" if spec.example == 1 else "large",
            )
        )
    return MonteCarloResult(cells=cells, methods=methods, reps=reps, base_seed=base_seed)
