"""Command-line interface: decompose, forecast, simulate, benchmark.

CSV panels are comma-separated with one time point per row and an optional
header; floats are emitted with 17 significant digits so a round trip is
exact.  Reports are JSON with a top-level ``schema_version``.  Exit codes:
0 on success, 1 on argument errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import ArgumentError, CsvParseError, NumericalError
from .forecast import FORECAST_METHODS, evaluate_forecasts
from .pipeline import PipelineConfig, decompose
from .simgen import VARIANTS, DgpSpec, generate, run_montecarlo
from .tsstats import TimeSeriesPanel

SCHEMA_VERSION = 1


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(path_or_buf, matrix: np.ndarray, header: list[str] | None = None) -> None:
    """Write a 2-D array as CSV with round-trip-exact float formatting."""
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))

    def _emit(fh):
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in mat:
            writer.writerow([format_float(v) for v in row])

    if hasattr(path_or_buf, "write"):
        _emit(path_or_buf)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            _emit(fh)


def read_panel_csv(path_or_buf) -> TimeSeriesPanel:
    """Parse a CSV panel, tolerating one optional header row.

    Ragged rows and non-numeric cells raise :class:`CsvParseError` with the
    offending row/column (1-based, counting the header).
    """
    if hasattr(path_or_buf, "read"):
        rows = list(csv.reader(path_or_buf))
    else:
        with open(path_or_buf, newline="") as fh:
            rows = list(csv.reader(fh))
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise CsvParseError("empty CSV input")
    start = 0
    try:
        [float(cell) for cell in rows[0]]
    except ValueError:
        start = 1
        if len(rows) == 1:
            raise CsvParseError("CSV has a header but no data rows")
    width = len(rows[start])
    data = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:], start=start):
        if len(row) != width:
            raise CsvParseError(
                f"ragged row: expected {width} columns, got {len(row)}", row=i + 1
            )
        for j, cell in enumerate(row):
            try:
                data[i - start, j] = float(cell)
            except ValueError:
                raise CsvParseError(
                    f"non-numeric cell {cell!r}", row=i + 1, column=j + 1
                ) from None
    try:
        return TimeSeriesPanel(data)
    except ArgumentError as exc:
        raise CsvParseError(str(exc)) from None


def _config_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        k0=args.k0,
        j0=args.j0,
        c0=args.c0,
        l=args.l,
        m=args.m,
        alpha=args.alpha,
        epsilon=args.epsilon,
        K_override=args.K,
        absolute_acf=not args.no_absolute_acf,
        reorder=not args.no_reorder,
        horizons=tuple(args.horizons) if getattr(args, "horizons", None) else (1, 2, 3, 4),
        window_start=getattr(args, "window_start", None),
        seed=args.seed,
    )


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k0", type=int, default=2, help="lags in the first-stage matrix")
    parser.add_argument("--j0", type=int, default=2, help="lags in the second-stage matrix")
    parser.add_argument("--c0", type=float, default=0.3, help="unit-root ACF threshold")
    parser.add_argument("--l", type=int, default=3, help="gap between probed ACF lags")
    parser.add_argument("--m", type=int, default=10, help="number of probed lags / portmanteau lag")
    parser.add_argument("--alpha", type=float, default=0.05, help="white-noise test level")
    parser.add_argument("--epsilon", type=float, default=0.75,
                        help="kept fraction of components when the panel is wide")
    parser.add_argument("--K", type=int, default=None,
                        help="override the prominent-noise count")
    parser.add_argument("--no-absolute-acf", action="store_true",
                        help="use signed instead of absolute autocorrelations")
    parser.add_argument("--no-reorder", action="store_true",
                        help="skip p-value reordering before white-noise testing")
    parser.add_argument("--seed", type=int, default=0, help="seed for reproducible output")
    parser.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path: Path, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def cmd_decompose(args) -> int:
    config = _config_from_args(args)
    panel = read_panel_csv(args.input)
    if panel.n <= panel.p:
        warnings.warn(
            f"panel is wide (n={panel.n} <= p={panel.p}); white-noise testing keeps "
            f"only the leading {config.epsilon:.0%} * n components"
        )
    dec = decompose(panel, config)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    for name, mat in [
        ("loadings_A1", dec.A1), ("loadings_A2", dec.A2), ("loadings_U1", dec.U1),
        ("loadings_V1", dec.V1), ("loadings_V2", dec.V2),
        ("factors_x1", dec.x1), ("factors_x2", dec.x2), ("factors_z2", dec.z2),
    ]:
        write_csv(out / f"{name}.csv", mat)
    diag = dec.diagnostics
    _write_json(out / "decompose.json", {
        "r1_hat": dec.r1_hat,
        "r2_hat": dec.r2_hat,
        "v_hat": dec.v_hat,
        "K_hat": dec.K_hat,
        "n": panel.n,
        "p": panel.p,
        "config": {
            "k0": config.k0, "j0": config.j0, "c0": config.c0, "l": config.l,
            "m": config.m, "alpha": config.alpha, "epsilon": config.epsilon,
            "K_override": config.K_override, "absolute_acf": config.absolute_acf,
            "reorder": config.reorder, "seed": config.seed,
        },
        "diagnostics": {
            "M1_eigenvalues": diag.get("M1_eigenvalues"),
            "s_statistics": diag.get("s_statistics"),
            "M2_eigenvalues": diag.get("M2_eigenvalues"),
            "lb_pvalues": diag.get("lb_pvalues"),
            "component_order": diag.get("component_order"),
            "S_eigenvalues": diag.get("S_eigenvalues"),
            "truncated_components": diag.get("truncated_components", 0),
        },
    })
    print(f"r1={dec.r1_hat} r2={dec.r2_hat} v={dec.v_hat} K={dec.K_hat} -> {out}")
    return 0


def cmd_forecast(args) -> int:
    config = _config_from_args(args)
    panel = read_panel_csv(args.input)
    report = evaluate_forecasts(
        panel,
        config,
        methods=tuple(args.methods),
        pca_nfac_levels=args.pca_nfac_levels,
        pca_nfac_diff=args.pca_nfac_diff,
    )
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    fe_rows = [[m] + [format_float(report.fe[m][h]) for h in report.horizons]
               for m in report.methods]
    with open(out / "fe.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method"] + [f"h{h}" for h in report.horizons])
        writer.writerows(fe_rows)
    with open(out / "rmsfe.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "series"] + [f"h{h}" for h in report.horizons])
        for m in report.methods:
            arr = report.rmsfe_series[m]
            for i in range(arr.shape[1]):
                writer.writerow([m, i] + [format_float(v) for v in arr[:, i]])
    with open(out / "dm.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method_a", "method_b", "h", "statistic", "lrv", "pvalue"])
        for (ma, mb), per_h in report.dm.items():
            for h, res in per_h.items():
                writer.writerow([ma, mb, h, format_float(res.statistic),
                                 format_float(res.lrv), format_float(res.pvalue)])
    for m in report.methods:
        write_csv(out / f"forecasts_{m}.csv", report.forecasts[m])
    _write_json(out / "forecast.json", {
        "horizons": list(report.horizons),
        "methods": list(report.methods),
        "window_start": report.window_start,
        "origins": {str(h): c for h, c in report.origins.items()},
        "fe": {m: {str(h): report.fe[m][h] for h in report.horizons} for m in report.methods},
        "dm": {
            f"{ma}-{mb}": {
                str(h): {"statistic": r.statistic, "lrv": r.lrv, "pvalue": r.pvalue,
                         "degenerate": r.degenerate}
                for h, r in per_h.items()
            }
            for (ma, mb), per_h in report.dm.items()
        },
        "pca_nfac": report.meta,
    })
    lead = report.methods[0]
    print("FE by horizon:")
    for m in report.methods:
        cells = "  ".join(f"h{h}={report.fe[m][h]:.4g}" for h in report.horizons)
        print(f"  {m:>11}: {cells}")
    if report.dm:
        print(f"DM p-values ({lead} vs others):")
        for (ma, mb), per_h in report.dm.items():
            cells = "  ".join(f"h{h}={per_h[h].pvalue:.3g}" for h in report.horizons)
            print(f"  {ma}-{mb}: {cells}")
    return 0


def cmd_simulate(args) -> int:
    spec = DgpSpec(
        p=args.p, n=args.n, r1=args.r1, r2=args.r2, K=args.K_true,
        delta=args.delta, example=args.example, seed=args.seed,
    )
    panel, truth = generate(spec)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "panel.csv", panel.data)
    _write_json(out / "truth.json", {
        "spec": {
            "p": spec.p, "n": spec.n, "r1": spec.r1, "r2": spec.r2, "K": spec.K,
            "delta": spec.delta, "example": spec.example, "seed": spec.seed,
        },
        "A1": truth.A1,
        "A2_U22_1": truth.A2 @ truth.U22_1,
        "phi": truth.phi,
    })
    print(f"panel {spec.n}x{spec.p} -> {out / 'panel.csv'}")
    return 0


def _format_benchmark_table(result) -> str:
    """Aligned text table: one block per (example, delta, p), columns by n."""
    from collections import defaultdict

    groups: dict = defaultdict(dict)
    for cell in result.cells:
        s = cell.spec
        groups[(s.example, s.delta, s.p)][s.n] = cell
    methods = result.methods
    pair = len(methods) >= 2
    label = {
        "r1": f"P(r1_hat={{r1}})",
        "r2": f"P(r2_hat={{r2}})",
        "total": "P(total=r)",
    }
    lines = []
    for (example, delta, p), by_n in sorted(groups.items()):
        ns = sorted(by_n)
        any_cell = by_n[ns[0]]
        head = f"example {example}  p={p}" + (f"  delta={delta:g}" if example == 2 else "")
        lines.append(head)
        method_note = f"{methods[0]}({methods[1]})" if pair else methods[0]
        lines.append(f"  statistic [{method_note}]" + "".join(f"{f'n={n}':>16}" for n in ns))
        for key in ("r1", "r2", "total"):
            name = label[key].format(r1=any_cell.spec.r1, r2=any_cell.spec.r2)
            row = f"  {name:<22}"
            for n in ns:
                cell = by_n[n]
                v = cell.probs[methods[0]][key]
                if pair:
                    w = cell.probs[methods[1]][key]
                    row += f"{v:.3f}({w:.3f})".rjust(16)
                else:
                    row += f"{v:.3f}".rjust(16)
            lines.append(row)
        lines.append("")
    return "\n".join(lines)


def cmd_benchmark(args) -> int:
    grid = [
        DgpSpec(p=p, n=n, r1=args.r1, r2=args.r2, K=args.K_true,
                delta=args.delta, example=args.example)
        for p in args.p
        for n in args.n
    ]
    result = run_montecarlo(
        grid, reps=args.reps, methods=tuple(args.methods), base_seed=args.seed,
    )
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = result.rows()
    with open(out / "benchmark.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    table = _format_benchmark_table(result)
    (out / "benchmark.txt").write_text(table + "\n")
    print(table)
    return 0


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the CLI contract reserves 2 for
    # numerical failures, so remap usage errors to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trendfactors",
                     description="Unit-root trends, stationary factors, white noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dec = sub.add_parser("decompose", parents=[], help="decompose a CSV panel")
    p_dec.add_argument("input", type=Path, help="input CSV panel")
    _add_config_flags(p_dec)
    p_dec.set_defaults(func=cmd_decompose)

    p_fc = sub.add_parser("forecast", help="expanding-window forecast evaluation")
    p_fc.add_argument("input", type=Path, help="input CSV panel")
    _add_config_flags(p_fc)
    p_fc.add_argument("--horizons", type=int, nargs="+", default=[1, 2, 3, 4])
    p_fc.add_argument("--window-start", type=int, default=None,
                      help="training length at the first forecast origin")
    p_fc.add_argument("--methods", nargs="+", default=list(FORECAST_METHODS),
                      choices=list(FORECAST_METHODS))
    p_fc.add_argument("--pca-nfac-levels", type=int, default=None,
                      help="factor count for the levels PCA baseline")
    p_fc.add_argument("--pca-nfac-diff", type=int, default=None,
                      help="factor count for the differences PCA baseline")
    p_fc.set_defaults(func=cmd_forecast)

    p_sim = sub.add_parser("simulate", help="generate a synthetic panel")
    p_sim.add_argument("--example", type=int, default=1, choices=(1, 2))
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--r1", type=int, default=2)
    p_sim.add_argument("--r2", type=int, default=2)
    p_sim.add_argument("--K-true", type=int, default=0,
                       help="prominent noise directions in the generator")
    p_sim.add_argument("--delta", type=float, default=0.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out-dir", type=Path, default=Path("."))
    p_sim.set_defaults(func=cmd_simulate)

    p_bm = sub.add_parser("benchmark", help="Monte Carlo benchmark over a grid")
    p_bm.add_argument("--example", type=int, default=1, choices=(1, 2))
    p_bm.add_argument("--p", type=int, nargs="+", required=True)
    p_bm.add_argument("--n", type=int, nargs="+", required=True)
    p_bm.add_argument("--r1", type=int, default=2)
    p_bm.add_argument("--r2", type=int, default=2)
    p_bm.add_argument("--K-true", type=int, default=0)
    p_bm.add_argument("--delta", type=float, default=0.0)
    p_bm.add_argument("--reps", type=int, default=100)
    p_bm.add_argument("--methods", nargs="+", default=["a*w*", "aw"],
                      choices=list(VARIANTS))
    p_bm.add_argument("--seed", type=int, default=0)
    p_bm.add_argument("--out-dir", type=Path, default=Path("."))
    p_bm.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArgumentError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
