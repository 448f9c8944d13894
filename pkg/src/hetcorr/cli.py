"""Command-line interface.

Subcommands: calibrate, test, scan, simulate, replicate. Every report path
writes machine-readable output (versioned JSON and/or 17-digit CSV) and a
rendered PNG figure next to it. Exit codes: 0 success, 1 usage error,
2 data error.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import csf as csf_mod
from . import ckt as ckt_mod
from . import plots, simharness
from .dataio import DataError, load_csv, load_wine
from .pairscan import scan_pairs, test_pair

REPORT_SCHEMA = "hetcorr-report-v1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="master seed (bit-reproducible runs)")
    p.add_argument("--out", type=Path, help="output path (figures and CSV siblings are derived from it)")


def _add_test_options(p):
    p.add_argument("--mode", choices=["analytic", "simulated"], default="analytic")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=None,
                   help="simulated-mode replicates (CKT null draws / CSF resamples)")
    p.add_argument("--blocks", type=int, default=None, help="multistage block count")
    p.add_argument("--threshold", type=float, default=0.2, help="scaled rank-difference cutoff")
    p.add_argument("--rho-method", choices=["tau", "pearson"], default="tau",
                   help="null-correlation anchor for the footrule test")
    p.add_argument("--calibration", type=Path, help="beta calibration table path")


def build_parser():
    parser = _Parser(prog="hetcorr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate the Gaussian-null beta curve")
    p.add_argument("--n-cal", type=int, default=csf_mod.DEFAULT_N_CAL)
    p.add_argument("--reps", type=int, default=csf_mod.DEFAULT_CAL_REPS)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--grid-max", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("test", help="test one column pair for heterogeneous association")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--columns", required=True, help="two columns, by name or 1-based index (A,B)")
    p.add_argument("--header", action="store_true", help="first row holds column names")
    p.add_argument("--method", choices=["csf", "ckt", "both"], default="both")
    p.add_argument("--negative", action="store_true", help="negate y to test negative association")
    _add_test_options(p)
    _add_common(p)

    p = sub.add_parser("scan", help="CSF-screen all column pairs, CKT-confirm survivors")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--columns", help="subset of columns to scan (comma-separated)")
    p.add_argument("--header", action="store_true")
    p.add_argument("--screen-alpha", type=float, default=0.05)
    _add_test_options(p)
    _add_common(p)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a config file")
    p.add_argument("--input", type=Path, required=True, help="key = value experiment config")
    p.add_argument("--reps", type=int, help="override config reps")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--calibration", type=Path)
    _add_common(p)

    p = sub.add_parser("replicate", help="run the whole validation battery end to end")
    p.add_argument("--input", type=Path, help="wine-style CSV (class + 13 measurements, no header)")
    p.add_argument("--calibration", type=Path, help="reuse an existing calibration table")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quick", action="store_true", help="reduce replicate counts tenfold")
    _add_common(p)
    return parser


def _require_out(args, what):
    if args.out is None:
        raise UsageError(f"{what} needs --out")
    return args.out


def _report_dict(report):
    d = asdict(report)
    d["null_params"] = {k: _jsonable(v) for k, v in report.null_params.items()}
    return d


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _load_table(args):
    if getattr(args, "calibration", None) is None:
        return None
    return csf_mod.load_calibration(args.calibration)


def cmd_calibrate(args):
    out = _require_out(args, "calibrate")
    grid = np.round(np.arange(0.0, args.grid_max + 1e-9, args.grid_step), 10)
    table = csf_mod.calibrate_beta_curve(
        rho_grid=grid,
        n_cal=args.n_cal,
        reps=args.reps,
        master_seed=args.seed,
        workers=args.workers,
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    csf_mod.save_calibration(table, out)
    plots.emit_plot_data(table, "beta-curve", out.with_suffix(".curve.csv"))
    plots.render_beta_curve(table, out.with_suffix(".png"))
    print(f"calibrated {table.rho_grid.size} grid points "
          f"(n_cal={table.n_cal}, reps={table.reps}, adjusted={table.adjusted}) -> {out}")
    return 0


def _split_columns(spec):
    return [c.strip() for c in spec.split(",") if c.strip()]


def cmd_test(args):
    cols = _split_columns(args.columns)
    if len(cols) != 2:
        raise UsageError("--columns needs exactly two entries, e.g. --columns 7,8")
    dataset = load_csv(args.input, header=args.header)
    table = _load_table(args)
    kwargs = {}
    if args.reps is not None:
        kwargs["null_reps"] = args.reps
        kwargs["alpha_sims"] = args.reps
    reports = test_pair(
        dataset,
        cols[0],
        cols[1],
        method=args.method,
        table=table,
        mode=args.mode,
        negative=args.negative,
        threshold=args.threshold,
        blocks=args.blocks,
        seed=args.seed,
        rho_method=args.rho_method,
        **kwargs,
    )
    for r in reports:
        flag = " (reject)" if r.p_value <= args.alpha else ""
        print(f"{r.method} [{r.mode}] p = {r.p_value:.6g}, statistic = {r.statistic:.6g}, "
              f"tau_hat = {r.tau_hat:.4f}{flag}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "schema": REPORT_SCHEMA,
            "command": "test",
            "input": str(args.input),
            "columns": cols,
            "negative": args.negative,
            "alpha": args.alpha,
            "seed": args.seed,
            "reports": [_report_dict(r) for r in reports],
        }
        _write_json(payload, args.out)
        from .pairscan import _pair_sample

        sample = _pair_sample(dataset, cols[0], cols[1], args.negative)
        plots.render_pair_scatter(sample, reports, args.out.with_suffix(".png"))
    return 0


def _scan_rows(report):
    npairs = max(report.n_pairs, 1)
    rows = []
    for rec in report.records:
        rows.append({
            "col_a": rec.col_a,
            "col_b": rec.col_b,
            "tau_hat": rec.tau_hat,
            "negated": rec.negated,
            "csf_stat": rec.csf_stat,
            "csf_p": rec.csf_p,
            # Bonferroni column is an extension over the raw two-stage screen
            "csf_p_bonferroni": min(1.0, rec.csf_p * npairs),
            "screened_in": rec.screened_in,
            "ckt_p": rec.ckt_p,
            "ckt_llr": rec.ckt_llr,
            "note": rec.note,
        })
    return rows


def cmd_scan(args):
    columns = _split_columns(args.columns) if args.columns else None
    dataset = load_csv(args.input, header=args.header, columns=columns)
    table = _load_table(args)
    kwargs = {}
    if args.reps is not None:
        kwargs["null_reps"] = args.reps
        kwargs["alpha_sims"] = args.reps
    report = scan_pairs(
        dataset,
        screen_alpha=args.screen_alpha,
        table=table,
        mode=args.mode,
        threshold=args.threshold,
        blocks=args.blocks,
        seed=args.seed,
        rho_method=args.rho_method,
        **kwargs,
    )
    rows = _scan_rows(report)
    screened = sum(1 for r in rows if r["screened_in"])
    print(f"scanned {report.n_pairs} pairs over {len(report.columns)} columns; "
          f"{screened} passed the CSF screen at {report.screen_alpha}")
    for r in rows:
        if r["screened_in"]:
            print(f"  {r['col_a']} ~ {r['col_b']}: csf_p = {r['csf_p']:.4g}, "
                  f"ckt_p = {r['ckt_p']:.4g}, tau_hat = {r['tau_hat']:.3f}"
                  + (" [negated]" if r["negated"] else ""))
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        cols = ["col_a", "col_b", "tau_hat", "negated", "csf_stat", "csf_p",
                "csf_p_bonferroni", "screened_in", "ckt_p", "ckt_llr", "note"]
        lines = [",".join(cols)]
        for r in rows:
            cells = []
            for c in cols:
                v = r[c]
                if isinstance(v, float):
                    cells.append(f"{v:.17g}")
                elif v is None:
                    cells.append("")
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
        _write_json({
            "schema": REPORT_SCHEMA,
            "command": "scan",
            "input": str(args.input),
            "screen_alpha": report.screen_alpha,
            "n": report.n,
            "columns": report.columns,
            "seed": args.seed,
            "pairs": rows,
        }, args.out.with_suffix(".json"))
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.hist([r["csf_p"] for r in rows], bins=20, range=(0, 1),
                edgecolor="black", alpha=0.75)
        ax.axvline(report.screen_alpha, color="red", ls="--", lw=1)
        ax.set_xlabel("CSF screening p-value")
        ax.set_ylabel("pairs")
        ax.set_title(f"Screen over {report.n_pairs} pairs")
        fig.tight_layout()
        fig.savefig(args.out.with_suffix(".png"), dpi=150)
        plt.close(fig)
    return 0


def cmd_simulate(args):
    spec = simharness.load_experiment_config(args.input)
    if args.reps is not None:
        spec.reps = args.reps
    spec.master_seed = args.seed if args.seed != 0 else spec.master_seed
    out = _require_out(args, "simulate")
    out.parent.mkdir(parents=True, exist_ok=True)
    if spec.kind in ("level_csf", "level_ckt", "power_csf", "power_ckt"):
        table = _load_table(args)
        runner = (simharness.run_level_experiment
                  if spec.kind.startswith("level") else simharness.run_power_experiment)
        result = runner(spec, table=table, workers=args.workers)
        simharness.write_pvalues_csv(result, out.with_suffix(".pvalues.csv"))
        simharness.write_summary_json(result, out.with_suffix(".summary.json"))
        plots.emit_plot_data(result, "p-value-histogram", out.with_suffix(".hist.csv"))
        plots.render_pvalue_histogram(result, out.with_suffix(".png"))
        print(f"{spec.kind}: rejection rate at alpha={spec.alpha} over {spec.reps} reps: "
              f"{result.rejection_rate:.4f} ({result.runtime_s:.1f} s)")
    elif spec.kind == "frank_limit_convergence":
        report = simharness.run_convergence_experiment(
            n_list=spec.n_list, theta=spec.theta if spec.theta is not None else 3.0,
            reps=spec.reps, seed=spec.master_seed)
        plots.emit_plot_data(report, "convergence", out.with_suffix(".csv"))
        plots.render_convergence(report, out.with_suffix(".png"))
        for n in report.n_list:
            print(f"n={n}: copula sup-distance {report.copula_distance[n]:.4f}, "
                  f"|tau error| {report.tau_abs_error[n]:.4f}")
    else:  # density_distance
        report = simharness.run_density_distance_experiment(
            n=spec.n, theta=spec.theta if spec.theta is not None else 3.0,
            reps=spec.reps, seed=spec.master_seed)
        plots.emit_plot_data(report, "density-distance", out.with_suffix(".csv"))
        plots.render_density_distance(report, out.with_suffix(".png"))
        print(f"density vs distance over {report.reps} samples: "
              f"Spearman = {report.spearman:.4f}")
    return 0


def cmd_replicate(args):
    out_dir = _require_out(args, "replicate")
    out_dir.mkdir(parents=True, exist_ok=True)
    scale = 0.1 if args.quick else 1.0
    seed = args.seed
    lines = []

    def log(msg):
        print(msg)
        lines.append(msg)

    # Beta-curve calibration against the Gaussian null
    if args.calibration:
        table = csf_mod.load_calibration(args.calibration)
        log(f"loaded calibration from {args.calibration}")
    else:
        table = csf_mod.calibrate_beta_curve(master_seed=seed, workers=args.workers)
        csf_mod.save_calibration(table, out_dir / "beta_calibration.txt")
        log(f"calibrated beta curve: beta(0) = {table.beta_values[0]:.3f}")
    plots.emit_plot_data(table, "beta-curve", out_dir / "beta_curve.csv")
    plots.render_beta_curve(table, out_dir / "beta_curve.png")

    # Independence: scaled components against Beta(1, 2)
    from . import rankcore
    from .copulas import sample_independent
    from scipy import stats as sp_stats

    cop = sample_independent(10_000, (seed, 101))
    rs = rankcore.ranked_sample(cop.u, cop.v)
    scaled = rankcore.footrule_components(rs.pi, rs.nu).scaled
    ks = sp_stats.kstest(scaled, sp_stats.beta(1, 2).cdf).statistic
    plots.emit_plot_data(scaled, "component-histogram", out_dir / "independence_components.csv")
    plots.render_component_histogram(scaled, out_dir / "independence_components.png")
    log(f"independence components vs Beta(1,2): KS = {ks:.4f}")

    # Half-and-half mixture: fitted Beta shape
    mix = simharness.gen_gaussian_mixture(10_000, 0.5, 0.6, (seed, 102))
    mrs = rankcore.ranked_sample(mix.u, mix.v)
    mscaled = rankcore.footrule_components(mrs.pi, mrs.nu).scaled
    bhat = csf_mod.beta_mle(mscaled)
    plots.emit_plot_data(mscaled, "component-histogram", out_dir / "mixture_components.csv")
    plots.render_component_histogram(mscaled, out_dir / "mixture_components.png", beta=bhat)
    log(f"50/50 Gaussian(0.6)+independent mixture: fitted beta = {bhat:.3f}")

    # CSF level under Gaussian nulls
    for rho in (0.0, 0.2, 0.4):
        spec = simharness.ExperimentSpec(
            kind="level_csf", n=1000, reps=max(1, int(2000 * scale)),
            rho=rho, master_seed=seed + 1)
        res = simharness.run_level_experiment(spec, table=table, workers=args.workers)
        simharness.write_pvalues_csv(res, out_dir / f"csf_level_rho{rho:g}.pvalues.csv")
        simharness.write_summary_json(res, out_dir / f"csf_level_rho{rho:g}.summary.json")
        plots.render_pvalue_histogram(res, out_dir / f"csf_level_rho{rho:g}.png")
        log(f"CSF level, Gaussian rho={rho}: type-I at 0.05 = {res.rejection_rate:.4f}")

    # CSF power against the 25% Gaussian(0.8) mixture
    spec = simharness.ExperimentSpec(
        kind="power_csf", n=1000, reps=max(1, int(500 * scale)),
        sub_fraction=0.25, rho_sub=0.8, master_seed=seed + 2)
    res = simharness.run_power_experiment(spec, table=table, workers=args.workers)
    plots.render_pvalue_histogram(res, out_dir / "csf_power_mixture.png")
    simharness.write_summary_json(res, out_dir / "csf_power_mixture.summary.json")
    log(f"CSF power, 25% Gaussian(0.8) mixture: {res.rejection_rate:.3f}")

    # CKT null moments and the llr-null curve
    refs = {}
    for tau in (0.1, 0.2, 0.3):
        reps = max(100, int((200 if tau == 0.2 else 100) * scale)) if not args.quick else 100
        ref = ckt_mod.ckt_null_reference(1000, tau, reps=reps, seed=(seed, 103, int(tau * 100)))
        refs[tau] = ref
        log(f"CKT null llr at tau={tau}: mean = {ref.mean:.1f}, sd = {ref.sd:.2f}")
    plots.emit_plot_data(refs, "llr-null", out_dir / "llr_null.csv")
    plots.render_llr_null(refs, out_dir / "llr_null.png")

    # CKT power against Mallows subpopulations, CSF on the same draws
    for window, label in (((0.0, 1.0), "full"), ((0.2, 0.8), "window")):
        for kind in ("power_ckt", "power_csf"):
            spec = simharness.ExperimentSpec(
                kind=kind, n=1000, reps=max(1, int(100 * scale)),
                sub_size=400, tau_sub=0.5, window=window,
                null_reps=100, master_seed=seed + 3)
            res = simharness.run_power_experiment(spec, table=table, workers=args.workers)
            simharness.write_summary_json(
                res, out_dir / f"{kind}_mallows_{label}.summary.json")
            plots.render_pvalue_histogram(res, out_dir / f"{kind}_mallows_{label}.png")
            log(f"{kind} vs Mallows subpop ({label} range): power = {res.rejection_rate:.3f}")

    # Mallows coupling converges to the matched Frank copula
    conv = simharness.run_convergence_experiment(
        n_list=(100, 1000), theta=3.0, reps=max(5, int(50 * scale)), seed=seed + 4)
    plots.emit_plot_data(conv, "convergence", out_dir / "convergence.csv")
    plots.render_convergence(conv, out_dir / "convergence.png")
    log(f"convergence: sup-distance {conv.copula_distance} tau error {conv.tau_abs_error}")

    # Joint density decreases in the Kendall distance
    dd = simharness.run_density_distance_experiment(
        n=500, theta=3.0, reps=max(20, int(200 * scale)), seed=seed + 5)
    plots.emit_plot_data(dd, "density-distance", out_dir / "density_distance.csv")
    plots.render_density_distance(dd, out_dir / "density_distance.png")
    log(f"density vs distance Spearman = {dd.spearman:.4f}")

    # Wine pair and full scan
    dataset = load_csv(args.input, header=False) if args.input else load_wine()
    if args.input:
        dataset.column_names = list(load_wine().column_names[: len(dataset.columns)])
    null_reps = max(200, int(2000 * scale))
    reports = test_pair(
        dataset, "flavanoids", "total_phenols", method="both", table=table,
        mode="analytic", null_reps=null_reps, seed=(seed, 104))
    for r in reports:
        log(f"wine flavanoids ~ total_phenols, {r.method} [{r.mode}]: p = {r.p_value:.6g}")
    payload = {
        "schema": REPORT_SCHEMA,
        "command": "replicate",
        "reports": [_report_dict(r) for r in reports],
    }
    _write_json(payload, out_dir / "wine_pair.json")

    measurement_cols = [c for c in dataset.column_names if c != "class"]
    wine_scan = scan_pairs(
        dataset_subset(dataset, measurement_cols),
        screen_alpha=0.05, table=table, mode="analytic",
        null_reps=max(200, int(1000 * scale)), seed=(seed, 105))
    rows = _scan_rows(wine_scan)
    _write_json({
        "schema": REPORT_SCHEMA,
        "command": "scan",
        "input": "wine",
        "screen_alpha": wine_scan.screen_alpha,
        "n": wine_scan.n,
        "columns": wine_scan.columns,
        "pairs": rows,
    }, out_dir / "wine_scan.json")
    screened = sum(1 for r in rows if r["screened_in"])
    log(f"wine scan: {wine_scan.n_pairs} pairs, {screened} screened in at 0.05")

    with open(out_dir / "summary.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    log(f"wrote {out_dir}/summary.txt")
    return 0


def dataset_subset(dataset, names):
    """Dataset restricted to the named columns."""
    from .dataio import Dataset

    idx = [dataset.column_index(nm) for nm in names]
    return Dataset(
        column_names=[dataset.column_names[i] for i in idx],
        columns=[dataset.columns[i] for i in idx],
        row_count=dataset.row_count,
        tie_counts=[dataset.tie_counts[i] for i in idx],
    )


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handlers = {
            "calibrate": cmd_calibrate,
            "test": cmd_test,
            "scan": cmd_scan,
            "simulate": cmd_simulate,
            "replicate": cmd_replicate,
        }
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
