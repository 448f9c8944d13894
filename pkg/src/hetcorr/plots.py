"""Plot-data emission (delimited text) and matplotlib rendering.

Every CLI report path writes the numbers behind a figure as CSV (17
significant digits, so parsing the file recovers them exactly) and renders
the figure itself as a PNG next to it.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csf import CalibrationTable
from .ckt import NullReference
from .simharness import ConvergenceReport, DensityDistanceReport, ExperimentResult

PLOT_KINDS = (
    "beta-curve",
    "llr-null",
    "p-value-histogram",
    "component-histogram",
    "density-distance",
    "convergence",
)


def _fmt(x):
    return f"{float(x):.17g}"


def emit_plot_data(result, kind, path, bins=20):
    """Write the delimited data behind one figure kind.

    beta-curve          CalibrationTable        -> rho,beta
    llr-null            {tau: NullReference}    -> tau,mean_llr,sd_llr
    p-value-histogram   ExperimentResult        -> bin_lo,bin_hi,count
    component-histogram 1-d scaled differences  -> bin_lo,bin_hi,count
    density-distance    DensityDistanceReport   -> distance,log_density
    convergence         ConvergenceReport       -> n,copula_distance,tau_abs_error
    """
    lines = []
    if kind == "beta-curve":
        if not isinstance(result, CalibrationTable):
            raise ValueError("beta-curve needs a CalibrationTable")
        lines.append("rho,beta")
        for rho, beta in zip(result.rho_grid, result.beta_values):
            lines.append(f"{_fmt(rho)},{_fmt(beta)}")
    elif kind == "llr-null":
        if not (
            isinstance(result, dict)
            and result
            and all(isinstance(v, NullReference) for v in result.values())
        ):
            raise ValueError("llr-null needs a {tau: NullReference} mapping")
        lines.append("tau,mean_llr,sd_llr")
        for tau in sorted(result):
            ref = result[tau]
            lines.append(f"{_fmt(tau)},{_fmt(ref.mean)},{_fmt(ref.sd)}")
    elif kind == "p-value-histogram":
        if not isinstance(result, ExperimentResult):
            raise ValueError("p-value-histogram needs an ExperimentResult")
        counts, edges = np.histogram(result.p_values, bins=bins, range=(0.0, 1.0))
        lines.append("bin_lo,bin_hi,count")
        for lo, hi, cnt in zip(edges[:-1], edges[1:], counts):
            lines.append(f"{_fmt(lo)},{_fmt(hi)},{int(cnt)}")
    elif kind == "component-histogram":
        arr = np.asarray(result, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("component-histogram needs a 1-d array of scaled differences")
        counts, edges = np.histogram(arr, bins=bins, range=(0.0, 1.0))
        lines.append("bin_lo,bin_hi,count")
        for lo, hi, cnt in zip(edges[:-1], edges[1:], counts):
            lines.append(f"{_fmt(lo)},{_fmt(hi)},{int(cnt)}")
    elif kind == "density-distance":
        if not isinstance(result, DensityDistanceReport):
            raise ValueError("density-distance needs a DensityDistanceReport")
        lines.append("distance,log_density")
        for d, ld in zip(result.distances, result.log_densities):
            lines.append(f"{_fmt(d)},{_fmt(ld)}")
    elif kind == "convergence":
        if not isinstance(result, ConvergenceReport):
            raise ValueError("convergence needs a ConvergenceReport")
        lines.append("n,copula_distance,tau_abs_error")
        for n in result.n_list:
            lines.append(
                f"{n},{_fmt(result.copula_distance[n])},{_fmt(result.tau_abs_error[n])}"
            )
    else:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _new_axes(xlabel, ylabel, title):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_beta_curve(table, path):
    fig, ax = _new_axes("rho", "beta(rho)", "Calibrated Beta shape vs Gaussian correlation")
    ax.plot(table.rho_grid, table.beta_values, "o-", ms=3)
    return _save(fig, path)


def render_pvalue_histogram(result, path, bins=20):
    fig, ax = _new_axes("p-value", "count", f"{result.spec.kind} (n={result.spec.n}, reps={result.spec.reps})")
    ax.hist(result.p_values, bins=bins, range=(0.0, 1.0), edgecolor="black", alpha=0.75)
    ax.axvline(result.spec.alpha, color="red", ls="--", lw=1,
               label=f"alpha={result.spec.alpha}, rejection={result.rejection_rate:.3f}")
    ax.legend()
    return _save(fig, path)


def render_llr_null(refs, path):
    taus = sorted(refs)
    means = [refs[t].mean for t in taus]
    sds = [refs[t].sd for t in taus]
    fig, ax = _new_axes("tau", "llr", "Null llr moments under matched Frank copulas")
    ax.errorbar(taus, means, yerr=sds, fmt="o-", capsize=3, label="mean +/- sd")
    ax.legend()
    return _save(fig, path)


def render_component_histogram(scaled, path, beta=None, bins=40):
    scaled = np.asarray(scaled, dtype=float)
    fig, ax = _new_axes("scaled rank difference", "density", "Footrule components")
    ax.hist(scaled, bins=bins, range=(0.0, 1.0), density=True, edgecolor="black", alpha=0.6)
    grid = np.linspace(0.0, 0.999, 400)
    ax.plot(grid, 2.0 * (1.0 - grid), lw=1.5, label="Beta(1,2) (independence)")
    if beta is not None:
        ax.plot(grid, beta * (1.0 - grid) ** (beta - 1.0), lw=1.5,
                label=f"Beta(1,{beta:.2f}) (fitted)")
    ax.legend()
    return _save(fig, path)


def render_density_distance(report, path):
    fig, ax = _new_axes("Kendall distance", "joint log density",
                        f"Frank(theta={report.theta}) samples, n={report.n}")
    ax.plot(report.distances, report.log_densities, ".", ms=4, alpha=0.7,
            label=f"Spearman = {report.spearman:.3f}")
    ax.set_xscale("log")
    ax.legend()
    return _save(fig, path)


def render_convergence(report, path):
    ns = list(report.n_list)
    fig, ax = _new_axes("n", "mean sup-distance to Frank reference",
                        f"Mallows coupling -> Frank(theta={report.theta})")
    ax.plot(ns, [report.copula_distance[n] for n in ns], "o-", label="copula sup-distance")
    ax.plot(ns, [report.tau_abs_error[n] for n in ns], "s--", label="|tau_hat - tau_theta|")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.legend()
    return _save(fig, path)


def render_pair_scatter(sample, reports, path):
    """Pseudo-observation scatter annotated with the test outcomes."""
    from .rankcore import pseudo_observations

    ps = pseudo_observations(sample)
    fig, ax = _new_axes("u (x pseudo-observation)", "v (y pseudo-observation)", "Pair diagnostics")
    ax.plot(ps[:, 0], ps[:, 1], ".", ms=3, alpha=0.6)
    lines = [
        f"{r.method} ({r.mode}): p = {r.p_value:.4g}, tau = {r.tau_hat:.3f}" for r in reports
    ]
    ax.text(
        0.02,
        0.98,
        "\n".join(lines),
        transform=ax.transAxes,
        va="top",
        fontsize=8,
        bbox={"boxstyle": "round", "fc": "white", "alpha": 0.8},
    )
    return _save(fig, path)
