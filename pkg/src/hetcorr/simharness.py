"""Reproducible Monte Carlo experiments for the two tests.

Level studies draw from a test's own null (Gaussian or Frank copula) and
record p-values; power studies draw from mixture or Mallows-subpopulation
alternatives; the convergence studies probe the Mallows-to-Frank limit that
justifies the CKT null. Replicate r of an experiment derives its stream
from (master_seed, kind_id, r), so every result is bit-identical across
runs and across worker counts.
"""

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats as sp_stats

from . import rankcore
from ._rng import child_seed, seed_rng
from .copulas import (
    CopulaSample,
    empirical_copula_distance,
    phi_from_theta,
    sample_frank_copula,
    sample_gaussian_copula,
    sample_independent,
    sample_log_density,
    tau_from_theta,
    theta_from_tau,
    _clip_unit,
)
from .csf import csf_test
from .ckt import ckt_test
from .mallows import sample_mallows

KINDS = (
    "level_csf",
    "level_ckt",
    "power_csf",
    "power_ckt",
    "frank_limit_convergence",
    "density_distance",
)

EXPERIMENT_SCHEMA = "hetcorr-experiment-v1"


@dataclass
class ExperimentSpec:
    """Parameters of one Monte Carlo experiment (see KINDS)."""

    kind: str
    n: int = 1000
    reps: int = 200
    alpha: float = 0.05
    master_seed: int = 0
    worker_hint: int = 1
    rho: float | None = None            # Gaussian null correlation
    theta: float | None = None          # Frank null / convergence parameter
    sub_fraction: float | None = None   # Gaussian-mixture alternative
    rho_sub: float | None = None
    sub_size: int | None = None         # Mallows-subpopulation alternative
    tau_sub: float | None = None
    window: tuple = (0.0, 1.0)
    n_list: tuple = (100, 1000)         # convergence study sizes
    mode: str = "analytic"
    blocks: int | None = None
    null_reps: int = 200
    alpha_sims: int = 1000
    threshold: float = 0.2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        lo, hi = self.window
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError("window must satisfy 0 <= lo < hi <= 1")


@dataclass
class ExperimentResult:
    """Per-replicate p-values with their rejection rate and summary."""

    spec: ExperimentSpec
    p_values: np.ndarray
    rejection_rate: float
    summary: dict
    runtime_s: float


def gen_gaussian_mixture(n, sub_fraction, rho_sub, seed):
    """floor(sub_fraction n) Gaussian-copula points, the rest independent, shuffled."""
    if not 0.0 < sub_fraction <= 1.0:
        raise ValueError("sub_fraction must lie in (0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    m = int(math.floor(sub_fraction * n))
    parts_u, parts_v = [], []
    if m > 0:
        sub = sample_gaussian_copula(rho_sub, m, child_seed(seed, 0))
        parts_u.append(sub.u)
        parts_v.append(sub.v)
    if n - m > 0:
        ind = sample_independent(n - m, child_seed(seed, 1))
        parts_u.append(ind.u)
        parts_v.append(ind.v)
    u = np.concatenate(parts_u)
    v = np.concatenate(parts_v)
    perm = seed_rng(child_seed(seed, 2)).permutation(n)
    return CopulaSample(
        u=u[perm],
        v=v[perm],
        generator=f"mixture(weight={sub_fraction}, gaussian(rho={rho_sub}) + independent)",
        seed=seed,
        sub_indices=np.flatnonzero(perm < m),
    )


def _mallows_resort(x, y, indices, phi, seed):
    """Re-sort y over ``indices`` so their ranking follows Mallows(phi) vs x order.

    Values are permuted, never changed, so both margins stay exactly as
    generated.
    """
    chosen = np.asarray(indices)
    by_x = chosen[np.argsort(x[chosen])]
    y_sorted = np.sort(y[chosen])
    perm = sample_mallows(phi, chosen.size, seed)
    y = y.copy()
    y[by_x] = y_sorted[perm - 1]
    return y


def mallows_coupled_sample(n, phi, seed):
    """Uniform margins with the y-ranking Mallows(phi)-coupled to the x-ranking."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = seed_rng(child_seed(seed, 0))
    x = _clip_unit(rng.random(n))
    y = _clip_unit(rng.random(n))
    y = _mallows_resort(x, y, np.arange(n), phi, child_seed(seed, 1))
    return CopulaSample(
        u=x, v=y, generator=f"mallows_coupled(phi={phi})", seed=seed
    )


def gen_mallows_subpop(n, sub_size, tau_sub, window=(0.0, 1.0), seed=0):
    """Independent uniforms with a Mallows-reordered subpopulation.

    Among the points whose x falls in the given x-quantile window,
    ``sub_size`` are chosen at random and their y values are re-sorted
    according to a Mallows draw at the scale matched to ``tau_sub``. If the
    window holds fewer than ``sub_size`` points, all of them are used and
    the provenance string records the shortfall.
    """
    if not 0 < sub_size <= n:
        raise ValueError("sub_size must lie in (0, n]")
    lo, hi = window
    if not (0.0 <= lo < hi <= 1.0):
        raise ValueError("window must satisfy 0 <= lo < hi <= 1")
    rng = seed_rng(child_seed(seed, 0))
    x = _clip_unit(rng.random(n))
    y = _clip_unit(rng.random(n))
    qlo, qhi = np.quantile(x, [lo, hi])
    eligible = np.flatnonzero((x >= qlo) & (x <= qhi))
    short = eligible.size < sub_size
    if short:
        chosen = eligible
    else:
        pick = seed_rng(child_seed(seed, 1)).choice(eligible.size, size=sub_size, replace=False)
        chosen = np.sort(eligible[pick])
    m = chosen.size
    if tau_sub == 0.0:
        phi = 0.0
    else:
        phi = phi_from_theta(theta_from_tau(tau_sub), m)
    y = _mallows_resort(x, y, chosen, phi, child_seed(seed, 2))
    note = f", short_window(got={m})" if short else ""
    return CopulaSample(
        u=x,
        v=y,
        generator=(
            f"mallows_subpop(sub_size={m}, tau_sub={tau_sub}, "
            f"window=({lo}, {hi}){note})"
        ),
        seed=seed,
        sub_indices=chosen,
    )


def _replicate_sample(spec, r):
    """Draw replicate r of the experiment's generating process."""
    seed = (spec.master_seed, KINDS.index(spec.kind), r)
    if spec.kind in ("level_csf", "level_ckt"):
        if spec.theta is not None:
            return sample_frank_copula(spec.theta, spec.n, seed)
        if spec.rho is None:
            raise ValueError("level experiments need rho (Gaussian) or theta (Frank)")
        if spec.rho == 0.0:
            return sample_independent(spec.n, seed)
        return sample_gaussian_copula(spec.rho, spec.n, seed)
    if spec.kind in ("power_csf", "power_ckt"):
        mixture = spec.sub_fraction is not None or spec.rho_sub is not None
        mallows = spec.sub_size is not None or spec.tau_sub is not None
        if mixture == mallows:
            raise ValueError(
                "power experiments need either (sub_fraction, rho_sub) or "
                "(sub_size, tau_sub), not both"
            )
        if mixture:
            return gen_gaussian_mixture(spec.n, spec.sub_fraction, spec.rho_sub, seed)
        return gen_mallows_subpop(spec.n, spec.sub_size, spec.tau_sub, spec.window, seed)
    raise ValueError(f"kind {spec.kind!r} has no per-replicate sampler")


def _replicate_pvalue(args):
    spec, table, r = args
    cop = _replicate_sample(spec, r)
    rs = rankcore.ranked_sample(cop.u, cop.v)
    test_seed = (spec.master_seed, KINDS.index(spec.kind), r, 1)
    if spec.kind.endswith("_csf"):
        report = csf_test(
            rs,
            table=table,
            mode=spec.mode,
            alpha_sims=spec.alpha_sims,
            threshold=spec.threshold,
            seed=test_seed,
        )
    else:
        report = ckt_test(
            rs,
            mode=spec.mode,
            null_reps=spec.null_reps,
            block_count=spec.blocks,
            seed=test_seed,
        )
    return report.p_value


def _run_pvalue_experiment(spec, table, workers):
    start = time.time()
    tasks = [(spec, table, r) for r in range(spec.reps)]
    nworkers = workers if workers is not None else spec.worker_hint
    if nworkers and nworkers > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as ex:
            p_values = np.asarray(list(ex.map(_replicate_pvalue, tasks, chunksize=4)))
    else:
        p_values = np.asarray([_replicate_pvalue(t) for t in tasks])
    rejection = int(np.count_nonzero(p_values <= spec.alpha)) / spec.reps
    qs = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)
    summary = {
        "mean": float(p_values.mean()),
        "sd": float(p_values.std(ddof=1)) if spec.reps > 1 else 0.0,
        "quantiles": {q: float(val) for q, val in zip(qs, np.quantile(p_values, qs))},
    }
    return ExperimentResult(
        spec=spec,
        p_values=p_values,
        rejection_rate=rejection,
        summary=summary,
        runtime_s=time.time() - start,
    )


def run_level_experiment(spec, table=None, workers=None):
    """p-values of a test applied to its own null, replicated."""
    if spec.kind not in ("level_csf", "level_ckt"):
        raise ValueError("spec.kind must be a level kind")
    return _run_pvalue_experiment(spec, table, workers)


def run_power_experiment(spec, table=None, workers=None):
    """p-values of a test against a subpopulation alternative, replicated."""
    if spec.kind not in ("power_csf", "power_ckt"):
        raise ValueError("spec.kind must be a power kind")
    return _run_pvalue_experiment(spec, table, workers)


@dataclass
class ConvergenceReport:
    """Mallows-coupled samples approaching their matched Frank copula."""

    theta: float
    n_list: tuple
    reps: int
    reference_n: int
    copula_distance: dict      # n -> mean sup-distance to the Frank reference
    tau_abs_error: dict        # n -> mean |tau_hat - tau_theta|
    tau_theta: float


def run_convergence_experiment(
    n_list=(100, 1000), theta=3.0, reps=50, seed=0, reference_n=100_000, grid=50
):
    """Check that Mallows(phi(theta, n)) coupling converges to Frank(theta).

    For each n, draws uniform x, re-sorts y by a Mallows draw at the matched
    scale, and reports the mean empirical-copula sup-distance to a large
    Frank(theta) reference sample plus the mean |tau_hat - tau_theta|.
    """
    if theta == 0.0:
        raise ValueError("theta must be nonzero")
    reference = sample_frank_copula(theta, reference_n, child_seed(seed, 0))
    tau_target = tau_from_theta(theta)
    distances, tau_errors = {}, {}
    for i, n in enumerate(n_list):
        phi = phi_from_theta(theta, n)
        dist = np.empty(reps)
        terr = np.empty(reps)
        for r in range(reps):
            cop = mallows_coupled_sample(n, phi, child_seed(seed, 1 + i, r))
            rs = rankcore.ranked_sample(cop.u, cop.v)
            dist[r] = empirical_copula_distance(cop, reference, grid)
            terr[r] = abs(rs.kendall_tau() - tau_target)
        distances[int(n)] = float(dist.mean())
        tau_errors[int(n)] = float(terr.mean())
    return ConvergenceReport(
        theta=float(theta),
        n_list=tuple(int(n) for n in n_list),
        reps=int(reps),
        reference_n=int(reference_n),
        copula_distance=distances,
        tau_abs_error=tau_errors,
        tau_theta=float(tau_target),
    )


@dataclass
class DensityDistanceReport:
    """Per-sample joint log density against Kendall distance, with their
    Spearman rank correlation."""

    theta: float
    n: int
    reps: int
    distances: np.ndarray
    log_densities: np.ndarray
    spearman: float


def run_density_distance_experiment(n=1000, theta=3.0, reps=200, seed=0):
    """Frank(theta) samples: joint log density is a decreasing function of
    the Kendall distance for large n."""
    if theta == 0.0:
        raise ValueError("theta must be nonzero")
    d = np.empty(reps)
    logdens = np.empty(reps)
    for r in range(reps):
        cop = sample_frank_copula(theta, n, child_seed(seed, r))
        rs = rankcore.ranked_sample(cop.u, cop.v)
        d[r] = rs.kendall_distance()
        logdens[r] = sample_log_density(cop, theta)
    rho = float(sp_stats.spearmanr(logdens, d).statistic)
    return DensityDistanceReport(
        theta=float(theta),
        n=int(n),
        reps=int(reps),
        distances=d,
        log_densities=logdens,
        spearman=rho,
    )


_SPEC_FIELDS = {
    "kind": str,
    "n": int,
    "reps": int,
    "alpha": float,
    "master_seed": int,
    "worker_hint": int,
    "rho": float,
    "theta": float,
    "sub_fraction": float,
    "rho_sub": float,
    "sub_size": int,
    "tau_sub": float,
    "mode": str,
    "blocks": int,
    "null_reps": int,
    "alpha_sims": int,
    "threshold": float,
}


def parse_experiment_config(text):
    """ExperimentSpec from ``key = value`` lines (# starts a comment).

    ``window`` takes two comma-separated quantiles, ``n_list`` a
    comma-separated list of sizes.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key = key.strip()
        val = val.strip()
        if key in _SPEC_FIELDS:
            values[key] = _SPEC_FIELDS[key](val)
        elif key == "window":
            parts = [float(p) for p in val.split(",")]
            if len(parts) != 2:
                raise ValueError(f"config line {lineno}: window needs two quantiles")
            values["window"] = tuple(parts)
        elif key == "n_list":
            values["n_list"] = tuple(int(p) for p in val.split(","))
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    if "kind" not in values:
        raise ValueError("config must set kind")
    return ExperimentSpec(**values)


def load_experiment_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_experiment_config(fh.read())


def write_pvalues_csv(result, path):
    """One p-value per row, serialized to round-trip exactly."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("p_value\n")
        for p in result.p_values:
            fh.write(f"{p:.17g}\n")


def write_summary_json(result, path):
    spec_dict = asdict(result.spec)
    spec_dict["window"] = list(result.spec.window)
    spec_dict["n_list"] = list(result.spec.n_list)
    payload = {
        "schema": EXPERIMENT_SCHEMA,
        "spec": spec_dict,
        "rejection_rate": result.rejection_rate,
        "summary": result.summary,
        "runtime_s": result.runtime_s,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
