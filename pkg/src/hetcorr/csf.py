"""Footrule-components test (CSF).

Under a Gaussian(rho) copula the n-scaled absolute rank differences follow
a Beta(1, beta(rho)) law asymptotically, with beta(0) = 2. The curve
beta(rho) has no closed form and is calibrated once by Monte Carlo; the
test statistic is the count of scaled differences below a threshold, and
its null distribution is either a Binomial built from the Beta tail
(analytic mode) or simulated directly from the Gaussian copula.
"""

import math
from dataclasses import dataclass, field
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import stats

from . import rankcore
from ._rng import child_seed
from .copulas import sample_gaussian_copula

DEFAULT_THRESHOLD = 0.2
DEFAULT_RHO_GRID = tuple(np.round(np.arange(0.0, 0.9501, 0.05), 2))
DEFAULT_N_CAL = 5000
DEFAULT_CAL_REPS = 200

CALIBRATION_HEADER = "hetcorr-beta-calibration v1"


@dataclass(frozen=True)
class CalibrationTable:
    """Monotone rho -> beta(rho) map with its simulation metadata."""

    rho_grid: np.ndarray
    beta_values: np.ndarray
    n_cal: int
    reps: int
    master_seed: int
    adjusted: bool = False   # isotonic fix applied to the raw averages


@dataclass
class TestReport:
    """Outcome of one test on one (x, y) pair."""

    method: str                  # "csf" | "ckt"
    mode: str                    # "analytic" | "simulated"
    statistic: float
    p_value: float
    tau_hat: float
    rho_hat: float
    n: int
    null_params: dict = field(default_factory=dict)


def csf_statistic(sample, threshold=DEFAULT_THRESHOLD):
    """Count of scaled footrule components strictly below the threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    comps = rankcore.footrule_components(sample.pi, sample.nu)
    return int(np.count_nonzero(comps.scaled < threshold))


def beta_mle(scaled_diffs):
    """Closed-form MLE of beta for a Beta(1, beta) sample: -m / sum log(1 - s)."""
    s = np.asarray(scaled_diffs, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("need a nonempty 1-d sequence")
    if np.any((s < 0.0) | (s >= 1.0)):
        raise ValueError("scaled differences must lie in [0, 1)")
    if not np.any(s > 0.0):
        raise ValueError("all differences are zero; the shape estimate diverges")
    log1m = np.log(np.maximum(1.0 - s, 1e-12))
    return float(-s.size / log1m.sum())


def _beta_replicate(args):
    rho, n_cal, seed = args
    cop = sample_gaussian_copula(rho, n_cal, seed)
    rs = rankcore.ranked_sample(cop.u, cop.v)
    comps = rankcore.footrule_components(rs.pi, rs.nu)
    return beta_mle(comps.scaled)


def _isotonic_nondecreasing(y):
    """Pool-adjacent-violators projection onto nondecreasing sequences."""
    level = list(map(float, y))
    weight = [1.0] * len(level)
    k = 0
    while k < len(level) - 1:
        if level[k] <= level[k + 1]:
            k += 1
            continue
        merged = (level[k] * weight[k] + level[k + 1] * weight[k + 1]) / (
            weight[k] + weight[k + 1]
        )
        weight[k] += weight[k + 1]
        level[k] = merged
        del level[k + 1], weight[k + 1]
        if k > 0:
            k -= 1
    out = []
    for lv, w in zip(level, weight):
        out.extend([lv] * int(w))
    return np.asarray(out)


def calibrate_beta_curve(
    rho_grid=None,
    n_cal=DEFAULT_N_CAL,
    reps=DEFAULT_CAL_REPS,
    master_seed=0,
    workers=1,
):
    """Average the per-sample beta MLE over Gaussian-copula replicates.

    Replicate (i, r) draws its stream from (master_seed, i, r), so results
    do not depend on scheduling or worker count. Monte Carlo violations of
    monotonicity are repaired isotonically and flagged.
    """
    grid = np.asarray(DEFAULT_RHO_GRID if rho_grid is None else rho_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or grid[0] != 0.0:
        raise ValueError("rho grid must be 1-d and start at 0")
    if np.any(np.diff(grid) <= 0.0) or grid[-1] > 0.95:
        raise ValueError("rho grid must be strictly increasing within [0, 0.95]")
    if reps < 1 or n_cal < 2:
        raise ValueError("reps and n_cal must be positive (n_cal >= 2)")
    tasks = [
        (float(grid[i]), int(n_cal), (int(master_seed), i, r))
        for i in range(grid.size)
        for r in range(reps)
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            flat = list(ex.map(_beta_replicate, tasks, chunksize=8))
    else:
        flat = [_beta_replicate(t) for t in tasks]
    means = np.asarray(flat, dtype=float).reshape(grid.size, reps).mean(axis=1)
    adjusted = bool(np.any(np.diff(means) <= 0.0)) if grid.size > 1 else False
    values = _isotonic_nondecreasing(means) if adjusted else means
    return CalibrationTable(
        rho_grid=grid,
        beta_values=values,
        n_cal=int(n_cal),
        reps=int(reps),
        master_seed=int(master_seed),
        adjusted=adjusted,
    )


def lookup_beta(table, rho):
    """Piecewise-linear interpolation of beta(rho) on the calibration grid."""
    if not 0.0 <= rho <= float(table.rho_grid[-1]):
        raise ValueError(
            f"rho={rho} outside the calibrated range [0, {table.rho_grid[-1]}]; "
            "use the simulated mode instead"
        )
    return float(np.interp(rho, table.rho_grid, table.beta_values))


def save_calibration(table, path):
    """Versioned plain-text persistence; round-trips exactly."""
    lines = [
        CALIBRATION_HEADER,
        f"n_cal={table.n_cal}",
        f"reps={table.reps}",
        f"seed={table.master_seed}",
    ]
    for rho, beta in zip(table.rho_grid, table.beta_values):
        lines.append(f"{rho:.17g},{beta:.17g}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_calibration(path):
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CALIBRATION_HEADER:
        raise ValueError(f"not a calibration file (expected header {CALIBRATION_HEADER!r})")
    meta = {}
    for ln in lines[1:4]:
        key, _, val = ln.partition("=")
        meta[key] = val
    for key in ("n_cal", "reps", "seed"):
        if key not in meta:
            raise ValueError(f"calibration file missing metadata line {key}=")
    rows = [ln.split(",") for ln in lines[4:]]
    if not rows or any(len(r) != 2 for r in rows):
        raise ValueError("calibration file must carry rho,beta rows")
    grid = np.asarray([float(r[0]) for r in rows])
    values = np.asarray([float(r[1]) for r in rows])
    return CalibrationTable(
        rho_grid=grid,
        beta_values=values,
        n_cal=int(meta["n_cal"]),
        reps=int(meta["reps"]),
        master_seed=int(meta["seed"]),
    )


def csf_test(
    sample,
    table=None,
    mode="analytic",
    alpha_sims=1000,
    threshold=DEFAULT_THRESHOLD,
    seed=0,
    rho_method="tau",
):
    """Test for a concordant subpopulation via the footrule component counts.

    The null correlation defaults to rho_hat = sin(pi tau_hat / 2)
    (rank-based, hence invariant to the margins), floored at 0 for negative
    tau_hat; ``rho_method='pearson'`` anchors the null at the plain sample
    correlation instead. Analytic mode compares the count statistic to
    Binomial(n, 1 - (1-threshold)^beta(rho_hat)); simulated mode replays
    the statistic on Gaussian-copula replicates carrying the observed
    marginal value multisets (so tied data meet equally tied nulls).
    """
    if sample.n < 100:
        raise ValueError("csf_test needs n >= 100")
    if mode not in ("analytic", "simulated"):
        raise ValueError("mode must be 'analytic' or 'simulated'")
    if rho_method not in ("tau", "pearson"):
        raise ValueError("rho_method must be 'tau' or 'pearson'")
    t_s = csf_statistic(sample, threshold)
    tau_hat = rankcore.kendall_tau(sample.pi, sample.nu)
    if rho_method == "tau":
        rho_hat = math.sin(math.pi * tau_hat / 2.0)
    else:
        rho_hat = float(np.corrcoef(sample.x, sample.y)[0, 1])
    diag = {
        "threshold": threshold,
        "rho_method": rho_method,
        "tie_count_x": sample.ties_x,
        "tie_count_y": sample.ties_y,
        "small_n_warning": sample.n < 500,
    }
    if mode == "analytic":
        if table is None:
            raise ValueError("analytic mode requires a calibration table; run calibrate first")
        rho_null = min(max(rho_hat, 0.0), float(table.rho_grid[-1]))
        beta = lookup_beta(table, rho_null)
        p_hit = 1.0 - (1.0 - threshold) ** beta
        p_value = float(stats.binom.sf(t_s - 1, sample.n, p_hit))
        diag.update(rho_null=rho_null, beta=beta, binom_p=p_hit)
    else:
        rho_null = min(max(rho_hat, 0.0), 1.0 - 1e-6)
        if table is not None:
            rho_null = min(rho_null, float(table.rho_grid[-1]))
        hits = 0
        for r in range(alpha_sims):
            cop = sample_gaussian_copula(rho_null, sample.n, child_seed(seed, r))
            xn, yn = rankcore.match_margins(cop.u, cop.v, sample.x, sample.y)
            rs = rankcore.ranked_sample(xn, yn)
            if csf_statistic(rs, threshold) >= t_s:
                hits += 1
        p_value = hits / alpha_sims
        diag.update(rho_null=rho_null, alpha_sims=alpha_sims, null_hits=hits)
    return TestReport(
        method="csf",
        mode=mode,
        statistic=float(t_s),
        p_value=p_value,
        tau_hat=tau_hat,
        rho_hat=rho_hat,
        n=sample.n,
        null_params=diag,
    )
