"""Mallows ranking model and its multistage generalization.

The Mallows model puts P(nu | pi) proportional to e^{-phi d(pi, nu)} with d
the Kendall distance. Over rankings of n items the distance decomposes into
independent stage variables V_k on {0..k}, k = 1..n-1, each following a
truncated geometric law with common scale phi. The multistage model frees
the scale per stage (here: piecewise constant over blocks of stages) and
therefore nests Mallows.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import seed_rng

SCALE_CAP = 50.0        # e^{-50} is below any realistic likelihood resolution
_BRACKET_LO = 1e-12
_SCALE_TOL = 1e-10


def stage_log_normalizer(theta, ks):
    """log sum_{i=0..k} e^{-i theta} for each stage k in ``ks``; any real theta."""
    ks = np.asarray(ks, dtype=float)
    if theta == 0.0:
        return np.log(ks + 1.0)
    if theta > 0.0:
        return np.log(-np.expm1(-(ks + 1.0) * theta)) - np.log(-np.expm1(-theta))
    # theta < 0: factor out the largest term e^{-k theta} to avoid overflow
    return -ks * theta + np.log(-np.expm1((ks + 1.0) * theta)) - np.log(-np.expm1(theta))


def _stage_means(theta, ks):
    """Mean of the stage law P(V = j) ~ e^{-theta j} on {0..k}, vectorized.

    The small (k+1) theta regime uses a series for the difference
    1/expm1(theta) - (k+1)/expm1((k+1) theta), whose direct form cancels
    catastrophically there.
    """
    ks = np.asarray(ks, dtype=float)
    y = (ks + 1.0) * theta
    with np.errstate(over="ignore"):
        exact = 1.0 / math.expm1(theta) - (ks + 1.0) / np.expm1(y)
    small = np.abs(y) < 1e-4
    if small.any():
        km = ks[small]
        series = (
            km / 2.0
            - km * (km + 2.0) * theta / 12.0
            + ((km + 1.0) ** 4 - 1.0) * theta**3 / 720.0
        )
        exact = np.where(small, series, exact)
    return exact


def _mean_sum(theta, ks1):
    """sum of stage means over a block; ks1 = k + 1 for the block's stages.

    Same quantity as _stage_means(theta, ks).sum() but with fewer
    temporaries; valid only when ks1.min() * theta >= 1e-4 (no series
    regime), which the callers check.
    """
    with np.errstate(over="ignore"):
        return ks1.size / math.expm1(theta) - float(np.sum(ks1 / np.expm1(ks1 * theta)))


def stage_expected_v(theta, k):
    """E[V_k] under scale theta > 0; strictly decreasing in theta.

    (The stage law itself is defined for any real theta; the internal fits
    use both signs. This public form keeps the positive-scale contract.)
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(_stage_means(theta, np.asarray([k]))[0])


def log_normalizer(phi, n):
    """log of the partition sum over rankings, log sum_nu e^{-phi d(nu)}.

    At phi = 0 this is log(n!).
    """
    if phi < 0.0:
        raise ValueError("phi must be nonnegative")
    if n < 2:
        raise ValueError("n must be >= 2")
    return float(np.sum(stage_log_normalizer(phi, np.arange(1, n, dtype=float))))


def expected_distance(phi, n):
    """Expected Kendall distance under Mallows(phi); -> n(n-1)/4 as phi -> 0."""
    if phi <= 0.0:
        raise ValueError("phi must be positive")
    if n < 2:
        raise ValueError("n must be >= 2")
    return float(np.sum(_stage_means(phi, np.arange(1, n, dtype=float))))


def sample_stage_counts(phi, n, seed):
    """Draw the stage vector (V_1, .., V_{n-1}) of a Mallows(phi) ranking."""
    if phi < 0.0:
        raise ValueError("phi must be nonnegative")
    rng = seed_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    k = np.arange(1, n)
    w = rng.random(n - 1)
    if phi == 0.0:
        return np.minimum((w * (k + 1)).astype(np.int64), k)
    logq = -phi
    tail = -np.expm1(logq * (k + 1.0))           # 1 - q^{k+1}
    j = np.ceil(np.log1p(-w * tail) / logq) - 1.0
    return np.clip(j, 0, k).astype(np.int64)


def ranking_from_stage_counts(v):
    """Ranking nu with kendall_distance(identity, nu) = sum(v), built by insertion.

    Item k (0-based) is inserted with v[k-1] already-placed items after it,
    creating exactly v[k-1] discordances with the identity.
    """
    v = np.asarray(v, dtype=np.int64)
    n = v.size + 1
    order = [0]
    for k in range(1, n):
        order.insert(k - int(v[k - 1]), k)
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.asarray(order)] = np.arange(1, n + 1)
    return ranks


def sample_mallows(phi, n, seed):
    """Ranking drawn from Mallows(phi) centered at the identity.

    The caller composes with an arbitrary center to recenter.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return np.asarray([1], dtype=np.int64)
    return ranking_from_stage_counts(sample_stage_counts(phi, n, seed))


@dataclass(frozen=True)
class MallowsFit:
    """MLE of the Mallows scale from an observed Kendall distance.

    ``saturated`` marks a fit capped at SCALE_CAP (distance 0);
    ``boundary`` marks phi_hat = 0 (distance at or above the uniform mean).
    """

    phi_hat: float
    log_likelihood: float
    distance: int
    n: int
    saturated: bool = False
    boundary: bool = False


def _solve_scale(target, ks, allow_negative=False):
    """Solve sum_k E[V_k](theta) = target by bisection, tolerance 1e-10.

    The mean-sum is strictly decreasing in theta. The positive branch works
    on [1e-12, SCALE_CAP] exactly as the Mallows MLE does; with
    ``allow_negative`` the anti-concordant side is solved on the mirrored
    bracket instead of pinning theta to 0. Returns (theta, saturated,
    boundary): ``saturated`` marks |theta| at the cap, ``boundary`` marks a
    clamp at 0 (only possible when negative scales are disallowed).
    """
    ks = np.asarray(ks, dtype=float)
    ks1 = ks + 1.0
    kmin1 = float(ks1[0])   # stages are passed in ascending order

    def mean_sum(theta):
        if kmin1 * abs(theta) >= 1e-4:
            return _mean_sum(theta, ks1)
        return float(np.sum(_stage_means(theta, ks)))

    def bisect(lo, hi):
        while hi - lo > _SCALE_TOL:
            mid = 0.5 * (lo + hi)
            if mean_sum(mid) > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    if target <= 0.0:
        return SCALE_CAP, True, False
    half = float(np.sum(ks / 2.0))
    if target < half and mean_sum(_BRACKET_LO) > target:
        if mean_sum(SCALE_CAP) >= target:
            return SCALE_CAP, True, False
        return bisect(_BRACKET_LO, SCALE_CAP), False, False
    # at or above the uniform mean: anti-concordant side
    if not allow_negative:
        return 0.0, False, True
    if target >= float(np.sum(ks)):
        return -SCALE_CAP, True, False
    if mean_sum(-_BRACKET_LO) >= target:
        return 0.0, False, False
    if mean_sum(-SCALE_CAP) <= target:
        return -SCALE_CAP, True, False
    return bisect(-SCALE_CAP, -_BRACKET_LO), False, False


def mallows_mle(distance, n):
    """Fit the Mallows scale to an observed Kendall distance.

    phi_hat solves expected_distance(phi, n) = distance; distance 0 caps the
    scale at SCALE_CAP (flagged), distance at or above n(n-1)/4 pins it to 0
    (flagged: the data carry no positive association to fit).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    dmax = n * (n - 1) // 2
    if not 0 <= distance <= dmax:
        raise ValueError(f"distance must lie in [0, {dmax}]")
    ks = np.arange(1, n, dtype=float)
    phi, saturated, boundary = _solve_scale(float(distance), ks)
    ll = -phi * float(distance) - float(np.sum(stage_log_normalizer(phi, ks)))
    return MallowsFit(
        phi_hat=phi,
        log_likelihood=ll,
        distance=int(distance),
        n=int(n),
        saturated=saturated,
        boundary=boundary,
    )


def multistage_decompose(pi, nu, chunk=1024):
    """Stage counts of the discordances between two rankings, in list order.

    V[k-1] = number of observations among the first k discordant with
    observation k+1; the counts sum to the Kendall distance of the pair.
    """
    pi = np.asarray(pi, dtype=np.int64)
    nu = np.asarray(nu, dtype=np.int64)
    if pi.shape != nu.shape:
        raise ValueError("rankings differ in length")
    n = pi.size
    if n < 2:
        raise ValueError("need at least two observations")
    p32 = pi.astype(np.int32, copy=False)
    n32 = nu.astype(np.int32, copy=False)
    v = np.empty(n - 1, dtype=np.int64)
    for s in range(1, n, chunk):
        e = min(s + chunk, n)
        cols = np.arange(s, e)
        dp = p32[:e, None] - p32[None, cols]
        dn = n32[:e, None] - n32[None, cols]
        np.multiply(dp, dn, out=dp)
        disc = dp < 0
        disc &= np.arange(e)[:, None] < cols[None, :]
        v[s - 1 : e - 1] = disc.sum(axis=0)
    return v


@dataclass(frozen=True)
class MultistageFit:
    """Blockwise-constant stage scales and the resulting log likelihood."""

    theta: np.ndarray                 # one value per stage, constant on blocks
    blocks: tuple                     # (first_stage, last_stage) per block, 1-based
    log_likelihood: float
    saturated_blocks: int = 0         # |theta| pinned at SCALE_CAP
    negative_blocks: int = 0          # anti-concordant stages (theta < 0)


def default_block_count(n):
    """ceil(sqrt(n - 1)) blocks: parameter count grows with sample size."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return int(math.ceil(math.sqrt(n - 1)))


def multistage_fit_smooth(v, block_count):
    """Fit blockwise-constant stage scales to an observed stage vector.

    Stages are split into ``block_count`` contiguous blocks of near-equal
    size; within each block the scale solves the moment equation
    sum_k E[V_k](theta) = sum_k v_k with the same positive-side bracket and
    tolerance as mallows_mle, extended to negative scales for
    anti-concordant blocks. With a single block on positively associated
    data (distance below the uniform mean) the fit and its log likelihood
    coincide exactly with the Mallows fit.
    """
    v = np.asarray(v, dtype=np.int64)
    if v.size == 0:
        raise ValueError("empty stage vector")
    if not 1 <= block_count <= v.size:
        raise ValueError("block_count must lie in [1, len(v)]")
    stages = np.arange(1, v.size + 1, dtype=float)
    theta = np.empty(v.size, dtype=float)
    blocks = []
    ll = 0.0
    saturated = negative = 0
    for idx in np.array_split(np.arange(v.size), block_count):
        ks = stages[idx]
        target = float(v[idx].sum())
        th, sat, _ = _solve_scale(target, ks, allow_negative=True)
        theta[idx] = th
        ll += -th * target - float(np.sum(stage_log_normalizer(th, ks)))
        blocks.append((int(idx[0]) + 1, int(idx[-1]) + 1))
        saturated += int(sat)
        negative += int(th < 0.0)
    return MultistageFit(
        theta=theta,
        blocks=tuple(blocks),
        log_likelihood=ll,
        saturated_blocks=saturated,
        negative_blocks=negative,
    )
