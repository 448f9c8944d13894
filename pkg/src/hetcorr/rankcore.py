"""Rankings, Kendall distance, footrule components and per-point concordance.

Ranking convention used throughout the package: ``rank[i] = #{j : x_i <= x_j}``,
so the largest observation receives rank 1. Both tests built on top of this
module only consume absolute rank differences and pairwise discordances,
which are symmetric in the direction of the convention, but the convention
itself is fixed and single.
"""

from dataclasses import dataclass

import numpy as np

_MERGE_LEAF = 64  # below this, count discordant pairs by direct enumeration


def rank_vector(values):
    """Rank observations so that the largest value receives rank 1.

    Ties are broken deterministically by input index: the earlier
    observation is treated as infinitesimally larger, so the output is
    always a permutation of 1..n.

    Parameters
    ----------
    values : 1d array_like of reals, nonempty

    Returns
    -------
    ranks : ndarray of int64, a permutation of {1, .., n}
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("rank_vector needs a nonempty 1-d sequence")
    order = np.lexsort((np.arange(v.size), -v))
    ranks = np.empty(v.size, dtype=np.int64)
    ranks[order] = np.arange(1, v.size + 1)
    return ranks


def relative_ranking(ranking, order):
    """Ranking of the subsequence ``ranking[order]``.

    Preserves the tie resolution already frozen into ``ranking``: the
    observation with the smallest rank in the subsequence gets relative
    rank 1.
    """
    sub = np.asarray(ranking, dtype=np.int64)[np.asarray(order, dtype=np.int64)]
    out = np.empty(sub.size, dtype=np.int64)
    out[np.argsort(sub, kind="stable")] = np.arange(1, sub.size + 1)
    return out


def is_ranking(values):
    """True if ``values`` is a permutation of {1, .., n}."""
    v = np.asarray(values)
    return v.ndim == 1 and v.size > 0 and np.array_equal(np.sort(v), np.arange(1, v.size + 1))


def _merge_count(a):
    """Sort ``a`` and count its inversions (pairs k < l with a[k] > a[l])."""
    n = a.size
    if n <= _MERGE_LEAF:
        gt = a[:, None] > a[None, :]
        return np.sort(a), int(np.triu(gt, 1).sum())
    mid = n // 2
    left, cl = _merge_count(a[:mid])
    right, cr = _merge_count(a[mid:])
    cross = int((left.size - np.searchsorted(left, right, side="right")).sum())
    merged = np.sort(np.concatenate([left, right]), kind="stable")
    return merged, cl + cr + cross


def kendall_distance(pi, nu):
    """Number of discordant pairs between two rankings.

    Counts pairs i < j with (pi_i - pi_j)(nu_i - nu_j) < 0 in O(n log n):
    compose nu with the inverse of pi and merge-count the inversions of the
    resulting permutation.
    """
    pi = np.asarray(pi, dtype=np.int64)
    nu = np.asarray(nu, dtype=np.int64)
    if pi.shape != nu.shape:
        raise ValueError("rankings differ in length")
    sigma = np.empty(pi.size, dtype=np.int64)
    sigma[pi - 1] = nu
    _, inversions = _merge_count(sigma)
    return inversions


def kendall_tau(pi, nu):
    """tau = 1 - 4 D / (n (n - 1)) where D is the Kendall distance."""
    pi = np.asarray(pi)
    n = pi.size
    if n < 2:
        raise ValueError("kendall_tau needs at least two observations")
    return 1.0 - 4.0 * kendall_distance(pi, nu) / (n * (n - 1.0))


@dataclass(frozen=True)
class FootruleComponents:
    """Per-observation absolute rank differences d_i and their n-scaled form."""

    d: np.ndarray        # |pi_i - nu_i|, each <= n - 1
    scaled: np.ndarray   # d_i / n, in [0, 1)

    @property
    def total(self):
        """Footrule distance, the sum of the components (always even)."""
        return int(self.d.sum())


def footrule_components(pi, nu):
    """Componentwise absolute rank differences between two rankings."""
    pi = np.asarray(pi, dtype=np.int64)
    nu = np.asarray(nu, dtype=np.int64)
    if pi.shape != nu.shape:
        raise ValueError("rankings differ in length")
    d = np.abs(pi - nu)
    return FootruleComponents(d=d, scaled=d / pi.size)


def match_margins(u, v, x_obs, y_obs):
    """Give unit-square coordinates the observed marginal value multisets.

    The i-th smallest u receives the i-th smallest observed x (same for v
    and y), so simulated replicates carry exactly the observed values, ties
    included, and tied data are compared against equally tied nulls. For
    tie-free observations the replicate's rankings are unchanged.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    xs = np.sort(np.asarray(x_obs, dtype=float))
    ys = np.sort(np.asarray(y_obs, dtype=float))
    xn = np.empty_like(xs)
    yn = np.empty_like(ys)
    xn[np.argsort(u, kind="stable")] = xs
    yn[np.argsort(v, kind="stable")] = ys
    return xn, yn


def pseudo_from_rankings(pi, nu):
    """Pseudo-observations (1 - pi/(n+1), 1 - nu/(n+1)) as an (n, 2) array."""
    pi = np.asarray(pi, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = pi.size
    return np.column_stack([1.0 - pi / (n + 1.0), 1.0 - nu / (n + 1.0)])


def discordance_counts(pi, nu, chunk=512):
    """c[i] = number of j != i with pair (i, j) discordant; sum(c) = 2 * distance."""
    pi = np.asarray(pi)
    nu = np.asarray(nu)
    if pi.shape != nu.shape:
        raise ValueError("rankings differ in length")
    n = pi.size
    # ranks are < 2^15 in practice well below int32 product overflow
    p32 = pi.astype(np.int32, copy=False)
    n32 = nu.astype(np.int32, copy=False)
    c = np.empty(n, dtype=np.int64)
    for s in range(0, n, chunk):
        e = min(s + chunk, n)
        dp = p32[s:e, None] - p32[None, :]
        dn = n32[s:e, None] - n32[None, :]
        np.multiply(dp, dn, out=dp)
        c[s:e] = (dp < 0).sum(axis=1)
    return c


@dataclass(frozen=True)
class RankedSample:
    """Paired observations with their rankings and tie diagnostics."""

    x: np.ndarray
    y: np.ndarray
    pi: np.ndarray
    nu: np.ndarray
    n: int
    ties_x: int
    ties_y: int

    def kendall_distance(self):
        return kendall_distance(self.pi, self.nu)

    def kendall_tau(self):
        return kendall_tau(self.pi, self.nu)


def ranked_sample(x, y):
    """Build a RankedSample from two equal-length value sequences (n >= 2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-d sequences of equal length")
    if x.size < 2:
        raise ValueError("need at least two observations")
    return RankedSample(
        x=x,
        y=y,
        pi=rank_vector(x),
        nu=rank_vector(y),
        n=x.size,
        ties_x=int(x.size - np.unique(x).size),
        ties_y=int(y.size - np.unique(y).size),
    )


def pseudo_observations(sample):
    """Rank-based surrogates for the unobservable marginal probabilities."""
    return pseudo_from_rankings(sample.pi, sample.nu)


def per_point_discordance(sample):
    """Discordance count of each observation against all others."""
    if sample.n < 2:
        raise ValueError("need at least two observations")
    return discordance_counts(sample.pi, sample.nu)
