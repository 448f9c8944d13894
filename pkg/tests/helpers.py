"""Independent brute-force oracles used across the test suite.

Everything here recomputes quantities from first definitions (pair
enumeration, exhaustive permutation sums, numerical root finding), never
through the library's own fast paths.
"""

import itertools
import math

import numpy as np


def rank_bruteforce(values):
    """Counting definition with the index tie-break applied literally."""
    v = list(values)
    n = len(v)
    ranks = []
    for i in range(n):
        r = 0
        for j in range(n):
            if v[j] > v[i] or (v[j] == v[i] and j <= i):
                r += 1
        ranks.append(r)
    return np.asarray(ranks)


def kendall_distance_bruteforce(pi, nu):
    """Direct pair enumeration of the discordance definition."""
    pi = np.asarray(pi)
    nu = np.asarray(nu)
    d = 0
    for i in range(pi.size):
        for j in range(i + 1, pi.size):
            if (pi[i] - pi[j]) * (nu[i] - nu[j]) < 0:
                d += 1
    return d


def inversions_bruteforce(seq):
    seq = np.asarray(seq)
    return int(np.triu(seq[:, None] > seq[None, :], 1).sum())


def footrule_bruteforce(pi, nu):
    return sum(abs(int(a) - int(b)) for a, b in zip(pi, nu))


def all_permutations(n):
    """All rankings of n items, as rank vectors."""
    return [np.asarray(p) for p in itertools.permutations(range(1, n + 1))]


def mallows_partition_bruteforce(phi, n):
    """sum over all rankings nu of exp(-phi * d(identity, nu))."""
    ident = np.arange(1, n + 1)
    return sum(
        math.exp(-phi * kendall_distance_bruteforce(ident, nu))
        for nu in all_permutations(n)
    )


def mallows_expected_distance_bruteforce(phi, n):
    ident = np.arange(1, n + 1)
    num = 0.0
    den = 0.0
    for nu in all_permutations(n):
        d = kendall_distance_bruteforce(ident, nu)
        w = math.exp(-phi * d)
        num += d * w
        den += w
    return num / den


def stage_mean_bruteforce(theta, k):
    """Direct finite sum for the truncated geometric stage mean."""
    ws = [math.exp(-theta * j) for j in range(k + 1)]
    return sum(j * w for j, w in enumerate(ws)) / sum(ws)


def stage_vector_bruteforce(pi, nu):
    """Definition form: V[k-1] = discordances of item k+1 with items 1..k."""
    pi = np.asarray(pi)
    nu = np.asarray(nu)
    n = pi.size
    v = []
    for k in range(1, n):
        cnt = 0
        for i in range(k):
            if (pi[i] - pi[k]) * (nu[i] - nu[k]) < 0:
                cnt += 1
        v.append(cnt)
    return np.asarray(v)


def taupath_bruteforce(pi, nu):
    """Greedy backward elimination recomputing tau from scratch each step.

    Ties on the removal criterion go to the candidate with the smallest
    x-rank, mirroring the library's documented rule.
    """
    pi = np.asarray(pi)
    nu = np.asarray(nu)
    n = pi.size

    def tau_of(idx):
        if len(idx) < 2:
            return 1.0
        sub_pi = pi[list(idx)]
        sub_nu = nu[list(idx)]
        d = kendall_distance_bruteforce(sub_pi, sub_nu)
        m = len(idx)
        return 1.0 - 4.0 * d / (m * (m - 1.0))

    remaining = list(range(n))
    removed = []
    prefix_tau = [tau_of(remaining)]
    while len(remaining) > 2:
        best = None
        for cand in remaining:
            rest = [i for i in remaining if i != cand]
            key = (tau_of(rest), -pi[cand])
            if best is None or key > best[0]:
                best = (key, cand)
        remaining = [i for i in remaining if i != best[1]]
        removed.append(best[1])
        prefix_tau.append(tau_of(remaining))
    head = sorted(remaining, key=lambda i: pi[i])
    order = head + removed[::-1]
    return np.asarray(order), np.asarray(prefix_tau[::-1])


def frank_conditional_v_bruteforce(u, w, theta, tol=1e-12):
    """Invert the Frank conditional CDF numerically via its definition.

    The conditional CDF is the u-partial derivative of the copula,
    approximated by central differences, then root-solved in v by
    bisection.
    """

    def cdf(uu, vv):
        return (
            -math.log1p(math.expm1(-theta * uu) * math.expm1(-theta * vv) / math.expm1(-theta))
            / theta
        )

    h = 1e-7

    def conditional(vv):
        return (cdf(u + h, vv) - cdf(u - h, vv)) / (2 * h)

    lo, hi = 1e-12, 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if conditional(mid) < w:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def frank_density_starr_form(u, v, theta):
    """The sinh/cosh form of the Frank density."""
    num = (theta / 2.0) * math.sinh(theta / 2.0)
    den = (
        math.exp(theta / 4.0) * math.cosh(theta * (u - v) / 2.0)
        - math.exp(-theta / 4.0) * math.cosh(theta * (u + v - 1.0) / 2.0)
    ) ** 2
    return num / den
