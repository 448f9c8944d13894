"""Gaussian and Frank copula samplers, densities, and scale relationships.

The Frank family is parameterized by theta != 0; its Kendall tau is
tau = 1 - (4/theta) [1 - D(theta)] with D the first Debye function. The
Mallows ranking scale phi is matched to theta by equating that expression
with tau = (2/pi) arctan(0.18 n phi).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from ._rng import seed_rng
from .rankcore import rank_vector

_UNIT_LO = 1e-15
_UNIT_HI = float(np.nextafter(1.0, 0.0))


def _clip_unit(a):
    """Force values into the open unit interval (guards CDF saturation)."""
    return np.clip(a, _UNIT_LO, _UNIT_HI)


@dataclass(frozen=True)
class CopulaSample:
    """Points on the open unit square with generator provenance.

    Regenerating with the same ``seed`` (and generator parameters)
    reproduces the points bit for bit. ``sub_indices`` records which points
    came from the associated subpopulation, for generators that have one.
    """

    u: np.ndarray
    v: np.ndarray
    generator: str
    seed: object
    sub_indices: np.ndarray | None = None

    @property
    def n(self):
        return self.u.size

    def points(self):
        return np.column_stack([self.u, self.v])


def sample_independent(n, seed):
    """n points with independent uniform coordinates."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed_rng(seed)
    u = _clip_unit(rng.random(n))
    v = _clip_unit(rng.random(n))
    return CopulaSample(u=u, v=v, generator="independent", seed=seed)


def sample_gaussian_copula(rho, n, seed):
    """Sample the copula of a bivariate normal with correlation rho.

    Draws correlated standard normal pairs and maps each coordinate
    through the standard normal CDF.
    """
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must satisfy |rho| < 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed_rng(seed)
    z = rng.standard_normal((2, n))
    w = rho * z[0] + math.sqrt(1.0 - rho * rho) * z[1]
    u = _clip_unit(ndtr(z[0]))
    v = _clip_unit(ndtr(w))
    return CopulaSample(u=u, v=v, generator=f"gaussian(rho={rho})", seed=seed)


def sample_frank_copula(theta, n, seed):
    """Sample a Frank(theta) copula by conditional inversion.

    u is uniform; v solves dC/du (v | u) = w in closed form for an
    independent uniform w:

        v = -(1/theta) log1p( w expm1(-theta) / (w + (1-w) e^{-theta u}) )
    """
    if theta == 0.0:
        raise ValueError("theta must be nonzero; use sample_independent for theta = 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed_rng(seed)
    u = _clip_unit(rng.random(n))
    w = _clip_unit(rng.random(n))
    v = -np.log1p(w * np.expm1(-theta) / (w + (1.0 - w) * np.exp(-theta * u))) / theta
    return CopulaSample(u=u, v=_clip_unit(v), generator=f"frank(theta={theta})", seed=seed)


def gaussian_copula_tau(rho):
    """Kendall tau of the Gaussian copula, (2/pi) arcsin(rho)."""
    return 2.0 / math.pi * math.asin(rho)


def frank_cdf(u, v, theta):
    """Frank copula C_theta(u, v)."""
    if theta == 0.0:
        raise ValueError("theta must be nonzero")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = -np.log1p(np.expm1(-theta * u) * np.expm1(-theta * v) / np.expm1(-theta)) / theta
    return float(out) if out.ndim == 0 else out


def _check_interior(u, v):
    if np.any((u <= 0.0) | (u >= 1.0) | (v <= 0.0) | (v >= 1.0)):
        raise ValueError("arguments must lie strictly inside the unit square")


def frank_density(u, v, theta):
    """Frank copula density.

        c(u, v) = theta (1 - e^{-theta}) e^{-theta (u + v)}
                  / (1 - e^{-theta} - (1 - e^{-theta u})(1 - e^{-theta v}))^2
    """
    if theta == 0.0:
        raise ValueError("theta must be nonzero")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_interior(u, v)
    em = -np.expm1(-theta)
    den = em - np.expm1(-theta * u) * np.expm1(-theta * v)
    out = theta * em * np.exp(-theta * (u + v)) / (den * den)
    return float(out) if out.ndim == 0 else out


def frank_log_density(u, v, theta):
    """log of frank_density, stable for large |theta| (u + v)."""
    if theta == 0.0:
        raise ValueError("theta must be nonzero")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_interior(u, v)
    em = -np.expm1(-theta)
    den = em - np.expm1(-theta * u) * np.expm1(-theta * v)
    out = np.log(theta * em) - theta * (u + v) - 2.0 * np.log(np.abs(den))
    return float(out) if out.ndim == 0 else out


def sample_log_density(sample, theta):
    """Joint log density of all points of a sample under Frank(theta)."""
    return float(np.sum(frank_log_density(sample.u, sample.v, theta)))


def _debye_integrand(t):
    if t == 0.0:
        return 1.0
    return t / math.expm1(t)


def debye1(theta):
    """First Debye function D(x) = (1/x) * int_0^x t / (e^t - 1) dt, x > 0.

    Small arguments use the series 1 - x/4 + x^2/36 - x^4/3600 + x^6/211680;
    otherwise adaptive quadrature of the (singularity-free) integrand.
    Absolute error <= 1e-10. Negative arguments are handled by callers via
    D(-x) = D(x) + x/2.
    """
    if theta <= 0.0:
        raise ValueError("debye1 requires theta > 0")
    if theta < 0.2:
        x = theta
        return 1.0 - x / 4.0 + x * x / 36.0 - x**4 / 3600.0 + x**6 / 211680.0
    val, _ = integrate.quad(_debye_integrand, 0.0, theta, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val / theta


def tau_from_theta(theta):
    """Kendall tau of the Frank(theta) copula; odd in theta."""
    if theta == 0.0:
        raise ValueError("theta must be nonzero (the independence limit is tau = 0)")
    t = abs(theta)
    if t < 0.02:
        tau = t / 9.0 - t**3 / 900.0
    else:
        tau = 1.0 - 4.0 / t * (1.0 - debye1(t))
    return tau if theta > 0 else -tau


def theta_from_tau(tau):
    """Frank parameter whose Kendall tau equals ``tau`` (bracketing bisection).

    The result satisfies |tau_from_theta(result) - tau| <= 1e-9.
    """
    if not 0.0 < abs(tau) < 1.0:
        raise ValueError("tau must satisfy 0 < |tau| < 1")
    if tau < 0:
        return -theta_from_tau(-tau)
    lo, hi = 1e-9, 1.0
    while tau_from_theta(hi) < tau:
        hi *= 2.0
        if hi > 1e8:
            raise ValueError("tau too close to 1 for a usable Frank parameter")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = tau_from_theta(mid) - tau
        if abs(f) <= 1e-9:
            return mid
        if f < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tau_from_phi(phi, n):
    """Kendall tau of a Mallows(phi) coupling at sample size n."""
    if phi <= 0.0:
        raise ValueError("phi must be positive")
    if n < 2:
        raise ValueError("n must be >= 2")
    return 2.0 / math.pi * math.atan(0.18 * n * phi)


def phi_from_theta(theta, n):
    """Mallows scale matched to Frank(theta) at sample size n.

        phi = (100 / (18 n)) tan[(pi/2) tau_theta]

    which is within 5% of the linear form 0.9694 theta / n for |theta| <= 5.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    tau = tau_from_theta(theta)
    if abs(tau) >= 1.0:
        raise ValueError("tau_theta must satisfy |tau| < 1")
    return (100.0 / (18.0 * n)) * math.tan(math.pi / 2.0 * tau)


def empirical_copula_counts(sample, grid):
    """Rank-based empirical copula evaluated on the lattice u_k = k/grid.

    Places mass 1/n at (rank_u_i / n, rank_v_i / n) and accumulates the
    lattice CDF, so entry [a, b] is the empirical copula at
    ((a+1)/grid, (b+1)/grid).
    """
    pi = rank_vector(sample.u)
    nu = rank_vector(sample.v)
    n = sample.n
    # smallest lattice index a with rank/n <= (a+1)/grid
    ia = (pi * grid + n - 1) // n - 1
    ib = (nu * grid + n - 1) // n - 1
    counts = np.bincount(ia * grid + ib, minlength=grid * grid).reshape(grid, grid)
    return counts.cumsum(axis=0).cumsum(axis=1) / n


def empirical_copula_distance(sample_a, sample_b, grid=50):
    """Sup distance between two empirical copulas over a grid x grid lattice."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    if sample_a.n == 0 or sample_b.n == 0:
        raise ValueError("samples must be nonempty")
    ca = empirical_copula_counts(sample_a, grid)
    cb = empirical_copula_counts(sample_b, grid)
    return float(np.abs(ca - cb).max())
