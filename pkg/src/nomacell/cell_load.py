"""CC/CE region areas of the typical cell and the resulting load distributions.

Second moments use the fact that every disk union appearing in the two-point
coverage probabilities is homogeneous of degree two in (r1, r2). Writing
r1 = s cos(phi), r2 = s sin(phi) the radial integral is closed form,

    int_0^inf s^3 exp(-lam s^2 A) ds = 1 / (2 lam^2 A^2),

leaving a smooth double integral over (phi, u).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_QUAD, DomainError, QuadSpec, log_gamma, quad_finite
from .params import SystemParams, UserClass


@dataclass(frozen=True)
class RegionAreaStats:
    mean: float
    second_moment: float
    region: UserClass

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean ** 2


@dataclass(frozen=True)
class GammaFit:
    gamma1: float  # rate
    gamma2: float  # shape

    @property
    def mean(self) -> float:
        return self.gamma2 / self.gamma1

    @property
    def variance(self) -> float:
        return self.gamma2 / self.gamma1 ** 2


@dataclass(frozen=True)
class LoadPmf:
    """P[N = n] for n = 1..n_max stored at ``probs[n - 1]``."""

    probs: np.ndarray
    xi: float
    n_max: int
    tail_mass: float

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1)

    def mean(self) -> float:
        return float(np.sum(self.n * self.probs))


# ---------------------------------------------------------------- geometry

def union_from_cos(z1, z2, c):
    """Area of the union of two disks of radii z1, z2.

    ``c`` is the cosine of the angle between the two radii drawn to a common
    intersection point, i.e. the centre distance is sqrt(z1^2 + z2^2 - 2 z1 z2 c).
    Values c >= 1 mean one disk contains the other; c <= -1 means the disks do
    not overlap.
    """
    z1, z2, c = np.broadcast_arrays(np.asarray(z1, float), np.asarray(z2, float),
                                    np.asarray(c, float))
    cc = np.clip(c, -1.0, 1.0)
    d = np.sqrt(np.maximum(z1 ** 2 + z2 ** 2 - 2.0 * z1 * z2 * cc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        w1 = np.arccos(np.clip((z1 - z2 * cc) / d, -1.0, 1.0))
        w2 = np.arccos(np.clip((z2 - z1 * cc) / d, -1.0, 1.0))
    out = (z1 ** 2 * (math.pi - w1 + 0.5 * np.sin(2.0 * w1))
           + z2 ** 2 * (math.pi - w2 + 0.5 * np.sin(2.0 * w2)))
    big = math.pi * np.maximum(z1, z2) ** 2
    out = np.where((c >= 1.0) | (d <= 1e-14 * (z1 + z2)), big, out)
    out = np.where(c <= -1.0, math.pi * (z1 ** 2 + z2 ** 2), out)
    return out


def union_area(r1, r2, u):
    """Union area of two intersecting disks whose radii meet at angle ``u``."""
    u = np.asarray(u, dtype=float)
    if np.any(np.asarray(r1) <= 0) or np.any(np.asarray(r2) <= 0):
        raise DomainError("radii must be positive")
    if np.any((u < 0) | (u > math.pi)):
        raise DomainError("angle must lie in [0, pi]")
    out = union_from_cos(r1, r2, np.cos(u))
    return float(out) if out.ndim == 0 else out


def _union_areas(phi, u, tau):
    """Scaled areas (A_o, A_1, A_2, A_3) of C_o, C_1, C_2, C_3 at unit radial scale."""
    r1 = np.cos(phi)
    r2 = np.sin(phi)
    cu = np.cos(u)
    k = 1.0 / tau - tau
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = k * r1 / (2.0 * r2) + tau * cu
        c2 = k * r2 / (2.0 * r1) + tau * cu
        c3 = (1.0 - tau ** 2) * (r1 ** 2 + r2 ** 2) / (2.0 * r1 * r2) + tau ** 2 * cu
    c1 = np.where(np.isfinite(c1), c1, 2.0)
    c2 = np.where(np.isfinite(c2), c2, 2.0)
    c3 = np.where(np.isfinite(c3), c3, 2.0)
    a_o = union_from_cos(r1, r2, cu)
    a_1 = union_from_cos(r1 / tau, r2, c1)
    a_2 = union_from_cos(r1, r2 / tau, c2)
    a_3 = union_from_cos(r1 / tau, r2 / tau, c3)
    return a_o, a_1, a_2, a_3


def _phi_breaks(u, tau):
    """Angles phi where a disk pair switches between overlap and containment."""
    k = 1.0 / tau - tau
    t1 = 2.0 * (1.0 - tau * math.cos(u)) / k  # r1/r2 threshold for B_2 inside B~_1
    kk = 2.0 * (1.0 - tau ** 2 * math.cos(u)) / (1.0 - tau ** 2)
    pts = [math.atan2(1.0, t1), math.atan2(t1, 1.0)]
    if kk > 2.0:
        root = math.sqrt(kk * kk - 4.0)
        for t in ((kk - root) / 2.0, (kk + root) / 2.0):
            pts.append(math.atan2(1.0, t))
    return [p for p in pts if 0.0 < p < 0.5 * math.pi]


def _second_moment(kernel, tau, lam, spec: QuadSpec, extra_breaks=()):
    def inner(u):
        def g(phi):
            return np.sin(phi) * np.cos(phi) * kernel(_union_areas(phi, u, tau), phi, u)
        return quad_finite(g, 0.0, 0.5 * math.pi, spec,
                           points=_phi_breaks(u, tau) + list(extra_breaks))

    def outer(us):
        return np.array([inner(float(u)) for u in us])

    return 2.0 * math.pi / lam ** 2 * quad_finite(outer, 0.0, math.pi, spec)


def mean_areas(p: SystemParams) -> tuple[float, float]:
    return p.tau ** 2 / p.lam, (1.0 - p.tau ** 2) / p.lam


def second_moment_cc(p: SystemParams, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """E|V_oc|^2 from the two-point probability exp(-lam |C_3|)."""
    return _second_moment(lambda a, phi, u: a[3] ** -2.0, p.tau, p.lam, spec)


def second_moment_ce(p: SystemParams, spec: QuadSpec = DEFAULT_QUAD,
                     case1_void_form: bool = False) -> float:
    """E|V_oe|^2.

    Both points lie in the CE region iff C_o is empty while B~_1 and B~_2 are
    each occupied, so by inclusion-exclusion the two-point probability is
    e^{-lam U_o} - e^{-lam U_1} - e^{-lam U_2} + e^{-lam U_3}. In the nested
    configuration (d <= |r1 - r2| / tau) this reduces to e^{-lam U_o} - e^{-lam U_2}
    for r2 < r1 and e^{-lam U_o} - e^{-lam U_1} otherwise.

    ``case1_void_form=True`` replaces the nested-configuration term by
    e^{-lam U_1} 1{r1<=r2} + e^{-lam U_2} 1{r2<r1}, i.e. a void probability
    where its complement belongs. It is kept only to quantify that
    alternative against simulation.
    """
    tau = p.tau

    def exact(a, phi, u):
        return a[0] ** -2.0 - a[1] ** -2.0 - a[2] ** -2.0 + a[3] ** -2.0

    if not case1_void_form:
        return _second_moment(exact, tau, p.lam, spec)

    def alternative(a, phi, u):
        r1, r2 = np.cos(phi), np.sin(phi)
        d = np.sqrt(np.maximum(r1 ** 2 + r2 ** 2 - 2 * r1 * r2 * math.cos(u), 0.0))
        nested = d <= np.abs(r1 - r2) / tau
        alt = np.where(r1 <= r2, a[1] ** -2.0, a[2] ** -2.0)
        return np.where(nested, alt, exact(a, phi, u))

    return _second_moment(alternative, tau, p.lam, spec, extra_breaks=[0.25 * math.pi])


def area_stats(region: UserClass, p: SystemParams,
               spec: QuadSpec = DEFAULT_QUAD) -> RegionAreaStats:
    m_cc, m_ce = mean_areas(p)
    if UserClass(region) is UserClass.CC:
        return RegionAreaStats(m_cc, second_moment_cc(p, spec), UserClass.CC)
    return RegionAreaStats(m_ce, second_moment_ce(p, spec), UserClass.CE)


def gamma_fit(stats: RegionAreaStats) -> GammaFit:
    var = stats.second_moment - stats.mean ** 2
    if not (var > 0 and stats.mean > 0):
        raise ValueError("gamma fit needs positive mean and variance")
    g1 = stats.mean / var
    return GammaFit(g1, g1 * stats.mean)


# ---------------------------------------------------------------- load pmf

def log_hurwitz_zeta(s: float, q: float) -> float:
    """log of sum_{k>=0} (k + q)^(-s) for s > 1, q > 0.

    Direct sum of the leading terms plus an Euler-Maclaurin tail, combined in
    log space so that very large ``s`` does not underflow.
    """
    if not (s > 1 and q > 0):
        raise DomainError("log_hurwitz_zeta needs s > 1 and q > 0")
    # enough direct terms that the remainder is either negligible or well
    # inside the range where the Euler-Maclaurin series is accurate
    k_decay = q * math.expm1(40.0 / s) if s > 40.0 / 700 else math.inf
    K = int(min(math.ceil(s) + 20, k_decay + 8)) + 8
    k = np.arange(K)
    logs = -s * np.log(k + q)
    x = K + q
    bracket = (x / (s - 1.0) + 0.5 + s / (12.0 * x)
               - s * (s + 1) * (s + 2) / (720.0 * x ** 3)
               + s * (s + 1) * (s + 2) * (s + 3) * (s + 4) / (30240.0 * x ** 5))
    if bracket > 0:
        logs = np.append(logs, -s * math.log(x) + math.log(bracket))
    top = logs.max()
    return float(top + math.log(np.sum(np.exp(logs - top))))


def _log_pmf_terms(n, fit: GammaFit, nu: float):
    g1, g2 = fit.gamma1, fit.gamma2
    s = n + g2
    return (g2 * math.log(g1 / nu) + log_gamma(s) - math.lgamma(n + 1) - log_gamma(g2)
            + log_hurwitz_zeta(s, 1.0 + g1 / nu))


def load_pmf(fit: GammaFit, nu: float, n_max: int | None = None, cap: int = 200,
             mass_tol: float = 1e-8) -> LoadPmf:
    """Zero-truncated Poisson load with gamma-distributed region area.

    When ``n_max`` is None it is the smallest n with cumulative mass above
    1 - mass_tol, capped at ``cap``.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    limit = cap if n_max is None else int(n_max)
    probs = np.array([math.exp(_log_pmf_terms(n, fit, nu)) for n in range(1, limit + 1)])
    cum = np.cumsum(probs)
    if n_max is None:
        hit = np.flatnonzero(cum > 1.0 - mass_tol)
        n_used = int(hit[0]) + 1 if hit.size else limit
    else:
        n_used = limit
    probs = probs[:n_used]
    tail = max(0.0, 1.0 - float(np.sum(probs)))
    xi = float(np.sum(probs / np.arange(1, n_used + 1)))
    return LoadPmf(probs, xi, n_used, tail)


def zero_truncated_poisson(mean: float, n_max: int) -> np.ndarray:
    """P[N = n], n = 1..n_max, for a Poisson(mean) conditioned on N >= 1."""
    n = np.arange(1, n_max + 1)
    logp = n * math.log(mean) - mean - np.array([math.lgamma(k + 1) for k in n])
    return np.exp(logp) / (-math.expm1(-mean))


def region_load(region: UserClass, p: SystemParams, spec: QuadSpec = DEFAULT_QUAD) -> LoadPmf:
    return load_pmf(gamma_fit(area_stats(region, p, spec)), p.nu)
