"""Resource allocation: cell sum rate (P1) and sum effective capacity (P2).

NOMA allocates the power share theta of the CC layer, OMA the time share eta
of the CC user. Near-optimal solvers locate the constraint boundary roots and
apply the closed-form allocation rule; ``brute_force_ra`` is an exhaustive grid
oracle for them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cell_load import LoadPmf
from .meta import chi_c, chi_e, moment, moments_vec
from .numerics import find_root, find_roots, maximize_unimodal, reg_inc_beta
from .params import Scheme, SystemParams, TrafficParams, UserClass

EPS = 1e-4
ROOT_TOL = 1e-9
EC_TOL = 1e-7

CC, CE = UserClass.CC, UserClass.CE


def theta_hat(beta_c: float, beta_e: float) -> float:
    return beta_c / (beta_c + beta_e + beta_c * beta_e)


def theta_nc(beta_e: float) -> float:
    return 1.0 / (1.0 + beta_e)


@dataclass
class RAResult:
    allocation: float
    objective: float
    feasible: bool
    boundary_roots: dict = field(default_factory=dict)
    reason: str = ""


# ------------------------------------------------------------ vectorised moments

def _chis(user_class, scheme, alloc, p):
    alloc = np.asarray(alloc, dtype=float)
    if Scheme(scheme) is Scheme.OMA:
        return np.full(alloc.shape, p.beta_c if user_class is CC else p.beta_e)
    if user_class is CC:
        return chi_c(alloc, p.beta_c, p.beta_e)
    return chi_e(alloc, p.beta_e)


def _share(user_class, scheme, alloc):
    alloc = np.asarray(alloc, dtype=float)
    if Scheme(scheme) is Scheme.NOMA:
        return np.ones(alloc.shape)
    return alloc if user_class is CC else 1.0 - alloc


def _m1(user_class, scheme, alloc, p):
    """First moment for scalar or array ``alloc`` (cached for scalars)."""
    chis = np.atleast_1d(_chis(user_class, scheme, alloc, p))
    if chis.size == 1:
        return np.array([moment(float(chis[0]), 1, user_class, p)])
    uniq, inv = np.unique(chis, return_inverse=True)
    return moments_vec(uniq, 1, user_class, p)[inv]


def _m12(user_class, scheme, alloc, p):
    chis = np.atleast_1d(_chis(user_class, scheme, alloc, p))
    if chis.size == 1:
        c = float(chis[0])
        return (np.array([moment(c, 1, user_class, p)]),
                np.array([moment(c, 2, user_class, p)]))
    uniq, inv = np.unique(chis, return_inverse=True)
    return (moments_vec(uniq, 1, user_class, p)[inv], moments_vec(uniq, 2, user_class, p)[inv])


def _log_rate(user_class, p):
    return math.log2(1.0 + (p.beta_c if user_class is CC else p.beta_e))


def rates(user_class: UserClass, scheme: Scheme, alloc, p: SystemParams, load: LoadPmf):
    """Mean rate of one class for scalar or array ``alloc``."""
    user_class = UserClass(user_class)
    out = (_share(user_class, scheme, np.atleast_1d(alloc)) * load.xi
           * _log_rate(user_class, p) * _m1(user_class, scheme, alloc, p))
    return float(out[0]) if np.ndim(alloc) == 0 else out


def csr(scheme: Scheme, alloc, p: SystemParams):
    """Cell sum rate; raises InfeasibleError for NOMA power shares >= theta_NC."""
    a = np.atleast_1d(np.asarray(alloc, dtype=float))
    out = sum(_share(u, scheme, a) * _log_rate(u, p) * _m1(u, scheme, a, p) for u in (CC, CE))
    return float(out[0]) if np.ndim(alloc) == 0 else out


def csr_curve(scheme: Scheme, allocs, p: SystemParams):
    """CSR over a grid, zero where NOMA cannot decode (theta >= theta_NC)."""
    allocs = np.asarray(allocs, dtype=float)
    out = np.zeros(allocs.shape)
    ok = np.ones(allocs.shape, dtype=bool)
    if Scheme(scheme) is Scheme.NOMA:
        ok = (allocs > 0) & (allocs * (1.0 + p.beta_e) < 1.0)
    if ok.any():
        out[ok] = csr(scheme, allocs[ok], p)
    return out


def noma_gain(theta: float, eta: float, p: SystemParams) -> tuple[float, float]:
    g_c = moment(chi_c(theta, p.beta_c, p.beta_e), 1, CC, p) / (eta * moment(p.beta_c, 1, CC, p))
    g_e = (moment(chi_e(theta, p.beta_e), 1, CE, p)
           / ((1.0 - eta) * moment(p.beta_e, 1, CE, p)))
    return g_c, g_e


def gain_eta_limit(p: SystemParams, grid: int = 400) -> float:
    """Largest eta for which some theta in (0, theta_hat] gives both gains above one.

    Returns None when no eta admits a simultaneous gain.

    g_c > 1 needs M1c(chi_c)/M1c(beta_c) > eta and g_e > 1 needs
    M1e(chi_e)/M1e(beta_e) > 1 - eta; the first ratio increases and the second
    decreases on (0, theta_hat], so the limit is the largest eta with
    max_theta min(h_c(theta) - eta, h_e(theta) - 1 + eta) > 0.
    """
    th = np.linspace(theta_hat(p.beta_c, p.beta_e) / grid, theta_hat(p.beta_c, p.beta_e), grid)
    h_c = _m1(CC, Scheme.NOMA, th, p) / moment(p.beta_c, 1, CC, p)
    h_e = _m1(CE, Scheme.NOMA, th, p) / moment(p.beta_e, 1, CE, p)

    def margin(eta):
        return float(np.max(np.minimum(h_c - eta, h_e - 1.0 + eta)))

    # small eta starves the CE side too, so bracket from the best eta upward
    etas = np.linspace(0.0, 1.0, grid + 1)
    vals = np.array([margin(e) for e in etas])
    k = int(np.argmax(vals))
    if vals[k] <= 0.0:
        return None
    return find_root(margin, float(etas[k]), 1.0, tol=1e-9)


# ------------------------------------------------------------ effective capacity

def _beta_cdf_vec(x, k1, k2, degenerate, mean):
    out = np.ones(x.shape)
    need = x < 1.0
    smooth = need & ~degenerate
    if smooth.any():
        out[smooth] = reg_inc_beta(x[smooth], k1[smooth], k2[smooth])
    step = need & degenerate
    out[step] = (x[step] >= mean[step]).astype(float)
    return out


def _fits(m1, m2):
    var = m2 - m1 * m1
    degenerate = ~((m1 > 0) & (m1 < 1) & (var > 1e-14) & (m2 < m1 - 1e-14))
    with np.errstate(divide="ignore", invalid="ignore"):
        k2 = np.where(degenerate, 1.0, (m1 - m2) * (1.0 - m1) / np.where(degenerate, 1.0, var))
        k1 = np.where(degenerate, 1.0, m1 * k2 / np.where(degenerate, 0.5, 1.0 - m1))
    return k1, k2, degenerate


def outage_vec(scale, load: LoadPmf, k1, k2, degenerate, mean):
    """E_N[I(min(scale_i N, 1); k1_i, k2_i)] for paired arrays."""
    n = np.arange(1, load.n_max + 2, dtype=float)
    w = np.append(load.probs, load.tail_mass)
    x = np.minimum(scale[:, None] * n[None, :], 1.0)
    b = lambda a: np.broadcast_to(a[:, None], x.shape)
    vals = _beta_cdf_vec(x, b(k1), b(k2), b(degenerate), b(mean))
    return vals @ w


def effective_capacity(user_class: UserClass, scheme: Scheme, alloc, traffic: TrafficParams,
                       p: SystemParams, load: LoadPmf, tol: float = EC_TOL):
    """Largest arrival probability whose delay-outage bound stays at the cap.

    Zero when even a vanishing arrival rate violates the cap. Vectorised over
    ``alloc``.
    """
    user_class = UserClass(user_class)
    a = np.atleast_1d(np.asarray(alloc, dtype=float))
    m1, m2 = _m12(user_class, scheme, a, p)
    k1, k2, deg = _fits(m1, m2)
    s = _share(user_class, scheme, a)
    t = traffic.delay_thresh(user_class)
    cap = traffic.outage_cap(user_class)

    def excess(rho):
        # a zero share gives an infinite scale, i.e. certain outage
        with np.errstate(divide="ignore"):
            return outage_vec(((1.0 - rho) / t + rho) / s, load, k1, k2, deg, m1) - cap

    lo = np.zeros(a.shape)
    hi = np.full(a.shape, 1.0 - 1e-12)
    at_zero = excess(lo)
    ec = find_roots(excess, lo, hi, tol=tol)
    ec = np.where(at_zero >= 0, 0.0, ec)
    ec = np.where(np.isnan(ec), 1.0, ec)
    return float(ec[0]) if np.ndim(alloc) == 0 else ec


def sec(scheme, alloc, traffic, p, load_c, load_e):
    return (effective_capacity(CC, scheme, alloc, traffic, p, load_c)
            + effective_capacity(CE, scheme, alloc, traffic, p, load_e))


# ------------------------------------------------------------ near-optimal solvers

def _metric(problem):
    if problem == "p1":
        return (lambda u, sch, a, tr, p, load: rates(u, sch, a, p, load),
                TrafficParams.rate_floor)
    return (lambda u, sch, a, tr, p, load: effective_capacity(u, sch, a, tr, p, load),
            TrafficParams.ec_floor)


def _objective(problem, scheme, alloc, traffic, p, load_c, load_e):
    if problem == "p1":
        return csr(scheme, alloc, p)
    return sec(scheme, alloc, traffic, p, load_c, load_e)


def _solve(problem, scheme, p, traffic, load_c, load_e) -> RAResult:
    metric, floor_of = _metric(problem)
    loads = {CC: load_c, CE: load_e}
    floors = {u: floor_of(traffic, u) for u in (CC, CE)}

    def gap(u):
        return lambda a: metric(u, scheme, a, traffic, p, loads[u]) - floors[u]

    scheme = Scheme(scheme)
    if scheme is Scheme.NOMA:
        th_hat = theta_hat(p.beta_c, p.beta_e)
        th_nc = theta_nc(p.beta_e)
        # CC metric increases on (0, theta_hat]; CE metric decreases on (0, theta_NC)
        f_c, f_e = gap(CC), gap(CE)
        if f_c(th_hat) < 0:
            return RAResult(math.nan, math.nan, False, {}, "cc floor unreachable")
        lc = EPS if f_c(EPS) >= 0 else find_root(f_c, EPS, th_hat, ROOT_TOL)
        if f_e(EPS) < 0:
            return RAResult(math.nan, math.nan, False, {"theta_lc": lc}, "ce floor unreachable")
        hi = th_nc - EPS
        te = hi if f_e(hi) >= 0 else find_root(f_e, EPS, hi, ROOT_TOL)
        roots = {"theta_lc": lc, "theta_e": te}
        if te < lc:
            return RAResult(math.nan, math.nan, False, roots, "theta_e < theta_lc")
        alloc = min(te, th_hat)
    else:
        lo_eta, hi_eta = ROOT_TOL, 1.0 - ROOT_TOL
        f_c, f_e = gap(CC), gap(CE)
        if f_c(hi_eta) < 0:
            return RAResult(math.nan, math.nan, False, {}, "cc floor unreachable")
        if f_e(lo_eta) < 0:
            return RAResult(math.nan, math.nan, False, {}, "ce floor unreachable")
        ec_ = lo_eta if f_c(lo_eta) >= 0 else find_root(f_c, lo_eta, hi_eta, ROOT_TOL)
        ee = hi_eta if f_e(hi_eta) >= 0 else find_root(f_e, lo_eta, hi_eta, ROOT_TOL)
        roots = {"eta_c": ec_, "eta_e": ee}
        if ec_ > ee:
            return RAResult(math.nan, math.nan, False, roots, "eta_c > eta_e")
        # the objective grows with eta whenever the CC service is the more valuable one
        up = _objective(problem, scheme, ee, traffic, p, load_c, load_e)
        down = _objective(problem, scheme, ec_, traffic, p, load_c, load_e)
        alloc = ee if up >= down else ec_
    obj = _objective(problem, scheme, alloc, traffic, p, load_c, load_e)
    return RAResult(alloc, obj, True, roots)


def solve_p1(scheme: Scheme, p: SystemParams, traffic: TrafficParams, load_c: LoadPmf,
             load_e: LoadPmf) -> RAResult:
    """Cell-sum-rate maximisation subject to minimum mean rates."""
    return _solve("p1", scheme, p, traffic, load_c, load_e)


def solve_p2(scheme: Scheme, p: SystemParams, traffic: TrafficParams, load_c: LoadPmf,
             load_e: LoadPmf) -> RAResult:
    """Sum-effective-capacity maximisation subject to minimum effective capacities."""
    return _solve("p2", scheme, p, traffic, load_c, load_e)


# ------------------------------------------------------------ grid oracle

def brute_force_ra(problem: str, scheme: Scheme, p: SystemParams, traffic: TrafficParams,
                   load_c: LoadPmf, load_e: LoadPmf, grid_size: int = 2000) -> RAResult:
    """Exhaustive grid search with pointwise feasibility, refined by golden section."""
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    problem = problem.lower()
    scheme = Scheme(scheme)
    metric, floor_of = _metric(problem)
    upper = theta_nc(p.beta_e) if scheme is Scheme.NOMA else 1.0
    grid = upper * (np.arange(grid_size) + 0.5) / grid_size

    def evaluate(a):
        mc = metric(CC, scheme, a, traffic, p, load_c)
        me = metric(CE, scheme, a, traffic, p, load_e)
        ok = (mc >= floor_of(traffic, CC)) & (me >= floor_of(traffic, CE))
        return mc, me, ok

    mc, me, ok = evaluate(grid)
    if not np.any(ok):
        return RAResult(math.nan, math.nan, False, {}, "no feasible grid point")
    obj = _objective(problem, scheme, grid, traffic, p, load_c, load_e)
    k = int(np.flatnonzero(ok)[np.argmax(obj[ok])])
    step = upper / grid_size
    lo = max(grid[k] - step, 0.5 * step * 1e-3)
    hi = min(grid[k] + step, upper * (1 - 1e-9))

    def refined(a):
        if not evaluate(a)[2]:
            return -math.inf
        return _objective(problem, scheme, a, traffic, p, load_c, load_e)

    arg, val = maximize_unimodal(refined, lo, hi, tol=1e-7)
    if not val >= obj[k]:
        arg, val = float(grid[k]), float(obj[k])
    return RAResult(float(arg), float(val), True, {"grid_argmax": float(grid[k])})
