"""Simulation-versus-analysis checks with fixed tolerances.

Each ``check_*`` returns a :class:`Check`; the expensive simulation runs are
separated out so several checks can share one batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import (brute_force_ra, csr_curve, gain_eta_limit, solve_p1, solve_p2,
                         theta_hat, theta_nc)
from .cell_load import mean_areas, region_load, second_moment_cc, second_moment_ce
from .meta import beta_fit, composite_threshold, meta_ccdf, meta_moments
from .params import Scheme, SystemParams, TrafficParams, UserClass, db_to_linear
from .performance import delay_ccdf, rate_cdf
from .simulator import (QUEUE_STREAM, X_GRID, AreaEstimate, SimBatch, SimConfig, empirical_ccdf,
                        estimate_areas_and_loads, estimate_rate_delay, queue_sim,
                        realization_rng, simulate)

CC, CE = UserClass.CC, UserClass.CE
NOMA, OMA = Scheme.NOMA, Scheme.OMA
NU_SWEEP = (2.0, 5.0, 10.0, 20.0)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: {self.value:.6g} (tol {self.tolerance:g}) {self.detail}".rstrip()


def _check(name, value, tol, detail=""):
    return Check(name, float(value), tol, bool(value <= tol), detail)


# ------------------------------------------------------------ meta distribution

def moment_params(base: SystemParams | None = None) -> SystemParams:
    """Parameter set of the moment comparison: thresholds (0, -3) dB."""
    base = base or SystemParams()
    return base.with_(beta_c=db_to_linear(0.0), beta_e=db_to_linear(-3.0))


def moment_theta_grid(p: SystemParams, k: int = 7) -> np.ndarray:
    nc = theta_nc(p.beta_e)
    return nc * np.arange(1, k + 1) / (k + 1)


BEYOND_NC = (0.75, 0.85, 0.95)


@dataclass
class MetaSim:
    p: SystemParams
    thetas: np.ndarray
    batch: SimBatch

    # columns: NOMA grid, then OMA, then NOMA shares beyond theta_NC
    @property
    def k(self) -> int:
        return self.thetas.size


def run_meta_sim(n: int, seed: int = SimConfig.seed, p: SystemParams | None = None) -> MetaSim:
    p = moment_params(p)
    th = moment_theta_grid(p)
    chi_c = [composite_threshold(CC, NOMA, p, t) for t in th] + [p.beta_c] + [np.inf] * len(BEYOND_NC)
    chi_e = [composite_threshold(CE, NOMA, p, t) for t in th] + [p.beta_e] + [np.inf] * len(BEYOND_NC)
    b = simulate(p, SimConfig(n_realizations=n, seed=seed), chi_c, chi_e)
    return MetaSim(p, th, b)


def check_class_fraction(ms: MetaSim) -> Check:
    frac = float(ms.batch.is_cc.mean())
    return _check("class probability", abs(frac - ms.p.tau ** 2), 0.01,
                  f"simulated CC fraction {frac:.4f} vs {ms.p.tau ** 2:.4f}")


def _cases(ms: MetaSim):
    """(label, class, scheme, alloc, column) for every compared curve."""
    for cls in (CC, CE):
        for j, t in enumerate(ms.thetas):
            yield f"{cls.value}/noma/theta={t:.3f}", cls, NOMA, float(t), j
        yield f"{cls.value}/oma", cls, OMA, 0.5, ms.k


def check_meta_moments(ms: MetaSim) -> Check:
    cc = ms.batch.is_cc
    worst, where = 0.0, ""
    for label, cls, scheme, alloc, j in _cases(ms):
        s = ms.batch.success[cc if cls is CC else ~cc, j]
        m = meta_moments(cls, scheme, ms.p, alloc)
        for name, ana, sim in (("m1", m.m1, s.mean()), ("m2", m.m2, (s ** 2).mean())):
            err = abs(ana - sim) / sim
            if err > worst:
                worst, where = err, f"{label} {name}: analytic {ana:.5f} simulated {sim:.5f}"
    return _check("meta moments (relative error)", worst, 0.03, f"worst {where}")


def check_beta_ccdf(ms: MetaSim) -> Check:
    cc = ms.batch.is_cc
    worst, where = 0.0, ""
    for label, cls, scheme, alloc, j in _cases(ms):
        s = ms.batch.success[cc if cls is CC else ~cc, j]
        fit = beta_fit(meta_moments(cls, scheme, ms.p, alloc))
        d = float(np.max(np.abs(meta_ccdf(X_GRID, fit) - empirical_ccdf(s))))
        if d > worst:
            worst, where = d, label
    return _check("beta meta CCDF (sup-norm)", worst, 0.04, f"worst {where}")


def check_noma_thresholds(ms: MetaSim) -> list[Check]:
    p = ms.p
    th = theta_hat(p.beta_c, p.beta_e)
    out = [_check("theta_hat at (0,-3) dB vs 0.5", abs(th - 0.5), 0.01, f"theta_hat {th:.4f}")]
    grid = np.linspace(0.01, 0.99, 99)
    ana = csr_curve(NOMA, grid, p)
    beyond = grid > theta_nc(p.beta_e)
    out.append(_check("analytic CSR beyond theta_NC / peak", ana[beyond].max() / ana.max(), 0.01,
                      f"theta_NC {theta_nc(p.beta_e):.4f}"))
    cc = ms.batch.is_cc
    bits_c, bits_e = math.log2(1 + p.beta_c), math.log2(1 + p.beta_e)
    sim = bits_c * ms.batch.success[cc].mean(0) + bits_e * ms.batch.success[~cc].mean(0)
    noma_cols = list(range(ms.k)) + list(range(ms.k + 1, ms.k + 1 + len(BEYOND_NC)))
    sim = sim[noma_cols]
    out.append(_check("simulated CSR beyond theta_NC / peak",
                      sim[ms.k:].max() / sim[:ms.k].max(), 0.01))
    return out


# ------------------------------------------------------------ areas and loads

def run_area_sim(n: int, area_samples: int = 10_000, seed: int = SimConfig.seed,
                 p: SystemParams | None = None) -> AreaEstimate:
    p = p or SystemParams()
    return estimate_areas_and_loads(p, SimConfig(n_realizations=n, seed=seed,
                                                 area_samples=area_samples))


def check_area_moments(est: AreaEstimate, p: SystemParams | None = None) -> list[Check]:
    p = p or SystemParams()
    mc, me = mean_areas(p)
    exact = max(abs(mc - p.tau ** 2 / p.lam), abs(me - (1 - p.tau ** 2) / p.lam))
    out = [_check("mean areas vs tau^2/lambda", exact, 1e-12)]
    for name, ana, s in (("CC", second_moment_cc(p), est.cc_area),
                         ("CE", second_moment_ce(p), est.ce_area)):
        sim = float(np.mean(s ** 2))
        out.append(_check(f"{name} area second moment (relative error)", abs(ana - sim) / sim, 0.03,
                          f"analytic {ana:.5f} simulated {sim:.5f}"))
    return out


def total_variation(probs: np.ndarray, tail: float, samples: np.ndarray) -> float:
    """TV distance between a pmf on 1..K (mass ``tail`` beyond K) and a sample.

    Sample values above K are pooled with the tail.
    """
    k = probs.size
    a = np.append(probs, tail)
    h = np.bincount(np.minimum(samples, k + 1), minlength=k + 2)[1:] / samples.size
    return 0.5 * float(np.abs(a - h).sum())


def check_load_pmf(est: AreaEstimate, p: SystemParams | None = None) -> list[Check]:
    p = p or SystemParams()
    out = []
    for cls, s in ((CC, est.load_cc), (CE, est.load_ce)):
        pmf = region_load(cls, p)
        out.append(_check(f"{cls.value.upper()} load pmf (total variation)",
                          total_variation(pmf.probs, pmf.tail_mass, s), 0.02))
    return out


# ------------------------------------------------------------ rate and delay

RATE_DELAY_CASES = ((NOMA, (0.3, 0.5)), (OMA, (0.5,)))


def check_rate_delay(n: int, area_samples: int = 2000, seed: int = SimConfig.seed,
                     p: SystemParams | None = None,
                     traffic: TrafficParams | None = None) -> list[Check]:
    p = p or SystemParams()
    traffic = traffic or TrafficParams()
    loads = {CC: region_load(CC, p), CE: region_load(CE, p)}
    worst = {"rate": (0.0, ""), "delay": (0.0, "")}
    cfg = SimConfig(n_realizations=n, seed=seed, area_samples=area_samples)
    for scheme, allocs in RATE_DELAY_CASES:
        est = estimate_rate_delay(p, allocs, scheme, traffic, cfg)
        for j, a in enumerate(allocs):
            for cls in (CC, CE):
                g = est.rate_grid_cc[j] if cls is CC else est.rate_grid_ce[j]
                emp = est.rate_cdf_cc[j] if cls is CC else est.rate_cdf_ce[j]
                d = float(np.max(np.abs(rate_cdf(cls, scheme, g, a, p, loads[cls]) - emp)))
                label = f"{cls.value}/{scheme.value}/{a}"
                if d > worst["rate"][0]:
                    worst["rate"] = (d, label)
                emp = est.delay_ccdf_cc[j] if cls is CC else est.delay_ccdf_ce[j]
                ana = delay_ccdf(cls, scheme, est.delay_grid, traffic.arrival(cls), a, p, loads[cls])
                d = float(np.max(np.abs(ana - emp)))
                if d > worst["delay"][0]:
                    worst["delay"] = (d, label)
    return [_check(f"{k} curves (sup-norm)", v, 0.03, f"worst {w}") for k, (v, w) in worst.items()]


# ------------------------------------------------------------ queue

def check_queue(n_slots: int = 1_000_000, seed: int = SimConfig.seed) -> Check:
    d = queue_sim(0.5, 0.25, n_slots, realization_rng(seed, QUEUE_STREAM, 0))
    return _check("Geo/Geo/1 mean delay (relative error vs 3)", abs(d - 3.0) / 3.0, 0.02,
                  f"simulated {d:.4f}")


# ------------------------------------------------------------ resource allocation

@dataclass
class RARow:
    nu: float
    problem: str
    scheme: Scheme
    solver: object
    brute: object


def ra_sweep(p: SystemParams | None = None, traffic: TrafficParams | None = None,
             nus=NU_SWEEP, problems=("p1", "p2"), grid_size: int = 2000) -> list[RARow]:
    p = p or SystemParams()
    traffic = traffic or TrafficParams()
    rows = []
    for nu in nus:
        q = p.with_(nu=nu)
        lc, le = region_load(CC, q), region_load(CE, q)
        for problem in problems:
            solve = solve_p1 if problem == "p1" else solve_p2
            for scheme in (NOMA, OMA):
                rows.append(RARow(nu, problem, scheme, solve(scheme, q, traffic, lc, le),
                                  brute_force_ra(problem, scheme, q, traffic, lc, le, grid_size)))
    return rows


def check_ra_optimality(rows: list[RARow]) -> list[Check]:
    agree = all(r.solver.feasible == r.brute.feasible for r in rows)
    worst, where = 0.0, ""
    for r in rows:
        if r.solver.feasible and r.brute.feasible:
            gap = abs(r.brute.objective - r.solver.objective) / r.brute.objective
            if gap > worst:
                worst, where = gap, f"{r.problem}/{r.scheme.value}/nu={r.nu:g}"
    return [Check("RA feasibility verdicts identical", float(not agree), 0.0, agree),
            _check("RA objective gap vs brute force", worst, 0.01, f"worst {where}")]


def _best(rows, problem, scheme, nu):
    r = next(r for r in rows if r.problem == problem and r.scheme is scheme and r.nu == nu)
    return r.brute.objective if r.brute.feasible else 0.0


def check_qualitative(rows: list[RARow], low_rows: list[RARow]) -> list[Check]:
    """NOMA/OMA orderings, the simultaneous-gain limit and monotonicity in nu.

    ``low_rows`` is a P2 sweep at the lower thresholds (0, -3) dB, where a
    NOMA advantage in effective capacity is expected.
    """
    nus = sorted({r.nu for r in rows})
    short = [nu for nu in nus if _best(rows, "p1", OMA, nu) > _best(rows, "p1", NOMA, nu)]
    out = [Check("(a) NOMA CSR >= OMA CSR at every nu", float(len(short)), 0.0, not short,
                 f"violations at nu={short}" if short else "")]
    low_nus = sorted({r.nu for r in low_rows})
    served = [nu for nu in low_nus
              if _best(low_rows, "p2", NOMA, nu) > 0 or _best(low_rows, "p2", OMA, nu) > 0]
    if served:
        nu = served[-1]
        n, o = _best(low_rows, "p2", NOMA, nu), _best(low_rows, "p2", OMA, nu)
        out.append(Check("(b) NOMA SEC > OMA SEC at largest served nu", o - n, 0.0, n > o,
                         f"nu={nu:g} NOMA {n:.4f} OMA {o:.4f}"))
    else:
        out.append(Check("(b) NOMA SEC > OMA SEC at largest served nu", math.nan, 0.0, False,
                         "no feasible nu"))
    eta = gain_eta_limit(SystemParams().with_(beta_c=db_to_linear(3.0), beta_e=1.0))
    eta = math.nan if eta is None else eta
    out.append(Check("(c) simultaneous NOMA gain limit in eta", eta, 0.05,
                     abs(eta - 0.7) <= 0.05, "expected 0.7 +/- 0.05"))
    rises = []
    for problem in ("p1", "p2"):
        for scheme in (NOMA, OMA):
            v = [_best(rows, problem, scheme, nu) for nu in nus]
            if any(b > a + 1e-12 for a, b in zip(v, v[1:])):
                rises.append(f"{problem}/{scheme.value}")
    out.append(Check("(d) CSR and SEC non-increasing in nu", float(len(rises)), 0.0, not rises,
                     f"rises in {rises}" if rises else ""))
    return out


# ------------------------------------------------------------ everything

@dataclass(frozen=True)
class ValidationSizes:
    meta_realizations: int = 100_000
    area_realizations: int = 20_000
    area_samples: int = 10_000
    rate_realizations: int = 20_000
    rate_area_samples: int = 2000
    queue_slots: int = 1_000_000
    ra_grid: int = 2000


def run_all(sizes: ValidationSizes = ValidationSizes(), seed: int = SimConfig.seed,
            p: SystemParams | None = None, traffic: TrafficParams | None = None) -> list[Check]:
    p = p or SystemParams()
    traffic = traffic or TrafficParams()
    ms = run_meta_sim(sizes.meta_realizations, seed, p)
    checks = [check_class_fraction(ms), check_meta_moments(ms), check_beta_ccdf(ms)]
    checks += check_noma_thresholds(ms)
    est = run_area_sim(sizes.area_realizations, sizes.area_samples, seed, p)
    checks += check_area_moments(est, p) + check_load_pmf(est, p)
    checks += check_rate_delay(sizes.rate_realizations, sizes.rate_area_samples, seed, p, traffic)
    checks.append(check_queue(sizes.queue_slots, seed))
    rows = ra_sweep(p, traffic, grid_size=sizes.ra_grid)
    low = ra_sweep(moment_params(p), traffic, problems=("p2",), grid_size=sizes.ra_grid)
    checks += check_ra_optimality(rows) + check_qualitative(rows, low)
    return checks
