"""Monte Carlo oracle: typical Poisson-Voronoi cell with a uniformly placed user.

Each realization conditions a BS at the origin (Slivnyak), draws the other BSs
as a PPP in a disc, builds the exact Voronoi cell of the origin by half-plane
clipping and places the user uniformly inside it. Rayleigh fading is averaged
analytically, so each realization yields the exact conditional success
probability. Interference from beyond the window is replaced by its mean.

Realization i always uses the generator seeded by (seed, stream, i), so
results do not depend on how work is batched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .meta import composite_threshold
from .params import Scheme, SystemParams, TrafficParams, UserClass
from .performance import cond_mean_delay, share

GEOMETRY_STREAM = 0
LOAD_STREAM = 1
AREA_STREAM = 2
QUEUE_STREAM = 3


@dataclass(frozen=True)
class SimConfig:
    n_realizations: int = 100_000
    window_radius: float | None = None  # defaults to 6 / sqrt(lam)
    seed: int = 20240611
    area_samples: int = 10_000
    far_field: bool = True

    def radius(self, lam: float) -> float:
        return self.window_radius if self.window_radius is not None else 6.0 / math.sqrt(lam)


@dataclass
class NetworkRealization:
    bs_points: np.ndarray
    user: np.ndarray
    r_o: float
    r_d: float
    user_class: UserClass
    window_radius: float
    cell: np.ndarray = field(repr=False)
    cell_area: float = 0.0
    retries: int = 0


def realization_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


# ---------------------------------------------------------------- geometry

def _clip(poly, a, b, c):
    """Keep the part of polygon ``poly`` (list of (x, y)) with a*x + b*y <= c."""
    out = []
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        f1 = a * x1 + b * y1 - c
        f2 = a * x2 + b * y2 - c
        if f1 <= 0:
            out.append((x1, y1))
        if (f1 < 0 < f2) or (f2 < 0 < f1):
            t = f1 / (f1 - f2)
            out.append((x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
    return out


def _rmax(poly):
    return math.sqrt(max(x * x + y * y for x, y in poly))


def voronoi_cell(points: np.ndarray, half_width: float):
    """Voronoi cell of the origin against ``points``, as a CCW vertex array.

    Returns (vertices, rmax). Exact whenever every point within 2*rmax of the
    origin is present in ``points``.
    """
    h = half_width
    poly = [(-h, -h), (h, -h), (h, h), (-h, h)]
    norms = np.hypot(points[:, 0], points[:, 1])
    order = np.argsort(norms, kind="stable")
    rmax = _rmax(poly)
    for k in order:
        if norms[k] > 2.0 * rmax:
            break
        x, y = points[k]
        poly = _clip(poly, x, y, 0.5 * (x * x + y * y))
        rmax = _rmax(poly)
    return np.array(poly), rmax


def polygon_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def sample_in_polygon(v: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform points in a convex polygon via a triangle fan."""
    a = v[0]
    b = v[1:-1]
    c = v[2:]
    areas = 0.5 * np.abs((b[:, 0] - a[0]) * (c[:, 1] - a[1]) - (b[:, 1] - a[1]) * (c[:, 0] - a[0]))
    cum = np.cumsum(areas)
    tri = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
    tri = np.minimum(tri, len(areas) - 1)
    u = rng.random(size)
    w = rng.random(size)
    flip = u + w > 1.0
    u = np.where(flip, 1.0 - u, u)
    w = np.where(flip, 1.0 - w, w)
    return a + u[:, None] * (b[tri] - a) + w[:, None] * (c[tri] - a)


def _ppp_disc(rng, lam, r_in, r_out):
    n = rng.poisson(lam * math.pi * (r_out ** 2 - r_in ** 2))
    r = np.sqrt(r_in ** 2 + (r_out ** 2 - r_in ** 2) * rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def realize_typical_cell(p: SystemParams, config: SimConfig,
                         rng: np.random.Generator) -> NetworkRealization:
    """One typical-cell realization with a user uniform in the cell.

    The window is grown (by an independent PPP on the annulus) until it covers
    max(3, 1 + 1/tau) times the cell radius, which makes the cell, R_d and the
    CC/CE split of every cell point exact.
    """
    w = config.radius(p.lam)
    retries = 0
    pts = _ppp_disc(rng, p.lam, 0.0, w)
    while pts.shape[0] == 0:
        retries += 1
        pts = _ppp_disc(rng, p.lam, 0.0, w)
    need = max(3.0, 1.0 + 1.0 / p.tau)
    while True:
        cell, rmax = voronoi_cell(pts, w)
        if w >= need * rmax:
            break
        w_new = 2.0 * w
        pts = np.vstack([pts, _ppp_disc(rng, p.lam, w, w_new)])
        w = w_new
    user = sample_in_polygon(cell, rng, 1)[0]
    r_o = float(math.hypot(user[0], user[1]))
    r_d = float(np.min(np.hypot(pts[:, 0] - user[0], pts[:, 1] - user[1])))
    cls = UserClass.CC if r_o <= p.tau * r_d else UserClass.CE
    return NetworkRealization(pts, user, r_o, r_d, cls, w, cell, polygon_area(cell), retries)


# ---------------------------------------------------------------- success probability

def far_field_integral(s: float, w: float, alpha: float, terms: int = 60) -> float:
    """int_{|x| > w} |x - y|^(-alpha) dx for |y| = s < w (series in (s/w)^2)."""
    h = 0.5 * alpha
    total = 0.0
    coef = 1.0  # ((h)_k / k!)^2
    ratio = (s / w) ** 2
    for k in range(terms):
        term = coef * ratio ** k * w ** (2.0 - alpha) / (alpha - 2.0 + 2 * k)
        total += term
        if term < 1e-17 * total:
            break
        coef *= ((h + k) / (k + 1)) ** 2
    return 2.0 * math.pi * total


def cond_success_prob(real: NetworkRealization, chi, p: SystemParams, far_field: bool = True):
    """prod_x 1/(1 + chi R_o^alpha |x - y|^-alpha), vectorised over ``chi``."""
    chi = np.atleast_1d(np.asarray(chi, dtype=float))
    d = np.hypot(real.bs_points[:, 0] - real.user[0], real.bs_points[:, 1] - real.user[1])
    q = (real.r_o / d) ** p.alpha
    logp = -np.sum(np.log1p(np.outer(q, chi)), axis=0)
    if far_field:
        logp -= p.lam * chi * real.r_o ** p.alpha * far_field_integral(
            real.r_o, real.window_radius, p.alpha)
    out = np.exp(logp)
    return out


def classify_points(z: np.ndarray, bs: np.ndarray, tau: float) -> np.ndarray:
    """True where a cell point z is cell-centre: |z| <= tau * (distance to nearest other BS)."""
    rz = np.hypot(z[:, 0], z[:, 1])
    reach = np.max(rz) * (1.0 + 1.0 / tau)
    near = bs[np.hypot(bs[:, 0], bs[:, 1]) <= reach]
    if near.shape[0] == 0:
        return np.ones(z.shape[0], dtype=bool)
    d2 = ((z[:, None, :] - near[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    return rz * rz <= tau * tau * d2


def region_areas(real: NetworkRealization, p: SystemParams, rng: np.random.Generator,
                 samples: int) -> tuple[float, float]:
    """(|V_oc|, |V_oe|): exact cell area split by hit-or-miss over the cell."""
    z = sample_in_polygon(real.cell, rng, samples)
    frac = float(np.mean(classify_points(z, real.bs_points, p.tau)))
    return real.cell_area * frac, real.cell_area * (1.0 - frac)


# ---------------------------------------------------------------- batch runs

@dataclass
class SimBatch:
    """Per-realization outputs of :func:`simulate`."""

    user_class: np.ndarray  # 1 for CC, 0 for CE
    r_o: np.ndarray
    r_d: np.ndarray
    success: np.ndarray  # (n, k) conditional success probabilities
    cell_area: np.ndarray
    cc_area: np.ndarray  # nan when areas were not estimated
    retries: int

    @property
    def is_cc(self) -> np.ndarray:
        return self.user_class.astype(bool)


def simulate(p: SystemParams, config: SimConfig, chi_cc=(), chi_ce=(),
             area_samples: int = 0, start: int = 0) -> SimBatch:
    """Run ``config.n_realizations`` realizations.

    CC users are evaluated at thresholds ``chi_cc`` and CE users at ``chi_ce``
    (equal lengths). With ``area_samples > 0`` the CC area of every cell is
    estimated by hit-or-miss.
    """
    chi_cc = np.atleast_1d(np.asarray(chi_cc, dtype=float))
    chi_ce = np.atleast_1d(np.asarray(chi_ce, dtype=float))
    if chi_cc.shape != chi_ce.shape:
        raise ValueError("chi_cc and chi_ce must have equal length")
    n = config.n_realizations
    cls = np.zeros(n, dtype=np.int8)
    r_o = np.zeros(n)
    r_d = np.zeros(n)
    succ = np.zeros((n, chi_cc.size))
    cell_area = np.zeros(n)
    cc_area = np.full(n, np.nan)
    retries = 0
    for i in range(n):
        idx = start + i
        real = realize_typical_cell(p, config, realization_rng(config.seed, GEOMETRY_STREAM, idx))
        retries += real.retries
        is_cc = real.user_class is UserClass.CC
        cls[i] = is_cc
        r_o[i] = real.r_o
        r_d[i] = real.r_d
        cell_area[i] = real.cell_area
        if chi_cc.size:
            succ[i] = cond_success_prob(real, chi_cc if is_cc else chi_ce, p, config.far_field)
        if area_samples:
            rng = realization_rng(config.seed, AREA_STREAM, idx)
            cc_area[i] = region_areas(real, p, rng, area_samples)[0]
    return SimBatch(cls, r_o, r_d, succ, cell_area, cc_area, retries)


def draw_loads(area: np.ndarray, nu: float, seed: int) -> np.ndarray:
    """Zero-truncated Poisson(nu * area) draws, one per entry, by inversion."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(LOAD_STREAM,)))
    m = nu * np.asarray(area, dtype=float)
    u = rng.random(m.shape)
    p0 = np.exp(-m)
    q = p0 + u * (1.0 - p0)
    n = stats.poisson.ppf(q, m)
    return np.maximum(n, 1).astype(int)


# ---------------------------------------------------------------- estimators

X_GRID = np.linspace(0.0, 1.0, 101)


@dataclass
class MetaEstimate:
    """Per-class sample moments (rows follow the threshold grid) and empirical CCDFs."""

    m1_cc: np.ndarray
    m2_cc: np.ndarray
    m1_ce: np.ndarray
    m2_ce: np.ndarray
    se_m1_cc: np.ndarray
    se_m1_ce: np.ndarray
    ccdf_cc: np.ndarray  # (k, 101) on X_GRID
    ccdf_ce: np.ndarray
    cc_fraction: float
    n_cc: int
    n_ce: int


def empirical_ccdf(samples: np.ndarray, x: np.ndarray = X_GRID) -> np.ndarray:
    """P[sample > x] on a grid."""
    s = np.sort(samples)
    return 1.0 - np.searchsorted(s, x, side="right") / s.size


def estimate_meta(p: SystemParams, chi_cc, chi_ce, config: SimConfig) -> MetaEstimate:
    """Empirical meta-distribution moments and CCDFs for paired threshold grids."""
    if config.n_realizations < 10_000:
        raise ValueError("need at least 10^4 realizations")
    b = simulate(p, config, chi_cc, chi_ce)
    cc = b.is_cc
    pc, pe = b.success[cc], b.success[~cc]

    def ccdf(m):
        return np.array([empirical_ccdf(m[:, j]) for j in range(m.shape[1])])

    return MetaEstimate(pc.mean(0), (pc ** 2).mean(0), pe.mean(0), (pe ** 2).mean(0),
                        pc.std(0, ddof=1) / math.sqrt(len(pc)),
                        pe.std(0, ddof=1) / math.sqrt(len(pe)),
                        ccdf(pc), ccdf(pe), float(cc.mean()), int(cc.sum()), int((~cc).sum()))


@dataclass
class AreaEstimate:
    cell_area: np.ndarray
    cc_area: np.ndarray
    ce_area: np.ndarray
    load_cc: np.ndarray
    load_ce: np.ndarray


def estimate_areas_and_loads(p: SystemParams, config: SimConfig) -> AreaEstimate:
    """Per-realization region areas (hit-or-miss) and zero-truncated Poisson loads."""
    if config.area_samples < 10_000:
        raise ValueError("need at least 10^4 hit-or-miss points per realization")
    b = simulate(p, config, area_samples=config.area_samples)
    ce_area = b.cell_area - b.cc_area
    return AreaEstimate(b.cell_area, b.cc_area, ce_area,
                        draw_loads(b.cc_area, p.nu, config.seed),
                        draw_loads(ce_area, p.nu, config.seed + 1))


DELAY_GRID = np.arange(1.0, 201.0)


@dataclass
class RateDelayEstimate:
    """Empirical rate CDFs and delay-outage curves, one row per allocation.

    Rate grids run from 0 to the interference-free single-user rate of each
    class, so rows differ between allocations.
    """

    allocs: np.ndarray
    rate_grid_cc: np.ndarray  # (k, 101)
    rate_cdf_cc: np.ndarray
    rate_grid_ce: np.ndarray
    rate_cdf_ce: np.ndarray
    delay_grid: np.ndarray  # (m,) slots
    delay_ccdf_cc: np.ndarray  # (k, m)
    delay_ccdf_ce: np.ndarray
    n_cc: int
    n_ce: int


def estimate_rate_delay(p: SystemParams, allocs, scheme: Scheme, traffic: TrafficParams,
                        config: SimConfig, delay_grid: np.ndarray = DELAY_GRID) -> RateDelayEstimate:
    """Per-realization rate p*s/N*log2(1+beta) and conditional mean delay.

    The load of the user's own region is drawn from its realized area and the
    success probability from the same realization's interferers, so the two
    are dependent exactly as they are in the network.
    """
    scheme = Scheme(scheme)
    allocs = np.atleast_1d(np.asarray(allocs, dtype=float))
    chi_cc = [composite_threshold(UserClass.CC, scheme, p, a) for a in allocs]
    chi_ce = [composite_threshold(UserClass.CE, scheme, p, a) for a in allocs]
    b = simulate(p, config, chi_cc, chi_ce, area_samples=config.area_samples)
    cc = b.is_cc
    own_area = np.where(cc, b.cc_area, b.cell_area - b.cc_area)
    load = draw_loads(own_area, p.nu, config.seed)
    out = {}
    for cls, mask, beta in ((UserClass.CC, cc, p.beta_c), (UserClass.CE, ~cc, p.beta_e)):
        bits = math.log2(1.0 + beta)
        grids, cdfs, outs = [], [], []
        for j, a in enumerate(allocs):
            s = share(cls, scheme, a)
            mu = s * b.success[mask, j] / load[mask]
            rate = np.sort(mu * bits)
            g = np.linspace(0.0, s * bits, X_GRID.size)
            grids.append(g)
            cdfs.append(np.searchsorted(rate, g, side="right") / rate.size)
            d = np.sort(cond_mean_delay(mu, traffic.arrival(cls)))
            outs.append(1.0 - np.searchsorted(d, delay_grid, side="left") / d.size)
        out[cls] = (np.array(grids), np.array(cdfs), np.array(outs))
    return RateDelayEstimate(allocs, *out[UserClass.CC][:2], *out[UserClass.CE][:2],
                             np.asarray(delay_grid, dtype=float),
                             out[UserClass.CC][2], out[UserClass.CE][2],
                             int(cc.sum()), int((~cc).sum()))


def queue_sim(mu: float, arrival: float, n_slots: int, rng: np.random.Generator) -> float:
    """Mean sojourn time (slots) of a discrete-time Geo/Geo/1 FIFO queue.

    Each slot a packet arrives with probability ``arrival``; the head-of-line
    packet departs at the end of each slot with probability ``mu``. Sojourn
    counts the arrival slot through the departure slot inclusive.
    """
    if mu <= arrival:
        import warnings
        warnings.warn("unstable queue: mu <= arrival", RuntimeWarning)
        return math.inf
    arrivals = np.flatnonzero(rng.random(n_slots) < arrival).astype(float)
    service = rng.geometric(mu, arrivals.size).astype(float)
    csum = np.cumsum(service)
    prev = np.concatenate([[0.0], csum[:-1]])
    # departure_k = csum_k + max_{j<=k}(a_j - csum_{j-1}), the Lindley recursion unrolled
    depart = csum + np.maximum.accumulate(arrivals - prev)
    return float(np.mean(depart - arrivals))
