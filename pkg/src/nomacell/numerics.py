"""Special functions, adaptive quadrature and 1-D search used by the analytic models.

Everything here is a pure function of its inputs. The quadrature routines accept
vectorised integrands: ``f`` receives a 1-D array of nodes and returns either an
array of the same length or an array of shape ``(len(nodes), ...)``, in which
case the integral is computed component-wise with a shared subdivision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit ``max_subdivisions`` before meeting tolerance."""


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 500

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadSpec()

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[:-1][::-1]])
_KW = np.concatenate([_WK[:-1], [_WK[-1]], _WK[:-1][::-1]])
_GW = np.zeros(15)
_GW[1::2] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[:-1][::-1]])

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


def _gk15(f, a, b):
    """Kronrod estimate and QUADPACK-style error for each interval [a_i, b_i]."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = (c[:, None] + h[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x), dtype=float)
    fx = fx.reshape((a.size, 15) + fx.shape[1:])
    hh = h.reshape((-1,) + (1,) * (fx.ndim - 2))
    kw = _KW.reshape((1, 15) + (1,) * (fx.ndim - 2))
    gw = _GW.reshape(kw.shape)
    res_k = hh * np.sum(kw * fx, axis=1)
    res_g = hh * np.sum(gw * fx, axis=1)
    mean = res_k / (2.0 * hh)
    resasc = np.abs(hh) * np.sum(kw * np.abs(fx - mean[:, None]), axis=1)
    resabs = np.abs(hh) * np.sum(kw * np.abs(fx), axis=1)
    err = np.abs(res_k - res_g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    if not np.all(np.isfinite(res_k)):
        raise QuadratureError("integrand returned non-finite values")
    return res_k, err


def quad_finite(f: Callable, lo: float, hi: float, spec: QuadSpec = DEFAULT_QUAD,
                points=()):
    """Globally adaptive Gauss-Kronrod integral of ``f`` over ``[lo, hi]``.

    ``points`` are optional interior breakpoints (kinks, branch switches).
    Returns a float for scalar integrands, an array for vector-valued ones.
    """
    lo = float(lo)
    hi = float(hi)
    if not hi >= lo:
        raise ValueError(f"quad_finite needs lo <= hi, got [{lo}, {hi}]")
    edges = [lo] + sorted(p for p in set(map(float, points)) if lo < p < hi) + [hi]
    a = np.array(edges[:-1])
    b = np.array(edges[1:])
    if hi == lo:
        probe = np.asarray(f(np.array([lo])), dtype=float)
        return _unwrap(np.zeros(probe.shape[1:]))
    res, err = _gk15(f, a, b)
    while True:
        total = res.sum(axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        total_err = err.sum(axis=0)
        if np.all(total_err <= tol):
            return _unwrap(total)
        score = (err / tol).reshape(a.size, -1).max(axis=1)
        # never split intervals already at floating-point resolution
        score[(b - a) <= 64 * _EPS * max(abs(lo), abs(hi), 1.0)] = 0.0
        if score.max() == 0.0 or a.size >= spec.max_subdivisions:
            raise QuadratureError(
                f"no convergence on [{lo}, {hi}] after {a.size} subintervals "
                f"(error {np.max(total_err):.3e} > tol {np.min(tol):.3e})")
        pick = np.flatnonzero(score >= 0.5 * score.max())
        room = max(1, (spec.max_subdivisions - a.size))
        if pick.size > room:
            pick = pick[np.argsort(score[pick])[::-1][:room]]
        keep = np.ones(a.size, dtype=bool)
        keep[pick] = False
        mid = 0.5 * (a[pick] + b[pick])
        na = np.concatenate([a[pick], mid])
        nb = np.concatenate([mid, b[pick]])
        nres, nerr = _gk15(f, na, nb)
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        res = np.concatenate([res[keep], nres])
        err = np.concatenate([err[keep], nerr])


def _unwrap(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def quad_semi_infinite(f: Callable, lo, spec: QuadSpec = DEFAULT_QUAD):
    """Integral of ``f`` over ``[lo, inf)`` through ``t = lo + s/(1-s)``.

    ``lo`` may be an array; ``f`` then receives ``t`` of shape
    ``(n_nodes,) + lo.shape`` and must return the same shape.
    """
    lo_arr = np.asarray(lo, dtype=float)

    def g(s):
        s = s.reshape((-1,) + (1,) * lo_arr.ndim)
        one_minus = 1.0 - s
        t = lo_arr + s / one_minus
        return np.asarray(f(t), dtype=float) / one_minus ** 2

    return quad_finite(g, 0.0, 1.0, spec)


def log_gamma(x):
    """Natural log of the gamma function for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma requires x > 0")
    if arr.ndim == 0:
        return math.lgamma(float(arr))
    return np.vectorize(math.lgamma, otypes=[float])(arr)


def _beta_cf(x, a, b, max_iter=10_000):
    """Continued fraction for the incomplete beta (modified Lentz), vectorised."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < 1e-300, 1e-300, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < 1e-300, 1e-300, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < 1e-300, 1e-300, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < 1e-300, 1e-300, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < 1e-300, 1e-300, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > 3e-16
        if not active.any():
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def reg_inc_beta(x, a, b):
    """Regularised incomplete beta function I(x; a, b).

    Vectorised over broadcastable ``x``, ``a``, ``b``; returns a float when all
    inputs are scalars.
    """
    x, a, b = np.broadcast_arrays(np.asarray(x, dtype=float),
                                  np.asarray(a, dtype=float),
                                  np.asarray(b, dtype=float))
    if np.any(~((x >= 0) & (x <= 1))):
        raise DomainError("reg_inc_beta requires 0 <= x <= 1")
    if np.any(~((a > 0) & (b > 0))):
        raise DomainError("reg_inc_beta requires a > 0 and b > 0")
    out = np.where(x >= 1.0, 1.0, 0.0)
    inner = (x > 0) & (x < 1)
    if inner.any():
        xi, ai, bi = x[inner], a[inner], b[inner]
        lbeta = log_gamma(ai + bi) - log_gamma(ai) - log_gamma(bi)
        front = np.exp(lbeta + ai * np.log(xi) + bi * np.log1p(-xi))
        direct = xi < (ai + 1.0) / (ai + bi + 2.0)
        val = np.empty_like(xi)
        if direct.any():
            val[direct] = front[direct] * _beta_cf(
                xi[direct], ai[direct], bi[direct]) / ai[direct]
        flip = ~direct
        if flip.any():
            val[flip] = 1.0 - front[flip] * _beta_cf(
                1.0 - xi[flip], bi[flip], ai[flip]) / bi[flip]
        out[inner] = np.clip(val, 0.0, 1.0)
    return _unwrap(out)


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10,
              max_iter: int = 200):
    """Bisection root of ``f`` on ``[lo, hi]``; ``None`` when there is no sign change."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        return None
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_roots(f: Callable, lo, hi, tol: float = 1e-10, max_iter: int = 200):
    """Element-wise bisection for a vectorised ``f``; NaN where no sign change.

    ``f(x)`` takes an array shaped like ``lo``/``hi`` and returns one of the same
    shape, each entry depending only on the matching entry of ``x``.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    lo = lo.copy()
    hi = hi.copy()
    flo = np.asarray(f(lo), dtype=float)
    fhi = np.asarray(f(hi), dtype=float)
    bracket = flo * fhi <= 0
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        fmid = np.asarray(f(mid), dtype=float)
        same = (fmid > 0) == (flo > 0)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fmid, flo)
        hi = np.where(same, hi, mid)
    root = 0.5 * (lo + hi)
    root = np.where(flo == 0, lo, root)
    return np.where(bracket, root, np.nan)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_unimodal(f: Callable[[float], float], lo: float, hi: float,
                      tol: float = 1e-8):
    """Golden-section search for the maximum of a unimodal ``f`` on ``[lo, hi]``.

    For a non-unimodal ``f`` the result is a local maximum.
    """
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    val, arg = max(candidates)
    return arg, val
