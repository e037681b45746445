"""Meta-distribution moments of the conditional success probability.

A user of class CC or CE decodes when its SIR clears a composite threshold chi.
Under NOMA chi folds in the SIC step and the power split theta; under OMA it is
the raw SIR threshold. The b-th moment of the conditional success probability
is a single integral over v = (R_o/R_d)^2 whose integrand contains the
interference exponent ``z_b``; the first two moments feed a beta approximation
of the meta distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import DEFAULT_QUAD, QuadSpec, quad_finite, quad_semi_infinite, reg_inc_beta
from .params import Scheme, SystemParams, UserClass


class InfeasibleError(ValueError):
    """Power split outside the NOMA-feasible range (0, 1/(1+beta_e))."""


def _check_theta(theta, beta_e):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta * (1.0 + beta_e) >= 1.0):
        raise InfeasibleError(f"theta must lie in [0, {1.0 / (1.0 + beta_e):.6g})")
    return theta


def chi_e(theta, beta_e):
    theta = _check_theta(theta, beta_e)
    out = beta_e / (1.0 - theta * (1.0 + beta_e))
    return float(out) if out.ndim == 0 else out


def chi_c(theta, beta_c, beta_e):
    theta = _check_theta(theta, beta_e)
    if np.any(theta <= 0):
        raise InfeasibleError("theta must be positive for the CC user")
    out = np.maximum(beta_c / theta, beta_e / (1.0 - theta * (1.0 + beta_e)))
    return float(out) if out.ndim == 0 else out


def _tail_integrand(b, delta):
    inv = 1.0 / delta

    def g(t):
        return -np.expm1(-b * np.log1p(t ** (-inv)))

    return g


def z_b(chi, a, b, delta, spec: QuadSpec = DEFAULT_QUAD):
    """Interference exponent chi^delta * int_{chi^-delta / a}^inf [1 - (1 + t^(-1/delta))^-b] dt.

    Broadcasts over ``chi`` and ``a``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1) (path-loss exponent above 2)")
    chi, a = np.broadcast_arrays(np.asarray(chi, dtype=float), np.asarray(a, dtype=float))
    if b == 0:
        out = np.zeros(chi.shape)
    else:
        lo = chi ** (-delta) / a
        out = chi ** delta * quad_semi_infinite(_tail_integrand(b, delta), lo, spec)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _limits(user_class: UserClass, tau: float):
    if UserClass(user_class) is UserClass.CC:
        return 0.0, tau ** 2
    return tau ** 2, 1.0


def moments_vec(chis, b, user_class: UserClass, p: SystemParams,
                spec: QuadSpec = DEFAULT_QUAD, chunk: int = 128):
    """b-th meta moment for an array of composite thresholds (one quadrature pass per chunk)."""
    chis = np.atleast_1d(np.asarray(chis, dtype=float))
    if np.any(~(chis > 0)):
        raise ValueError("composite thresholds must be positive")
    lo, hi = _limits(user_class, p.tau)
    delta = p.delta
    rho = p.rho
    if b == 0:
        return np.ones(chis.shape)
    g = _tail_integrand(b, delta)
    out = np.empty(chis.shape)
    for s in range(0, chis.size, chunk):
        chi = chis[s:s + chunk]
        cd = chi ** delta

        def f(v, chi=chi, cd=cd):
            v = v[:, None]
            z = cd * quad_semi_infinite(g, (1.0 / cd) / v, spec)
            return (rho + v * z) ** -2 * np.exp(-b * np.log1p(chi * v ** (1.0 / delta)))

        out[s:s + chunk] = rho ** 2 / (hi - lo) * quad_finite(f, lo, hi, spec)
    return out


@lru_cache(maxsize=65536)
def _moment_cached(chi, b, user_class, tau, alpha, rho, spec):
    p = SystemParams(tau=tau, alpha=alpha, rho=rho)
    return float(moments_vec(np.array([chi]), b, user_class, p, spec)[0])


def moment(chi: float, b: float, user_class: UserClass, p: SystemParams,
           spec: QuadSpec = DEFAULT_QUAD) -> float:
    """Memoised scalar moment; depends on (chi, b, class, tau, alpha, rho) only."""
    return _moment_cached(float(chi), float(b), UserClass(user_class), p.tau, p.alpha,
                          p.rho, spec)


def moment_cc_noma(b, theta, p: SystemParams, spec: QuadSpec = DEFAULT_QUAD) -> float:
    return moment(chi_c(theta, p.beta_c, p.beta_e), b, UserClass.CC, p, spec)


def moment_ce_noma(b, theta, p: SystemParams, spec: QuadSpec = DEFAULT_QUAD) -> float:
    return moment(chi_e(theta, p.beta_e), b, UserClass.CE, p, spec)


def moment_cc_oma(b, p: SystemParams, spec: QuadSpec = DEFAULT_QUAD) -> float:
    return moment(p.beta_c, b, UserClass.CC, p, spec)


def moment_ce_oma(b, p: SystemParams, spec: QuadSpec = DEFAULT_QUAD) -> float:
    return moment(p.beta_e, b, UserClass.CE, p, spec)


def composite_threshold(user_class: UserClass, scheme: Scheme, p: SystemParams,
                        theta: float | None = None) -> float:
    theta = p.theta if theta is None else theta
    if Scheme(scheme) is Scheme.OMA:
        return p.beta_c if UserClass(user_class) is UserClass.CC else p.beta_e
    if UserClass(user_class) is UserClass.CC:
        return chi_c(theta, p.beta_c, p.beta_e)
    return chi_e(theta, p.beta_e)


@dataclass(frozen=True)
class MetaMoments:
    m1: float
    m2: float
    user_class: UserClass
    scheme: Scheme

    def __post_init__(self):
        tol = 1e-9
        if not (-tol <= self.m2 <= self.m1 + tol <= 1 + 2 * tol):
            raise ValueError(f"invalid moment pair m1={self.m1}, m2={self.m2}")
        if self.m1 ** 2 > self.m2 + tol:
            raise ValueError(f"moments violate Jensen: m1^2={self.m1 ** 2} > m2={self.m2}")


def meta_moments(user_class: UserClass, scheme: Scheme, p: SystemParams,
                 theta: float | None = None, spec: QuadSpec = DEFAULT_QUAD) -> MetaMoments:
    chi = composite_threshold(user_class, scheme, p, theta)
    return MetaMoments(moment(chi, 1, user_class, p, spec), moment(chi, 2, user_class, p, spec),
                       UserClass(user_class), Scheme(scheme))


@dataclass(frozen=True)
class BetaFit:
    """Moment-matched beta law. ``degenerate`` marks a point mass at ``mean``."""

    kappa1: float
    kappa2: float
    mean: float
    degenerate: bool = False


def beta_fit(m: MetaMoments, eps: float = 1e-12) -> BetaFit:
    m1, m2 = m.m1, m.m2
    if not (0 < m1 < 1) or m2 <= m1 * m1 + eps or m2 >= m1 - eps:
        return BetaFit(math.nan, math.nan, min(max(m1, 0.0), 1.0), degenerate=True)
    k2 = (m1 - m2) * (1.0 - m1) / (m2 - m1 * m1)
    k1 = m1 * k2 / (1.0 - m1)
    return BetaFit(k1, k2, m1)


def meta_ccdf(x, fit: BetaFit):
    """Approximate P[conditional success probability > x]."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in [0, 1]")
    if fit.degenerate:
        out = (x < fit.mean).astype(float)
    else:
        out = 1.0 - np.asarray(reg_inc_beta(x, fit.kappa1, fit.kappa2))
    return float(out) if out.ndim == 0 else out
