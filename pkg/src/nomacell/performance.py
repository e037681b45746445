"""Mean rates, rate CDFs, conditional mean delay and delay-outage bounds.

``alloc`` is the NOMA power share theta or the OMA time share eta depending on
``scheme``. Expectations over the load N are finite sums up to ``n_max``; the
leftover mass is charged at n_max + 1, which is conservative because every
beta argument below grows with N.
"""
from __future__ import annotations

import math

import numpy as np

from .cell_load import LoadPmf
from .meta import BetaFit, beta_fit, composite_threshold, meta_moments, moment
from .numerics import reg_inc_beta
from .params import Scheme, SystemParams, UserClass


def _beta_of(user_class: UserClass, p: SystemParams) -> float:
    return p.beta_c if UserClass(user_class) is UserClass.CC else p.beta_e


def share(user_class: UserClass, scheme: Scheme, alloc: float) -> float:
    """Fraction of time a class is served: 1 under NOMA, eta or 1 - eta under OMA."""
    if Scheme(scheme) is Scheme.NOMA:
        return 1.0
    if not 0 <= alloc <= 1:
        raise ValueError("eta must lie in [0, 1]")
    return alloc if UserClass(user_class) is UserClass.CC else 1.0 - alloc


def fit_for(user_class: UserClass, scheme: Scheme, alloc: float, p: SystemParams) -> BetaFit:
    theta = alloc if Scheme(scheme) is Scheme.NOMA else None
    return beta_fit(meta_moments(user_class, scheme, p, theta))


def mean_rate(user_class: UserClass, scheme: Scheme, alloc: float, p: SystemParams,
              load: LoadPmf) -> float:
    s = share(user_class, scheme, alloc)
    if s == 0.0:
        return 0.0
    theta = alloc if Scheme(scheme) is Scheme.NOMA else None
    m1 = moment(composite_threshold(user_class, scheme, p, theta), 1, user_class, p)
    return s * load.xi * math.log2(1.0 + _beta_of(user_class, p)) * m1


def _beta_cdf(x, fit: BetaFit):
    """P[success probability <= x] under the fitted law, x already clamped to [0, 1]."""
    if fit.degenerate:
        return (x >= fit.mean).astype(float)
    return np.asarray(reg_inc_beta(x, fit.kappa1, fit.kappa2))


def expect_over_load(scale, load: LoadPmf, fit: BetaFit):
    """E_N[I(min(scale * N, 1))] for an array of nonnegative ``scale`` values."""
    scale = np.atleast_1d(np.asarray(scale, dtype=float))
    n = np.arange(1, load.n_max + 2, dtype=float)
    w = np.append(load.probs, load.tail_mass)
    arg = np.minimum(scale[:, None] * n[None, :], 1.0)
    vals = _beta_cdf(arg, fit)
    return vals @ w


def _unwrap(x, like):
    return float(x[0]) if np.ndim(like) == 0 else x


def rate_cdf(user_class: UserClass, scheme: Scheme, rate, alloc: float, p: SystemParams,
             load: LoadPmf, fit: BetaFit | None = None):
    """P[conditional rate <= r] for the typical user of the given class."""
    if np.any(np.asarray(rate) < 0):
        raise ValueError("rate threshold must be nonnegative")
    fit = fit or fit_for(user_class, scheme, alloc, p)
    s = share(user_class, scheme, alloc)
    if s == 0.0:
        return _unwrap(np.ones(np.size(rate)), rate)
    scale = np.asarray(rate, dtype=float) / (s * math.log2(1.0 + _beta_of(user_class, p)))
    return _unwrap(expect_over_load(scale, load, fit), rate)


def cond_mean_delay(mu, arrival):
    """Mean sojourn time (1 - rho)/(mu - rho) of a Geo/Geo/1 queue; inf when unstable."""
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mu > arrival, (1.0 - arrival) / (mu - arrival), np.inf)
    return float(out) if out.ndim == 0 else out


def delay_ccdf(user_class: UserClass, scheme: Scheme, t, arrival: float, alloc: float,
               p: SystemParams, load: LoadPmf, fit: BetaFit | None = None):
    """Upper bound on P[conditional mean delay >= t] (unstable queues count as outage)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("delay threshold must be positive")
    if not 0 <= arrival < 1:
        raise ValueError("arrival must lie in [0, 1)")
    fit = fit or fit_for(user_class, scheme, alloc, p)
    s = share(user_class, scheme, alloc)
    if s == 0.0:
        return _unwrap(np.ones(np.size(t)), t)
    scale = ((1.0 - arrival) / t + arrival) / s
    return _unwrap(expect_over_load(scale, load, fit), t)
