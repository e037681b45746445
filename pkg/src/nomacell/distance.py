"""Service and dominant-interferer distance laws for CC and CE users.

The approximation places the serving BS at distance R_o and the nearest
interfering BS at R_d, with the pair density corrected by the factor rho
so that the typical Voronoi cell has the right mean area.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import SystemParams, UserClass


@dataclass(frozen=True)
class DistancePair:
    r_o: float
    r_d: float
    user_class: UserClass

    def __post_init__(self):
        if not 0 < self.r_o <= self.r_d:
            raise ValueError("need 0 < r_o <= r_d")


def _c(p: SystemParams) -> float:
    return math.pi * p.rho * p.lam


def class_probabilities(p: SystemParams) -> tuple[float, float]:
    t2 = p.tau ** 2
    return t2, 1.0 - t2


def cdf_ro_cc(r_o, p: SystemParams):
    r_o = np.asarray(r_o, dtype=float)
    return -np.expm1(-_c(p) * r_o ** 2 / p.tau ** 2)


def cdf_rd_given_ro_cc(r_d, r_o, p: SystemParams):
    r_d = np.asarray(r_d, dtype=float)
    r_o = np.asarray(r_o, dtype=float)
    low = r_o / p.tau
    if np.any(r_d < low * (1 - 1e-12)):
        raise ValueError("CC conditional CDF needs r_d >= r_o / tau")
    return -np.expm1(-_c(p) * np.maximum(r_d ** 2 - low ** 2, 0.0))


def joint_pdf_cc(r_o, r_d, p: SystemParams):
    r_o = np.asarray(r_o, dtype=float)
    r_d = np.asarray(r_d, dtype=float)
    c = _c(p)
    inside = (r_o > 0) & (r_d * p.tau > r_o)
    with np.errstate(divide="ignore"):
        logf = (2 * math.log(2 * c) - 2 * math.log(p.tau)
                + np.log(np.where(inside, r_o * r_d, 1.0)) - c * r_d ** 2)
    return np.where(inside, np.exp(logf), 0.0)


def cdf_ro_ce(r_o, p: SystemParams):
    r_o = np.asarray(r_o, dtype=float)
    c = _c(p)
    t2 = p.tau ** 2
    x = c * r_o ** 2
    # 1 - [1 - t2 e^{-x(1/t2 - 1)}] e^{-x} / (1 - t2), rearranged to avoid cancellation
    num = -np.expm1(-x) - t2 * (-np.expm1(-x / t2))
    return np.clip(num / (1.0 - t2), 0.0, 1.0)


def cdf_rd_given_ro_ce(r_d, r_o, p: SystemParams):
    r_d = np.asarray(r_d, dtype=float)
    r_o = np.asarray(r_o, dtype=float)
    if np.any(r_d < r_o * (1 - 1e-12)):
        raise ValueError("CE conditional CDF needs r_d >= r_o")
    c = _c(p)
    hi = r_o / p.tau
    rd = np.clip(r_d, r_o, hi)
    # (e^{-c r_o^2} - e^{-c r_d^2}) / (e^{-c r_o^2} - e^{-c r_o^2/tau^2})
    num = -np.expm1(-c * (rd ** 2 - r_o ** 2))
    den = -np.expm1(-c * (hi ** 2 - r_o ** 2))
    return np.where(r_d >= hi, 1.0, num / den)


def joint_pdf_ce(r_o, r_d, p: SystemParams):
    r_o = np.asarray(r_o, dtype=float)
    r_d = np.asarray(r_d, dtype=float)
    c = _c(p)
    inside = (r_o > 0) & (r_d > r_o) & (r_d * p.tau <= r_o)
    with np.errstate(divide="ignore"):
        logf = (2 * math.log(2 * c) - math.log1p(-p.tau ** 2)
                + np.log(np.where(inside, r_o * r_d, 1.0)) - c * r_d ** 2)
    return np.where(inside, np.exp(logf), 0.0)


def sample_distances(user_class: UserClass, p: SystemParams, rng: np.random.Generator,
                     size: int):
    """Exact draws of (R_o, R_d) arrays for one user class.

    Under the joint density, pi*rho*lam*R_d^2 is Gamma(2, 1) for both classes and,
    given R_d, R_o^2 is uniform on (0, tau^2 R_d^2) for CC users and on
    (tau^2 R_d^2, R_d^2) for CE users.
    """
    rd2 = rng.gamma(2.0, 1.0, size) / _c(p)
    u = rng.random(size)
    t2 = p.tau ** 2
    if UserClass(user_class) is UserClass.CC:
        ro2 = u * t2 * rd2
    else:
        ro2 = rd2 * (t2 + (1.0 - t2) * u)
    return np.sqrt(ro2), np.sqrt(rd2)


def sample_distance_pair(user_class: UserClass, p: SystemParams,
                         rng: np.random.Generator) -> DistancePair:
    ro, rd = sample_distances(user_class, p, rng, 1)
    return DistancePair(float(ro[0]), float(rd[0]), UserClass(user_class))
