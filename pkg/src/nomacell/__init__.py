"""Downlink two-user NOMA in Poisson cellular networks with distance-ratio user ranking.

Analytic meta-distribution moments, CC/CE region geometry and load, rate and
delay distributions, resource allocation, and a Monte Carlo oracle.
"""
from __future__ import annotations

from .allocation import (RAResult, brute_force_ra, csr, effective_capacity, gain_eta_limit,
                         noma_gain, solve_p1, solve_p2)
from .cell_load import GammaFit, LoadPmf, RegionAreaStats, area_stats, gamma_fit, load_pmf
from .meta import BetaFit, InfeasibleError, MetaMoments, beta_fit, meta_ccdf, meta_moments
from .numerics import DomainError, QuadratureError, QuadSpec
from .params import Scheme, SystemParams, TrafficParams, UserClass, db_to_linear, linear_to_db
from .performance import cond_mean_delay, delay_ccdf, mean_rate, rate_cdf
from .simulator import SimConfig

__version__ = "0.1.0"

__all__ = [
    "BetaFit", "DomainError", "GammaFit", "InfeasibleError", "LoadPmf", "MetaMoments",
    "QuadSpec", "QuadratureError", "RAResult", "RegionAreaStats", "Scheme", "SimConfig",
    "SystemParams", "TrafficParams", "UserClass", "area_stats", "beta_fit", "brute_force_ra",
    "cond_mean_delay", "csr", "db_to_linear", "delay_ccdf", "effective_capacity",
    "gain_eta_limit", "gamma_fit", "linear_to_db", "load_pmf", "mean_rate", "meta_ccdf",
    "meta_moments", "noma_gain", "rate_cdf", "solve_p1", "solve_p2",
]
