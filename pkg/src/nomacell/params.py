"""Parameter containers shared by the analytic models and the simulator.

All thresholds are linear (not dB); conversion happens at the CLI boundary.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class UserClass(str, enum.Enum):
    CC = "cc"
    CE = "ce"


class Scheme(str, enum.Enum):
    NOMA = "noma"
    OMA = "oma"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """Network and scheme parameters.

    lam: BS density; nu: user density per unit area; alpha: path-loss exponent;
    tau: CC/CE distance-ratio threshold; beta_c, beta_e: SIR thresholds;
    theta: NOMA power share of the CC user; eta: OMA resource share of the CC user.
    """

    lam: float = 1.0
    nu: float = 5.0
    alpha: float = 4.0
    tau: float = 0.7
    beta_c: float = db_to_linear(3.0)
    beta_e: float = db_to_linear(-3.0)
    theta: float = 0.3
    eta: float = 0.5
    rho: float = 9.0 / 7.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.alpha > 2:
            raise ValueError("alpha must exceed 2")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not (self.beta_c > 0 and self.beta_e > 0):
            raise ValueError("SIR thresholds must be positive")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha

    @property
    def theta_hat(self) -> float:
        """Power share at which both CC decoding constraints coincide."""
        bc, be = self.beta_c, self.beta_e
        return bc / (bc + be + bc * be)

    @property
    def theta_nc(self) -> float:
        """Largest power share for which the CE user can still decode."""
        return 1.0 / (1.0 + self.beta_e)

    def with_(self, **kw) -> "SystemParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class TrafficParams:
    """QoS targets.

    rate_floor_*: minimum mean rates (bits/slot/Hz); arrival_*: Bernoulli packet
    arrival probabilities; delay_thresh_*: mean-delay thresholds (slots);
    outage_cap_*: allowed delay-outage probabilities; ec_floor_*: minimum
    effective capacities (packets/slot).
    """

    rate_floor_c: float = 0.1
    rate_floor_e: float = 0.05
    arrival_c: float = 0.05
    arrival_e: float = 0.05
    delay_thresh_c: float = 20.0
    delay_thresh_e: float = 30.0
    outage_cap_c: float = 0.2
    outage_cap_e: float = 0.2
    ec_floor_c: float = 0.05
    ec_floor_e: float = 0.05

    def __post_init__(self):
        if min(self.rate_floor_c, self.rate_floor_e, self.ec_floor_c, self.ec_floor_e) < 0:
            raise ValueError("floors must be nonnegative")
        for r in (self.arrival_c, self.arrival_e):
            if not 0 < r < 1:
                raise ValueError("arrival probabilities must lie in (0, 1)")
        if not (self.delay_thresh_c >= 1 and self.delay_thresh_e >= 1):
            raise ValueError("delay thresholds must be at least one slot")
        for o in (self.outage_cap_c, self.outage_cap_e):
            if not 0 < o < 1:
                raise ValueError("outage caps must lie in (0, 1)")

    def with_(self, **kw) -> "TrafficParams":
        return replace(self, **kw)

    def rate_floor(self, user_class: UserClass) -> float:
        return self.rate_floor_c if UserClass(user_class) is UserClass.CC else self.rate_floor_e

    def arrival(self, user_class: UserClass) -> float:
        return self.arrival_c if UserClass(user_class) is UserClass.CC else self.arrival_e

    def delay_thresh(self, user_class: UserClass) -> float:
        return self.delay_thresh_c if UserClass(user_class) is UserClass.CC else self.delay_thresh_e

    def outage_cap(self, user_class: UserClass) -> float:
        return self.outage_cap_c if UserClass(user_class) is UserClass.CC else self.outage_cap_e

    def ec_floor(self, user_class: UserClass) -> float:
        return self.ec_floor_c if UserClass(user_class) is UserClass.CC else self.ec_floor_e
