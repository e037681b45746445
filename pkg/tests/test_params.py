from __future__ import annotations

import pytest

from nomacell.params import Scheme, SystemParams, TrafficParams, UserClass, db_to_linear, linear_to_db


@pytest.mark.parametrize("db,lin", [(0, 1.0), (-3, 0.5011872336272722), (3, 1.9952623149688795)])
def test_db_to_linear(db, lin):
    assert db_to_linear(db) == pytest.approx(lin, rel=1e-14)
    assert linear_to_db(lin) == pytest.approx(db, abs=1e-12)


def test_defaults():
    p = SystemParams()
    assert (p.lam, p.nu, p.alpha, p.tau) == (1.0, 5.0, 4.0, 0.7)
    assert p.delta == 0.5
    assert p.rho == pytest.approx(9 / 7)
    assert p.theta_nc == pytest.approx(1 / (1 + db_to_linear(-3)))


@pytest.mark.parametrize("kw", [dict(lam=0), dict(nu=-1), dict(alpha=2), dict(tau=1), dict(tau=0),
                                dict(beta_c=0), dict(theta=1), dict(eta=0)])
def test_system_params_validation(kw):
    with pytest.raises(ValueError):
        SystemParams(**kw)


@pytest.mark.parametrize("kw", [dict(arrival_c=0), dict(arrival_e=1), dict(delay_thresh_c=0.5),
                                dict(outage_cap_e=1.0), dict(rate_floor_c=-0.1)])
def test_traffic_params_validation(kw):
    with pytest.raises(ValueError):
        TrafficParams(**kw)


def test_traffic_accessors():
    t = TrafficParams()
    assert t.rate_floor(UserClass.CC) == 0.1 and t.rate_floor("ce") == 0.05
    assert t.delay_thresh(UserClass.CE) == 30
    assert t.arrival(UserClass.CC) == 0.05
    assert t.outage_cap(UserClass.CC) == 0.2
    assert t.ec_floor(UserClass.CE) == 0.05
    assert Scheme("noma") is Scheme.NOMA
