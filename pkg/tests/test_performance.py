from __future__ import annotations

import math

import numpy as np
import pytest

from nomacell.allocation import theta_nc
from nomacell.cell_load import region_load
from nomacell.meta import InfeasibleError
from nomacell.params import SystemParams
from nomacell.performance import cond_mean_delay, delay_ccdf, mean_rate, rate_cdf, share

P = SystemParams()
LOAD_C = region_load("cc", P)
LOAD_E = region_load("ce", P)

# E_N[I_x(k1, k2)] summed directly with scipy.special.betainc over the load pmf
# (class, scheme, alloc, rate floor, delay threshold) -> (rate cdf, delay ccdf at arrival 0.05)
DIRECT = {
    ("cc", "noma", 0.3, 0.1, 20.0): (0.22415370145668295, 0.30826766346088974),
    ("ce", "noma", 0.3, 0.05, 30.0): (0.2792576508125853, 0.2640263764850804),
    ("cc", "oma", 0.5, 0.1, 20.0): (0.13709281050409255, 0.2804669796936686),
}


def _load(cls):
    return LOAD_C if cls == "cc" else LOAD_E


def test_share():
    assert share("cc", "noma", 0.3) == 1.0
    assert share("cc", "oma", 0.3) == 0.3
    assert share("ce", "oma", 0.3) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        share("cc", "oma", 1.5)


@pytest.mark.parametrize("key", sorted(DIRECT))
def test_rate_and_delay_match_direct_sum(key):
    cls, scheme, alloc, r, t = key
    rc, dc = DIRECT[key]
    assert rate_cdf(cls, scheme, r, alloc, P, _load(cls)) == pytest.approx(rc, rel=1e-6)
    assert delay_ccdf(cls, scheme, t, 0.05, alloc, P, _load(cls)) == pytest.approx(dc, rel=1e-6)


def test_mean_rate_edges():
    near = theta_nc(P.beta_e) - 1e-9
    assert mean_rate("ce", "noma", near, P, LOAD_E) < 1e-3
    with pytest.raises(InfeasibleError):
        mean_rate("ce", "noma", theta_nc(P.beta_e), P, LOAD_E)
    assert mean_rate("cc", "oma", 0.0, P, LOAD_C) == 0.0
    assert mean_rate("ce", "oma", 1.0, P, LOAD_E) == 0.0


def test_mean_rate_scales_with_time_share():
    full = mean_rate("cc", "oma", 1.0, P, LOAD_C)
    assert mean_rate("cc", "oma", 0.25, P, LOAD_C) == pytest.approx(full / 4)


def test_rate_cdf_edges():
    assert rate_cdf("cc", "noma", 0.0, 0.3, P, LOAD_C) == 0.0
    top = math.log2(1 + P.beta_c)
    assert rate_cdf("cc", "noma", top, 0.3, P, LOAD_C) == pytest.approx(1.0, abs=1e-12)
    assert rate_cdf("cc", "oma", 0.5 * top, 0.5, P, LOAD_C) == pytest.approx(1.0, abs=1e-12)
    assert rate_cdf("cc", "oma", 0.01, 0.0, P, LOAD_C) == 1.0
    with pytest.raises(ValueError):
        rate_cdf("cc", "noma", -0.1, 0.3, P, LOAD_C)


def test_rate_cdf_is_monotone_and_vectorized():
    r = np.linspace(0.0, 1.2, 60)
    vals = rate_cdf("ce", "noma", r, 0.3, P, LOAD_E)
    assert vals.shape == r.shape
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[10] == pytest.approx(rate_cdf("ce", "noma", float(r[10]), 0.3, P, LOAD_E))


def test_cond_mean_delay():
    assert cond_mean_delay(0.5, 0.25) == pytest.approx(3.0)
    assert cond_mean_delay(1.0, 0.3) == pytest.approx(1.0)
    assert cond_mean_delay(0.2, 0.25) == math.inf
    assert cond_mean_delay(0.25, 0.25) == math.inf
    out = cond_mean_delay(np.array([0.5, 0.1]), 0.25)
    assert out[0] == pytest.approx(3.0) and out[1] == math.inf


def test_delay_ccdf_limits():
    assert delay_ccdf("cc", "noma", 1e-9, 0.05, 0.3, P, LOAD_C) == pytest.approx(1.0)
    assert delay_ccdf("cc", "noma", 1e9, 1e-9, 0.3, P, LOAD_C) < 1e-4
    assert delay_ccdf("ce", "oma", 5.0, 0.05, 1.0, P, LOAD_E) == 1.0
    with pytest.raises(ValueError):
        delay_ccdf("cc", "noma", 0.0, 0.05, 0.3, P, LOAD_C)
    with pytest.raises(ValueError):
        delay_ccdf("cc", "noma", 5.0, 1.0, 0.3, P, LOAD_C)


def test_delay_ccdf_monotone_in_threshold_and_arrival():
    t = np.linspace(1.0, 100.0, 50)
    low = delay_ccdf("cc", "noma", t, 0.02, 0.3, P, LOAD_C)
    high = delay_ccdf("cc", "noma", t, 0.2, 0.3, P, LOAD_C)
    assert np.all(np.diff(low) <= 1e-12)
    assert np.all(high >= low - 1e-12)
