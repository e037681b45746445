from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nomacell.cell_load import (GammaFit, RegionAreaStats, area_stats, gamma_fit, load_pmf,
                                log_hurwitz_zeta, mean_areas, region_load, second_moment_cc,
                                second_moment_ce, union_area, union_from_cos,
                                zero_truncated_poisson)
from nomacell.numerics import DomainError
from nomacell.params import SystemParams, UserClass

P = SystemParams()

# log of scipy.special.zeta(s, q), frozen
LOG_ZETA = [(2.5, 1.3, -0.24434349817381526), (10.0, 1.05, -0.4866348405722445),
            (40.0, 1.7, -21.225130033294864), (3.2, 12.0, -6.163830709869343)]

# direct quadrature of the zero-truncated-Poisson / gamma mixture (scipy quad), frozen
LOAD_DIRECT = [
    (2.14838039168121, 4.384449778941246, 5.0,
     [0.3352489464531191, 0.23579238289946622, 0.06532635617568588, 0.005333940327190345]),
    (3.8339383974835375, 7.517526269575564, 5.0,
     [0.2818815436944988, 0.24924551009186705, 0.07348667388531543, 0.0033708568688584056]),
    (2.0, 1.0, 2.0, [0.20719916105858, 0.1761363792503047, 0.09053734125629845, 0.02124219844025892]),
]

# direct triple integral over (r1, r2, angle) of the two-point probabilities,
# with an independent lens-area routine (scipy tplquad), frozen
# independent triple integral over (x, y, seed-pair) with a separate lens-area formula
AREA_DIRECT = {
    0.7: (0.35185860143688064, 0.3279414774737775),
    0.5: (0.10179156344085177, 0.7059576578863713),
}

PV_SECOND_MOMENT = 1.2801760409  # E|V|^2 of the typical Poisson-Voronoi cell at unit density


def _lens(r1, r2, d):
    # near tangency the closed form cancels catastrophically while the true lens is ~0
    if d >= (r1 + r2) * (1 - 1e-12):
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    k = 0.5 * math.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return a1 + a2 - k


def test_union_area_examples():
    assert union_area(1.0, 1.0, 0.0) == pytest.approx(math.pi)
    assert union_area(1.0, 1.0, math.pi) == pytest.approx(2 * math.pi)
    lens = _lens(1.0, 1.0, math.sqrt(2))
    assert union_area(1.0, 1.0, math.pi / 2) == pytest.approx(2 * math.pi - lens, rel=1e-12)


# within ~1e-9 of c = +-1 the centre distance itself is ill-conditioned in c
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(-1.0 + 1e-9, 1.0 - 1e-9))
@settings(max_examples=200, deadline=None)
def test_union_from_cos_matches_lens_formula(z1, z2, c):
    d = math.sqrt(max(z1 * z1 + z2 * z2 - 2 * z1 * z2 * c, 0.0))
    expected = math.pi * (z1 * z1 + z2 * z2) - _lens(z1, z2, d)
    assert float(union_from_cos(z1, z2, c)) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_union_from_cos_containment_and_disjoint_flags():
    assert float(union_from_cos(1.0, 2.0, 1.5)) == pytest.approx(4 * math.pi)
    assert float(union_from_cos(1.5, 0.1, -1.0)) == pytest.approx(2.26 * math.pi, rel=1e-14)
    assert float(union_from_cos(1.5, 1.5, 1.0)) == pytest.approx(2.25 * math.pi, rel=1e-14)
    assert float(union_from_cos(1.0, 2.0, -1.5)) == pytest.approx(5 * math.pi)


def test_union_area_domain():
    with pytest.raises(DomainError):
        union_area(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        union_area(1.0, 1.0, 4.0)


def test_mean_areas():
    assert mean_areas(P) == pytest.approx((0.49, 0.51), rel=1e-14)
    assert mean_areas(P.with_(lam=2.0)) == pytest.approx((0.245, 0.255), rel=1e-14)


def test_second_moments_match_direct_triple_integral():
    for tau, (cc, ce) in AREA_DIRECT.items():
        q = P.with_(tau=tau)
        assert second_moment_cc(q) == pytest.approx(cc, rel=1e-6)
        assert second_moment_ce(q) == pytest.approx(ce, rel=1e-6)


def test_second_moment_limits():
    near_one = P.with_(tau=0.99999)
    assert second_moment_cc(near_one) == pytest.approx(PV_SECOND_MOMENT, rel=1e-3)
    assert second_moment_ce(near_one) < 1e-4
    assert second_moment_cc(P.with_(lam=2.0)) == pytest.approx(second_moment_cc(P) / 4, rel=1e-8)


def test_second_moments_exceed_squared_means():
    for tau in (0.3, 0.5, 0.7, 0.9):
        q = P.with_(tau=tau)
        mc, me = mean_areas(q)
        assert second_moment_cc(q) > mc * mc
        assert second_moment_ce(q) > me * me


def test_literal_nested_case_form_is_far_off():
    # the void-probability variant of the nested configuration is kept only to
    # quantify it; it overshoots the inclusion-exclusion value by ~75%
    alt = second_moment_ce(P, case1_void_form=True)
    assert alt > 1.5 * second_moment_ce(P)


def test_gamma_fit_example():
    g = gamma_fit(RegionAreaStats(2.0, 6.0, UserClass.CC))
    assert (g.gamma1, g.gamma2) == pytest.approx((1.0, 2.0))
    assert g.mean == pytest.approx(2.0) and g.variance == pytest.approx(2.0)
    with pytest.raises(ValueError):
        gamma_fit(RegionAreaStats(2.0, 4.0, UserClass.CC))


@pytest.mark.parametrize("s,q,expected", LOG_ZETA)
def test_log_hurwitz_zeta_matches_oracle(s, q, expected):
    assert log_hurwitz_zeta(s, q) == pytest.approx(expected, rel=1e-11, abs=1e-12)


def test_log_hurwitz_zeta_huge_order():
    # dominated by the first term q^-s
    assert log_hurwitz_zeta(900.0, 1.5) == pytest.approx(-900 * math.log(1.5), rel=1e-12)
    with pytest.raises(DomainError):
        log_hurwitz_zeta(1.0, 1.0)


@pytest.mark.parametrize("shape,rate,nu,expected", LOAD_DIRECT)
def test_load_pmf_matches_direct_mixture(shape, rate, nu, expected):
    pmf = load_pmf(GammaFit(rate, shape), nu)
    got = pmf.probs[[0, 1, 4, 9]]
    np.testing.assert_allclose(got, expected, rtol=1e-9)


def test_load_pmf_normalisation_and_xi():
    for region in (UserClass.CC, UserClass.CE):
        pmf = region_load(region, P)
        assert pmf.probs.sum() + pmf.tail_mass == pytest.approx(1.0, abs=1e-12)
        assert pmf.tail_mass < 1e-8
        assert 0 < pmf.xi <= 1
        assert pmf.xi == pytest.approx(np.sum(pmf.probs / pmf.n))


def test_load_pmf_mean_consistency():
    # E[N] = E[nu A / (1 - e^{-nu A})] under the gamma area law
    from scipy import integrate, stats
    fit = gamma_fit(area_stats(UserClass.CC, P))
    f = lambda a: 5 * a / -math.expm1(-5 * a) * stats.gamma.pdf(a, fit.gamma2, scale=1 / fit.gamma1)
    direct = integrate.quad(f, 0, np.inf)[0]
    assert region_load(UserClass.CC, P).mean() == pytest.approx(direct, rel=1e-7)


def test_load_pmf_degenerate_area_is_zero_truncated_poisson():
    a0, nu = 0.5, 4.0
    shape = 1e6
    pmf = load_pmf(GammaFit(shape / a0, shape), nu, n_max=12)
    np.testing.assert_allclose(pmf.probs, zero_truncated_poisson(nu * a0, 12), rtol=2e-3)


def test_zero_truncated_poisson_sums_to_one():
    assert zero_truncated_poisson(2.0, 60).sum() == pytest.approx(1.0, abs=1e-12)


def test_load_pmf_rejects_bad_density():
    with pytest.raises(ValueError):
        load_pmf(GammaFit(1.0, 2.0), 0.0)
