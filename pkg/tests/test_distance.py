from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from nomacell.distance import (DistancePair, cdf_rd_given_ro_cc, cdf_rd_given_ro_ce, cdf_ro_cc,
                               cdf_ro_ce, class_probabilities, joint_pdf_cc, joint_pdf_ce,
                               sample_distance_pair, sample_distances)
from nomacell.params import SystemParams, UserClass

P = SystemParams()
C = math.pi * (9 / 7)


@pytest.mark.parametrize("tau,expected", [(0.7, (0.49, 0.51)), (0.5, (0.25, 0.75)),
                                          (0.999999, (1.0, 0.0))])
def test_class_probabilities(tau, expected):
    assert class_probabilities(P.with_(tau=tau)) == pytest.approx(expected, abs=1e-5)


def test_cc_marginal_examples():
    assert cdf_ro_cc(0.0, P) == 0.0
    assert cdf_ro_cc(50.0, P) == pytest.approx(1.0)
    assert cdf_ro_cc(0.35, P) == pytest.approx(1 - math.exp(-C * 0.25), rel=1e-12)


def test_cc_conditional_examples():
    assert cdf_rd_given_ro_cc(0.5, 0.35, P) == pytest.approx(0.0, abs=1e-15)
    assert cdf_rd_given_ro_cc(40.0, 0.35, P) == pytest.approx(1.0)
    assert cdf_rd_given_ro_cc(0.6, 0.35, P) == pytest.approx(1 - math.exp(-C * 0.11), rel=1e-12)
    with pytest.raises(ValueError):
        cdf_rd_given_ro_cc(0.4, 0.35, P)


def test_ce_marginal_matches_literal_form():
    t2 = 0.49
    for r in (0.05, 0.5, 1.2):
        x = C * r * r
        literal = 1 - (1 - t2 * math.exp(-x * (1 / t2 - 1))) / ((1 - t2) * math.exp(x))
        assert cdf_ro_ce(r, P) == pytest.approx(literal, rel=1e-10)
    assert cdf_ro_ce(0.0, P) == 0.0
    assert cdf_ro_ce(30.0, P) == pytest.approx(1.0)


def test_ce_conditional_edges():
    assert cdf_rd_given_ro_ce(0.5, 0.5, P) == pytest.approx(0.0, abs=1e-15)
    assert cdf_rd_given_ro_ce(0.5 / 0.7, 0.5, P) == pytest.approx(1.0)
    assert cdf_rd_given_ro_ce(3.0, 0.5, P) == 1.0
    mid = cdf_rd_given_ro_ce(0.6, 0.5, P)
    assert mid == pytest.approx((math.exp(-C * 0.25) - math.exp(-C * 0.36))
                                / (math.exp(-C * 0.25) - math.exp(-C * 0.25 / 0.49)), rel=1e-12)


def test_joint_pdfs_zero_outside_support():
    assert joint_pdf_cc(0.5, 0.6, P) == 0.0
    assert joint_pdf_ce(0.3, 1.0, P) == 0.0
    assert joint_pdf_ce(0.5, 0.4, P) == 0.0


def test_joint_pdfs_integrate_to_one():
    cc = integrate.dblquad(lambda ro, rd: joint_pdf_cc(ro, rd, P), 0, 8,
                           lambda rd: 0, lambda rd: 0.7 * rd)[0]
    ce = integrate.dblquad(lambda ro, rd: joint_pdf_ce(ro, rd, P), 0, 8,
                           lambda rd: 0.7 * rd, lambda rd: rd)[0]
    assert cc == pytest.approx(1.0, abs=1e-7)
    assert ce == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("cls,cdf", [(UserClass.CC, cdf_ro_cc), (UserClass.CE, cdf_ro_ce)])
def test_sampler_matches_marginal(cls, cdf):
    rng = np.random.default_rng(3)
    ro, rd = sample_distances(cls, P, rng, 200_000)
    assert np.all(ro <= rd)
    if cls is UserClass.CC:
        assert np.all(ro <= 0.7 * rd + 1e-12)
    else:
        assert np.all(ro >= 0.7 * rd - 1e-12)
    grid = np.linspace(0.02, 1.2, 40)
    emp = np.searchsorted(np.sort(ro), grid) / ro.size
    assert np.max(np.abs(emp - cdf(grid, P))) < 0.006


def test_sample_distance_pair():
    pair = sample_distance_pair(UserClass.CE, P, np.random.default_rng(1))
    assert isinstance(pair, DistancePair) and pair.user_class is UserClass.CE
    with pytest.raises(ValueError):
        DistancePair(0.5, 0.4, UserClass.CC)
