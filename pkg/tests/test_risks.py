"""Cause-specific failure probabilities: quadrature, hazard shares, series, MC."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bfm.distribution import BfmParams, dhillon_frf, exppower_frf
from bfm.risks import RiskEstimate, risk_mc, risk_p1, risk_p2, risk_p3

ELECTRODE = BfmParams(0.0127, 0.6124, 3.5770, 0.0026)

# reference parameter rows, canonical order (nu, theta, tau, zeta), with the
# four-digit incidence probabilities reported for them; the last two columns
# of each entry are the P1 pair
REFERENCE_ROWS = [
    (BfmParams(0.01, 2.0, 0.6, 0.6), 0.0158, 0.9842),
    (BfmParams(0.05, 6.0, 0.7, 2.8), 0.0005, 0.9995),
    (BfmParams(0.01, 0.3, 1.5, 0.6), 0.0098, 0.9902),
    (BfmParams(0.5, 0.05, 0.25, 0.8), 0.2991, 0.7009),
    (BfmParams(0.5, 8.0, 3.0, 1.2), 0.0533, 0.9467),
]


# ---------------------------------------------------------------------------
# P1: adaptive quadrature of the incidence integrals


@pytest.mark.parametrize("p,f1_ref,f2_ref", REFERENCE_ROWS)
def test_p1_reference_rows(p, f1_ref, f2_ref):
    est = risk_p1(p)
    assert est.method == "P1_quadrature"
    assert_allclose(est.f1, f1_ref, atol=1e-3)
    assert_allclose(est.f2, f2_ref, atol=1e-3)
    assert_allclose(est.f1 + est.f2, 1.0, atol=1e-6)


def test_p1_extended_precision_anchors():
    """mpmath (30 digits) values of F1 = int r1 sf dt after the smoothing
    substitution u = x^theta, frozen to 15 digits."""
    assert_allclose(
        risk_p1(BfmParams(0.01, 2.0, 0.6, 0.6)).f1, 0.0158329666499191, rtol=1e-9
    )
    assert_allclose(
        risk_p1(BfmParams(0.5, 0.05, 0.25, 0.8)).f1, 0.299086256608446, rtol=1e-9
    )
    assert_allclose(risk_p1(ELECTRODE).f1, 0.295803836809008, rtol=1e-9)


def test_p1_against_monte_carlo():
    """Quadrature and simulation are fully independent; they must agree to
    three binomial standard errors."""
    for p in (ELECTRODE, BfmParams(0.5, 0.05, 0.25, 0.8)):
        quad = risk_p1(p)
        mc = risk_mc(p, draws=200_000, seed=42)
        assert abs(quad.f1 - mc.f1) < 3.0 * mc.stderr


# ---------------------------------------------------------------------------
# P2: hazard shares at a fixed age


def test_p2_matches_component_hazard_ratio():
    p = ELECTRODE
    for x in (2.0, 50.0, 300.0):
        est = risk_p2(x, p)
        r1 = float(dhillon_frf(x, p.nu, p.theta))
        r2 = float(exppower_frf(x, p.tau, p.zeta))
        assert_allclose(est.f1, r1 / (r1 + r2), rtol=1e-12)
        assert_allclose(est.f1 + est.f2, 1.0, rtol=1e-14)


def test_p2_age_limits():
    # theta < 1: the Dhillon hazard blows up at the origin, so cause 1 owns
    # early failures; the exponential-power hazard explodes at large age
    assert risk_p2(1e-6, ELECTRODE).f1 > 0.999
    assert risk_p2(600.0, ELECTRODE).f2 > 0.999


def test_p2_requires_positive_age():
    with pytest.raises(ValueError):
        risk_p2(0.0, ELECTRODE)


# ---------------------------------------------------------------------------
# P3: series expansions


def test_p3_reference_rows():
    """Published four-digit P3 pairs, including the drifted row sums.

    The fifth row's expansions are asymptotic: the optimally truncated
    values drift off the P1 answers, which is the expected and documented
    behavior (the published row shows the same effect: its pair sums to
    1.0004).
    """
    expected = [
        (0.0158, 0.9842),
        (0.0005, 0.9995),
        (0.0098, 0.9902),
        (0.2990, 0.7009),
        (0.0548, 0.9456),
    ]
    for (p, _, _), (f1_ref, f2_ref) in zip(REFERENCE_ROWS, expected):
        est = risk_p3(p)
        assert_allclose(est.f1, f1_ref, atol=1e-3)
        assert_allclose(est.f2, f2_ref, atol=1e-3)
        assert abs((est.f1 + est.f2) - 1.0) < 1.5e-3  # drift stays visible but small


def test_p3_convergence_flags():
    flags = [
        (
            risk_p3(p).series_f1.converged,
            risk_p3(p).series_f2.converged,
        )
        for p, _, _ in REFERENCE_ROWS
    ]
    assert flags == [
        (False, False),
        (False, False),
        (True, True),
        (True, True),
        (False, False),
    ]


def test_p3_agrees_with_p1_where_converged():
    for p in (REFERENCE_ROWS[2][0], REFERENCE_ROWS[3][0]):
        a = risk_p1(p)
        b = risk_p3(p)
        assert b.series_f1.converged and b.series_f2.converged
        assert_allclose(b.f1, a.f1, rtol=1e-7)
        assert_allclose(b.f2, a.f2, rtol=1e-7)


def test_p3_unconverged_rows_still_close():
    # optimal truncation of the asymptotic rows stays within a part in 1e3
    p = REFERENCE_ROWS[4][0]
    a, b = risk_p1(p), risk_p3(p)
    assert not b.series_f1.converged
    assert abs(a.f1 - b.f1) < 1.5e-3


# ---------------------------------------------------------------------------
# Monte Carlo oracle


def test_mc_reproducible_and_complementary():
    a = risk_mc(ELECTRODE, draws=20_000, seed=9)
    b = risk_mc(ELECTRODE, draws=20_000, seed=9)
    assert a.f1 == b.f1
    assert a.f1 + a.f2 == 1.0
    assert a.method == "MC_oracle"
    assert a.stderr is not None and 0.0 < a.stderr < 0.01


def test_mc_rejects_tiny_simulations():
    with pytest.raises(ValueError):
        risk_mc(ELECTRODE, draws=5000)


def test_estimate_container_fields():
    est = risk_p1(ELECTRODE)
    assert isinstance(est, RiskEstimate)
    assert est.series_f1 is None and est.stderr is None
    est3 = risk_p3(ELECTRODE)
    assert est3.series_f1 is not None and est3.series_f2 is not None
