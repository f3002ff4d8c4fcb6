"""Residual life, change points, burn-in, and the TTT transform."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bfm.distribution import BfmParams, bfm_frf
from bfm.reliability import (
    BurnIn,
    ChangePoints,
    MrlResult,
    TttCurve,
    find_change_points,
    mrl,
    mrl_frf_identity_residual,
    mttf,
    optimal_burn_in,
    scaled_ttt,
)

# fitted optima, canonical order (nu, theta, tau, zeta)
ELECTRODE = BfmParams(0.0127, 0.6124, 3.5770, 0.0026)
APPLIANCE = BfmParams(0.0054, 4.9472, 0.4701, 0.0419)
# a corner where all three failure-rate phases sit inside double range:
# Dhillon hump near x=1, handover dip near x=14, exp-power climb after
THREE_PHASE = BfmParams(2.0, 3.0, 2.0, 0.05)


# ---------------------------------------------------------------------------
# mean residual life: dual routes and extended-precision anchors
#
# The anchors below were computed with mpmath at 30 significant digits by
# tanh-sinh quadrature of the conditional survival (breakpointed far past
# the survival mass), then frozen.


def test_mttf_quadrature_anchor():
    got = mttf(ELECTRODE)
    assert isinstance(got, MrlResult)
    assert got.method == "quadrature"
    assert_allclose(got.value, 246.69545921020936, rtol=1e-10)


def test_mrl_quadrature_anchor_at_age_100():
    got = mrl(100.0, ELECTRODE)
    assert_allclose(got.value, 193.61181769010173, rtol=1e-10)


def test_mttf_appliance_anchor():
    assert_allclose(mttf(APPLIANCE).value, 2.2531590874901659, rtol=1e-10)


def test_mttf_series_route_agrees_where_it_converges():
    """Series and quadrature are fully independent code paths; inside the
    series' convergence region they must coincide."""
    q = mttf(ELECTRODE).value
    s = mttf(ELECTRODE, method="series")
    assert s.series_detail is not None and s.series_detail.converged
    assert_allclose(s.value, q, rtol=1e-9)


def test_mrl_series_route_at_positive_age():
    q = mrl(100.0, ELECTRODE).value
    s = mrl(100.0, ELECTRODE, method="series")
    assert s.series_detail.converged
    assert_allclose(s.value, q, rtol=1e-9)


def test_mrl_series_flags_divergence():
    """At the appliance optimum the expansion is asymptotic (the survival
    mass extends past nu^(-1/theta)); the guarded accumulator must say so
    rather than return a silently wrong number."""
    s = mttf(APPLIANCE, method="series")
    assert s.series_detail is not None
    assert not s.series_detail.converged
    assert math.isfinite(s.value)


def test_mrl_validation():
    with pytest.raises(ValueError):
        mrl(-1.0, ELECTRODE)
    with pytest.raises(ValueError):
        mrl(10.0, ELECTRODE, method="simpson")


# ---------------------------------------------------------------------------
# reciprocal identity mu'(x) = mu(x) r(x) - 1


@pytest.mark.parametrize(
    "p,ages",
    [
        (ELECTRODE, (5.0, 50.0, 200.0, 400.0)),
        (APPLIANCE, (0.1, 0.8, 2.0, 6.0)),
        (THREE_PHASE, (0.2, 2.0, 15.0, 50.0)),
    ],
)
def test_mrl_frf_identity(p, ages):
    """|mu' - (mu r - 1)| <= 1e-5 max(1, mu) across all three hazard-shape
    regimes (bathtub, three-phase, roller-coaster)."""
    for x in ages:
        resid = mrl_frf_identity_residual(x, p)
        mu = mrl(x, p).value
        assert abs(resid) <= 1e-5 * max(1.0, mu)


def test_identity_residual_requires_positive_age():
    with pytest.raises(ValueError):
        mrl_frf_identity_residual(0.0, ELECTRODE)


# ---------------------------------------------------------------------------
# change-point location and shape labels


def test_change_points_monotone():
    up = find_change_points(lambda x: x, (0.1, 10.0))
    assert up.shape_label == "increasing" and up.locations == ()
    down = find_change_points(lambda x: 1.0 / x, (0.1, 10.0))
    assert down.shape_label == "decreasing" and down.locations == ()


def test_change_points_parabola():
    cp = find_change_points(lambda x: (x - 2.0) ** 2 + 1.0, (0.5, 10.0))
    assert cp.shape_label == "bathtub"
    assert len(cp.locations) == 1
    assert_allclose(cp.locations[0], 2.0, rtol=1e-4)
    flipped = find_change_points(lambda x: -((x - 2.0) ** 2), (0.5, 10.0))
    assert flipped.shape_label == "inverted_bathtub"
    assert_allclose(flipped.locations[0], 2.0, rtol=1e-4)


def test_change_points_cubic():
    """(x-1)(x-3)(x-5) has extrema at 3 -+ 2/sqrt(3); the sign pattern
    (+,-,+) is the three-phase hazard signature."""
    f = lambda x: (x - 1.0) * (x - 3.0) * (x - 5.0)
    cp = find_change_points(f, (0.3, 8.0))
    assert cp.shape_label == "ibbfr"
    lo = 3.0 - 2.0 / math.sqrt(3.0)
    hi = 3.0 + 2.0 / math.sqrt(3.0)
    assert_allclose(cp.locations, (lo, hi), rtol=1e-4)
    rc = find_change_points(lambda x: -f(x), (0.3, 8.0))
    assert rc.shape_label == "roller_coaster"


def test_change_points_validation():
    with pytest.raises(ValueError):
        find_change_points(lambda x: x, (0.0, 1.0))
    with pytest.raises(ValueError):
        find_change_points(lambda x: x, (2.0, 1.0))
    with pytest.raises(ValueError):
        find_change_points(lambda x: x, (0.1, 1.0), grid_size=32)


def test_bfm_hazard_shape_labels():
    """The fitted optima reproduce the hazard taxonomies seen in the data:
    bathtub for the electrode set, roller-coaster for the appliance set,
    and the three-phase corner shows rise-fall-rise."""
    ef = find_change_points(lambda x: float(bfm_frf(x, ELECTRODE)), (1.0, 2000.0))
    assert ef.shape_label == "bathtub"
    af = find_change_points(lambda x: float(bfm_frf(x, APPLIANCE)), (0.005, 30.0))
    assert af.shape_label == "roller_coaster"
    assert len(af.locations) >= 2
    tp = find_change_points(lambda x: float(bfm_frf(x, THREE_PHASE)), (0.05, 80.0))
    assert tp.shape_label == "ibbfr"


def test_mrl_turning_precedes_frf_turning():
    """On a bathtub set the residual-life maximum comes before the hazard
    minimum (x_mu <= x_r)."""
    frf_cp = find_change_points(
        lambda x: float(bfm_frf(x, ELECTRODE)), (1.0, 2000.0)
    )
    mrl_cp = find_change_points(
        lambda x: mrl(x, ELECTRODE).value, (1.0, 2000.0)
    )
    assert mrl_cp.shape_label == "inverted_bathtub"
    assert mrl_cp.locations[0] <= frf_cp.locations[0]


# ---------------------------------------------------------------------------
# burn-in


def test_burn_in_interior_maximum():
    b = optimal_burn_in(ELECTRODE, 600.0)
    assert isinstance(b, BurnIn)
    assert not b.at_boundary
    assert b.b_opt > 0.0
    # burning in must not report less residual life than no burn-in at all
    assert b.mu_star >= mttf(ELECTRODE).value
    # the maximizer of the residual life is its turning point
    mrl_cp = find_change_points(lambda x: mrl(x, ELECTRODE).value, (1.0, 2000.0))
    assert_allclose(b.b_opt, mrl_cp.locations[0], rtol=1e-3)


def test_burn_in_monotone_decreasing_degenerates_to_zero():
    # nearly pure exponential-power lifetime with increasing hazard: any
    # burn-in wastes life, so the optimum pins to the origin
    p = BfmParams(1e-8, 1.0, 2.0, 0.01)
    b = optimal_burn_in(p, 300.0)
    assert b.b_opt == 0.0
    assert b.at_boundary
    assert_allclose(b.mu_star, mttf(p).value, rtol=1e-9)


def test_burn_in_validation():
    with pytest.raises(ValueError):
        optimal_burn_in(ELECTRODE, 0.0)


# ---------------------------------------------------------------------------
# scaled TTT transform


def test_scaled_ttt_exact_three_point():
    """Hand check for times (1,2,3): phi = (1+2*1, 3+1*2, 6+0)/6."""
    curve = scaled_ttt([3.0, 1.0, 2.0])  # sorting is internal
    assert isinstance(curve, TttCurve)
    u, phi = zip(*curve.points)
    assert_allclose(u, (1.0 / 3.0, 2.0 / 3.0, 1.0))
    assert_allclose(phi, (0.5, 5.0 / 6.0, 1.0))


def test_scaled_ttt_terminates_at_unity():
    rng = np.random.default_rng(5)
    curve = scaled_ttt(rng.exponential(10.0, size=40))
    u, phi = curve.points[-1]
    assert u == 1.0 and abs(phi - 1.0) < 1e-12
    # transform values live on [0, 1]
    assert all(0.0 < q <= 1.0 + 1e-12 for _, q in curve.points)


def test_scaled_ttt_exponential_tracks_diagonal():
    """For exponential data the population TTT transform is the diagonal;
    a 4000-point sample should hug it."""
    rng = np.random.default_rng(12)
    curve = scaled_ttt(rng.exponential(1.0, size=4000))
    u = np.array([q for q, _ in curve.points])
    phi = np.array([q for _, q in curve.points])
    assert float(np.max(np.abs(phi - u))) < 0.05


def test_scaled_ttt_validation():
    with pytest.raises(ValueError):
        scaled_ttt([])
    with pytest.raises(ValueError):
        scaled_ttt([1.0, 0.0])
