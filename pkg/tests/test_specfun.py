"""Quadrature, log-gamma, integro-exponential and guarded-series kernels."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special as sc

from bfm.specfun import (
    QuadratureError,
    QuadratureResult,
    SeriesResult,
    gen_integro_exponential,
    guarded_alternating_sum,
    integrate_semiinf,
    log_gamma,
)


# ---------------------------------------------------------------------------
# log_gamma


def test_log_gamma_factorials():
    # Gamma(n) = (n-1)! at integer arguments
    assert_allclose(log_gamma(1.0), 0.0, atol=1e-15)
    assert_allclose(log_gamma(2.0), 0.0, atol=1e-15)
    assert_allclose(log_gamma(5.0), math.log(24.0), rtol=1e-15)
    assert_allclose(log_gamma(11.0), math.log(3628800.0), rtol=1e-15)


def test_log_gamma_half_integer():
    # Gamma(1/2) = sqrt(pi)
    assert_allclose(log_gamma(0.5), 0.5 * math.log(math.pi), rtol=1e-15)


def test_log_gamma_recurrence():
    """lgamma(z+1) = lgamma(z) + ln z across several magnitudes."""
    for z in (0.03, 0.7, 1.9, 12.5, 300.0):
        assert_allclose(log_gamma(z + 1.0), log_gamma(z) + math.log(z), rtol=1e-13)


@pytest.mark.parametrize("bad", [0.0, -1.0, -0.5])
def test_log_gamma_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        log_gamma(bad)


# ---------------------------------------------------------------------------
# integrate_semiinf


def test_semiinf_exponential():
    """Integral of e^-x over [0, inf) is exactly 1."""
    res = integrate_semiinf(lambda x: math.exp(-x), 0.0)
    assert isinstance(res, QuadratureResult)
    assert_allclose(res.value, 1.0, rtol=1e-10)
    assert res.error < 1e-8
    assert res.evaluations > 0


def test_semiinf_shifted_gamma_tail():
    """Integral of x e^-x over [2, inf) = 3 e^-2 (incomplete-gamma identity)."""
    res = integrate_semiinf(lambda x: x * math.exp(-x), 2.0)
    assert_allclose(res.value, 3.0 * math.exp(-2.0), rtol=1e-10)


def test_semiinf_gaussian():
    # int_0^inf exp(-x^2) dx = sqrt(pi)/2
    res = integrate_semiinf(lambda x: math.exp(-x * x), 0.0)
    assert_allclose(res.value, math.sqrt(math.pi) / 2.0, rtol=1e-10)


def test_semiinf_rejects_infinite_lower():
    with pytest.raises(ValueError):
        integrate_semiinf(lambda x: 0.0, math.inf)


def test_semiinf_nonconvergent_raises_with_partials():
    """A non-decaying oscillatory integrand must fail loudly, not silently.

    The partial estimate and error are attached to the exception so callers
    can degrade gracefully.
    """
    with pytest.raises(QuadratureError) as exc:
        integrate_semiinf(math.sin, 0.0)
    assert math.isfinite(exc.value.value)
    assert exc.value.error > 0.0


# ---------------------------------------------------------------------------
# gen_integro_exponential
#
# Oracle values below were generated with mpmath at 30 significant digits by
# quadrature of int_lower^inf (ln y)^j y^-1 e^-y dy after the substitution
# v = ln y (tanh-sinh rule, independent of the QUADPACK route used by the
# implementation), then frozen to 17 digits.

MPMATH_J = {
    (0.0, 1.0): 0.21938393439552027,
    (1.0, 1.0): 0.097843197216670179,
    (2.5, 1.0): 0.067150015538555371,
    (-0.5, 1.0): 0.52660036654402026,
    (-0.9, 1.0): 3.3817009357732913,
    (0.7, 2.5): 0.027670886411154766,
    (-0.3, 1.0): 0.34486780045787035,
    (1.0, 5.0): 0.0020207318458091423,
    (0.25, 1.0): 0.16623795174656866,
}


@pytest.mark.parametrize("args,expected", sorted(MPMATH_J.items()))
def test_integro_exponential_against_mpmath(args, expected):
    assert_allclose(gen_integro_exponential(*args), expected, rtol=1e-9)


def test_integro_exponential_j0_is_e1():
    """At j = 0 the integral collapses to the exponential integral E1(lower)."""
    for lower in (1.0, 2.0, 5.0):
        assert_allclose(
            gen_integro_exponential(0.0, lower), sc.exp1(lower), rtol=1e-9
        )


def test_integro_exponential_monotone_in_lower():
    # shrinking the integration range can only shrink a positive integral
    vals = [gen_integro_exponential(1.0, lo) for lo in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b > 0.0 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("j,lower", [(-1.0, 1.0), (-1.5, 1.0), (0.5, 0.5)])
def test_integro_exponential_domain_errors(j, lower):
    with pytest.raises(ValueError):
        gen_integro_exponential(j, lower)


# ---------------------------------------------------------------------------
# guarded_alternating_sum


def test_guarded_sum_geometric():
    """Alternating geometric series sums to 2/3 and reports convergence."""
    res = guarded_alternating_sum(lambda l: (-0.5) ** l)
    assert isinstance(res, SeriesResult)
    assert res.converged
    assert_allclose(res.value, 2.0 / 3.0, rtol=1e-9)
    assert res.last_term_magnitude <= 1e-10 * max(1.0, abs(res.value))


def test_guarded_sum_terminating_series():
    # a term that is exactly zero satisfies any tolerance immediately
    res = guarded_alternating_sum(lambda l: 3.0 if l == 0 else 0.0)
    assert res.converged and res.value == 3.0 and res.terms_used == 2


def test_guarded_sum_detects_factorial_divergence():
    """(-1)^l l! grows from the first step; the guard trips after a streak
    of three increases and rolls the sum back to the smallest term seen."""
    res = guarded_alternating_sum(lambda l: (-1.0) ** l * math.factorial(l))
    assert not res.converged
    assert res.terms_used == 5
    # smallest magnitude (1.0) was last seen at l = 1, where the partial
    # sum is 1 - 1 = 0
    assert res.value == 0.0
    assert res.last_term_magnitude == 1.0


def test_guarded_sum_budget_exhaustion():
    res = guarded_alternating_sum(lambda l: 1.0 / (l + 1), budget=50)
    assert not res.converged
    assert res.terms_used == 50


def test_guarded_sum_nonfinite_term():
    res = guarded_alternating_sum(
        lambda l: math.inf if l == 3 else (-0.5) ** l
    )
    assert not res.converged
    assert res.terms_used == 4
    # rollback keeps the sum through the smallest finite term (0.25 at l=2)
    assert_allclose(res.value, 0.75, rtol=1e-15)


def test_guarded_sum_optimal_truncation_accuracy():
    """Euler's asymptotic series for int_0^inf e^-t/(1+xt) dt at x = 0.2.

    The series sum_l (-1)^l l! x^l diverges, but optimal truncation is
    accurate to roughly the smallest term (~0.02 here).  The closed form of
    the integral is e^(1/x) E1(1/x) / x.
    """
    x = 0.2
    res = guarded_alternating_sum(lambda l: (-1.0) ** l * math.factorial(l) * x**l)
    truth = math.exp(1.0 / x) * sc.exp1(1.0 / x) / x
    assert not res.converged
    assert abs(res.value - truth) < 0.05
