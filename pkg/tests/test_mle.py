"""Censored likelihood, analytic score, fitting, and observed information."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bfm.dataio import Dataset, load_bundled
from bfm.distribution import BfmParams, bfm_chf, bfm_log_frf, bfm_sample
from bfm.mle import (
    MleFit,
    SingularInformation,
    bfm_nll,
    bfm_nll_grad,
    fit_mle,
    observed_information,
    wald_intervals,
)
from bfm.models import bfm_model


@pytest.fixture(scope="module")
def electrode_fit():
    return fit_mle(bfm_model(), load_bundled("efst"))


@pytest.fixture(scope="module")
def appliance_fit():
    return fit_mle(bfm_model(), load_bundled("afst"))


# ---------------------------------------------------------------------------
# negative log-likelihood


def test_nll_tiny_dataset_oracle():
    """Three units (failure, unknown-cause failure, censored) at
    (0.01, 0.8, 2.0, 0.004): mpmath 30-digit evaluation of
    sum chf - sum_fail ln frf gives 14.992580570098754."""
    tiny = Dataset(np.array([20.0, 150.0, 300.0]), np.array(["c1", "cu", "cen"]))
    got = bfm_nll(np.array([0.01, 0.8, 2.0, 0.004]), tiny)
    assert_allclose(got, 14.992580570098754, rtol=1e-13)


def test_nll_matches_distribution_layer():
    data = load_bundled("efst")
    p = BfmParams(0.0127, 0.6124, 3.5770, 0.0026)
    direct = float(
        np.sum(bfm_chf(data.times, p))
        - np.sum(bfm_log_frf(data.times[data.is_failure], p))
    )
    assert_allclose(bfm_nll(p.as_array(), data), direct, rtol=1e-13)


def test_nll_cause_labels_never_enter_likelihood():
    """Relabeling failure causes (c1/c2/cu interchangeably) cannot change
    the likelihood; only the failure/censored split matters."""
    times = np.array([5.0, 30.0, 80.0, 200.0])
    a = Dataset(times, np.array(["c1", "c2", "cu", "cen"]))
    b = Dataset(times, np.array(["cu", "c1", "c2", "cen"]))
    q = np.array([0.02, 1.1, 2.0, 0.005])
    assert bfm_nll(q, a) == bfm_nll(q, b)


def test_nll_censoring_drops_rate_term():
    times = np.array([5.0, 30.0, 80.0])
    fail = Dataset(times, np.array(["c1", "c2", "c1"]))
    cens = Dataset(times, np.array(["c1", "c2", "cen"]))
    q = np.array([0.02, 1.1, 2.0, 0.005])
    p = BfmParams.from_array(q)
    gap = bfm_nll(q, cens) - bfm_nll(q, fail)
    assert_allclose(gap, float(bfm_log_frf(80.0, p)), rtol=1e-12)


def test_nll_sentinels():
    data = load_bundled("efst")
    assert bfm_nll(np.array([-1.0, 1.0, 1.0, 1.0]), data) == np.inf
    assert bfm_nll(np.array([np.nan, 1.0, 1.0, 1.0]), data) == np.inf
    # parameters whose cumulative hazard overflows at the largest time
    assert bfm_nll(np.array([1.0, 1.0, 50.0, 1.0]), data) == np.inf


# ---------------------------------------------------------------------------
# analytic score


@pytest.mark.parametrize("name,seed", [("efst", 77), ("afst", 78)])
def test_nll_grad_matches_finite_differences(name, seed):
    """Norm-relative agreement below 1e-6 at 20 random interior points
    (log-uniform within e^(+-0.5) of the fitted optimum)."""
    data = load_bundled(name)
    fit = fit_mle(bfm_model(), data)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        p = fit.params * np.exp(rng.uniform(-0.5, 0.5, 4))
        g = bfm_nll_grad(p, data)
        fd = np.empty(4)
        for i in range(4):
            h = 6e-6 * p[i]
            pp, pm = p.copy(), p.copy()
            pp[i] += h
            pm[i] -= h
            fd[i] = (bfm_nll(pp, data) - bfm_nll(pm, data)) / (2.0 * h)
        rel = np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(fd))
        assert rel < 1e-6


def test_nll_grad_nan_sentinel():
    data = load_bundled("efst")
    g = bfm_nll_grad(np.array([-1.0, 1.0, 1.0, 1.0]), data)
    assert np.all(np.isnan(g))
    # overflow region: gradient unusable -> all-NaN, not a mix
    g2 = bfm_nll_grad(np.array([1.0, 1.0, 50.0, 1.0]), data)
    assert np.all(np.isnan(g2))


# ---------------------------------------------------------------------------
# fitting


def test_fit_electrode_regression(electrode_fit):
    """Frozen optimum of the bundled electrode data (regression anchor)."""
    fit = electrode_fit
    assert isinstance(fit, MleFit)
    assert fit.converged
    assert fit.model_name == "bfm"
    assert_allclose(fit.nll, 274.74765567, rtol=1e-7)
    assert_allclose(
        fit.params,
        [0.01260555, 0.61317616, 3.58435612, 0.00263412],
        rtol=1e-4,
    )
    assert fit.iterations > 100


def test_fit_appliance_regression(appliance_fit):
    fit = appliance_fit
    assert_allclose(fit.nll, 53.69257425, rtol=1e-7)
    assert_allclose(
        fit.params,
        [0.00538287, 4.94723483, 0.47005216, 0.04188247],
        rtol=1e-4,
    )


def test_fit_appliance_interval_anchor(appliance_fit):
    """The 95% interval for the exponential-power rate on the appliance
    data is reported as (0, 0.1319): the lower end clamps at zero because
    the estimate is within two standard errors of the boundary."""
    lo, hi = appliance_fit.aci[3]
    assert lo == 0.0
    assert_allclose(hi, 0.1319, atol=2e-3)


def test_fit_recovers_synthetic_truth():
    truth = BfmParams(0.02, 1.2, 2.5, 0.004)
    draw = bfm_sample(300, truth, seed=31)
    status = np.where(draw.cause == 1, "c1", "c2").astype(object)
    # administrative censoring at a fixed time, as in a planned test
    cutoff = 400.0
    times = np.minimum(draw.time, cutoff)
    status[draw.time > cutoff] = "cen"
    data = Dataset(times, status)
    fit = fit_mle(bfm_model(), data)
    assert fit.converged
    for est, sd, true_val in zip(fit.params, fit.std_devs, truth.as_array()):
        assert abs(est - true_val) < 4.0 * sd


def test_fit_explicit_starts_reach_same_optimum(electrode_fit):
    fit = fit_mle(
        bfm_model(),
        load_bundled("efst"),
        starts=np.array([[0.02, 0.5, 3.0, 0.003], [0.01, 1.0, 2.0, 0.002]]),
    )
    assert_allclose(fit.nll, electrode_fit.nll, atol=1e-5)


def test_fit_rejects_empty_starts():
    with pytest.raises(ValueError):
        fit_mle(bfm_model(), load_bundled("efst"), starts=np.empty((0, 4)))


# ---------------------------------------------------------------------------
# observed information and intervals


class _Quadratic:
    """Stub model with an exactly known Hessian."""

    name = "quadratic"
    param_names = ("a", "b", "c", "d")

    def __init__(self):
        self.center = np.array([1.0, 2.0, 3.0, 4.0])
        self.hess = np.array(
            [
                [4.0, 1.0, 0.0, 0.0],
                [1.0, 3.0, 0.5, 0.0],
                [0.0, 0.5, 2.0, 0.25],
                [0.0, 0.0, 0.25, 1.0],
            ]
        )

    def nll(self, params, data):
        d = np.asarray(params) - self.center
        return 0.5 * float(d @ self.hess @ d)


def test_observed_information_quadratic_exact():
    model = _Quadratic()
    info = observed_information(model, model.center, data=None)
    assert_allclose(info.matrix, model.hess, atol=1e-6)
    assert_allclose(info.cov, np.linalg.inv(model.hess), rtol=1e-5)
    assert_allclose(info.std_devs, np.sqrt(np.diag(np.linalg.inv(model.hess))), rtol=1e-5)
    assert info.condition_number < 100.0


def test_observed_information_flat_raises():
    class Flat:
        name = "flat"
        param_names = ("a", "b")

        def nll(self, params, data):
            return 1.0

    with pytest.raises(SingularInformation) as exc:
        observed_information(Flat(), np.array([1.0, 2.0]), data=None)
    assert exc.value.condition_number > 1e14 or not np.isfinite(
        exc.value.condition_number
    )


def test_electrode_standard_errors(electrode_fit):
    """Frozen asymptotic standard deviations on the electrode data; these
    drive the reported intervals."""
    assert_allclose(
        electrode_fit.std_devs,
        [0.0110, 0.1801, 0.6752, 9.517e-5],
        rtol=2e-3,
    )


def test_wald_intervals_clamp_and_width():
    p = np.array([0.01, 5.0])
    sd = np.array([0.02, 1.0])
    ci = wald_intervals(p, sd)
    assert ci.shape == (2, 2)
    assert ci[0, 0] == 0.0  # 0.01 - 1.96*0.02 < 0 clamps
    assert_allclose(ci[0, 1], 0.01 + 1.96 * 0.02)
    assert_allclose(ci[1], [5.0 - 1.96, 5.0 + 1.96])
    wide = wald_intervals(p, sd, z=3.0)
    assert_allclose(wide[1], [2.0, 8.0])
