import numpy as np
import pytest
from scipy import integrate

from qpurify import analytic

# frozen regression values, computed once from quadrature at first build
QBIT_MEAN_IMPURITY_T2 = 0.03429870439536941
MEAN_IMPURITY_D5_T2_LOG10 = -1.2606032608364035


def test_unnormalized_state_short_time():
    entries = analytic.unnormalized_state(0.0, 1e-12, 5)
    assert np.allclose(entries, 0.2, atol=1e-9)


def test_unnormalized_state_qbit_ratio():
    for R, t in ((0.7, 1.3), (-1.1, 0.4)):
        e = analytic.unnormalized_state(R, t, 2)
        assert abs(e[0] / e[1] - np.exp(2 * np.sqrt(2) * R)) < 1e-12


def test_normalization_sum_forms_agree():
    assert abs(analytic.normalization(1.0, 2.0, 5, symmetric=True)
               - analytic.normalization(1.0, 2.0, 5, symmetric=False)) < 1e-14
    rng = np.random.default_rng(2)
    for _ in range(20):
        R, t, D = rng.normal(0, 2), rng.uniform(0.1, 4), int(rng.integers(2, 9))
        a = analytic.normalization(R, t, D, symmetric=True)
        b = analytic.normalization(R, t, D, symmetric=False)
        assert abs(a - b) <= 1e-13 * max(abs(a), 1.0)


@pytest.mark.parametrize("D", [2, 3, 5])
@pytest.mark.parametrize("t", [0.5, 4.0])
def test_record_density_normalized(D, t):
    val, _ = integrate.quad(lambda v: analytic.record_density_V(v, t, D),
                            -np.inf, np.inf, limit=400)
    assert abs(val - 1.0) < 1e-8


def test_record_density_symmetric():
    v = np.linspace(0.1, 3.0, 40)
    for D, t in ((3, 0.7), (6, 2.0)):
        assert np.allclose(analytic.record_density_V(v, t, D),
                           analytic.record_density_V(-v, t, D), atol=1e-14)


def test_fwhm_measured_and_formula():
    measured = analytic.fwhm_central_peak(4.0, 5)
    assert abs(measured - 0.418) <= 0.005
    assert abs(0.83 / np.sqrt(4.0) - 0.415) < 5e-4


def test_kernel_limits():
    # midpoint records tend to 1/2 at long times
    assert abs(analytic.impurity_kernel(0.5, 12.0, 5) - 0.5) < 1e-6
    # inner-peak records scale as exp(-4 g t): two equal neighbours
    t = 6.0
    val = analytic.impurity_kernel(1.0, t, 5)
    assert abs(val / (4 * np.exp(-4 * t)) - 1.0) < 1e-3
    # everything is maximally mixed at t -> 0
    for v in (-1.3, 0.0, 2.4):
        assert abs(analytic.impurity_kernel(v, 1e-9, 5) - 0.8) < 1e-6


def test_kernel_short_time_bound_ordering():
    # the innermost midpoint bound is the most impure at short times
    assert analytic.impurity_kernel(0.5, 0.2, 5) > analytic.impurity_kernel(1.5, 0.2, 5)


def test_mean_impurity_regression_d5():
    assert abs(np.log10(analytic.mean_impurity(2.0, 5))
               - MEAN_IMPURITY_D5_T2_LOG10) < 1e-9


def test_mean_impurity_d2_against_independent_oracle():
    # oracle: direct record-space integral of the conditioned impurity
    def oracle(t):
        def integrand(R):
            ratio = np.exp(-2 * np.sqrt(2) * R)  # a_-  / a_+
            p = 1.0 / (1.0 + ratio)
            L = 2 * p * (1 - p)
            norm = (np.exp(-t + np.sqrt(2) * R) + np.exp(-t - np.sqrt(2) * R)) / 2
            ost = np.exp(-R * R / (2 * t)) / np.sqrt(2 * np.pi * t)
            return L * norm * ost
        span = np.sqrt(2) * t + 14 * np.sqrt(t)  # record mixture support
        val, _ = integrate.quad(integrand, -span, span, limit=400)
        return val

    for t in (0.5, 1.0, 2.0):
        assert abs(analytic.mean_impurity(t, 2) - oracle(t)) < 1e-8


def test_mean_impurity_short_time_limit():
    for D in (2, 4, 7):
        assert abs(analytic.mean_impurity(1e-6, D) - (1 - 1 / D)) < 1e-4


@pytest.mark.parametrize("D", [2, 3, 5])
def test_mean_impurity_monotone(D):
    ts = np.geomspace(0.01, 10.0, 25)
    vals = [analytic.mean_impurity(t, D) for t in ts]
    assert np.all(np.diff(vals) <= 1e-12)


def test_two_eig_lower_bounds_mean():
    for D in (3, 5, 7):
        for t in (0.25, 1.0, 4.0):
            assert (analytic.mean_impurity_two_eig(t, D)
                    <= analytic.mean_impurity(t, D) * (1 + 1e-12))


def test_two_eig_d2_equals_qbit():
    for t in (0.3, 1.0, 2.7):
        assert abs(analytic.mean_impurity_two_eig(t, 2)
                   - analytic.qbit_mean_impurity(t)) < 1e-14


def test_two_eig_long_time_reduces_to_qbit_form():
    t = 3.0
    d2 = analytic.mean_impurity_two_eig(t, 2, long_time=True)
    qb = analytic.qbit_mean_impurity(t, long_time=True)
    assert abs(d2 - qb) < 1e-15


def test_two_eig_close_to_mean_at_t4():
    full = analytic.mean_impurity(4.0, 3)
    two = analytic.mean_impurity_two_eig(4.0, 3)
    assert abs(full - two) / full < 0.05


def test_qbit_regression_and_lower_bound():
    assert abs(analytic.qbit_mean_impurity(2.0) - QBIT_MEAN_IMPURITY_T2) < 1e-10
    for D in (3, 5):
        for t in (0.5, 1.0, 2.0):
            assert analytic.qbit_mean_impurity(t) <= analytic.mean_impurity(t, D)


def test_qbit_long_time_ratio_tends_to_one():
    ratios = [analytic.qbit_mean_impurity(t, long_time=True)
              / analytic.qbit_mean_impurity(t) for t in (6.0, 12.0, 25.0)]
    assert ratios[0] > ratios[1] > ratios[2] > 1.0
    assert abs(ratios[-1] - 1) < 0.025


def test_trajectory_bounds():
    assert abs(analytic.trajectory_bound("upper", 10.0, 5) - 0.5) < 1e-6
    ratios = [analytic.trajectory_bound("pseudo_lower", t, 5)
              / analytic.trajectory_bound("physical_likely", t, 5)
              for t in (4.0, 5.0, 6.0)]
    assert np.allclose(ratios, ratios[0], rtol=1e-2)
    assert abs(ratios[-1] - 2.0) < 1e-2
    with pytest.raises(ValueError):
        analytic.trajectory_bound("median", 1.0, 5)


def test_log_impurity_distribution_d5():
    dist = analytic.log_impurity_distribution(2.0, 5)
    assert abs(dist.total_mass() - 1.0) < 1e-4
    assert abs(dist.mean() - analytic.mean_log_impurity(2.0, 5)) < 5e-3
    assert abs(dist.quantile(0.2) - (-3.1736)) < 0.01
    # sharp features at the midpoint and inner-peak records
    for target in (-0.301, -2.87):
        window = (dist.ell > target - 0.05) & (dist.ell < target + 0.05)
        inside = dist.density[window].max()
        nearby = (dist.ell > target - 0.4) & (dist.ell < target + 0.4) & ~window
        assert inside > dist.density[nearby].max()


def test_log_impurity_distribution_d2_mass():
    dist = analytic.log_impurity_distribution(2.0, 2)
    assert abs(dist.total_mass() - 1.0) < 1e-4


def test_commuting_solution_wrapper():
    sol = analytic.CommutingSolution(5)
    assert abs(sol.norm(1.0, 2.0) - analytic.normalization(1.0, 2.0, 5)) < 1e-15
    assert abs(sol.mean_impurity(2.0) - analytic.mean_impurity(2.0, 5)) < 1e-15
    assert sol.kernel(0.5, 2.0) == analytic.impurity_kernel(0.5, 2.0, 5)


def test_time_validation():
    with pytest.raises(ValueError):
        analytic.mean_impurity(0.0, 3)
    with pytest.raises(ValueError):
        analytic.record_density_V(0.0, -1.0, 3)
