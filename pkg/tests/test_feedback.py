import numpy as np
import pytest

from qpurify import feedback, qcore


def test_dl_general_eigenstate_zero():
    rho = np.diag([0.0, 1.0, 0.0]).astype(complex)
    X = qcore.jz_operator(3).matrix
    det, noise = feedback.dL_general(rho, X)
    assert abs(det) < 1e-14 and abs(noise) < 1e-14


def test_dl_general_unbiased_simplification():
    D = 4
    rng = np.random.default_rng(0)
    lam = rng.dirichlet(np.ones(D))
    rho_eig = np.diag(lam).astype(complex)
    T = qcore.qft_matrix(D).matrix
    Xc = T.conj().T @ qcore.jz_operator(D).matrix @ T  # unbiased w.r.t. the eigenbasis
    det, noise = feedback.dL_general(rho_eig, Xc)
    assert abs(noise) < 1e-13
    assert abs(det - (-8 * np.trace(Xc @ rho_eig @ Xc @ rho_eig).real)) < 1e-13


def test_dl_general_maximally_mixed_rate():
    for D in (2, 3, 6):
        rho = np.eye(D, dtype=complex) / D
        Jz = qcore.jz_operator(D).matrix
        det, _ = feedback.dL_general(rho, Jz)
        oracle = -8 * np.trace(Jz @ Jz).real / D**2
        assert abs(det - oracle) < 1e-13


def test_dl_complementary_d3_closed_form():
    X = qcore.transformed_observable(qcore.qft_matrix(3).matrix,
                                     qcore.jz_operator(3)).matrix
    rng = np.random.default_rng(1)
    for _ in range(20):
        lam = rng.dirichlet(np.ones(3))
        L = 1 - np.sum(lam**2)
        assert abs(feedback.dL_complementary(lam, X) - (-8.0 / 3.0) * L) < 1e-13


def test_dl_complementary_d4_weights():
    X = qcore.transformed_observable(qcore.qft_matrix(4).matrix,
                                     qcore.jz_operator(4)).matrix
    lam = np.array([0.4, 0.3, 0.2, 0.1])
    val = feedback.dL_complementary(lam, X)
    expected = -8 * (lam[0] * lam[1] + 0.5 * lam[0] * lam[2] + 0.5 * lam[1] * lam[3]
                     + lam[0] * lam[3] + lam[2] * lam[3] + lam[1] * lam[2])
    assert abs(val - expected) < 1e-13
    assert abs(feedback.dL_complementary([1, 0, 0, 0], X)) < 1e-14


def test_optimal_permutation_binary_adjacent():
    X = qcore.transformed_observable(qcore.qft_matrix(4).matrix,
                                     qcore.jz_operator(4)).matrix
    perm, _ = feedback.optimal_permutation([0.7, 0.3, 0.0, 0.0], X)
    order = perm.slot_order()
    s0 = int(np.where(order == 0)[0][0])
    s1 = int(np.where(order == 1)[0][0])
    assert min((s0 - s1) % 4, (s1 - s0) % 4) == 1


def test_optimal_permutation_zigzag_matches_exhaustive():
    rng = np.random.default_rng(7)
    for D in (5, 6, 7):
        X = qcore.transformed_observable(qcore.qft_matrix(D).matrix,
                                         qcore.jz_operator(D)).matrix
        for _ in range(100):
            lam = np.sort(rng.dirichlet(np.ones(D)))[::-1]
            _, v_ex = feedback.optimal_permutation(lam, X, mode="exhaustive")
            _, v_zz = feedback.optimal_permutation(lam, X, mode="zigzag")
            assert abs(v_ex - v_zz) < 1e-12


def test_optimal_permutation_guards():
    X = qcore.jz_operator(10).matrix
    with pytest.raises(feedback.CostGuardError):
        feedback.optimal_permutation(np.full(10, 0.1), X, mode="exhaustive")
    with pytest.raises(ValueError):
        feedback.optimal_permutation([0.5, 0.5], np.eye(2), mode="sideways")


def test_speedup_bounds_values():
    b = feedback.speedup_bounds(3)
    assert abs(b["lower"] - 8 / 3) < 1e-12
    assert abs(b["upper_qft"] - 8 / 3) < 1e-12
    assert b["worst_qft"] is None
    b2 = feedback.speedup_bounds(2)
    assert abs(b2["upper_qft"] - 2.0) < 1e-12
    assert b2["worst_qft"] == 2.0
    big = feedback.speedup_bounds(256)
    assert abs(big["upper_qft"] / (2 * 256**2 / np.pi**2) - 1) < 1e-3
    assert big["upper_all"] == 256**2 / 2
    assert big["global_upper"] == 2 * 255**2


@pytest.mark.parametrize("D", range(2, 17))
def test_speedup_from_max_element_qft(D):
    est = feedback.speedup_from_max_element(qcore.qft_matrix(D),
                                            qcore.jz_operator(D))
    assert abs(est.S - feedback.speedup_bounds(D)["upper_qft"]) < 1e-11


def test_speedup_from_max_element_special_cases():
    est = feedback.speedup_from_max_element(
        qcore.UnbiasedBasis(qcore.mub_bases_d4()[1]), qcore.jz_operator(4))
    assert abs(est.S - 8.0) < 1e-12
    # any unbiased basis at D=2 is forced to S = 2
    rng = np.random.default_rng(5)
    for _ in range(5):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        U = qcore.UnbiasedBasis((qcore.qft_matrix(2).matrix * phases))
        assert abs(feedback.speedup_from_max_element(U, qcore.jz_operator(2)).S
                   - 2.0) < 1e-12


def test_mub_rates():
    assert feedback.mub_dL_d4([0.5, 0.0, 0.5, 0.0], 1) == 0.0
    delta = 0.12
    lam = np.array([1 - delta, delta, 0, 0])
    L = 1 - np.sum(lam**2)
    assert abs(feedback.mub_dL_d4(lam, 1) - (-8 * L)) < 1e-13
    with pytest.raises(qcore.DimensionError):
        feedback.mub_dL_d4([0.5, 0.5], 1)
    with pytest.raises(ValueError):
        feedback.mub_dL_d4([0.25] * 4, 0)


def test_fictitious_states():
    for kind in ("flat", "binary"):
        for L in (0.05, 0.3, 0.45):
            st = feedback.FictitiousState.from_impurity(kind, 5, L)
            assert abs(st.impurity() - L) < 1e-12
            assert abs(st.spectrum.sum() - 1) < 1e-12
    flat = feedback.FictitiousState("flat", 4, 0.6)
    assert np.allclose(flat.spectrum, [0.4, 0.2, 0.2, 0.2])
    binary = feedback.FictitiousState("binary", 4, 0.3)
    assert np.allclose(binary.spectrum, [0.7, 0.3, 0, 0])
    with pytest.raises(ValueError):
        feedback.FictitiousState("binary", 4, 0.7)


def test_rate_ordering_flat_optimal_binary():
    rng = np.random.default_rng(3)
    for D in (3, 4, 5, 6, 7):
        X = qcore.transformed_observable(qcore.qft_matrix(D).matrix,
                                         qcore.jz_operator(D)).matrix
        for _ in range(20):
            lam = np.sort(rng.dirichlet(np.ones(D)))[::-1]
            L = 1 - np.sum(lam**2)
            _, dl_opt = feedback.optimal_permutation(lam, X)
            flat = feedback.flat_state_rate(D) * L
            binary = feedback.binary_state_rate(D) * L
            assert flat <= abs(dl_opt) + 1e-12
            assert abs(dl_opt) <= binary + 1e-12


def test_register_rates_and_bounds():
    r2 = feedback.register_rates(2, np.full(4, 0.25))
    assert r2["S_lower"] == pytest.approx(4 / 3)
    assert r2["S_upper"] == 4
    assert feedback.register_rates(3, np.full(8, 1 / 8))["S_lower"] < 1.0
    # n=1 long-time commuting mean reduces to the single-qubit scaling
    fn = feedback.register_rates(1, np.array([0.5, 0.5]))["commuting_mean_LT"]
    t = 2.0
    assert abs(fn(t) - np.pi * np.exp(-4 * t) / (8 * np.sqrt(np.pi * t))) < 1e-15


def test_register_xmax():
    assert abs(feedback.register_xmax(1).S - 2.0) < 1e-12
    for n in range(2, 7):
        s = feedback.register_xmax(n).S
        assert 1.5 <= s <= 2.5
    with pytest.raises(qcore.DimensionError):
        feedback.register_xmax(0)


def test_asymptotic_speedup_d3_trend():
    est = feedback.asymptotic_speedup(3)
    per = np.array(est.per_target)
    assert np.all(np.diff(per) > 0)
    assert np.all(per < 8 / 3)
    assert abs(est.S - 8 / 3) < abs(per[-1] - 8 / 3)


def test_asymptotic_speedup_d4_window():
    est = feedback.asymptotic_speedup(4)
    assert 10 / 3 <= est.S <= 4.0


def test_asymptotic_speedup_unreachable_target():
    ts = np.linspace(0, 0.5, 50)
    curve = (ts, (2 / 3) * np.exp(-8 / 3 * ts))  # only reaches L ~ 0.17
    with pytest.raises(ValueError):
        feedback.asymptotic_speedup(3, curve=curve)


def test_deterministic_flow_matches_d3_law():
    ts, L = feedback.deterministic_feedback_impurity(3, 4.0)
    sel = ts > 0.05
    law = (2 / 3) * np.exp(-8 / 3 * ts[sel])
    assert np.max(np.abs(L[sel] / law - 1)) < 1e-6


def test_quadratic_fit_coefficient():
    dims = [2, 3, 4]
    s = [0.19 * d * d for d in dims]
    assert abs(feedback.quadratic_fit_coefficient(dims, s) - 0.19) < 1e-12


def test_global_bound_samples():
    for D in (2, 4):
        vals = feedback.global_bound_samples(D, 200, seed=1)
        assert vals.max() <= 2 * (D - 1) ** 2 + 1e-9
        assert vals.min() >= 0
