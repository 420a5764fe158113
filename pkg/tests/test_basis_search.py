import numpy as np
import pytest

from qpurify import basis_search as bs
from qpurify import feedback, qcore
from qpurify.qcore import jz_values


def test_projection_fixed_point():
    U = qcore.qft_matrix(5).matrix
    out, ok = bs.project_to_unbiased(U)
    assert ok
    assert np.max(np.abs(out - U)) < 1e-12


def test_projection_d2_random():
    rng = np.random.default_rng(1)
    for _ in range(5):
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        out, ok = bs.project_to_unbiased(np.linalg.qr(z)[0])
        assert ok
        S, _ = bs._objective(out, jz_values(2))
        assert abs(S - 2.0) < 1e-10  # every 2-dim unbiased basis gives S = 2


def test_search_deterministic_and_monotone():
    cfg = bs.SearchConfig(dim=4, restarts=4, iterations=40, seed=13)
    a = bs.search(cfg)
    b = bs.search(cfg)
    assert a.S == b.S
    assert np.array_equal(a.basis.matrix, b.basis.matrix)
    inc = np.array(a.history)
    assert np.all(np.diff(inc) >= 0)


def test_search_d4_reaches_ceiling():
    res = bs.search(bs.SearchConfig(dim=4, restarts=3, iterations=40, seed=2))
    assert abs(res.S - 8.0) < 1e-9
    assert abs(res.recomputed_S() - res.S) < 1e-10


def test_search_result_invariants():
    res = bs.search(bs.SearchConfig(dim=5, restarts=3, iterations=60, seed=4))
    U = res.basis.matrix
    assert np.max(np.abs(np.abs(U) - 1 / np.sqrt(5))) < 1e-10
    assert np.max(np.abs(U.conj().T @ U - np.eye(5))) < 1e-10
    r, c = res.certificate
    X = U.conj().T @ qcore.jz_operator(5).matrix @ U
    assert abs(8 * abs(X[r, c]) ** 2 - res.S) < 1e-10


def test_triangle_inequality_ceiling():
    for D in (3, 4, 6):
        res = bs.search(bs.SearchConfig(dim=D, restarts=2, iterations=30, seed=3))
        ceiling = np.sum(np.abs(jz_values(D))) / D
        X = res.basis.matrix.conj().T @ qcore.jz_operator(D).matrix @ res.basis.matrix
        off = np.abs(X - np.diag(np.diag(X)))
        assert off.max() <= ceiling + 1e-10
        if D % 2 == 0:
            assert res.S <= D * D / 2 + 1e-9


def test_warm_start_quadratic_residue_circulant():
    U = bs._quadratic_residue_circulant(7)
    assert np.max(np.abs(np.abs(U) - 1 / np.sqrt(7))) < 1e-14
    assert np.max(np.abs(U.conj().T @ U - np.eye(7))) < 1e-12
    best = bs._best_permuted_basis(7, U)
    S, _ = bs._objective(best, jz_values(7))
    assert S > 19.0  # beats both the Fourier class and the 18 target


def test_scaling_table_ordering():
    rows = bs.speedup_scaling_table([2, 3, 4], restarts=2, iterations=30, seed=1)
    for row in rows:
        assert row["S_lower"] <= row["S_qft"] + 1e-9
        assert row["S_qft"] <= row["S_best"] + 1e-9
        assert row["S_best"] <= row["S_upper_all"] + 1e-9


def test_config_validation():
    with pytest.raises(ValueError):
        bs.SearchConfig(dim=4, tolerance=1e-6)
    with pytest.raises(qcore.DimensionError):
        bs.SearchConfig(dim=1)
