import numpy as np
import pytest

from qpurify import qcore, wigner


def test_cg_singlet():
    assert abs(wigner.clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0, 0) - 1 / np.sqrt(2)) < 1e-15


def test_cg_selection_rules():
    assert wigner.clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0
    assert wigner.clebsch_gordan(1, 1, 1, 1, 2, 0) == 0.0
    with pytest.raises(ValueError):
        wigner.clebsch_gordan(0.3, 0.3, 1, 0, 1, 0.3)


def test_cg_orthonormality():
    for J, M in ((2, 0), (1, 1), (0, 0)):
        total = 0.0
        for m1 in (-1, 0, 1):
            m2 = M - m1
            if abs(m2) <= 1:
                total += wigner.clebsch_gordan(1, m1, 1, m2, J, M) ** 2
        assert abs(total - 1.0) < 1e-14


def test_cg_against_sympy_oracle():
    sympy = pytest.importorskip("sympy")
    from sympy import Rational
    from sympy.physics.quantum.cg import CG

    rng = np.random.default_rng(0)
    for _ in range(30):
        j1 = rng.choice([0.5, 1.0, 1.5, 2.0])
        j2 = rng.choice([0.5, 1.0, 1.5, 2.0])
        m1 = -j1 + rng.integers(0, int(2 * j1) + 1)
        m2 = -j2 + rng.integers(0, int(2 * j2) + 1)
        J = abs(j1 - j2) + rng.integers(0, int(j1 + j2 - abs(j1 - j2)) + 1)
        M = m1 + m2
        if abs(M) > J:
            continue
        mine = wigner.clebsch_gordan(j1, m1, j2, m2, J, M)
        ref = float(CG(Rational(j1), Rational(m1), Rational(j2), Rational(m2),
                       Rational(J), Rational(M)).doit())
        assert abs(mine - ref) < 1e-12


def test_multipoles_maximally_mixed():
    dec = wigner.multipoles(qcore.maximally_mixed(5))
    for (k, q), c in zip(dec.keys, dec.coefficients):
        if k == 0:
            assert abs(c - 1 / np.sqrt(5)) < 1e-14
        else:
            assert abs(c) < 1e-14


def test_multipoles_dicke_state_axial():
    D = 4
    m = np.zeros((D, D), dtype=complex)
    m[0, 0] = 1.0  # |J, J>
    dec = wigner.multipoles(qcore.QuditState(m))
    for (k, q), c in zip(dec.keys, dec.coefficients):
        if q != 0:
            assert abs(c) < 1e-14


@pytest.mark.parametrize("D", [2, 4, 10])
def test_multipoles_parseval(D):
    rng = np.random.default_rng(D)
    for _ in range(100):
        rho = qcore.random_density(D, rng)
        dec = wigner.multipoles(rho)
        assert abs(dec.parseval_purity() - (1 - rho.impurity())) < 1e-12


def test_wigner_grid_maximally_mixed():
    grid = wigner.wigner_grid(qcore.maximally_mixed(4), resolution=64)
    assert np.max(np.abs(grid.values - 1 / (4 * np.pi))) < 1e-12
    assert abs(grid.surface_integral() - 1.0) < 1e-9


@pytest.mark.parametrize("D", [3, 4, 10])
def test_wigner_grid_surface_integral(D):
    rng = np.random.default_rng(D + 1)
    for _ in range(3):
        rho = qcore.random_density(D, rng)
        grid = wigner.wigner_grid(rho, resolution=128)
        assert abs(grid.surface_integral() - 1.0) < 1e-6


def test_wigner_grid_resolution_guard():
    with pytest.raises(ValueError):
        wigner.wigner_grid(qcore.maximally_mixed(3), resolution=16)


def test_phase_state_peak_positions():
    D = 10
    res = 128
    cell = 2 * np.pi / res
    for r in (0, 4, 9):
        grid = wigner.wigner_grid(wigner.phase_state(D, r), resolution=res)
        assert abs(grid.azimuthal_peak() - wigner.phase_angle(D, r)) <= cell


def test_rotation_about_z_shifts_phi():
    D = 6
    res = 128
    cell = 2 * np.pi / res
    rho = wigner.phase_state(D, 2)
    alpha = 0.9
    Jz = qcore.jz_operator(D).matrix
    U = np.diag(np.exp(-1j * np.diag(Jz).real * alpha))
    rotated = qcore.QuditState(U @ rho.matrix @ U.conj().T)
    g0 = wigner.wigner_grid(rho, resolution=res)
    g1 = wigner.wigner_grid(rotated, resolution=res)
    shift = g1.azimuthal_peak() - g0.azimuthal_peak()
    shift = (shift + np.pi) % (2 * np.pi) - np.pi
    assert abs(shift - alpha) <= cell + 1e-12


def test_mub_columns_show_deeper_negativity():
    # middle columns of the first mutually unbiased basis dig deeper below zero
    mins = []
    for c in range(4):
        col = qcore.mub_bases_d4()[1][:, c]
        rho = qcore.QuditState(np.outer(col, col.conj()))
        mins.append(wigner.wigner_grid(rho, resolution=64).values.min())
    assert min(mins[1], mins[2]) < min(mins[0], mins[3]) - 1e-3


def test_overlap_from_wigner():
    mixed = qcore.maximally_mixed(4)
    assert abs(wigner.overlap_from_wigner(mixed, mixed, 128) - 0.25) < 1e-4
    phase = wigner.phase_state(10, 3)
    assert abs(wigner.overlap_from_wigner(phase, phase, 256) - 1.0) < 1e-3
    up = np.zeros((4, 4), dtype=complex)
    up[0, 0] = 1
    dn = np.zeros((4, 4), dtype=complex)
    dn[3, 3] = 1
    val = wigner.overlap_from_wigner(qcore.QuditState(up), qcore.QuditState(dn), 128)
    assert abs(val) < 1e-3
    with pytest.raises(qcore.DimensionError):
        wigner.overlap_from_wigner(mixed, qcore.maximally_mixed(3))
