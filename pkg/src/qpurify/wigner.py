"""Spin Wigner function on the sphere in equal-area coordinates.

The density matrix is expanded in orthonormal multipole operators

    T_kq = sqrt((2k+1)/D) sum_{m,m'} <J m; k q | J m'> |J m'><J m|,

and the Wigner function is the harmonic sum W = c Sum_kq rho_kq Y_kq with
the constant c = sqrt(D/(4 pi)) fixing the convention Int W dOmega = 1, so
the maximally mixed state is the constant 1/(4 pi).  Grids are sampled in
(phi, z = J cos theta), whose uniform cells carry equal solid angle.

Clebsch-Gordan coefficients are evaluated from the closed factorial sum in
exact rational arithmetic (the square of every coefficient is rational),
cached up to 2J = 40.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import sph_harm_y

from .qcore import DimensionError, QuditState, jz_values

MAX_TWO_J = 40


def _as_half_integer(x) -> Fraction:
    fr = Fraction(x).limit_denominator(2)
    if fr != Fraction(x).limit_denominator(10**6) or fr.denominator not in (1, 2):
        raise ValueError(f"{x} is not a half-integer")
    return fr


@lru_cache(maxsize=200000)
def _cg_cached(j1, m1, j2, m2, J, M):
    # exact Racah sum; arguments are Fractions with denominator 1 or 2
    if m1 + m2 != M:
        return 0.0
    if J < abs(j1 - j2) or J > j1 + j2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(M) > J:
        return 0.0
    if (j1 + j2 + J).denominator != 1:
        return 0.0

    def fact(x: Fraction):
        if x.denominator != 1 or x < 0:
            return None
        return Fraction(factorial(int(x)))

    tri = [fact(j1 + j2 - J), fact(j1 - j2 + J), fact(-j1 + j2 + J),
           fact(J + M), fact(J - M), fact(j1 - m1), fact(j1 + m1),
           fact(j2 - m2), fact(j2 + m2)]
    if any(f is None for f in tri):
        return 0.0
    pref = Fraction(2 * J + 1) * tri[0] * tri[1] * tri[2] / fact(j1 + j2 + J + 1)
    for f in tri[3:]:
        pref *= f
    total = Fraction(0)
    k = 0
    while True:
        args = [Fraction(k), j1 + j2 - J - k, j1 - m1 - k, j2 + m2 - k,
                J - j2 + m1 + k, J - j1 - m2 + k]
        if args[1] < 0 and args[2] < 0 and args[3] < 0:
            break
        facts = [fact(a) for a in args]
        if all(f is not None for f in facts):
            den = Fraction(1)
            for f in facts:
                den *= f
            total += Fraction((-1) ** k) / den
        k += 1
        if k > 4 * MAX_TWO_J:
            break
    if total == 0:
        return 0.0
    value_sq = pref * total * total
    sign = 1.0 if total > 0 else -1.0
    return sign * float(value_sq) ** 0.5


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention.

    Returns 0 when the selection rules fail; raises for arguments that are
    not half-integers.
    """
    args = tuple(_as_half_integer(v) for v in (j1, m1, j2, m2, J, M))
    return _cg_cached(*args)


@lru_cache(maxsize=64)
def _multipole_basis(D: int):
    """Stack of T_kq operators for dimension D, keyed (k, q)."""
    if D < 2:
        raise DimensionError("dimension must be >= 2")
    if D - 1 > MAX_TWO_J:
        raise DimensionError(f"2J = {D - 1} exceeds the cached limit {MAX_TWO_J}")
    J = Fraction(D - 1, 2)
    ms = [J - i for i in range(D)]
    keys = []
    ops = []
    for k in range(D):
        for q in range(-k, k + 1):
            T = np.zeros((D, D), dtype=complex)
            scale = np.sqrt((2 * k + 1) / D)
            for i, mp in enumerate(ms):      # row: m'
                for j, m in enumerate(ms):   # column: m
                    if mp != m + q:
                        continue
                    T[i, j] = scale * _cg_cached(J, m, Fraction(k), Fraction(q), J, mp)
            keys.append((k, q))
            ops.append(T)
    return tuple(keys), np.array(ops)


@dataclass(frozen=True)
class MultipoleDecomposition:
    """Coefficients rho_kq = tr(rho T_kq^dag), Hermitian-symmetric in q."""

    dim: int
    keys: tuple
    coefficients: np.ndarray

    def coefficient(self, k: int, q: int) -> complex:
        return complex(self.coefficients[self.keys.index((k, q))])

    def parseval_purity(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))


def multipoles(rho: QuditState) -> MultipoleDecomposition:
    keys, ops = _multipole_basis(rho.dim)
    # tr(rho T^dag) = sum_ij rho_ij conj(T_ij)
    coeffs = np.einsum("ij,kij->k", rho.matrix, ops.conj())
    return MultipoleDecomposition(rho.dim, keys, coeffs)


@dataclass(frozen=True)
class WignerGrid:
    """W sampled at the centres of an equal-area (phi, J cos theta) grid."""

    phi: np.ndarray
    z: np.ndarray
    values: np.ndarray      # shape (len(z), len(phi))
    convention_constant: float

    def surface_integral(self) -> float:
        """Exact surface integral of the sampled harmonic sum.

        The azimuthal midpoint sum is exact for the band-limited phi
        dependence; along z the remaining profile is a polynomial of degree
        at most D-1, so a Legendre least-squares projection integrates it
        to machine precision.
        """
        J = self.z[-1] + (self.z[1] - self.z[0]) / 2
        dphi = self.phi[1] - self.phi[0]
        x = self.z / J  # cos(theta) cell centres
        col = self.values.sum(axis=1) * dphi
        deg = min(len(x) - 2, max(2, len(x) // 2))
        coeffs = np.polynomial.legendre.legfit(x, col, deg)
        return float(2.0 * coeffs[0])

    def azimuthal_peak(self) -> float:
        """phi of the global maximum."""
        iz, ip = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.phi[ip])


def wigner_grid(rho: QuditState, resolution: int = 128) -> WignerGrid:
    """Evaluate W on a resolution x resolution equal-area grid."""
    if resolution < 32:
        raise ValueError("resolution must be >= 32 per axis")
    D = rho.dim
    J = (D - 1) / 2
    dec = multipoles(rho)
    phi = -np.pi + (np.arange(resolution) + 0.5) * 2 * np.pi / resolution
    zn = -1 + (np.arange(resolution) + 0.5) * 2 / resolution   # cos theta
    theta = np.arccos(zn)
    c = np.sqrt(D / (4 * np.pi))
    W = np.zeros((resolution, resolution), dtype=complex)
    for (k, q), coef in zip(dec.keys, dec.coefficients):
        if abs(coef) < 1e-16:
            continue
        theta_part = sph_harm_y(k, q, theta, 0.0)
        W += coef * np.outer(theta_part, np.exp(1j * q * phi))
    W *= c
    imag = float(np.max(np.abs(W.imag)))
    if imag > 1e-10:
        raise ValueError(f"Wigner values not real: residual {imag}")
    return WignerGrid(phi=phi, z=J * zn, values=W.real.copy(),
                      convention_constant=float(c))


def overlap_from_wigner(rho: QuditState, sigma: QuditState,
                        resolution: int = 128) -> float:
    """Estimate tr(rho sigma) from the phase-space overlap integral.

    The constant is calibrated per (D, resolution) from the maximally mixed
    self-overlap, which absorbs the grid quadrature bias.
    """
    if rho.dim != sigma.dim:
        raise DimensionError("states must share a dimension")
    D = rho.dim
    wa = wigner_grid(rho, resolution)
    wb = wigner_grid(sigma, resolution)
    mixed = np.full((resolution, resolution), 1.0 / (4 * np.pi))
    raw = float((wa.values * wb.values).sum())
    ref = float((mixed * mixed).sum())     # corresponds to tr = 1/D
    return raw / ref / D


def phase_state(D: int, r: int) -> QuditState:
    """Equal-modulus superposition with linear phase ramp phi_r = 2 pi (J-r)/D.

    These are the images of the measurement-basis states under the Fourier
    protocol, up to a rotation about z.
    """
    if not 0 <= r < D:
        raise ValueError(f"label {r} outside 0..{D - 1}")
    J = (D - 1) / 2
    phi_r = 2 * np.pi * (J - r) / D
    ms = jz_values(D)
    psi = np.exp(-1j * ms * phi_r) / np.sqrt(D)
    return QuditState(np.outer(psi, psi.conj()))


def phase_angle(D: int, r: int) -> float:
    J = (D - 1) / 2
    return float(2 * np.pi * (J - r) / D)
