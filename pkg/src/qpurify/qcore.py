"""Operators and states for continuous angular-momentum measurement.

Everything here is a plain numpy array wrapped in a thin validating
container.  The measurement basis is the eigenbasis of J_z, ordered so
that basis index ``i`` carries the eigenvalue ``J - i`` (descending,
J = (D-1)/2).  All constructors symmetrize Hermitian output as
(M + M^dag)/2 to suppress floating-point drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
UNITARITY_TOL = 1e-10
UNBIASEDNESS_TOL = 1e-10


class DimensionError(ValueError):
    """Raised for invalid or mismatched Hilbert-space dimensions."""


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


@dataclass(frozen=True)
class QuditState:
    """Density matrix of a D-dimensional system.

    Invariants checked on construction: Hermitian (1e-12), unit trace
    (1e-10) and eigenvalues >= -1e-10.
    """

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if m.shape[0] < 2:
            raise DimensionError("dimension must be >= 2")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        m = _symmetrize(m)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace must be 1, got {tr}")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -POSITIVITY_TOL:
            raise ValueError(f"state not positive, min eigenvalue {evals.min()}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", m.shape[0])

    def impurity(self) -> float:
        """1 - tr(rho^2); zero for pure states, 1 - 1/D when maximally mixed."""
        return float(1.0 - np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True)
class ObservableMatrix:
    """Hermitian observable in dimensionless angular-momentum units."""

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"observable must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("observable is not Hermitian")
        m = _symmetrize(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", m.shape[0])


@dataclass(frozen=True)
class UnbiasedBasis:
    """Unitary whose columns all have entries of modulus 1/sqrt(D)."""

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"basis must be square, got {m.shape}")
        d = m.shape[0]
        if np.max(np.abs(m @ m.conj().T - np.eye(d))) > UNITARITY_TOL:
            raise ValueError("basis is not unitary")
        if np.max(np.abs(np.abs(m) - 1 / np.sqrt(d))) > UNBIASEDNESS_TOL:
            raise ValueError("basis is not unbiased: some |entry| != 1/sqrt(D)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", d)


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..D-1}; ``mapping[i]`` is the basis slot that receives
    the eigenvalue of descending rank ``i``.  This rank->slot convention is
    used everywhere in the package."""

    mapping: tuple
    dim: int = field(init=False)

    def __post_init__(self):
        mp = tuple(int(i) for i in self.mapping)
        d = len(mp)
        if sorted(mp) != list(range(d)):
            raise ValueError(f"mapping {mp} is not a bijection on 0..{d - 1}")
        object.__setattr__(self, "mapping", mp)
        object.__setattr__(self, "dim", d)

    def slot_order(self) -> np.ndarray:
        """Inverse view: ``slot_order[s]`` is the rank placed at slot ``s``."""
        out = np.empty(self.dim, dtype=int)
        out[np.array(self.mapping)] = np.arange(self.dim)
        return out


def jz_values(D: int) -> np.ndarray:
    """Eigenvalues J, J-1, ..., -J with J = (D-1)/2, in basis order."""
    if D < 2:
        raise DimensionError(f"dimension must be >= 2, got {D}")
    J = (D - 1) / 2
    return J - np.arange(D)


def jz_operator(D: int) -> ObservableMatrix:
    """Angular-momentum z component, diag(J, J-1, ..., -J)."""
    return ObservableMatrix(np.diag(jz_values(D)).astype(complex))


def qft_matrix(D: int) -> UnbiasedBasis:
    """Discrete Fourier unitary T_rc = exp(2 pi i r c / D)/sqrt(D)."""
    if D < 2:
        raise DimensionError(f"dimension must be >= 2, got {D}")
    k = np.arange(D)
    return UnbiasedBasis(np.exp(2j * np.pi * np.outer(k, k) / D) / np.sqrt(D))


def mub_bases_d4() -> list:
    """The five mutually unbiased bases of a D=4 system.

    M_0 is the logical (identity) basis; M_1..M_4 have exact entries in
    {0, +-1, +-i}/2 and are stored verbatim rather than regenerated, so
    downstream weight checks are bit-exact.  Columns are the basis vectors.
    """
    i = 1j
    m0 = np.eye(4, dtype=complex)
    m1 = np.array([[1, 1, 1, 1],
                   [1, 1, -1, -1],
                   [1, -1, -1, 1],
                   [1, -1, 1, -1]], dtype=complex).T / 2
    m2 = np.array([[1, -1, -i, -i],
                   [1, -1, i, i],
                   [1, 1, i, -i],
                   [1, 1, -i, i]], dtype=complex).T / 2
    m3 = np.array([[1, -i, 1, i],
                   [1, i, 1, -i],
                   [1, -i, -1, -i],
                   [1, i, -1, i]], dtype=complex).T / 2
    m4 = np.array([[1, -i, -i, -1],
                   [1, -i, i, 1],
                   [1, i, i, -1],
                   [1, i, -i, 1]], dtype=complex).T / 2
    out = [m0]
    for m in (m1, m2, m3, m4):
        m = m.copy()
        m.setflags(write=False)
        out.append(m)
    return out


def permutation_matrix(p: Permutation) -> np.ndarray:
    """0/1 unitary P with P[p.mapping[i], i] = 1."""
    P = np.zeros((p.dim, p.dim))
    P[np.array(p.mapping), np.arange(p.dim)] = 1.0
    return P


def conjectured_optimal_permutation(D: int) -> Permutation:
    """Zigzag ring arrangement: slot order of ranks is 0, 1, 3, 5, ..., 6, 4, 2.

    Even ranks descend along one side of the ring and odd ranks ascend along
    the other, so consecutive ranks sit at adjacent slots where the
    Fourier-transformed observable has its largest weights.
    """
    if D < 2:
        raise DimensionError(f"dimension must be >= 2, got {D}")
    order = [0] + list(range(1, D, 2)) + list(range(2, D, 2))[::-1]
    mapping = np.empty(D, dtype=int)
    mapping[np.array(order)] = np.arange(D)
    return Permutation(tuple(mapping))


def conjectured_worst_permutation(D: int) -> Permutation:
    """Arrangement placing rank 1 at ring distance floor(D/2) from rank 0.

    For D=4 this is the slot order (rank0, rank3, rank1, rank2).  Beyond the
    top-pair separation the fill order is heuristic: remaining slots take the
    remaining ranks in descending order.
    """
    if D < 2:
        raise DimensionError(f"dimension must be >= 2, got {D}")
    order = np.full(D, -1, dtype=int)
    order[0] = 0
    order[D // 2] = 1
    rest = [r for r in range(D - 1, 1, -1)]
    slots = [s for s in range(D) if order[s] < 0]
    for s, r in zip(slots, rest):
        order[s] = r
    mapping = np.empty(D, dtype=int)
    mapping[order] = np.arange(D)
    return Permutation(tuple(mapping))


def transformed_observable(U: np.ndarray, X: ObservableMatrix) -> ObservableMatrix:
    """U X U^dag, symmetrized."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (X.dim, X.dim):
        raise DimensionError(f"unitary shape {U.shape} does not match dim {X.dim}")
    return ObservableMatrix(_symmetrize(U @ X.matrix @ U.conj().T))


def register_observable(n: int, r: int) -> ObservableMatrix:
    """sigma_z acting on qubit r of an n-qubit register (1-based slot)."""
    if n < 1:
        raise DimensionError(f"register needs n >= 1 qubits, got {n}")
    if not 1 <= r <= n:
        raise DimensionError(f"qubit index {r} out of range 1..{n}")
    diag = np.ones(1)
    for q in range(1, n + 1):
        diag = np.kron(diag, np.array([1.0, -1.0]) if q == r else np.ones(2))
    return ObservableMatrix(np.diag(diag).astype(complex))


def eigendecompose_descending(rho: QuditState):
    """Eigenvalues sorted descending with column-aligned eigenvectors.

    Ties keep the ascending-solver order reversed, which is deterministic,
    so degenerate spectra give reproducible feedback decisions.
    """
    evals, evecs = np.linalg.eigh(rho.matrix)
    return evals[::-1].copy(), evecs[:, ::-1].copy()


def impurity_of_spectrum(lam: np.ndarray) -> float:
    lam = np.asarray(lam, dtype=float)
    return float(1.0 - np.sum(lam * lam))


def maximally_mixed(D: int) -> QuditState:
    if D < 2:
        raise DimensionError(f"dimension must be >= 2, got {D}")
    return QuditState(np.eye(D, dtype=complex) / D)


def haar_unitary(D: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre sample."""
    z = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(D: int, rng: np.random.Generator, rank: int | None = None) -> QuditState:
    """Random full-rank (or fixed-rank) density matrix for tests and sampling."""
    k = D if rank is None else rank
    a = rng.normal(size=(D, k)) + 1j * rng.normal(size=(D, k))
    m = a @ a.conj().T
    return QuditState(m / np.trace(m).real)
