"""Numerical search over unbiased bases for the largest binary-state rate.

The objective is S = 8 max_{r != c} |(U^dag J_z U)_{rc}|^2 over unitaries U
whose entries all have modulus 1/sqrt(D) (complex Hadamard matrices, up to
scale).  Candidates are generated by alternating projection between the
unitary group and the fixed-modulus manifold, then improved by two local
moves: a column phase-alignment step retracted through the projection, and
a penalized gradient ascent over all entry phases.  Deterministic warm
starts cover the structured optima: the Fourier matrix, a two-block
Fourier tensor for even D, and the best eigenvalue-permuted Fourier matrix
for odd D.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import minimize

from . import qcore
from .qcore import UnbiasedBasis, jz_values

PROJECTION_TOL = 1e-12
MAX_PROJECTION_ITERS = 3000


@dataclass(frozen=True)
class SearchConfig:
    dim: int
    restarts: int = 24
    iterations: int = 150         # ascent rounds per restart
    tolerance: float = 1e-10      # unbiasedness residual for accepted candidates
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise qcore.DimensionError("dimension must be >= 2")
        if self.tolerance > 1e-8:
            raise ValueError("accepted-candidate tolerance must be <= 1e-8")


@dataclass(frozen=True)
class SearchResult:
    basis: UnbiasedBasis
    S: float
    history: tuple          # incumbent S after each completed restart
    certificate: tuple      # (r, c) of the maximal element

    def recomputed_S(self) -> float:
        w = np.abs(self.basis.matrix.conj().T
                   @ qcore.jz_operator(self.basis.dim).matrix
                   @ self.basis.matrix) ** 2
        w = w.copy()
        np.fill_diagonal(w, 0.0)
        return float(8 * w.max())


def _polar(A: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(A)
    return u @ vh


def project_to_unbiased(U: np.ndarray, iters: int = MAX_PROJECTION_ITERS,
                        tol: float = PROJECTION_TOL):
    """Alternating projection onto unimodular entries and the unitary group.

    Returns (matrix, converged).  Non-convergence rejects the candidate; it
    is not an error.
    """
    U = np.asarray(U, dtype=complex)
    D = U.shape[0]
    target = 1.0 / np.sqrt(D)
    for _ in range(iters):
        phases = U / np.maximum(np.abs(U), 1e-300)
        U = _polar(target * phases)
        if np.max(np.abs(np.abs(U) - target)) < tol:
            return U, True
    return U, False


def _objective(U: np.ndarray, m: np.ndarray):
    X = (U.conj().T * m) @ U
    w = np.abs(X) ** 2
    np.fill_diagonal(w, 0.0)
    rc = np.unravel_index(int(np.argmax(w)), w.shape)
    return float(8 * w[rc]), rc


def _align_ascend(U, m, rng, rounds):
    """Greedy column phase alignment with projection retraction and kicks."""
    D = U.shape[0]
    best, rc = _objective(U, m)
    eta = 0.5
    for _ in range(rounds):
        r, c = rc
        u, v = U[:, r], U[:, c]
        psi = np.angle(np.vdot(u * m, v))
        sgn = np.sign(m)
        target = np.where(sgn != 0, u * np.exp(1j * psi) * sgn, v)
        blend = (1 - eta) * v + eta * target
        U2 = U.copy()
        U2[:, c] = blend / np.abs(blend) / np.sqrt(D)
        U2, ok = project_to_unbiased(U2, iters=600)
        if ok:
            val, rc2 = _objective(U2, m)
            if val > best + 1e-12:
                U, best, rc = U2, val, rc2
                continue
        eta *= 0.75
        if eta < 2e-3:  # stuck: random phase kick, keep only improvements
            eta = 0.5
            kick = np.exp(1j * rng.normal(0.0, 0.15, (D, D)))
            U2, ok = project_to_unbiased(U * kick, iters=600)
            if ok:
                val, rc2 = _objective(U2, m)
                if val > best:
                    U, best, rc = U2, val, rc2
    return U, best


def _phase_gradient(theta, D, m, rc, mu):
    """Negative penalized objective and gradient over entry phases."""
    r, c = rc
    A = np.exp(1j * theta.reshape(D, D)) / np.sqrt(D)
    Y = A.conj().T @ (m[:, None] * A)
    Yrc = Y[r, c]
    g = np.zeros((D, D))
    K = np.conj(A[:, r]) * m * A[:, c]
    g[:, r] += 2 * np.real(np.conj(Yrc) * (-1j) * K)
    g[:, c] += 2 * np.real(np.conj(Yrc) * (1j) * K)
    G = A.conj().T @ A - np.eye(D)
    h = np.real(np.sum(G * np.conj(G)))
    gh = -4 * np.imag(A * (G @ A.conj().T).T)
    return -(np.abs(Yrc) ** 2 - mu * h), -(g - mu * gh).ravel()


def _gradient_refine(U, m):
    D = U.shape[0]
    _, rc = _objective(U, m)
    theta = np.angle(U).ravel()
    for mu in (3.0, 10.0, 30.0, 100.0):
        res = minimize(_phase_gradient, theta, args=(D, m, rc, mu), jac=True,
                       method="L-BFGS-B",
                       options=dict(maxiter=500, ftol=1e-15, gtol=1e-13))
        theta = res.x
    U2, ok = project_to_unbiased(np.exp(1j * theta.reshape(D, D)) / np.sqrt(D))
    if not ok:
        return U, _objective(U, m)[0]
    return U2, _objective(U2, m)[0]


def _best_permuted_fourier(D: int) -> np.ndarray:
    """Best Fourier-class start: permute J_z eigenvalues to maximize a DFT bin.

    Every permuted Fourier basis is reachable as P F; the transformed element
    at column distance k is the k-th DFT coefficient of the permuted
    eigenvalue sequence, so the class optimum is an exact finite search.
    """
    vals = jz_values(D)
    best_amp = -1.0
    best_perm = None
    W = np.exp(2j * np.pi * np.outer(np.arange(D), np.arange(1, D)) / D)
    perms = np.array(list(permutations(range(D))), dtype=np.int64)
    for chunk in np.array_split(perms, max(1, len(perms) // 50000)):
        amp = np.abs(vals[chunk] @ W)
        i = int(np.argmax(amp.max(axis=1)))
        if amp[i].max() > best_amp:
            best_amp = float(amp[i].max())
            best_perm = chunk[i]
    P = np.zeros((D, D))
    P[np.arange(D), best_perm] = 1.0
    return P @ qcore.qft_matrix(D).matrix


def _quadratic_residue_circulant(D: int) -> np.ndarray:
    """Circulant unbiased basis from the two-phase quadratic-residue sequence.

    For prime D = 3 (mod 4) the sequence b_j = 1 on residues and e^{i theta}
    on non-residues with cos theta = (1-D)/(1+D) is bi-unimodular, so its
    circulant is unitary with all entries of modulus 1/sqrt(D) and lies
    outside the Fourier equivalence class.
    """
    theta = np.arccos((1.0 - D) / (1.0 + D))
    residues = {(j * j) % D for j in range(1, D)}
    b = np.array([1.0 + 0j] + [1.0 if j in residues else np.exp(1j * theta)
                               for j in range(1, D)])
    idx = (np.arange(D)[None, :] - np.arange(D)[:, None]) % D
    return b[idx] / np.sqrt(D)


def _best_permuted_basis(D: int, U: np.ndarray) -> np.ndarray:
    """Exact optimum over eigenvalue permutations (row-permuted copies) of U."""
    vals = jz_values(D)
    K = (U.conj()[:, :, None] * U[:, None, :]).reshape(D, D * D)
    perms = np.array(list(permutations(range(D))), dtype=np.int64)
    best_val = -1.0
    best_perm = None
    mask = (~np.eye(D, dtype=bool)).ravel()
    for chunk in np.array_split(perms, max(1, len(perms) // 50000)):
        X = vals[chunk] @ K
        w = np.abs(X[:, mask]) ** 2
        i = int(np.argmax(w.max(axis=1)))
        if w[i].max() > best_val:
            best_val = float(w[i].max())
            best_perm = chunk[i]
    inv = np.argsort(best_perm)
    return U[inv, :]


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % k for k in range(2, int(n**0.5) + 1))


def _warm_starts(D: int) -> list:
    starts = [qcore.qft_matrix(D).matrix]
    if D % 2 == 0:
        f2 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        inner = qcore.qft_matrix(D // 2).matrix if D > 2 else np.ones((1, 1))
        starts.append(np.kron(f2, inner))
    elif D <= 9:
        starts.append(_best_permuted_fourier(D))
        if _is_prime(D) and D % 4 == 3:
            starts.append(_best_permuted_basis(D, _quadratic_residue_circulant(D)))
    return starts


def search(config: SearchConfig) -> SearchResult:
    """Multi-restart search; deterministic given (seed, restarts, iterations)."""
    D = config.dim
    m = jz_values(D)
    rng = np.random.default_rng(config.seed)
    incumbent = None
    incumbent_S = -1.0
    history = []

    candidates = [(U, True) for U in _warm_starts(D)]
    for _ in range(config.restarts):
        z = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
        candidates.append((np.linalg.qr(z)[0], False))

    for U0, is_warm in candidates:
        U, ok = project_to_unbiased(U0)
        if not ok:
            history.append(incumbent_S)
            continue
        if not is_warm:
            U, _ = _align_ascend(U, m, rng, config.iterations)
            U2, val2 = _gradient_refine(U, m)
            if val2 > _objective(U, m)[0]:
                U = U2
        val, rc = _objective(U, m)
        resid = max(
            np.max(np.abs(np.abs(U) - 1 / np.sqrt(D))),
            np.max(np.abs(U.conj().T @ U - np.eye(D))),
        )
        if resid < config.tolerance and val > incumbent_S:
            incumbent_S = val
            incumbent = (U, rc)
        history.append(incumbent_S)

    if incumbent is None:
        raise RuntimeError("no candidate converged to an unbiased basis")
    U, rc = incumbent
    return SearchResult(basis=UnbiasedBasis(U), S=incumbent_S,
                        history=tuple(history), certificate=rc)


def speedup_scaling_table(dims, restarts: int = 24, iterations: int = 150,
                          seed: int = 0) -> list:
    """One row per dimension: search incumbent next to the analytic bounds."""
    from . import feedback

    rows = []
    for D in dims:
        result = search(SearchConfig(dim=D, restarts=restarts,
                                     iterations=iterations, seed=seed))
        bounds = feedback.speedup_bounds(D)
        rows.append({
            "D": D,
            "S_best": result.S,
            "S_lower": bounds["lower"],
            "S_upper_all": bounds["upper_all"],
            "S_qft": bounds["upper_qft"],
        })
    return rows
