"""Impurity dynamics under complementary-basis feedback and speed-up bounds.

For a state diagonal in a basis unbiased with respect to the measured
observable, one weak-measurement step changes the impurity by

    dL = -8 g dt sum_{r,c} |X_{r,c}|^2 lambda_r lambda_c

with X the observable written in the state eigenbasis.  Everything in this
module is a consequence of that identity: permutation optimization places
the large eigenvalue products on the large |X_{r,c}|^2 weights, fictitious
flat/binary spectra bound the achievable rate, and the asymptotic speed-up
compares the resulting decay against the commuting-measurement benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from . import analytic, qcore
from .qcore import ObservableMatrix, Permutation, UnbiasedBasis, jz_values

EXHAUSTIVE_DIM_LIMIT = 9


class CostGuardError(RuntimeError):
    """Raised when an exhaustive search would exceed the factorial cost guard."""


def dL_general(rho: np.ndarray, X: np.ndarray, gamma: float = 1.0, dt: float = 1.0):
    """Deterministic and noise coefficients of the impurity increment.

    Returns (dt_coefficient, dW_coefficient) such that
    dL = dt_coefficient * dt + dW_coefficient * dW for one weak measurement
    of X at rate gamma.  No unbiasedness is assumed.
    """
    rho = np.asarray(rho, dtype=complex)
    X = np.asarray(X, dtype=complex)
    if rho.shape != X.shape:
        raise qcore.DimensionError(f"shape mismatch {rho.shape} vs {X.shape}")
    rho2 = rho @ rho
    tr_xrxr = np.trace(rho @ X @ rho @ X).real
    tr_xr = np.trace(X @ rho).real
    tr_xr2 = np.trace(X @ rho2).real
    tr_r2 = np.trace(rho2).real
    det = -8 * gamma * (tr_xrxr - 2 * tr_xr * tr_xr2 + tr_xr**2 * tr_r2)
    noise = -4 * np.sqrt(2 * gamma) * (tr_xr2 - tr_xr * tr_r2)
    return det, noise


def dL_complementary(spectrum: np.ndarray, X: np.ndarray, gamma: float = 1.0) -> float:
    """dL/dt for a state diag(spectrum) measured through unbiased-basis X."""
    lam = np.asarray(spectrum, dtype=float)
    X = np.asarray(X, dtype=complex)
    w = np.abs(X) ** 2
    return float(-8 * gamma * lam @ w @ lam)


def _pair_weights(X: np.ndarray) -> np.ndarray:
    w = np.abs(np.asarray(X)) ** 2
    w = w.copy()
    np.fill_diagonal(w, 0.0)
    return w


def optimal_permutation(spectrum: np.ndarray, X: np.ndarray,
                        mode: str = "exhaustive", gamma: float = 1.0,
                        minimize: bool = False):
    """Permutation of the spectrum extremizing |dL| for observable X.

    ``exhaustive`` scans all D! arrangements (guarded at D <= 9), breaking
    ties by lexicographically smallest slot order; ``zigzag`` returns the
    conjectured ring arrangement without searching.  Returns
    (Permutation, dL_per_unit_time).
    """
    lam = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    D = lam.size
    w = _pair_weights(X)
    if mode == "zigzag":
        perm = qcore.conjectured_optimal_permutation(D)
        order = perm.slot_order()
        arranged = lam[order]
        return perm, float(-8 * gamma * arranged @ w @ arranged)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")
    if D > EXHAUSTIVE_DIM_LIMIT:
        raise CostGuardError(f"exhaustive search over {D}! permutations refused")
    best_val = None
    best_order = None
    for order in permutations(range(D)):
        arranged = lam[np.array(order)]
        val = float(arranged @ w @ arranged)
        if best_val is None:
            better = True
        else:
            better = val < best_val if minimize else val > best_val
        if better:
            best_val = val
            best_order = order
    mapping = np.empty(D, dtype=int)
    mapping[np.array(best_order)] = np.arange(D)
    return Permutation(tuple(mapping)), float(-8 * gamma * best_val)


def speedup_bounds(D: int) -> dict:
    """Closed-form asymptotic speed-up bounds for dimension D.

    lower        (2/3)(D+1)  flat-spectrum rate of the Fourier protocol
    upper_qft    4/(1-cos(2 pi/D))  binary spectrum, adjacent placement
    upper_all    D^2/2  over all unbiased bases
    worst_qft    2 for even D (binary pair at ring distance D/2)
    global_upper 2(D-1)^2  over all unitaries
    """
    if D < 2:
        raise qcore.DimensionError(f"dimension must be >= 2, got {D}")
    out = {
        "lower": 2.0 * (D + 1) / 3.0,
        "upper_qft": 4.0 / (1.0 - np.cos(2 * np.pi / D)),
        "upper_all": D * D / 2.0,
        "global_upper": 2.0 * (D - 1) ** 2,
    }
    out["worst_qft"] = 2.0 if D % 2 == 0 else None
    return out


def flat_state_rate(D: int, gamma: float = 1.0) -> float:
    """|dL/dt| / L for the flat fictitious spectrum under the Fourier protocol."""
    return 2.0 * (D + 1) / 3.0 * gamma


def binary_state_rate(D: int, gamma: float = 1.0) -> float:
    """|dL/dt| / L for the binary spectrum with its two entries adjacent."""
    return 4.0 * gamma / (1.0 - np.cos(2 * np.pi / D))


@dataclass(frozen=True)
class FictitiousState:
    """Flat or binary spectrum matched in impurity to a reference state."""

    kind: str
    dim: int
    deficit: float
    spectrum: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.kind not in ("flat", "binary"):
            raise ValueError(f"kind must be 'flat' or 'binary', got {self.kind!r}")
        d, D = self.deficit, self.dim
        if not 0 < d <= 1 - 1 / D:
            raise ValueError(f"deficit {d} outside (0, 1-1/D]")
        if self.kind == "flat":
            spec = np.full(D, d / (D - 1))
            spec[0] = 1 - d
        else:
            if d > 0.5:
                raise ValueError("binary deficit must lie in (0, 1/2]")
            spec = np.zeros(D)
            spec[0], spec[1] = 1 - d, d
        spec.setflags(write=False)
        object.__setattr__(self, "spectrum", spec)

    def impurity(self) -> float:
        return qcore.impurity_of_spectrum(self.spectrum)

    @staticmethod
    def from_impurity(kind: str, D: int, L: float) -> "FictitiousState":
        """Solve the deficit so the fictitious state has impurity L."""
        if not 0 < L <= 1 - 1 / D:
            raise ValueError(f"impurity {L} outside (0, 1-1/D]")
        if kind == "flat":
            # L = 2 d - d^2 D/(D-1); take the root in (0, 1-1/D]
            a = D / (D - 1)
            d = (2 - np.sqrt(4 - 4 * a * L)) / (2 * a)
        elif kind == "binary":
            if L > 0.5:
                raise ValueError("binary spectrum cannot exceed impurity 1/2")
            # L = 2 d (1 - d); root in (0, 1/2]
            d = (1 - np.sqrt(1 - 2 * L)) / 2
        else:
            raise ValueError(f"kind must be 'flat' or 'binary', got {kind!r}")
        return FictitiousState(kind, D, float(d))


@dataclass(frozen=True)
class SpeedupEstimate:
    """Asymptotic speed-up with the method that produced it."""

    S: float
    method: str  # analytic_lower | analytic_upper_qft | max_element | simulation_interpolation | global_upper
    dim: int
    qubits: int | None = None
    per_target: tuple = ()
    source: str = ""

    def __post_init__(self):
        if not self.S > 0:
            raise ValueError("speed-up must be positive")


def speedup_from_max_element(U: UnbiasedBasis, X: ObservableMatrix) -> SpeedupEstimate:
    """Binary-spectrum asymptotic speed-up 8 max_{r!=c} |(U^dag X U)_{rc}|^2."""
    Xb = U.matrix.conj().T @ X.matrix @ U.matrix
    w = _pair_weights(Xb)
    return SpeedupEstimate(S=float(8 * w.max()), method="max_element", dim=X.dim)


def mub_dL_d4(spectrum: np.ndarray, basis_index: int, gamma: float = 1.0) -> float:
    """dL/dt for a D=4 spectrum measured in mutually unbiased basis M_i."""
    lam = np.asarray(spectrum, dtype=float)
    if lam.size != 4:
        raise qcore.DimensionError("mutually unbiased basis rates are defined for D=4")
    if basis_index not in (1, 2, 3, 4):
        raise ValueError("basis index must be in 1..4")
    M = qcore.mub_bases_d4()[basis_index]
    Xb = M.conj().T @ qcore.jz_operator(4).matrix @ M
    return dL_complementary(lam, Xb, gamma)


# --- register of qubits -------------------------------------------------


def register_transformed_observables(n: int) -> list:
    """Fourier images T X^(r) T^dag of the n single-qubit observables."""
    D = 2**n
    T = qcore.qft_matrix(D).matrix
    return [
        qcore.transformed_observable(T, qcore.register_observable(n, r)).matrix
        for r in range(1, n + 1)
    ]


def register_rates(n: int, spectrum: np.ndarray, gamma: float = 1.0) -> dict:
    """Impurity rate and speed-up bounds for an n-qubit register.

    ``dL`` sums the complementary rate over the n measurement channels for
    the given spectrum arranged as-is.  The bounds 2n/(D-1) <= S <= 2n and
    the commuting long-time mean n pi e^{-4 g t}/(8 sqrt(pi g t)) (as a
    callable) come along for plotting.
    """
    if n < 1:
        raise qcore.DimensionError("register needs n >= 1")
    D = 2**n
    lam = np.asarray(spectrum, dtype=float)
    if lam.size != D:
        raise qcore.DimensionError(f"spectrum length {lam.size} != 2^n = {D}")
    xs = register_transformed_observables(n)
    dL = sum(dL_complementary(lam, X, gamma) for X in xs)
    return {
        "dL": dL,
        "S_lower": 2 * n / (D - 1),
        "S_upper": 2 * n,
        "commuting_mean_LT": lambda t: n * np.pi * np.exp(-4 * gamma * t)
        / (8 * np.sqrt(np.pi * gamma * t)),
    }


def register_xmax(n: int) -> SpeedupEstimate:
    """Largest channel-summed weight and the speed-up it implies.

    The two-eigenvalue placement at the arg-max element gives
    dL = -8 g L max_{i != j} sum_r |X^(r)_{ij}|^2, against the commuting
    register benchmark ~ e^{-4 g t}, so S = 2 max.
    """
    if not 1 <= n <= 8:
        raise qcore.DimensionError("register size must be in 1..8")
    xs = register_transformed_observables(n)
    W = sum(_pair_weights(X) for X in xs)
    return SpeedupEstimate(S=float(2 * W.max()), method="max_element",
                           dim=2**n, qubits=n)


# --- asymptotic speed-up estimation --------------------------------------

SPEEDUP_TARGETS = (1e-2, 1e-3, 1e-4)


def _extrapolate(targets, S_values):
    """Linear extrapolation of S against 1/log(1/L) to the L -> 0 intercept."""
    x = 1.0 / np.log(1.0 / np.asarray(targets, dtype=float))
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, np.asarray(S_values, dtype=float), rcond=None)
    return float(coef[0])


def commuting_time_to(L_target: float, D: int, gamma: float = 1.0) -> float:
    """Time for the commuting-measurement mean impurity to reach L_target."""
    f = lambda t: math.log(analytic.mean_impurity(t, D, gamma) / L_target)
    return brentq(f, 1e-3 / gamma, 200.0 / gamma, xtol=1e-10)


def _arranged_weights(D: int) -> np.ndarray:
    """Fourier pair weights re-indexed by descending rank via the zigzag ring."""
    w = _pair_weights(qcore.transformed_observable(
        qcore.qft_matrix(D).matrix, qcore.jz_operator(D)).matrix)
    order = qcore.conjectured_optimal_permutation(D).slot_order()
    slot_of = np.empty(D, dtype=int)
    slot_of[order] = np.arange(D)
    return w[np.ix_(slot_of, slot_of)]


def deterministic_feedback_impurity(D: int, t_max: float, gamma: float = 1.0,
                                    n_samples: int = 4000):
    """Impurity curve of the continuously re-permuted Fourier protocol.

    In the limit of feedback applied after every measurement step the noise
    in the eigenvalues cancels and the spectrum obeys the closed flow

        d lambda_i/dt = 8 g sum_j w_ij lambda_i lambda_j / (lambda_i - lambda_j)

    with w the pair weights of the arranged observable.  The flow is
    integrated from the maximally mixed state (with an infinitesimal split
    to leave the degenerate point); the returned (t, L) curve then yields
    the protocol time to any impurity target without stochastic sampling.
    """
    w = _arranged_weights(D)
    # infinitesimal ordering split; shifts L(0) by O(1e-13) relative
    lam0 = np.full(D, 1.0 / D) * (1 + 1e-6 * np.linspace(1, -1, D))
    lam0 /= lam0.sum()

    def rhs(t, lam):
        lam = np.sort(np.clip(lam, 0.0, None))[::-1]
        diff = lam[:, None] - lam[None, :]
        np.fill_diagonal(diff, 1.0)
        M = w * np.outer(lam, lam) / diff
        np.fill_diagonal(M, 0.0)
        return 8 * gamma * M.sum(axis=1)

    def purified(t, lam):
        lam = np.sort(lam)[::-1]
        return (1 - np.sum(lam**2)) - 3e-6

    purified.terminal = True
    purified.direction = -1
    sol = integrate.solve_ivp(rhs, (0.0, t_max), lam0, method="Radau",
                              rtol=1e-8, atol=1e-11, dense_output=True,
                              events=purified, max_step=0.05)
    t_end = sol.t[-1]
    ts = np.linspace(0.0, t_end, n_samples)
    lam = sol.sol(ts)
    L = 1 - (lam**2).sum(axis=0)
    return ts, np.clip(L, 0.0, None)


def asymptotic_speedup(D: int, gamma: float = 1.0,
                       targets=SPEEDUP_TARGETS,
                       curve=None) -> SpeedupEstimate:
    """Asymptotic speed-up of the Fourier protocol for dimension D.

    ``curve`` may supply a simulated (t, mean_L) pair; otherwise the
    deterministic feedback flow provides the protocol impurity curve.  The
    speed-up at each target impurity is the ratio of the commuting time to
    the protocol time, extrapolated linearly in 1/log(1/L).
    """
    if curve is None:
        horizon = (math.log((1 - 1 / D) / min(targets)) / flat_state_rate(D, gamma)) * 3 + 1
        ts, L = deterministic_feedback_impurity(D, horizon, gamma)
        source = "deterministic-flow"
    else:
        ts, L = curve
        source = "stochastic-ensemble"
    mask = L > 0
    log_l = np.log(L[mask][1:])
    tt = np.asarray(ts)[mask][1:]
    if log_l.min() > math.log(min(targets)):
        raise ValueError(
            f"protocol curve only reaches L={math.exp(log_l.min()):.3g}, "
            f"target {min(targets):g} unreachable"
        )
    per_target = []
    for eps in targets:
        t_comm = commuting_time_to(eps, D, gamma)
        t_fb = float(np.interp(math.log(eps), log_l[::-1], tt[::-1]))
        per_target.append(t_comm / t_fb)
    S_inf = _extrapolate(targets, per_target)
    return SpeedupEstimate(S=S_inf, method="simulation_interpolation", dim=D,
                           per_target=tuple(per_target), source=source)


def quadratic_fit_coefficient(dims, S_values) -> float:
    """Least-squares coefficient c of the pure-quadratic model S = c D^2."""
    d = np.asarray(dims, dtype=float)
    s = np.asarray(S_values, dtype=float)
    return float((s * d**2).sum() / (d**4).sum())


def global_bound_samples(D: int, n_samples: int, seed: int, gamma: float = 1.0) -> np.ndarray:
    """Instantaneous speed-ups 8 |dt-coeff|/(g L) for random (U, binary) pairs.

    Samples Haar unitaries and binary spectra and evaluates the full
    deterministic impurity-rate coefficient (mean terms included; they
    matter once the transformed observable has nonzero diagonal).  Every
    sample satisfies the global ceiling 2(D-1)^2.
    """
    rng = np.random.default_rng(seed)
    Jz = qcore.jz_operator(D).matrix
    out = np.empty(n_samples)
    for k in range(n_samples):
        U = qcore.haar_unitary(D, rng)
        delta = rng.uniform(1e-6, 0.5)
        spec = np.zeros(D)
        spec[0], spec[1] = 1 - delta, delta
        rho = np.diag(spec).astype(complex)
        Xb = U.conj().T @ Jz @ U
        det, _ = dL_general(rho, Xb, gamma)
        L = qcore.impurity_of_spectrum(spec)
        out[k] = abs(det) / (gamma * L)
    return out
