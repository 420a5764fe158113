"""Stochastic trajectory integration with in-loop basis feedback.

Two integrators are provided.  The nonlinear one is the plain Euler update
of the conditioned state,

    d rho = 2 g dt D[X] rho + sqrt(2g) dW H[X] rho,

with eigenvalue clipping as positivity repair.  The linear one evolves the
unnormalized state through the exact one-step congruence

    rho' = M rho M^dag,   M = exp(sqrt(2g) dR X - 2 g dt X^2),

which is positive by construction and reduces to the closed-form solution
for commuting measurement; driving it with the physical record and
normalizing on readout reproduces the nonlinear evolution in law.

The record increment is dR = 2 sqrt(2g) <X> dt + dW.  (The drift follows
from the norm martingale of the linear equation; a sqrt(4g) drift would be
inconsistent with the record density having peaks at V = s.)

All observables handled here are diagonal in the measurement basis;
feedback rotates the state instead of the observable.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations as _iter_permutations

import numpy as np

from . import qcore, rng as rngmod
from .qcore import ObservableMatrix, QuditState

PROTOCOLS = (
    "commuting",
    "qft_complementary",
    "mub_complementary",
    "worst_permutation",
    "register_qft",
)

EIGENVALUE_FLOOR = -1e-12


class IntegrationBlowupError(RuntimeError):
    """State repair failed; the step size is too large for this run."""


@dataclass(frozen=True)
class MeasurementModel:
    """Observables measured in parallel channels at a common rate."""

    observables: tuple
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("measurement rate must be positive")
        obs = tuple(self.observables)
        if not obs:
            raise ValueError("at least one observable required")
        dim = obs[0].dim
        for o in obs:
            if o.dim != dim:
                raise qcore.DimensionError("observables must share one dimension")
        object.__setattr__(self, "observables", obs)

    @property
    def dim(self) -> int:
        return self.observables[0].dim

    @property
    def channels(self) -> int:
        return len(self.observables)

    @staticmethod
    def qudit(D: int, gamma: float = 1.0) -> "MeasurementModel":
        return MeasurementModel((qcore.jz_operator(D),), gamma)

    @staticmethod
    def register(n: int, kappa: float = 1.0) -> "MeasurementModel":
        obs = tuple(qcore.register_observable(n, r) for r in range(1, n + 1))
        return MeasurementModel(obs, kappa)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Everything needed to reproduce one ensemble run bit-for-bit."""

    dim: int = 3
    qubits: int = 0  # nonzero selects an n-qubit register (dim = 2^n)
    gamma: float = 1.0
    dt: float = 1e-4
    t_final: float = 2.0
    feedback_interval: float = 0.0  # 0 disables feedback
    protocol: str = "commuting"
    mub_index: int = 1
    permutation_mode: str = "optimal"  # optimal | random (register protocol)
    ensemble_size: int = 100
    master_seed: int = 0
    simulate_linear: bool = False
    record_stride: int = 0  # 0 -> about 2000 recorded points

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.dt <= 0 or self.t_final < self.dt:
            raise ValueError("need 0 < dt <= t_final")
        if self.protocol != "commuting":
            if self.feedback_interval <= 0:
                raise ValueError("feedback protocols need feedback_interval > 0")
            if self.dt > self.feedback_interval + 1e-15:
                raise ValueError("need dt <= feedback_interval")
        if self.protocol == "register_qft" and self.qubits < 1:
            raise ValueError("register protocol needs qubits >= 1")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")

    @property
    def system_dim(self) -> int:
        return 2**self.qubits if self.qubits else self.dim

    def model(self) -> MeasurementModel:
        if self.qubits:
            return MeasurementModel.register(self.qubits, self.gamma)
        return MeasurementModel.qudit(self.dim, self.gamma)

    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def stride(self) -> int:
        if self.record_stride > 0:
            return self.record_stride
        return max(1, self.steps() // 2000)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Time series for one realization (recorded every stride steps)."""

    times: np.ndarray
    dR: np.ndarray        # (samples, channels) step increments
    V: np.ndarray         # scaled integrated record R/(2 sqrt(2g) t)
    impurity: np.ndarray
    log_impurity: np.ndarray


@dataclass(frozen=True)
class EnsembleStats:
    times: np.ndarray
    mean_L: np.ndarray
    mean_log_L: np.ndarray
    stderr_L: np.ndarray
    quantiles: dict
    final_impurities: np.ndarray


def _diag_values(model: MeasurementModel) -> np.ndarray:
    """(channels, D) eigenvalues of the diagonal observables."""
    return np.stack([np.diag(o.matrix).real for o in model.observables])


def generate_record_increment(rho: QuditState, model: MeasurementModel,
                              dt: float, rng: np.random.Generator):
    """One (dR, dW) pair per channel; dR = 2 sqrt(2g) <X> dt + dW."""
    g = model.rate
    dW = np.sqrt(dt) * rngmod.box_muller(rng, model.channels)
    mean_x = np.array([np.trace(o.matrix @ rho.matrix).real for o in model.observables])
    dR = 2 * np.sqrt(2 * g) * mean_x * dt + dW
    return dR, dW


def step_nonlinear(rho: QuditState, model: MeasurementModel, dt: float,
                   noise: np.ndarray) -> QuditState:
    """Euler update of the conditioned state for one step of every channel."""
    g = model.rate
    m = rho.matrix.astype(complex)
    noise = np.atleast_1d(np.asarray(noise, dtype=float))
    if noise.size != model.channels:
        raise ValueError(f"need {model.channels} noise increments, got {noise.size}")
    update = np.zeros_like(m)
    for o, dW in zip(model.observables, noise):  # all channels from the same state
        X = o.matrix
        mean_x = np.trace(X @ m).real
        dissip = X @ m @ X - 0.5 * (X @ X @ m + m @ X @ X)
        innov = X @ m + m @ X - 2 * mean_x * m
        update += 2 * g * dt * dissip + np.sqrt(2 * g) * dW * innov
    m = m + update
    m = (m + m.conj().T) / 2
    m /= np.trace(m).real
    evals = np.linalg.eigvalsh(m)
    if evals.min() < EIGENVALUE_FLOOR:
        evals, evecs = np.linalg.eigh(m)
        evals = np.clip(evals, 0.0, None)
        total = evals.sum()
        if total <= 0:
            raise IntegrationBlowupError("state collapsed during repair; reduce dt")
        m = (evecs * (evals / total)) @ evecs.conj().T
    return QuditState(m)


def step_linear(rho_bar: np.ndarray, model: MeasurementModel, dt: float,
                record: np.ndarray) -> np.ndarray:
    """Positivity-preserving linear update of the unnormalized state.

    ``record`` holds one dR per channel, sampled from the ostensible
    (zero-mean Gaussian) measure or from the physical record; the update is
    agnostic.  Trace is not renormalized.
    """
    g = model.rate
    rho_bar = np.asarray(rho_bar, dtype=complex)
    record = np.atleast_1d(np.asarray(record, dtype=float))
    if record.size != model.channels:
        raise ValueError(f"need {model.channels} record increments, got {record.size}")
    x = _diag_values(model)
    expo = (np.sqrt(2 * g) * record[:, None] * x - 2 * g * dt * x**2).sum(axis=0)
    m = np.exp(expo)
    return m[:, None] * rho_bar * m[None, :]


# --- feedback -------------------------------------------------------------


def _mub_candidate_orders(D: int):
    orders = np.array(list(_iter_permutations(range(D))), dtype=int)
    return orders


class _FeedbackPlan:
    """Precomputed transform and arrangement strategy for one protocol."""

    def __init__(self, config: TrajectoryConfig):
        D = config.system_dim
        self.D = D
        proto = config.protocol
        if proto == "qft_complementary":
            self.T = qcore.qft_matrix(D).matrix
            self.fixed_order = qcore.conjectured_optimal_permutation(D).slot_order()
            self.candidate_orders = None
        elif proto == "worst_permutation":
            self.T = qcore.qft_matrix(D).matrix
            self.fixed_order = qcore.conjectured_worst_permutation(D).slot_order()
            self.candidate_orders = None
        elif proto == "mub_complementary":
            if D != 4:
                raise qcore.DimensionError("mutually unbiased protocol is defined for D=4")
            self.T = qcore.mub_bases_d4()[config.mub_index]
            self.fixed_order = None
            self.candidate_orders = _mub_candidate_orders(D)
            self.weights = _weights_for(self.T.conj().T @ qcore.jz_operator(D).matrix
                                        @ self.T)
        elif proto == "register_qft":
            self.T = qcore.qft_matrix(D).matrix
            if config.permutation_mode == "random":
                self.fixed_order = "random"
                self.candidate_orders = None
            else:
                if config.qubits > 2:
                    raise NotImplementedError(
                        "exhaustive register arrangement is only tractable for"
                        " n <= 2; use permutation_mode='random'"
                    )
                from .feedback import register_transformed_observables
                ws = sum(_weights_for(X) for X in
                         register_transformed_observables(config.qubits))
                self.fixed_order = None
                self.candidate_orders = _mub_candidate_orders(D)
                self.weights = ws
        else:
            raise ValueError(f"no feedback plan for protocol {proto!r}")

    def arrange(self, lam: np.ndarray, gens=None) -> np.ndarray:
        """Map descending spectra (N, D) to arranged diagonals (N, D)."""
        if isinstance(self.fixed_order, str):  # random mode
            out = np.empty_like(lam)
            for i, gen in enumerate(gens):
                out[i] = lam[i, gen.permutation(self.D)]
            return out
        if self.fixed_order is not None:
            return lam[:, self.fixed_order]
        lam_p = lam[:, self.candidate_orders]          # (N, P, D)
        vals = np.einsum("npd,de,npe->np", lam_p, self.weights, lam_p)
        best = vals.argmax(axis=1)
        return lam_p[np.arange(lam.shape[0]), best]


def _weights_for(X: np.ndarray) -> np.ndarray:
    w = np.abs(np.asarray(X)) ** 2
    w = w.copy()
    np.fill_diagonal(w, 0.0)
    return w


def apply_feedback(rho: QuditState, protocol: str, mub_index: int = 1,
                   qubits: int = 0, gamma: float = 1.0):
    """Diagonalize, order, permute, and rotate one state to an unbiased basis.

    Returns (controlled_state, applied_unitary).  After feedback every
    eigenvector of the state has overlap modulus 1/sqrt(D) with every
    measurement basis vector.
    """
    if protocol == "commuting":
        raise ValueError("the commuting protocol applies no feedback")
    cfg = TrajectoryConfig(dim=rho.dim, qubits=qubits, protocol=protocol,
                           mub_index=mub_index, feedback_interval=1.0,
                           dt=1e-4, t_final=1.0, gamma=gamma)
    plan = _FeedbackPlan(cfg)
    lam, vecs = qcore.eigendecompose_descending(rho)
    lam = np.clip(lam, 0.0, None)
    lam /= lam.sum()
    diag = plan.arrange(lam[None, :])[0]
    controlled = (plan.T * diag) @ plan.T.conj().T
    controlled = (controlled + controlled.conj().T) / 2
    # applied unitary: T P V^dag with P realizing the chosen slot order
    if isinstance(plan.fixed_order, np.ndarray):
        slot_order = plan.fixed_order
    else:
        lam_p = lam[plan.candidate_orders]
        vals = np.einsum("pd,de,pe->p", lam_p, plan.weights, lam_p)
        slot_order = plan.candidate_orders[vals.argmax()]
    P = np.zeros((rho.dim, rho.dim))
    P[np.arange(rho.dim), slot_order] = 1.0
    U = plan.T @ P @ vecs.conj().T
    return QuditState(controlled), U


# --- ensemble engine ------------------------------------------------------


def _evolve_chunk(config: TrajectoryConfig, indices: np.ndarray,
                  keep_records: bool):
    """Evolve one block of trajectories; vectorized over the block."""
    model = config.model()
    D = model.dim
    g = model.rate
    dt = config.dt
    nt = config.steps()
    stride = config.stride()
    nrec = nt // stride + 1
    nch = model.channels
    x = _diag_values(model)                       # (C, D)
    N = indices.size

    gens = [rngmod.trajectory_stream(config.master_seed, int(k)) for k in indices]
    noise = np.empty((nt, N, nch))
    for i, gen in enumerate(gens):
        z = rngmod.box_muller(gen, nt * nch)
        noise[:, i, :] = np.sqrt(dt) * z.reshape(nt, nch)

    fb_every = 0
    plan = None
    if config.protocol != "commuting":
        fb_every = int(round(config.feedback_interval / dt))
        plan = _FeedbackPlan(config)

    diagonal_path = config.protocol == "commuting"
    if diagonal_path:
        lam = np.full((N, D), 1.0 / D)
    else:
        rho = np.tile(np.eye(D, dtype=complex) / D, (N, 1, 1))
        drift_mats = [2 * g * dt * (np.outer(xc, xc) - 0.5 * (xc[:, None] ** 2 + xc[None, :] ** 2))
                      for xc in x]
        innov_mats = [xc[:, None] + xc[None, :] for xc in x]

    L_rec = np.empty((nrec, N))
    R_tot = np.zeros((N, nch))
    V_rec = np.zeros((nrec, N, nch)) if keep_records else None
    dR_rec = np.zeros((nrec, N, nch)) if keep_records else None
    L0 = 1.0 - 1.0 / D
    L_rec[0] = L0
    rec_i = 1

    sq2g = np.sqrt(2 * g)
    for k in range(nt):
        if fb_every and k % fb_every == 0:
            evals, evecs = np.linalg.eigh(rho)
            lam_d = np.clip(evals[:, ::-1], 0.0, None)
            lam_d /= lam_d.sum(axis=1, keepdims=True)
            diag = plan.arrange(lam_d, gens)
            rho = np.einsum("ij,nj,kj->nik", plan.T, diag.astype(complex),
                            plan.T.conj())

        if diagonal_path:
            mean_x = lam @ x.T                                     # (N, C)
            dW = noise[k]
            dR = 2 * sq2g * mean_x * dt + dW
            if config.simulate_linear:
                expo = (2 * sq2g * dR[:, :, None] * x[None] - 4 * g * dt * (x**2)[None]).sum(axis=1)
                lam = lam * np.exp(expo)
            else:
                kick = 2 * sq2g * ((x[None] - mean_x[:, :, None]) * dW[:, :, None]).sum(axis=1)
                lam = lam * (1.0 + kick)
                np.clip(lam, 0.0, None, out=lam)
            lam /= lam.sum(axis=1, keepdims=True)
        else:
            diag_rho = np.einsum("nii->ni", rho).real
            mean_x = diag_rho @ x.T                                # (N, C)
            dW = noise[k]
            dR = 2 * sq2g * mean_x * dt + dW
            if config.simulate_linear:
                expo = (sq2g * dR[:, :, None] * x[None] - 2 * g * dt * (x**2)[None]).sum(axis=1)
                m = np.exp(expo)                                   # (N, D)
                rho = m[:, :, None] * rho * m[:, None, :]
                tr = np.einsum("nii->n", rho).real
                rho /= tr[:, None, None]
            else:
                upd = rho.copy()
                for c in range(nch):
                    upd += drift_mats[c][None] * rho
                    upd += sq2g * dW[:, c, None, None] * (
                        innov_mats[c][None] * rho
                        - 2 * mean_x[:, c, None, None] * rho
                    )
                rho = upd
                rho = (rho + rho.conj().transpose(0, 2, 1)) / 2
                tr = np.einsum("nii->n", rho).real
                rho /= tr[:, None, None]
                evals = np.linalg.eigvalsh(rho)
                bad = evals[:, 0] < EIGENVALUE_FLOOR
                if np.any(bad):
                    ev, evec = np.linalg.eigh(rho[bad])
                    ev = np.clip(ev, 0.0, None)
                    tot = ev.sum(axis=1)
                    if np.any(tot <= 0):
                        raise IntegrationBlowupError(
                            "state collapsed during repair; reduce dt")
                    ev /= tot[:, None]
                    rho[bad] = np.einsum("nik,nk,njk->nij", evec, ev, evec.conj())

        R_tot += dR
        if (k + 1) % stride == 0:
            if diagonal_path:
                L = 1.0 - (lam**2).sum(axis=1)
            else:
                L = 1.0 - np.einsum("nij,nji->n", rho, rho).real
            L_rec[rec_i] = np.clip(L, 0.0, None)
            if keep_records:
                t_now = (k + 1) * dt
                V_rec[rec_i] = R_tot / (2 * sq2g * t_now)
                dR_rec[rec_i] = dR
            rec_i += 1

    return L_rec, V_rec, dR_rec


def run_ensemble(config: TrajectoryConfig, keep_records: bool = False,
                 chunk_size: int = 128, threads: int = 1):
    """Run the configured ensemble and aggregate it deterministically.

    Trajectory k always draws from the stream keyed (master_seed, k), so the
    output is identical for any chunking or thread count.  Returns
    (EnsembleStats, records) where records is a list of TrajectoryRecord
    when ``keep_records`` is set (else None).
    """
    nt = config.steps()
    stride = config.stride()
    nrec = nt // stride + 1
    times = np.concatenate([[0.0], (np.arange(1, nrec)) * stride * config.dt])
    N = config.ensemble_size
    nch = config.model().channels

    L_all = np.empty((nrec, N))
    V_all = np.zeros((nrec, N, nch)) if keep_records else None
    dR_all = np.zeros((nrec, N, nch)) if keep_records else None

    blocks = [np.arange(a, min(a + chunk_size, N))
              for a in range(0, N, chunk_size)]

    def work(idx):
        return idx, _evolve_chunk(config, idx, keep_records)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]

    for idx, (L_rec, V_rec, dR_rec) in results:
        L_all[:, idx] = L_rec
        if keep_records:
            V_all[:, idx, :] = V_rec
            dR_all[:, idx, :] = dR_rec

    log_L = np.log10(np.clip(L_all, 1e-320, None))
    stats = EnsembleStats(
        times=times,
        mean_L=L_all.mean(axis=1),
        mean_log_L=log_L.mean(axis=1),
        stderr_L=L_all.std(axis=1, ddof=1) / np.sqrt(N) if N > 1
        else np.zeros(nrec),
        quantiles={q: np.quantile(L_all, q, axis=1)
                   for q in (0.05, 0.25, 0.5, 0.75, 0.95)},
        final_impurities=L_all[-1].copy(),
    )
    records = None
    if keep_records:
        records = [
            TrajectoryRecord(
                times=times,
                dR=dR_all[:, i, :].copy(),
                V=V_all[:, i, :].copy(),
                impurity=L_all[:, i].copy(),
                log_impurity=log_L[:, i].copy(),
            )
            for i in range(N)
        ]
    return stats, records
