"""Named acceptance checks for the whole toolkit.

Each check returns an AcceptanceResult with the measured values, the
expected window, and a pass flag; the command line runs them through
``qpurify verify`` and the test suite asserts them one by one.  Checks are
deterministic: every stochastic ensemble has a pinned seed.

``commuting_anchor_mean`` carries ``known_discrepancy``: the published
anchor log10 <L> = -1.46 for D=5 at t=2 does not match the quadrature of
the mean-impurity integral (-1.2606 here, confirmed by record-space
quadrature, importance sampling, and direct trajectory simulation).  The
-1.46 value is exactly the D=2 mean impurity at t=2, i.e. the anchor
appears to belong to the qbit curve of the same figure.  The check asserts
the published value as stated and is expected to fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import analytic, basis_search, feedback, qcore, trajectories, wigner

FAST_EXCLUDED = ("quadratic_fit", "basis_search_targets")


@dataclass
class AcceptanceResult:
    check_id: str
    passed: bool
    measured: object
    expected: str
    known_discrepancy: bool = False
    detail: str = ""
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {
            "check": self.check_id,
            "passed": bool(self.passed),
            "measured": self.measured,
            "expected": self.expected,
            "known_discrepancy": self.known_discrepancy,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
        }


def _result(check_id, passed, measured, expected, known=False, detail=""):
    return AcceptanceResult(check_id, bool(passed), measured, expected,
                            known_discrepancy=known, detail=detail)


# --- criterion 1 ----------------------------------------------------------

def check_d3_qft_law() -> AcceptanceResult:
    cfg = trajectories.TrajectoryConfig(
        dim=3, protocol="qft_complementary", dt=1e-4, feedback_interval=1e-3,
        t_final=2.0, ensemble_size=100, master_seed=11, simulate_linear=True,
    )
    stats, _ = trajectories.run_ensemble(cfg)
    law = (2.0 / 3.0) * np.exp(-8.0 / 3.0 * stats.times)
    sel = stats.times >= 0.25
    err = float(np.max(np.abs(stats.mean_L[sel] / law[sel] - 1.0)))
    return _result("d3_qft_law", err <= 0.05, err,
                   "max relative error <= 0.05 vs (2/3) exp(-8 t/3) on [0.25, 2]")


# --- criterion 2 ----------------------------------------------------------

def check_d3_bound_coincidence() -> AcceptanceResult:
    b = feedback.speedup_bounds(3)
    diff = abs(b["lower"] - b["upper_qft"])
    off = max(abs(b["lower"] - 8.0 / 3.0), abs(b["upper_qft"] - 8.0 / 3.0))
    ok = diff <= 1e-12 and off <= 1e-12
    return _result("d3_bound_coincidence", ok,
                   {"lower": b["lower"], "upper_qft": b["upper_qft"]},
                   "(2/3)(D+1) = 4/(1-cos(2 pi/3)) = 8/3 to 1e-12")


# --- criterion 3 ----------------------------------------------------------

def check_commuting_anchor_mean() -> AcceptanceResult:
    val = float(np.log10(analytic.mean_impurity(2.0, 5)))
    ok = abs(val - (-1.46)) <= 0.02
    return _result(
        "commuting_anchor_mean", ok, val, "log10 <L>(D=5, t=2) = -1.46 +- 0.02",
        known=True,
        detail="quadrature gives -1.2606; the published -1.46 equals the D=2 "
               "value log10(0.034299) and appears misattributed; see ledger",
    )


def check_commuting_anchor_mean_log() -> AcceptanceResult:
    val = float(analytic.mean_log_impurity(2.0, 5))
    return _result("commuting_anchor_mean_log", abs(val - (-2.41)) <= 0.02, val,
                   "<log10 L>(D=5, t=2) = -2.41 +- 0.02")


def check_commuting_anchor_quantile() -> AcceptanceResult:
    dist = analytic.log_impurity_distribution(2.0, 5)
    val = dist.quantile(1.0 / 5.0)
    ok = abs(val - (-3.1736)) <= 0.01
    return _result("commuting_anchor_quantile", ok, val,
                   "1/D quantile of log10 L at -3.1736 +- 0.01")


# --- criterion 4 ----------------------------------------------------------

def check_record_fwhm() -> AcceptanceResult:
    measured = analytic.fwhm_central_peak(4.0, 5)
    formula = 0.83 / np.sqrt(4.0)
    ok = abs(measured - 0.418) <= 0.005 and abs(formula - 0.415) <= 5e-4
    return _result("record_fwhm", ok, {"measured": measured, "formula": formula},
                   "central peak FWHM 0.418 +- 0.005; 0.83/sqrt(g t) = 0.415")


# --- criterion 5 ----------------------------------------------------------

def check_trajectory_spread() -> AcceptanceResult:
    t_final = 5.0
    cfg = trajectories.TrajectoryConfig(
        dim=5, protocol="commuting", dt=1e-4, t_final=t_final,
        ensemble_size=512, master_seed=21, simulate_linear=True,
    )
    stats, _ = trajectories.run_ensemble(cfg)
    finals = stats.final_impurities
    max_l = float(finals.max())
    pseudo = analytic.trajectory_bound("pseudo_lower", t_final, 5)
    likely = analytic.trajectory_bound("physical_likely", t_final, 5)
    near_pseudo = int(np.sum(np.abs(finals / pseudo - 1.0) <= 0.10))
    frac_purer = float(np.mean(finals < likely))
    ok = (max_l <= 0.5 + 0.02) and near_pseudo >= 1 and abs(frac_purer - 0.2) <= 0.05
    return _result(
        "trajectory_spread", ok,
        {"max_L": max_l, "near_pseudo_lower": near_pseudo, "fraction_purer": frac_purer},
        "max L <= 0.52; >= 1 trajectory within 10% of the pseudo lower bound; "
        "fraction purer than the edge-record bound = 0.2 +- 0.05",
    )


# --- criterion 6 ----------------------------------------------------------

def check_two_eig_ordering() -> AcceptanceResult:
    worst_gap = -np.inf
    gap_at_4 = {}
    ordered = True
    for D in (3, 5, 7):
        for t in (0.25, 0.5, 1.0, 2.0, 4.0):
            full = analytic.mean_impurity(t, D)
            two = analytic.mean_impurity_two_eig(t, D)
            ordered &= two <= full * (1 + 1e-12)
            if t == 4.0:
                gap_at_4[D] = (full - two) / full
        worst_gap = max(worst_gap, gap_at_4[D])
    ok = ordered and worst_gap <= 0.05
    return _result("two_eig_ordering", ok,
                   {"relative_gap_at_t4": gap_at_4},
                   "<L2> <= <L> everywhere; relative gap <= 5% at t = 4")


# --- criterion 7 ----------------------------------------------------------

def check_qft_identities() -> AcceptanceResult:
    worst_sum = 0.0
    worst_max = 0.0
    for D in range(2, 17):
        X = qcore.transformed_observable(
            qcore.qft_matrix(D).matrix, qcore.jz_operator(D)).matrix
        w = np.abs(X) ** 2
        col = float(np.sum(w[:, 1]) - w[1, 1])
        worst_sum = max(worst_sum, abs(col - (D * D - 1) / 12.0))
        off = w.copy()
        np.fill_diagonal(off, 0.0)
        worst_max = max(worst_max, abs(8 * off.max()
                                       - 4.0 / (1.0 - np.cos(2 * np.pi / D))))
    ok = worst_sum <= 1e-12 and worst_max <= 1e-11
    return _result("qft_identities", ok,
                   {"column_sum_err": worst_sum, "max_element_err": worst_max},
                   "sum_r |X_r1|^2 = (D^2-1)/12 and 8 max|X|^2 = 4/(1-cos(2 pi/D)), D in 2..16")


# --- criterion 8 ----------------------------------------------------------

def check_d4_speedup_window() -> AcceptanceResult:
    cfg = trajectories.TrajectoryConfig(
        dim=4, protocol="qft_complementary", dt=1e-4, feedback_interval=1e-3,
        t_final=3.0, ensemble_size=100, master_seed=12, simulate_linear=True,
    )
    stats, _ = trajectories.run_ensemble(cfg)
    est = feedback.asymptotic_speedup(4, curve=(stats.times, stats.mean_L))
    ok = 10.0 / 3.0 <= est.S <= 4.0
    return _result("d4_speedup_window", ok,
                   {"S": est.S, "per_target": list(est.per_target)},
                   "simulated asymptotic S in [10/3, 4] at feedback interval 1e-3")


def check_worst_permutation_s2() -> AcceptanceResult:
    worst = 0.0
    for D in (4, 6, 8, 10):
        X = qcore.transformed_observable(
            qcore.qft_matrix(D).matrix, qcore.jz_operator(D)).matrix
        s_val = 8 * abs(X[0, D // 2]) ** 2
        worst = max(worst, abs(s_val - 2.0))
    return _result("worst_permutation_s2", worst <= 1e-12, worst,
                   "binary pair at ring distance D/2 gives S = 2 exactly, even D")


# --- criterion 9 ----------------------------------------------------------

def check_quadratic_fit() -> AcceptanceResult:
    dims = range(3, 11)
    S = [feedback.asymptotic_speedup(D).S for D in dims]
    c = feedback.quadratic_fit_coefficient(list(dims), S)
    ok = abs(c - 0.19) <= 0.02
    return _result("quadratic_fit", ok, {"coefficient": c, "S": dict(zip(dims, S))},
                   "pure-quadratic fit of asymptotic S over D in 3..10: 0.19 +- 0.02")


# --- criterion 10 ---------------------------------------------------------

MUB_WEIGHT_PATTERN = {
    (0, 1): 2.0, (2, 3): 2.0,
    (1, 2): 0.5, (0, 3): 0.5,
    (0, 2): 0.0, (1, 3): 0.0,
}


def _pattern_matrix() -> np.ndarray:
    w = np.zeros((4, 4))
    for (r, c), val in MUB_WEIGHT_PATTERN.items():
        w[r, c] = w[c, r] = val
    return w


def mub_weight_errors(bases=None) -> dict:
    """Worst deviation of the doubled pair weights from the exact pattern.

    The canonical pattern applies to the stored column labels of M_1, M_2
    and M_4 directly; M_3's columns are listed in a cyclically relabeled
    order, so every basis is compared against the pattern minimized over
    column relabelings (an exact match must exist for each).
    """
    from itertools import permutations as _perms

    if bases is None:
        bases = qcore.mub_bases_d4()
    jz = qcore.jz_operator(4).matrix
    pattern = _pattern_matrix()
    errs = {}
    for i in (1, 2, 3, 4):
        M = bases[i]
        X = M.conj().T @ jz @ M
        w = 2 * np.abs(X) ** 2
        np.fill_diagonal(w, 0.0)
        direct = float(np.max(np.abs(w - pattern)))
        relabeled = min(
            float(np.max(np.abs(w[np.ix_(p, p)] - pattern)))
            for p in map(list, _perms(range(4)))
        )
        errs[i] = direct if i in (1, 2, 4) else relabeled
    return errs


def check_mub_d4() -> AcceptanceResult:
    errs = mub_weight_errors()
    weight_err = max(errs.values())
    s_binary = feedback.speedup_from_max_element(
        qcore.UnbiasedBasis(qcore.mub_bases_d4()[1]), qcore.jz_operator(4)).S
    stall = abs(feedback.mub_dL_d4(np.array([0.5, 0.0, 0.5, 0.0]), 1))
    ok = weight_err <= 1e-14 and abs(s_binary - 8.0) <= 1e-12 and stall <= 1e-14
    return _result("mub_d4", ok,
                   {"weight_err": weight_err, "S_binary": s_binary, "stalled_dL": stall},
                   "pair weights (2, 1/2, 0) exact (M_3 up to column relabeling); "
                   "binary S = 8 = D^2/2; spectrum (1/2, 0, 1/2, 0) gives dL = 0")


# --- criterion 11 ---------------------------------------------------------

def check_basis_search_targets() -> AcceptanceResult:
    measured = {}
    ok = True
    for D in (2, 4, 6, 8, 10):
        res = basis_search.search(basis_search.SearchConfig(dim=D, restarts=2,
                                                            iterations=40, seed=5))
        measured[D] = res.S
        ok &= abs(res.S - D * D / 2.0) <= 0.01 * (D * D / 2.0)
    for D in (3, 5, 7, 9):
        restarts = 16 if D == 9 else 4
        res = basis_search.search(basis_search.SearchConfig(dim=D, restarts=restarts,
                                                            iterations=120, seed=2))
        measured[D] = res.S
        ok &= res.S >= 0.98 * ((D - 1) ** 2 / 2.0)
    return _result("basis_search_targets", ok, measured,
                   "even D: S = D^2/2 within 1%; odd D: S >= (D-1)^2/2 - 2%")


# --- criterion 12 ---------------------------------------------------------

def check_register_bounds() -> AcceptanceResult:
    exact = True
    for n in range(1, 7):
        D = 2**n
        rates = feedback.register_rates(n, np.full(D, 1.0 / D))
        exact &= rates["S_lower"] == 2 * n / (D - 1) and rates["S_upper"] == 2 * n
    xvals = {n: feedback.register_xmax(n).S for n in range(2, 7)}
    window = all(1.5 <= v <= 2.5 for v in xvals.values())
    return _result("register_bounds", exact and window,
                   {"xmax_S": xvals},
                   "bounds 2n/(2^n - 1) <= S <= 2n exact; X_max-implied S in [1.5, 2.5]")


def check_register_n2_between_curves() -> AcceptanceResult:
    cfg = trajectories.TrajectoryConfig(
        qubits=2, protocol="register_qft", dt=1e-4, feedback_interval=1e-3,
        t_final=1.2, ensemble_size=64, master_seed=31, simulate_linear=True,
    )
    stats, _ = trajectories.run_ensemble(cfg)
    L0 = 0.75
    sel = stats.times >= 0.2
    t = stats.times[sel]
    mean = stats.mean_L[sel]
    upper = L0 * np.exp(-16.0 * t / 3.0)   # slow-rate bound on the impurity
    lower = L0 * np.exp(-16.0 * t)         # fast-rate bound
    ok = bool(np.all(mean <= upper * 1.05) and np.all(mean >= lower))
    worst_upper = float(np.max(mean / upper))
    return _result("register_n2_between_curves", ok,
                   {"max_ratio_to_upper": worst_upper},
                   "n=2 simulated mean L between exp(-8 k n t/(D-1)) and exp(-8 k n t) curves")


# --- criterion 13 ---------------------------------------------------------

def check_global_bound() -> AcceptanceResult:
    worst = {}
    ok = True
    for D in range(2, 9):
        samples = feedback.global_bound_samples(D, 1000, seed=100 + D)
        worst[D] = float(samples.max())
        ok &= worst[D] <= 2.0 * (D - 1) ** 2 + 1e-9
    return _result("global_bound", ok, worst,
                   "1000 random binary-state/unitary samples per D stay below 2(D-1)^2")


# --- criterion 14 ---------------------------------------------------------

def check_wigner() -> AcceptanceResult:
    mixed = wigner.wigner_grid(qcore.maximally_mixed(6), resolution=64)
    const_err = float(np.max(np.abs(mixed.values - 1.0 / (4 * np.pi))))

    rng = np.random.default_rng(9)
    parseval_err = 0.0
    for D in (2, 4, 10):
        for _ in range(20):
            rho = qcore.random_density(D, rng)
            dec = wigner.multipoles(rho)
            parseval_err = max(parseval_err,
                               abs(dec.parseval_purity() - (1 - rho.impurity())))

    peak_ok = True
    worst_offset = 0.0
    grid_res = 128
    cell = 2 * np.pi / grid_res
    for r in (0, 3, 7):
        grid = wigner.wigner_grid(wigner.phase_state(10, r), resolution=grid_res)
        offset = abs(grid.azimuthal_peak() - wigner.phase_angle(10, r))
        worst_offset = max(worst_offset, offset)
        peak_ok &= offset <= cell
    ok = const_err <= 1e-10 and parseval_err <= 1e-12 and peak_ok
    return _result("wigner", ok,
                   {"mixed_const_err": const_err, "parseval_err": parseval_err,
                    "peak_offset": worst_offset, "cell": cell},
                   "mixed state constant to 1e-10; Parseval to 1e-12; "
                   "phase-state peak within one grid cell (D=10)")


ALL_CHECKS = (
    check_d3_qft_law,
    check_d3_bound_coincidence,
    check_commuting_anchor_mean,
    check_commuting_anchor_mean_log,
    check_commuting_anchor_quantile,
    check_record_fwhm,
    check_trajectory_spread,
    check_two_eig_ordering,
    check_qft_identities,
    check_d4_speedup_window,
    check_worst_permutation_s2,
    check_quadratic_fit,
    check_mub_d4,
    check_basis_search_targets,
    check_register_bounds,
    check_register_n2_between_curves,
    check_global_bound,
    check_wigner,
)


def run_suite(fast: bool = False, only: str | None = None) -> list:
    """Run the acceptance checks, timing each; ``fast`` skips the slow pair."""
    results = []
    for fn in ALL_CHECKS:
        name = fn.__name__.removeprefix("check_")
        if fast and name in FAST_EXCLUDED:
            continue
        if only and only != name:
            continue
        t0 = time.perf_counter()
        res = fn()
        res.seconds = time.perf_counter() - t0
        results.append(res)
    return results
