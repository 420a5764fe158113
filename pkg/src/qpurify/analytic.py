"""Exact linear-trajectory machinery for commuting J_z measurement.

Starting from the maximally mixed state, the unnormalized solution of the
linear measurement equation is diagonal with entries

    a_s(R, t) = exp(-4 g s^2 t) exp(2 sqrt(2 g) s R) / D,   s = J..-J,

where R is the integrated record.  In the scaled record V = R/(2 sqrt(2g) t)
the record density is a D-peak Gaussian mixture

    P(V, t) = (1/D) sqrt(4 g t / pi) sum_s exp(-4 g t (V - s)^2)

and the impurity of the conditioned state for a given V is

    Lambda(V, t) = 1 - sum_s p_s^2,   p_s = a_s / sum a.

Lambda is evaluated here in a max-exponent-factored pair form,
sum_{s != s'} p_s p_s', which avoids the cancellation of 1 - (1 - eps).
The ensemble mean impurity is the quadrature of Lambda against the record
density, split at the eigenvalue midpoints where the integrand peaks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import erf

from .qcore import jz_values

__all__ = [
    "CommutingSolution",
    "ImpurityDistribution",
    "unnormalized_state",
    "normalization",
    "record_density_V",
    "impurity_kernel",
    "mean_impurity",
    "mean_log_impurity",
    "mean_impurity_two_eig",
    "qbit_mean_impurity",
    "trajectory_bound",
    "log_impurity_distribution",
    "fwhm_central_peak",
]


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach its error target."""


def _log_entries_V(V, t, D, gamma):
    """Log of the unnormalized diagonal entries as a function of V (no 1/D)."""
    s = jz_values(D)
    V = np.asarray(V, dtype=float)
    return -4 * gamma * s**2 * t + 8 * gamma * s * t * V[..., None]


def unnormalized_state(R: float, t: float, D: int, gamma: float = 1.0) -> np.ndarray:
    """Diagonal entries exp(-4 g s^2 t) exp(2 sqrt(2g) s R)/D, s = J..-J."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = jz_values(D)
    return np.exp(-4 * gamma * s**2 * t + 2 * np.sqrt(2 * gamma) * s * R) / D


def normalization(R: float, t: float, D: int, gamma: float = 1.0,
                  symmetric: bool = True) -> float:
    """Trace of the unnormalized solution.

    ``symmetric`` sums over s = -J..J; otherwise over m = 0..2J with
    s = J - m.  Both orderings agree to machine precision and exist only to
    cross-check each other.
    """
    s = jz_values(D)
    if not symmetric:
        s = (D - 1) / 2 - np.arange(D)  # m-indexed order
    return float(np.sum(np.exp(-4 * gamma * s**2 * t + 2 * np.sqrt(2 * gamma) * s * R)) / D)


def record_density_V(V, t: float, D: int, gamma: float = 1.0):
    """Probability density of the scaled record V = R/(2 sqrt(2g) t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = jz_values(D)
    V = np.asarray(V, dtype=float)
    out = (np.sqrt(4 * gamma * t / np.pi) / D) * np.exp(
        -4 * gamma * t * (V[..., None] - s) ** 2
    ).sum(axis=-1)
    return out if out.ndim else float(out)


def _record_mass(a, b, t: float, D: int, gamma: float):
    """Exact integral of record_density_V over [a, b] via the error function.

    ``a`` and ``b`` may be arrays of interval endpoints.
    """
    s = jz_values(D)
    w = np.sqrt(4 * gamma * t)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    out = np.sum(erf(w * (b - s)) - erf(w * (a - s)), axis=-1) / (2 * D)
    return out if out.ndim else float(out)


def impurity_kernel(V, t: float, D: int, gamma: float = 1.0):
    """Impurity of the conditioned state for scaled record V, in [0, 1-1/D]."""
    if t <= 0:
        raise ValueError("t must be positive")
    e = _log_entries_V(V, t, D, gamma)
    m = e.max(axis=-1, keepdims=True)
    b = np.exp(e - m)
    z = b.sum(axis=-1)
    # pair sum over s != s' stays accurate when one weight dominates
    tot = (b.sum(axis=-1) ** 2 - (b**2).sum(axis=-1))
    out = tot / z**2
    return out if out.ndim else float(out)


def _midpoints(D: int) -> np.ndarray:
    s = jz_values(D)
    return (s[:-1] + s[1:]) / 2


def _region_edges(t: float, D: int, gamma: float) -> np.ndarray:
    """Quadrature panel edges: eigenvalues and midpoints, plus truncated tails."""
    s = jz_values(D)
    J = (D - 1) / 2
    tail = J + 10.0 / np.sqrt(4 * gamma * t)
    inner = np.sort(np.concatenate([s, _midpoints(D)]))
    return np.concatenate([[-tail], inner, [tail]])


def _integrate_with_density(f, t: float, D: int, gamma: float,
                            epsabs: float = 1e-13, epsrel: float = 1e-11) -> float:
    edges = _region_edges(t, D, gamma)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(
            lambda v: f(v) * record_density_V(v, t, D, gamma),
            a, b, limit=300, epsabs=epsabs, epsrel=epsrel,
        )
        if not np.isfinite(val):
            raise QuadratureError(f"quadrature failed on panel [{a}, {b}] at t={t}, D={D}")
        total += val
    return total


def mean_impurity(t: float, D: int, gamma: float = 1.0) -> float:
    """Ensemble mean impurity of the commuting measurement at time t."""
    if t <= 0:
        raise ValueError("t must be positive")
    return _integrate_with_density(lambda v: impurity_kernel(v, t, D, gamma), t, D, gamma)


def mean_log_impurity(t: float, D: int, gamma: float = 1.0) -> float:
    """Mean of log10 of the impurity over the record distribution."""
    if t <= 0:
        raise ValueError("t must be positive")
    return _integrate_with_density(
        lambda v: np.log10(np.clip(impurity_kernel(v, t, D, gamma), 1e-320, None)),
        t, D, gamma,
    )


def _scaled_region_integral(t: float, gamma: float, upper: float,
                            lower: float = -0.5) -> float:
    """Integral of exp(-4 g t v^2)/cosh(4 g t v) over [lower, upper]."""
    a = 4 * gamma * t

    def f(v):
        x = a * v
        # sech via exp to dodge cosh overflow at large arguments
        return np.exp(-a * v * v) * 2 * np.exp(-abs(x)) / (1 + np.exp(-2 * abs(x)))

    val, _ = integrate.quad(f, lower, upper, limit=200)
    return val


def mean_impurity_two_eig(t: float, D: int, gamma: float = 1.0,
                          long_time: bool = False) -> float:
    """Two-eigenvalue approximation to the mean impurity.

    The record axis splits into D-1 unit regions centred on the eigenvalue
    midpoints; in each region the state is truncated to the two neighbouring
    eigenvalues.  The two outer regions extend to infinity; the total is
    2 R_outer + (D-3) R_inner with

        R = (exp(-g t)/D) sqrt(4 g t / pi) int exp(-4 g t v^2)/cosh(4 g t v) dv.

    With ``long_time`` the closed form (2(D-1)/D) pi exp(-g t)/sqrt(16 pi g t)
    is returned instead.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if long_time:
        return (2 * (D - 1) / D) * np.pi * np.exp(-gamma * t) / np.sqrt(16 * gamma * t * np.pi)
    pref = np.exp(-gamma * t) / D * np.sqrt(4 * gamma * t / np.pi)
    r_inner = _scaled_region_integral(t, gamma, 0.5)
    r_outer = _scaled_region_integral(t, gamma, np.inf)
    return pref * (2 * r_outer + (D - 3) * r_inner)


def qbit_mean_impurity(t: float, gamma: float = 1.0, long_time: bool = False) -> float:
    """Exact qbit mean impurity; with ``long_time`` the pi e^{-gt}/sqrt(16 pi g t) form."""
    if t <= 0:
        raise ValueError("t must be positive")
    if long_time:
        return np.pi * np.exp(-gamma * t) / np.sqrt(16 * gamma * t * np.pi)
    pref = np.exp(-gamma * t) / 2 * np.sqrt(4 * gamma * t / np.pi)
    return pref * _scaled_region_integral(t, gamma, np.inf, lower=-np.inf)


_BOUND_KINDS = ("upper", "pseudo_lower", "physical_likely")


def trajectory_bound(kind: str, t: float, D: int, gamma: float = 1.0) -> float:
    """Spread bounds on trajectory impurities from pinned records.

    upper           - record frozen at an eigenvalue midpoint (most impure,
                      worst over midpoints); tends to 1/2 at long times.
    pseudo_lower    - record frozen at the innermost non-extremal eigenvalue
                      (the most likely records); ~ exp(-4 g t).
    physical_likely - record frozen at +-J; only a fraction 1/D of
                      trajectories end up purer than this.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if kind not in _BOUND_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}, expected one of {_BOUND_KINDS}")
    s = jz_values(D)
    J = (D - 1) / 2
    if kind == "upper":
        return float(max(impurity_kernel(r, t, D, gamma) for r in _midpoints(D)))
    if kind == "pseudo_lower":
        inner = s[1:-1]
        if inner.size == 0:  # D=2 has no inner peaks; fall back to the extremes
            inner = s
        v = inner[np.argmin(np.abs(inner))]
        return float(impurity_kernel(v, t, D, gamma))
    return float(impurity_kernel(J, t, D, gamma))


@dataclass(frozen=True)
class ImpurityDistribution:
    """Density of the log10 impurity on a uniform grid.

    ``mass_per_region`` records how much probability each monotone record
    region contributed; the masses sum to 1 with the grid density.
    """

    ell: np.ndarray
    density: np.ndarray
    mass_per_region: np.ndarray

    def total_mass(self) -> float:
        d_ell = self.ell[1] - self.ell[0]
        return float(self.density.sum() * d_ell)

    def mean(self) -> float:
        d_ell = self.ell[1] - self.ell[0]
        return float((self.ell * self.density).sum() * d_ell)

    def quantile(self, q: float) -> float:
        """ell below which a fraction q of the mass lies (pure side first)."""
        d_ell = self.ell[1] - self.ell[0]
        cdf = np.cumsum(self.density) * d_ell
        cdf /= cdf[-1]
        idx = int(np.searchsorted(cdf, q))
        idx = min(max(idx, 1), len(self.ell) - 1)
        c0, c1 = cdf[idx - 1], cdf[idx]
        if c1 <= c0:
            return float(self.ell[idx])
        frac = (q - c0) / (c1 - c0)
        return float(self.ell[idx - 1] + frac * (self.ell[idx] - self.ell[idx - 1]))


def _qbit_log_impurity_density(ell, t: float, gamma: float):
    """Closed-form qbit density of ell = log10 L, normalized to unit mass."""
    ell = np.asarray(ell, dtype=float)
    z2 = 1.0 - 2.0 * 10.0**ell
    z2 = np.clip(z2, 1e-300, None)
    z = np.sqrt(z2)
    at = np.arctanh(np.clip(z, 0, 1 - 1e-16))
    pref = np.exp(-gamma * t) * np.log(10.0) / np.sqrt(4 * np.pi * gamma * t)
    return pref * np.exp(-(at**2) / (4 * gamma * t)) / (z * np.sqrt(1 - z2))


class NonMonotoneRegionError(RuntimeError):
    """ell(V) failed the monotonicity check on a record region."""


def log_impurity_distribution(t: float, D: int, gamma: float = 1.0,
                              resolution: float = 0.002,
                              grid_points_per_region: int = 20000) -> ImpurityDistribution:
    """Distribution of ell = log10 L over the record ensemble.

    For D=2 the closed form is cell-averaged onto the grid (the top cells,
    where the density has an integrable 1/sqrt singularity, are integrated
    adaptively).  For D>2 the record axis is split at eigenvalues and
    midpoints so that ell(V) is monotone in each region; the ell range is
    discretized at ``resolution``, V(ell) is recovered by monotone inversion,
    and the exact record mass between consecutive inverted points is
    transported onto the grid.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    ell_top = np.log10(1 - 1 / D)
    J = (D - 1) / 2
    tail = J + 10.0 / np.sqrt(4 * gamma * t)
    floor_kernel = max(impurity_kernel(tail, t, D, gamma), 1e-300)
    lo = np.log10(floor_kernel) - 0.5
    n_ell = max(int(np.ceil((ell_top - lo) / resolution)), 64)
    ell_grid = np.linspace(lo, ell_top, n_ell)
    d_ell = ell_grid[1] - ell_grid[0]

    if D == 2:
        dens = _qbit_log_impurity_density(
            np.minimum(ell_grid, ell_top - 1e-12), t, gamma
        )
        dens = np.nan_to_num(dens, nan=0.0, posinf=0.0)
        # cell-average the last few cells across the endpoint singularity
        for gi in range(max(n_ell - 4, 0), n_ell):
            a = ell_grid[gi] - d_ell / 2
            b = min(ell_grid[gi] + d_ell / 2, ell_top - 1e-13)
            val, _ = integrate.quad(
                lambda e: _qbit_log_impurity_density(e, t, gamma), a, b,
                limit=100, points=[b],
            )
            dens[gi] = val / d_ell
        mass = np.array([dens.sum() * d_ell])
        return ImpurityDistribution(ell_grid, dens, mass)

    edges = _region_edges(t, D, gamma)
    density = np.zeros_like(ell_grid)
    masses = []
    for a, b in zip(edges[:-1], edges[1:]):
        vg = np.linspace(a, b, grid_points_per_region)
        ellv = np.log10(np.clip(impurity_kernel(vg, t, D, gamma), 1e-320, None))
        increasing = ellv[-1] >= ellv[0]
        seq = ellv if increasing else ellv[::-1]
        vs = vg if increasing else vg[::-1]
        if np.any(np.diff(seq) < -1e-9):
            raise NonMonotoneRegionError(
                f"ell(V) not monotone on record region [{a}, {b}]; refine the grid"
            )
        seq = np.maximum.accumulate(seq)  # flatten sub-tolerance wiggles
        lo_e, hi_e = seq[0], seq[-1]
        sel = (ell_grid >= lo_e - d_ell) & (ell_grid <= hi_e + d_ell)
        idxs = np.flatnonzero(sel)
        if idxs.size == 0:
            # region narrower than one cell: dump its mass into the nearest cell
            m = _record_mass(a, b, t, D, gamma)
            gi = int(np.clip(np.searchsorted(ell_grid, (lo_e + hi_e) / 2), 0, n_ell - 1))
            density[gi] += m / d_ell
            masses.append(m)
            continue
        targets = ell_grid[idxs]
        bounds = np.concatenate([[lo_e], (targets[:-1] + targets[1:]) / 2, [hi_e]])
        bounds = np.clip(bounds, lo_e, hi_e)
        v_at = np.interp(bounds, seq, vs)
        v_lo = np.minimum(v_at[:-1], v_at[1:])
        v_hi = np.maximum(v_at[:-1], v_at[1:])
        m = _record_mass(v_lo, v_hi, t, D, gamma)
        density[idxs] += m / d_ell
        masses.append(float(m.sum()))
    return ImpurityDistribution(ell_grid, density, np.array(masses))


def fwhm_central_peak(t: float, D: int, gamma: float = 1.0) -> float:
    """Measured full width at half maximum of the central record-density peak."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = jz_values(D)
    center = float(s[np.argmin(np.abs(s))])
    peak = record_density_V(center, t, D, gamma)
    half = peak / 2

    def f(dv):
        return record_density_V(center + dv, t, D, gamma) - half

    width = brentq(f, 0.0, 0.5)
    return 2.0 * width


@dataclass(frozen=True)
class CommutingSolution:
    """Bundle of the closed-form evaluators for one (D, gamma)."""

    dim: int
    gamma: float = 1.0

    def state(self, R: float, t: float) -> np.ndarray:
        return unnormalized_state(R, t, self.dim, self.gamma)

    def norm(self, R: float, t: float) -> float:
        return normalization(R, t, self.dim, self.gamma)

    def record_density(self, V, t: float):
        return record_density_V(V, t, self.dim, self.gamma)

    def kernel(self, V, t: float):
        return impurity_kernel(V, t, self.dim, self.gamma)

    def mean_impurity(self, t: float) -> float:
        return mean_impurity(t, self.dim, self.gamma)
