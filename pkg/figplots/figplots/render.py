"""Render PNG figures from committed CSV fixtures.

Usage:
    python -m figplots.render --all [--fixtures DIR] [--out DIR]
    python -m figplots.render --only fig6 ...

Rendering is deterministic: fixed figure size, DPI, and font settings, and
the PNG metadata is pinned.  A missing, empty, or schema-mismatched input
fails before any output file is created.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .recipes import RECIPES, FigureRecipe  # noqa: E402

plt.rcParams.update({
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
})

PNG_METADATA = {"Software": "figplots"}


class RecipeError(RuntimeError):
    """Input file missing, empty, or not matching the documented schema."""


def load_columns(path: Path) -> dict:
    if not path.exists():
        raise RecipeError(f"input file {path} does not exist")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RecipeError(f"input file {path} is empty") from None
        rows = [row for row in reader if row]
    if not rows:
        raise RecipeError(f"input file {path} has a header but no data")
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in rows])
        except ValueError:
            cols[name] = np.array([r[j] for r in rows])
    return cols


def _check_schema(recipe: FigureRecipe, fixtures: Path) -> dict:
    data = {}
    for name in recipe.inputs:
        if "*" in name:
            matches = sorted(fixtures.glob(name))
            if not matches:
                raise RecipeError(f"no files match {name} under {fixtures}")
            data[name] = [load_columns(p) for p in matches]
            continue
        cols = load_columns(fixtures / name)
        need = recipe.required_columns.get(name, [])
        missing = [c for c in need if c not in cols]
        if missing:
            raise RecipeError(f"{name} lacks required columns {missing}")
        data[name] = cols
    return data


# --- renderers -------------------------------------------------------------


def _impurity_curves(data, recipe, ax_pair):
    mi = data["mean_impurity_D3.csv"]
    te = data["two_eig_D3.csv"]
    a, b = ax_pair
    a.plot(mi["t_inv_gamma"], mi["mean_L"], "o-", ms=3, label="mean impurity")
    a.plot(mi["t_inv_gamma"], mi["two_eig_L"], "^-", ms=3, label="two-eigenvalue")
    a.plot(mi["t_inv_gamma"], mi["qbit_L"], "k-", lw=1, label="qbit")
    a.set_xlim(0, 2)
    a.legend()
    b.plot(te["t_inv_gamma"], te["two_eig_L_long_time"], "v-", ms=3,
           label="two-eig long time")
    b.plot(mi["t_inv_gamma"], mi["mean_L"], "o-", ms=3, label="mean impurity")
    b.plot(te["t_inv_gamma"], te["qbit_L_long_time"], "k--", lw=1,
           label="qbit long time")
    b.plot(mi["t_inv_gamma"], mi["qbit_L"], "k-", lw=1, label="qbit")
    b.set_yscale("log")
    b.legend()
    for ax in (a, b):
        ax.set_xlabel("t (1/gamma)")
        ax.set_ylabel("impurity")


def _trajectory_spread(data, recipe, ax_pair):
    ens = data["ensemble_commuting_D5.csv"]
    bounds = data["trajectory_bounds_D5.csv"]
    mi = data["mean_impurity_D5.csv"]
    trajs = data["trajectory_D5_*.csv"]
    a, b = ax_pair
    for ax in (a, b):
        for tr in trajs:
            ax.plot(tr["t_inv_gamma"], tr["L"], color="0.6", lw=0.5, zorder=1)
        ax.plot(ens["t_inv_gamma"], ens["mean_L"], "b-", lw=1.5,
                label="ensemble mean", zorder=3)
        ax.fill_between(ens["t_inv_gamma"],
                        ens["mean_L"] - ens["stderr_L"],
                        ens["mean_L"] + ens["stderr_L"],
                        color="b", alpha=0.2, zorder=2)
        ax.plot(mi["t_inv_gamma"], mi["mean_L"], "go", ms=3, label="quadrature mean")
        ax.plot(bounds["t_inv_gamma"], bounds["upper_L"], "-.", color="k",
                label="upper bound")
        ax.plot(bounds["t_inv_gamma"], bounds["pseudo_lower_L"], "--", color="k",
                label="pseudo lower")
        ax.set_xlabel("t (1/gamma)")
        ax.set_ylabel("impurity")
    b.plot(bounds["t_inv_gamma"], bounds["physical_likely_L"], "m-", lw=1,
           label="edge-record bound")
    b.set_yscale("log")
    b.set_ylim(1e-10, 1)
    a.legend(fontsize=7)
    b.legend(fontsize=7)


def _record_kernel(data, recipe, ax):
    rk = data["record_kernel_D5_t4.csv"]
    ax.plot(rk["V"], rk["record_density"], "--", label="record density")
    ax.set_xlabel("V")
    ax.set_ylabel("record density")
    twin = ax.twinx()
    twin.plot(rk["V"], rk["impurity_kernel"], "-", color="C1",
              label="impurity kernel")
    twin.set_ylabel("impurity kernel")
    twin.grid(False)
    ax.legend(loc="upper left")
    twin.legend(loc="upper right")


def _bound_curves(data, recipe, ax):
    b = data["trajectory_bounds_D5.csv"]
    ax.plot(b["t_inv_gamma"], b["upper_L"], "-.", label="upper (midpoint record)")
    ax.plot(b["t_inv_gamma"], b["pseudo_lower_L"], "--", label="pseudo lower (inner peak)")
    ax.plot(b["t_inv_gamma"], b["physical_likely_L"], "-", label="edge record")
    ax.set_yscale(recipe.yscale)
    ax.set_xlabel("t (1/gamma)")
    ax.set_ylabel("impurity")
    ax.legend()


def _log_impurity_distribution(data, recipe, ax):
    d5 = data["log_impurity_distribution_D5_t2.csv"]
    d2 = data["log_impurity_distribution_D2_t2.csv"]
    ax.plot(d5["log10_L"], d5["density_per_log10_L"], "b-", label="D=5")
    ax.plot(d2["log10_L"], d2["density_per_log10_L"], "r--", label="D=2")
    styles = ("o", "s", "x")
    for value, mark in zip(recipe.overlays["markers"], styles):
        ax.axvline(value, color="k", lw=0.8)
        ax.plot([value], [0.05], mark, color="k", ms=6, clip_on=False)
    ax.set_xlim(-4.5, 0.2)
    ax.set_xlabel("log10 impurity")
    ax.set_ylabel("density")
    ax.legend()


def _feedback_vs_commuting(data, recipe, ax):
    fb = data["ensemble_qft_complementary_D3.csv"]
    mi = data["mean_impurity_D3.csv"]
    ax.plot(fb["t_inv_gamma"], fb["mean_L"], "g-", label="Fourier feedback (ensemble)")
    sel = np.linspace(0, fb["t_inv_gamma"].size - 1, 5).astype(int)[1:]
    ax.errorbar(fb["t_inv_gamma"][sel], fb["mean_L"][sel],
                yerr=fb["stderr_L"][sel], fmt="none", ecolor="g")
    ax.plot(mi["t_inv_gamma"], mi["mean_L"], "k--", label="commuting mean")
    ax.set_yscale(recipe.yscale)
    ax.set_xlabel("t (1/gamma)")
    ax.set_ylabel("impurity")
    ax.legend()


def _speedup_curves(data, recipe, ax):
    names = [n for n in recipe.inputs if "curve" in n]
    styles = ("o-", "^-")
    for name, st in zip(names, styles):
        c = data[name]
        label = name.split("_fb")[1].removesuffix(".csv")
        ax.plot(c["t_inv_gamma"], c["S_of_t"], st, ms=3,
                label=f"feedback interval {label}")
    bounds = data[[n for n in recipe.inputs if "bounds" in n][0]]
    ax.axhline(bounds["S_lower"][0], color="k", ls="--", lw=0.8, label="lower bound")
    ax.axhline(bounds["S_upper_qft"][0], color="k", ls=":", lw=0.8,
               label="Fourier upper bound")
    ax.set_xlabel("t (1/gamma)")
    ax.set_ylabel("speed-up")
    ax.legend()


def _weight_matrix(data, recipe, ax):
    w = data["qft_weights_D4.csv"]
    D = int(w["r"].max()) + 1
    mat = np.zeros((D, D))
    mat[w["r"].astype(int), w["c"].astype(int)] = w["weight"]
    im = ax.imshow(mat, cmap="viridis", origin="upper")
    ax.figure.colorbar(im, ax=ax, label="|X_rc|^2")
    ax.set_xlabel("c")
    ax.set_ylabel("r")
    ax.grid(False)


def _wigner_panel(ax, cols, title):
    phi = np.unique(cols["phi"])
    z = np.unique(cols["z_Jcos_theta"])
    W = cols["W"].reshape(z.size, phi.size)
    im = ax.pcolormesh(phi, z, W, shading="nearest", cmap="RdBu_r",
                       vmin=-np.abs(W).max(), vmax=np.abs(W).max())
    ax.contour(phi, z, W, levels=[0.0], colors="k", linestyles="dashed",
               linewidths=0.8)
    ax.set_title(title, fontsize=8)
    ax.set_xlabel("phi")
    ax.set_ylabel("J cos(theta)")
    ax.grid(False)
    return im


def _wigner_pair(data, recipe, ax_pair):
    for ax, name, title in zip(ax_pair, recipe.inputs,
                               recipe.overlays["panel_titles"]):
        im = _wigner_panel(ax, data[name], title)
    ax_pair[-1].figure.colorbar(im, ax=list(ax_pair), shrink=0.8, label="W")


def _wigner_quad(data, recipe, axes):
    for ax, name, title in zip(axes.ravel(), recipe.inputs,
                               recipe.overlays["panel_titles"]):
        im = _wigner_panel(ax, data[name], title)
    axes.ravel()[-1].figure.colorbar(im, ax=list(axes.ravel()), shrink=0.8,
                                     label="W")


def _search_scaling(data, recipe, ax):
    t = data["search_scaling.csv"]
    ax.plot(t["D"], t["S_best"], "ko", ms=6, label="search incumbent")
    ax.plot(t["D"], t["S_upper_all"], "--", label="bound over unbiased bases")
    ax.plot(t["D"], t["S_lower"], "--", label="lower bound")
    ax.plot(t["D"], t["S_qft"], ":", label="Fourier ceiling")
    ax.set_yscale(recipe.yscale)
    ax.set_xlabel("D")
    ax.set_ylabel("speed-up")
    ax.legend()


def _register_impurity(data, recipe, ax):
    ens = data["ensemble_register_qft_n2.csv"]
    cur = data["register_bound_curves_n2.csv"]
    ax.plot(ens["t_inv_gamma"], ens["mean_L"], "g-", label="ensemble mean")
    ax.plot(cur["t_inv_gamma"], cur["upper_L"], "m--", label="slow-rate bound")
    ax.plot(cur["t_inv_gamma"], cur["lower_L"], "m-.", label="fast-rate bound")
    ax.set_yscale(recipe.yscale)
    ax.set_ylim(1e-8, 1)
    ax.set_xlabel("t (1/gamma)")
    ax.set_ylabel("impurity")
    ax.legend()


def _register_scaling(data, recipe, ax):
    t = data["register_xmax.csv"]
    ax.plot(t["n"], t["S_xmax"], "o-", label="channel-summed max element")
    ax.plot(t["n"], t["S_upper"], "--", label="upper bound 2n")
    ax.plot(t["n"], t["S_lower"], "--", label="lower bound 2n/(2^n - 1)")
    ax.set_xlabel("register size n")
    ax.set_ylabel("speed-up")
    ax.legend()


def render(recipe: FigureRecipe, fixtures_dir, out_dir) -> Path:
    fixtures = Path(fixtures_dir)
    out = Path(out_dir)
    data = _check_schema(recipe, fixtures)  # fail before creating any output
    out.mkdir(parents=True, exist_ok=True)

    if recipe.kind in ("impurity_curves", "trajectory_spread"):
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
        {"impurity_curves": _impurity_curves,
         "trajectory_spread": _trajectory_spread}[recipe.kind](data, recipe, axes)
    elif recipe.kind == "wigner_pair":
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.2), sharey=True)
        _wigner_pair(data, recipe, axes)
    elif recipe.kind == "wigner_quad":
        fig, axes = plt.subplots(2, 2, figsize=(7, 6), sharex=True, sharey=True)
        _wigner_quad(data, recipe, axes)
    else:
        fig, ax = plt.subplots(figsize=(4.6, 3.4))
        {
            "record_kernel": _record_kernel,
            "bound_curves": _bound_curves,
            "log_impurity_distribution": _log_impurity_distribution,
            "feedback_vs_commuting": _feedback_vs_commuting,
            "speedup_curves": _speedup_curves,
            "weight_matrix": _weight_matrix,
            "search_scaling": _search_scaling,
            "register_impurity": _register_impurity,
            "register_scaling": _register_scaling,
        }[recipe.kind](data, recipe, ax)
    fig.suptitle(recipe.title, fontsize=9)
    if recipe.kind not in ("wigner_pair", "wigner_quad"):
        fig.tight_layout(rect=(0, 0, 1, 0.95))
    path = out / f"{recipe.fig_id}.png"
    fig.savefig(path, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="figplots.render", description=__doc__)
    ap.add_argument("--all", action="store_true")
    ap.add_argument("--only", action="append", default=None)
    ap.add_argument("--fixtures", default="fixtures")
    ap.add_argument("--out", default="figures")
    args = ap.parse_args(argv)
    ids = list(RECIPES) if args.all or not args.only else args.only
    failed = 0
    for fig_id in ids:
        if fig_id not in RECIPES:
            print(f"unknown figure id {fig_id}", file=sys.stderr)
            return 2
        try:
            path = render(RECIPES[fig_id], args.fixtures, args.out)
            print(f"wrote {path}")
        except RecipeError as exc:
            print(f"{fig_id}: {exc}", file=sys.stderr)
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
