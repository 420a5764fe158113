"""Catalog of figure recipes.

A recipe names its input CSV files (relative to the fixtures directory),
the renderer kind, axis scales, and overlay values.  Scripts do no
computation beyond axis transforms: every plotted number comes from a CSV
column or an overlay constant recorded here.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class FigureRecipe:
    fig_id: str
    kind: str
    inputs: tuple
    required_columns: dict = field(default_factory=dict)
    yscale: str = "linear"
    overlays: dict = field(default_factory=dict)
    title: str = ""


# vertical markers for the log-impurity distribution figure: the published
# anchor values (mean, mean-log, 1/D quantile)
FIG6_MARKERS = (-1.46, -2.41, -3.1736)

RECIPES = {
    "fig2": FigureRecipe(
        "fig2", "impurity_curves",
        ("mean_impurity_D3.csv", "two_eig_D3.csv"),
        required_columns={
            "mean_impurity_D3.csv": ["t_inv_gamma", "mean_L", "two_eig_L", "qbit_L"],
            "two_eig_D3.csv": ["t_inv_gamma", "two_eig_L_long_time", "qbit_L_long_time"],
        },
        title="Mean impurity and its approximations, D=3",
    ),
    "fig3": FigureRecipe(
        "fig3", "trajectory_spread",
        ("ensemble_commuting_D5.csv", "trajectory_bounds_D5.csv",
         "mean_impurity_D5.csv", "trajectory_D5_*.csv"),
        required_columns={
            "ensemble_commuting_D5.csv": ["t_inv_gamma", "mean_L", "stderr_L"],
            "trajectory_bounds_D5.csv": ["t_inv_gamma", "upper_L", "pseudo_lower_L",
                                         "physical_likely_L"],
        },
        title="Commuting-measurement impurity trajectories, D=5",
    ),
    "fig4": FigureRecipe(
        "fig4", "record_kernel",
        ("record_kernel_D5_t4.csv",),
        required_columns={
            "record_kernel_D5_t4.csv": ["V", "record_density", "impurity_kernel"],
        },
        title="Record density and impurity kernel, D=5, t=4",
    ),
    "fig5": FigureRecipe(
        "fig5", "bound_curves",
        ("trajectory_bounds_D5.csv",),
        required_columns={
            "trajectory_bounds_D5.csv": ["t_inv_gamma", "upper_L", "pseudo_lower_L",
                                         "physical_likely_L"],
        },
        yscale="log",
        title="Trajectory spread bounds, D=5",
    ),
    "fig6": FigureRecipe(
        "fig6", "log_impurity_distribution",
        ("log_impurity_distribution_D5_t2.csv", "log_impurity_distribution_D2_t2.csv"),
        required_columns={
            "log_impurity_distribution_D5_t2.csv": ["log10_L", "density_per_log10_L"],
            "log_impurity_distribution_D2_t2.csv": ["log10_L", "density_per_log10_L"],
        },
        overlays={"markers": FIG6_MARKERS},
        title="Distribution of log-impurities at t=2",
    ),
    "fig7": FigureRecipe(
        "fig7", "feedback_vs_commuting",
        ("ensemble_qft_complementary_D3.csv", "mean_impurity_D3.csv"),
        required_columns={
            "ensemble_qft_complementary_D3.csv": ["t_inv_gamma", "mean_L", "stderr_L"],
            "mean_impurity_D3.csv": ["t_inv_gamma", "mean_L"],
        },
        yscale="log",
        title="Fourier-protocol impurity vs commuting measurement, D=3",
    ),
    "fig8": FigureRecipe(
        "fig8", "speedup_curves",
        ("speedup_curve_D3_fb0.001.csv", "speedup_curve_D3_fb0.01.csv",
         "speedup_bounds_D3.csv"),
        required_columns={
            "speedup_curve_D3_fb0.001.csv": ["t_inv_gamma", "S_of_t"],
            "speedup_bounds_D3.csv": ["S_lower", "S_upper_qft"],
        },
        title="Finite-time speed-up, D=3",
    ),
    "fig9": FigureRecipe(
        "fig9", "speedup_curves",
        ("speedup_curve_D4_fb0.001.csv", "speedup_curve_D4_fb0.01.csv",
         "speedup_bounds_D4.csv"),
        required_columns={
            "speedup_curve_D4_fb0.001.csv": ["t_inv_gamma", "S_of_t"],
            "speedup_bounds_D4.csv": ["S_lower", "S_upper_qft"],
        },
        title="Finite-time speed-up, D=4",
    ),
    "fig10": FigureRecipe(
        "fig10", "weight_matrix",
        ("qft_weights_D4.csv",),
        required_columns={"qft_weights_D4.csv": ["r", "c", "weight"]},
        title="Fourier pair weights |X_rc|^2, D=4",
    ),
    "fig11": FigureRecipe(
        "fig11", "wigner_pair",
        ("wigner_D10_qft-mix_worst.csv", "wigner_D10_qft-mix_opt.csv"),
        required_columns={
            "wigner_D10_qft-mix_worst.csv": ["phi", "z_Jcos_theta", "W"],
            "wigner_D10_qft-mix_opt.csv": ["phi", "z_Jcos_theta", "W"],
        },
        overlays={"panel_titles": ("worst permutation", "optimal permutation")},
        title="Wigner functions of two-eigenstate mixtures, D=10",
    ),
    "fig12": FigureRecipe(
        "fig12", "search_scaling",
        ("search_scaling.csv",),
        required_columns={
            "search_scaling.csv": ["D", "S_best", "S_lower", "S_upper_all", "S_qft"],
        },
        yscale="log",
        title="Best unbiased-basis speed-up vs dimension",
    ),
    "fig13": FigureRecipe(
        "fig13", "wigner_quad",
        ("wigner_D4_mub_1_0.csv", "wigner_D4_mub_1_1.csv",
         "wigner_D4_mub_1_2.csv", "wigner_D4_mub_1_3.csv"),
        required_columns={
            "wigner_D4_mub_1_0.csv": ["phi", "z_Jcos_theta", "W"],
        },
        overlays={"panel_titles": ("state 0", "state 1", "state 2", "state 3")},
        title="Wigner functions of the M1 basis states, D=4",
    ),
    "fig14": FigureRecipe(
        "fig14", "register_impurity",
        ("ensemble_register_qft_n2.csv", "register_bound_curves_n2.csv"),
        required_columns={
            "ensemble_register_qft_n2.csv": ["t_inv_gamma", "mean_L"],
            "register_bound_curves_n2.csv": ["t_inv_gamma", "upper_L", "lower_L"],
        },
        yscale="log",
        title="Two-qubit register impurity under Fourier feedback",
    ),
    "fig15": FigureRecipe(
        "fig15", "register_scaling",
        ("register_xmax.csv",),
        required_columns={"register_xmax.csv": ["n", "S_xmax", "S_lower", "S_upper"]},
        title="Register speed-up indicator vs register size",
    ),
}
