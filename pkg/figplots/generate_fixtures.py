#!/usr/bin/env python3
"""Regenerate the committed CSV fixtures by driving the qpurify CLI.

Everything is seeded, so the fixtures are reproducible byte for byte.
Run from the figplots directory:

    python3 generate_fixtures.py [--fixtures fixtures]
"""

from __future__ import annotations

import argparse
import csv
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path


def cli(workdir: Path, *args: str):
    cmd = [sys.executable, "-m", "qpurify.cli", *args, "--out", str(workdir)]
    subprocess.run(cmd, check=True)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--fixtures", default="fixtures")
    args = ap.parse_args()
    fixtures = Path(args.fixtures)
    fixtures.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)

        cli(work, "mean-impurity", "--dim", "3", "--t-final", "4", "--points", "50")
        cli(work, "mean-impurity", "--dim", "5", "--t-final", "5", "--points", "50")
        cli(work, "two-eig", "--dim", "3", "--t-final", "4", "--points", "50")
        cli(work, "bounds", "--dim", "3", "--t-final", "5", "--points", "60")
        cli(work, "bounds", "--dim", "4", "--t-final", "5", "--points", "60")
        cli(work, "bounds", "--dim", "5", "--t-final", "5", "--points", "60")
        cli(work, "distribution", "--dim", "5", "--t", "2",
            "--ell-resolution", "0.01")
        cli(work, "distribution", "--dim", "2", "--t", "2",
            "--ell-resolution", "0.01")
        cli(work, "distribution", "--dim", "5", "--t", "4",
            "--ell-resolution", "0.01")

        cli(work, "simulate", "--dim", "5", "--protocol", "commuting",
            "--dt", "1e-3", "--t-final", "2", "--ensemble", "20", "--seed", "20",
            "--linear", "--keep-trajectories", "12", "--record-stride", "5")
        cli(work, "simulate", "--dim", "3", "--protocol", "qft_complementary",
            "--dt", "1e-4", "--fb-interval", "1e-3", "--t-final", "2",
            "--ensemble", "100", "--seed", "11", "--linear", "--record-stride", "20")

        for D, fb in (("3", "1e-3"), ("3", "1e-2"), ("4", "1e-3"), ("4", "1e-2")):
            horizon = "4.5" if D == "3" else "3.5"
            cli(work, "speedup", "--dim", D, "--simulate", "--dt", "1e-4",
                "--fb-interval", fb, "--t-final", horizon, "--ensemble", "50",
                "--seed", "12")

        cli(work, "register", "--n-max", "6", "--simulate", "--dt", "1e-4",
            "--fb-interval", "1e-3", "--t-final", "1.2", "--ensemble", "48",
            "--seed", "31")

        for D, restarts, seed in (("2", "2", "5"), ("3", "4", "2"), ("4", "2", "5"),
                                  ("5", "4", "2"), ("6", "2", "5"), ("7", "4", "2"),
                                  ("8", "2", "5"), ("9", "16", "2"), ("10", "2", "5")):
            cli(work, "search", "--dim", D, "--restarts", restarts,
                "--iterations", "120", "--seed", seed)

        cli(work, "wigner", "--dim", "10", "--state", "qft-mix:opt",
            "--resolution", "80")
        cli(work, "wigner", "--dim", "10", "--state", "qft-mix:worst",
            "--resolution", "80")
        for c in range(4):
            cli(work, "wigner", "--dim", "4", "--state", f"mub:1:{c}",
                "--resolution", "48")

        # combine the per-dimension search rows into one scaling table
        rows = []
        header = None
        for D in range(2, 11):
            with open(work / f"search_D{D}.csv", newline="") as fh:
                r = list(csv.reader(fh))
            header = r[0]
            rows.append(r[1])
        with open(work / "search_scaling.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

        keep = [
            "mean_impurity_D3.csv", "mean_impurity_D5.csv", "two_eig_D3.csv",
            "speedup_bounds_D3.csv", "speedup_bounds_D4.csv",
            "trajectory_bounds_D5.csv", "qft_weights_D4.csv",
            "log_impurity_distribution_D5_t2.csv",
            "log_impurity_distribution_D2_t2.csv",
            "record_kernel_D5_t4.csv",
            "ensemble_commuting_D5.csv",
            "ensemble_qft_complementary_D3.csv",
            "speedup_curve_D3_fb0.001.csv", "speedup_curve_D3_fb0.01.csv",
            "speedup_curve_D4_fb0.001.csv", "speedup_curve_D4_fb0.01.csv",
            "register_xmax.csv", "ensemble_register_qft_n2.csv",
            "register_bound_curves_n2.csv",
            "search_scaling.csv",
            "wigner_D10_qft-mix_opt.csv", "wigner_D10_qft-mix_worst.csv",
            "wigner_D4_mub_1_0.csv", "wigner_D4_mub_1_1.csv",
            "wigner_D4_mub_1_2.csv", "wigner_D4_mub_1_3.csv",
        ]
        keep += [f"trajectory_D5_{k:04d}.csv" for k in range(12)]
        for name in keep:
            shutil.copy2(work / name, fixtures / name)
    print(f"wrote {len(keep)} fixtures to {fixtures}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
