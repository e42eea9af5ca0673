"""Cheap CLI invocations shared by the CLI tests and the determinism criterion."""

import json
from pathlib import Path

SCCSI = {"p_xy": [[0.4, 0.1], [0.15, 0.35]], "r1": 0.7, "r2": 0.4, "s_size": 2}
WZ = {"p_xy": [[0.4, 0.1], [0.1, 0.4]], "rate": 0.5, "delta": 0.1, "dist": [[0, 1], [1, 0]], "z_size": 2}
FUNCTIONAL = {"p_xy": [[0.3, 0.05], [0.05, 0.3], [0.1, 0.2]], "g": [0, 1, 1], "rate": 0.5}
SIM_SCCSI = {"p_xy": [[0.49, 0.01], [0.01, 0.49]], "r1": 0.55, "r2": 1.0, "channel": [[1, 0], [0, 1]]}
SIM_WZ = {"p_xy": [[0.4, 0.1], [0.1, 0.4]], "rate": 0.5, "delta": 0.2, "dist": [[0, 1], [1, 0]],
          "channel": [[0.9, 0.1], [0.1, 0.9]]}

FAST_GAUSS = ["--grid", "var_step=0.25", "--grid", "corr_step=0.1", "--grid", "nature_step=0.1",
              "--grid", "refine_rounds=0", "--grid", "lam_step=1.0"]


def write_configs(root: Path) -> dict:
    paths = {}
    for name, obj in [("sccsi", SCCSI), ("wz", WZ), ("functional", FUNCTIONAL),
                      ("sim_sccsi", SIM_SCCSI), ("sim_wz", SIM_WZ)]:
        p = root / f"{name}.json"
        p.write_text(json.dumps(obj))
        paths[name] = str(p)
    return paths


def cases(paths: dict) -> dict:
    """Subcommand name -> argv (without --out)."""
    return {
        "sccsi": ["sccsi", "--config", paths["sccsi"], "--bound", "all", "--grid", "resolution=4",
                  "--grid", "cond_resolution=2", "--grid", "refine_rounds=0"],
        "wz": ["wz", "--config", paths["wz"], "--bound", "lower", "--grid", "resolution=4",
               "--grid", "cond_resolution=2", "--grid", "refine_rounds=0"],
        "functional": ["functional", "--config", paths["functional"], "--grid", "resolution=6",
                       "--grid", "refine_rounds=0"],
        "be-fig2": ["be-fig2", "--grid", "dgrid=0.05"],
        "be-fig3": ["be-fig3", "--rates", "0.36:0.48:0.06", "--grid", "dgrid=0.05"],
        "gauss-fig4": ["gauss-fig4", *FAST_GAUSS],
        "gauss-fig5": ["gauss-fig5", "--rates", "0.2:0.4:0.2", *FAST_GAUSS],
        "simulate-sccsi": ["simulate", "sccsi", "--config", paths["sim_sccsi"], "--n", "6..8",
                           "--trials", "200", "--seed", "5"],
        "simulate-wz": ["simulate", "wz", "--config", paths["sim_wz"], "--n", "6..8", "--trials", "200",
                        "--seed", "5"],
        "validate": ["validate", paths["sccsi"], "--request", "eta_upper"],
    }
