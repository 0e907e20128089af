"""Command-line entry point for seeded optimization experiments.

Precedence: command-line flags override values from an optional JSON
config file (--config), which override built-in defaults. The default
budget follows the benchmark convention of 12*d calls with 2*d used for
initialization.
"""

from __future__ import annotations

import argparse
import json
import sys
import numpy as np

from .acquisition import AF_KINDS
from .harness import ExperimentConfig, run_experiment
from .objectives import get_objective, objective_ids
from .optimizer import OptimizerConfig

_DEFAULTS = {
    "objective": None,
    "dim": None,
    "budget": None,
    "batch": 1,
    "seed": 0,
    "seeds": None,
    "replications": None,
    "algo": "dlo",
    "surrogate": "gp",
    "af": "dlo",
    "X": 0.01,
    "bw": 1.0,
    "beta_max": 100.0,
    "greedy_fraction": 0.5,
    "no_anneal": False,
    "no_local_box": False,
    "R0": 1.0,
    "dR": float(np.log10(2.0)),
    "ucb_beta": 1.0,
    "input_proposal": "rect",
    "jobs": 1,
    "out": "results",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dlopt",
        description="Seeded black-box optimization experiments with CSV traces.",
    )
    g = p.add_argument
    g("--objective", type=str, help="objective id, e.g. " + ", ".join(objective_ids()))
    g("--dim", type=int, help="dimension for parameterized objectives")
    g("--budget", type=int, help="total objective calls (default 12*dim)")
    g("--batch", type=int, help="points evaluated per iteration")
    g("--seed", type=int, help="base seed (single replication default)")
    g("--seeds", type=str, help="comma-separated explicit seed list")
    g("--replications", type=int, help="number of seeds, counted up from --seed")
    g("--algo", choices=["dlo", "random"], help="optimizer or random-search baseline")
    g("--surrogate", choices=["gp", "nn"], help="surrogate model")
    g("--af", choices=list(AF_KINDS), help="acquisition rule")
    g("--X", type=float, dest="X", help="log-density weight in the default rule")
    g("--bw", type=float, help="kernel bandwidth prefactor of the flow")
    g("--beta-max", type=float, dest="beta_max", help="final annealing level")
    g("--greedy-fraction", type=float, dest="greedy_fraction",
      help="fraction of greedy iterations")
    g("--no-anneal", action="store_true", default=None, dest="no_anneal",
      help="pin the annealing level at 1")
    g("--no-local-box", action="store_true", default=None, dest="no_local_box",
      help="draw input-space proposals over the whole cube")
    g("--R0", type=float, dest="R0", help="initial trust-region radius")
    g("--dR", type=float, dest="dR", help="log10 radius step")
    g("--ucb-beta", type=float, dest="ucb_beta", help="UCB exploration weight")
    g("--input-proposal", choices=["rect", "sphere"], dest="input_proposal",
      help="shape of the input-space proposal volume")
    g("--jobs", type=int, help="parallel replications")
    g("--out", type=str, help="output directory for CSV files")
    g("--config", type=str, help="JSON file with any of the above keys")
    return p


def _merge_settings(argv) -> dict:
    parser = build_parser()
    # suppress defaults so only flags the user actually passed show up
    for action in parser._actions:
        if action.dest != "help":
            action.default = argparse.SUPPRESS
    ns = vars(parser.parse_args(argv))

    settings = dict(_DEFAULTS)
    if "config" in ns:
        try:
            with open(ns["config"]) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"--config: cannot read {ns['config']}: {exc}")
        unknown = set(file_cfg) - set(_DEFAULTS)
        if unknown:
            parser.error(f"--config: unknown keys {sorted(unknown)}")
        settings.update(file_cfg)
    ns.pop("config", None)
    settings.update(ns)
    return settings


def parse_cli(argv=None) -> ExperimentConfig:
    """Parse flags (and an optional JSON config) into an ExperimentConfig."""
    parser = build_parser()
    settings = _merge_settings(argv if argv is not None else sys.argv[1:])

    if not settings["objective"]:
        parser.error("--objective is required")
    try:
        objective = get_objective(settings["objective"], dim=settings["dim"])
    except ValueError as exc:
        parser.error(f"--objective: {exc}")

    budget = settings["budget"]
    if budget is None:
        budget = 12 * objective.dim

    if settings["seeds"] is not None:
        try:
            seeds = [int(tok) for tok in str(settings["seeds"]).split(",") if tok]
        except ValueError:
            parser.error(f"--seeds: expected comma-separated ints, got "
                         f"{settings['seeds']!r}")
        if not seeds:
            parser.error("--seeds: empty seed list")
    elif settings["replications"] is not None:
        if settings["replications"] < 1:
            parser.error("--replications must be >= 1")
        seeds = [settings["seed"] + k for k in range(settings["replications"])]
    else:
        seeds = [settings["seed"]]

    opt = OptimizerConfig(
        budget=budget,
        batch_size=settings["batch"],
        surrogate=settings["surrogate"],
        af=settings["af"],
        density_weight=settings["X"],
        ucb_beta=settings["ucb_beta"],
        bandwidth_factor=settings["bw"],
        beta_max=settings["beta_max"],
        greedy_fraction=settings["greedy_fraction"],
        anneal=not bool(settings["no_anneal"]),
        local_box=not bool(settings["no_local_box"]),
        input_proposal=settings["input_proposal"],
        radius_init=settings["R0"],
        radius_log_step=settings["dR"],
        seed=settings["seed"],
    )
    config = ExperimentConfig(
        objective=settings["objective"],
        dim=settings["dim"],
        algo=settings["algo"],
        seeds=seeds,
        jobs=settings["jobs"],
        out_dir=settings["out"],
        optimizer=opt,
    )
    try:
        config.validate()
    except ValueError as exc:
        parser.error(str(exc))
    return config


def main(argv=None) -> int:
    config = parse_cli(argv)
    outcome = run_experiment(config)
    for seed, status in zip(config.seeds, outcome["statuses"]):
        result = outcome["results"][seed]
        flag = "" if status == "ok" else f"  [{status}: {result.error}]"
        print(f"seed {seed}: best {result.best_value:.6g}{flag}")
    print(f"summary: {outcome['summary']}")
    return 0 if outcome["all_ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
