# steering_router.py — comandos: steering-robustness, witness-verify, critical-visibility, rsp-sweep
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict

import numpy as np

from cli import CommandRouter, arg, artifact_path, option, write_text
from errors import DomainError
from schemas import ExtendedAssemblage, RunConfig
from steering import (
    DATA_REGIMES,
    load_witness,
    prop3_bound,
    robustness_primal,
    robustness_standard,
    save_witness,
    verify_witness,
)
from steering_scenarios import (
    SCENARIOS,
    X3_DATA,
    critical_visibility,
    rsp_assemblage,
    rsp_csv,
    rsp_entanglement_assemblage,
    rsp_sweep,
    x3_assemblage,
)

router = CommandRouter(tags=("steering",))

ASSEMBLAGE_SOURCES = ("x3", "rsp", "rsp-entanglement")


def _assemblage(cfg: RunConfig) -> ExtendedAssemblage:
    path = option(cfg, "assemblage")
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            return ExtendedAssemblage.from_json_dict(json.load(fh))
    source = option(cfg, "scenario", "x3")
    if source == "x3":
        return x3_assemblage(1.0 if cfg.v is None else cfg.v)
    if source == "rsp":
        return rsp_assemblage(np.pi / 2 if cfg.phi is None else cfg.phi)
    if source == "rsp-entanglement":
        return rsp_entanglement_assemblage(np.pi / 4 if cfg.theta is None else cfg.theta)
    raise DomainError(f"scenario must be one of {ASSEMBLAGE_SOURCES}, got {source!r}")


@router.command(
    "steering-robustness",
    help="robustness τ of an extended assemblage and its dual witness",
    args=[
        arg("--assemblage", help="assemblage JSON ([re, im] entries)"),
        arg("--scenario", choices=ASSEMBLAGE_SOURCES),
        arg("--v", type=float, dest="v"),
        arg("--phi", type=float, dest="phi"),
        arg("--theta", type=float, dest="theta"),
        arg("--data", choices=DATA_REGIMES + ("standard",)),
    ],
)
def steering_robustness_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    e = _assemblage(cfg)
    data = option(cfg, "data", "interventions")
    if data == "standard":
        res = robustness_standard(e)
        return {"data": data, "tau": res.tau, "capped": res.capped, "solver": res.report}
    res = robustness_primal(e, data=data)
    path = artifact_path(cfg, run_dir, "witness.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_witness(res.witness, path)
    rhs, useful = prop3_bound(res.witness)
    return {"data": data, "tau": res.tau, "dual_value": res.dual_value, "capped": res.capped,
            "prop3_rhs": rhs, "useful": useful, "witness_file": str(path), "solver": res.report}


@router.command(
    "witness-verify",
    help="dual feasibility and values of a witness (default: the shipped |X| = 3 tables)",
    args=[
        arg("--witness", help="witness JSON; W indexed [x][a]"),
        arg("--assemblage", help="assemblage JSON (default: the |X| = 3 assemblage at --v)"),
        arg("--v", type=float, dest="v"),
        arg("--tol", type=float),
    ],
)
def witness_verify_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    w = load_witness(option(cfg, "witness"))
    e = _assemblage(cfg)
    report = verify_witness(w, e, tol=float(option(cfg, "tol", 5e-3)))
    return report.model_dump()


@router.command(
    "critical-visibility",
    help="smallest visibility v with τ > 0, by bisection",
    args=[
        arg("--scenario", choices=SCENARIOS),
        arg("--data", choices=X3_DATA),
        arg("--no-direct-influence", action="store_true", help="tripartite: C-states independent of b"),
    ],
)
def critical_visibility_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    scenario = option(cfg, "scenario", "tripartite")
    data = option(cfg, "data", "interventions")
    if scenario == "tripartite" and data == "standard":
        raise DomainError("the standard steering test is only defined for the x3 scenario")
    direct = not option(cfg, "no_direct_influence", False)
    v = critical_visibility(scenario, data, direct_influence=direct)
    return {"scenario": scenario, "data": data, "direct_influence": direct, "critical_v": v}


@router.command(
    "rsp-sweep",
    help="robustness of the remote-state-preparation assemblage over φ ∈ [0, π], as CSV",
    args=[arg("--points", type=int)],
)
def rsp_sweep_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    points = int(option(cfg, "points", 33))
    if points < 2:
        raise DomainError("--points must be at least 2")
    rows = rsp_sweep(np.linspace(0.0, np.pi, points))
    path = write_text(artifact_path(cfg, run_dir, "rsp_sweep.csv"), rsp_csv(rows))
    best = max(rows, key=lambda r: r["tau"])
    return {"points": points, "file": str(path), "max_tau": best["tau"], "argmax_phi": best["phi"]}
