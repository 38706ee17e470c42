# quantum_router.py — comandos: quantum-violation, efficiency-sweep
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict

import numpy as np

from behaviors import ace
from cli import CommandRouter, arg, artifact_path, option, parse_list, write_json, write_text
from efficiency import MODES, efficiency_boundary, efficiency_sweep, efficiency_threshold, sweep_csv
from polytope import eval_ace_bound, il22_functional, min_over_relabelings
from quantum_models import (
    ace_gap_model,
    appendix_a_model,
    born_behavior,
    partial_ace_gap_model,
    qace,
    seesaw_optimize,
)
from schemas import RunConfig, Scenario
from settings import SEESAW_RESTARTS

router = CommandRouter(tags=("quantum",))

MODELS = ("appendix-a", "ace-gap", "ace-gap-partial", "seesaw")
FIXED_MODELS = {"appendix-a": appendix_a_model, "ace-gap": ace_gap_model, "ace-gap-partial": partial_ace_gap_model}


@router.command(
    "quantum-violation",
    help="I_l22 value of a fixed qubit model, or its seesaw optimum",
    args=[
        arg("--model", choices=MODELS),
        arg("--indices", help="a,b,x,x' of the I_l22 instance optimized by the seesaw (default 0,0,1,0)"),
        arg("--restarts", type=int),
    ],
    stochastic=True,
)
def quantum_violation_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    kind = option(cfg, "model", "appendix-a")
    out: Dict[str, Any] = {"model": kind}
    if kind == "seesaw":
        a, b, x, xp = parse_list(option(cfg, "indices", "0,0,1,0"), int)
        F = il22_functional(a, b, x, xp, cfg.l)
        res = seesaw_optimize(Scenario(l=cfg.l), F, restarts=int(option(cfg, "restarts", SEESAW_RESTARTS)),
                              seed=cfg.seed)
        model = res.model
        out.update({"instance": F.name, "seesaw_value": res.value, "converged": res.converged,
                    "restart_values": res.restart_values})
    else:
        model = FIXED_MODELS[kind]()
    beh = born_behavior(model)
    value, F = min_over_relabelings(beh, "Il22")
    out.update({
        "min_Il22": value,
        "min_instance": F.name,
        "ace": ace(beh),
        "qace": qace(model),
        "C1": eval_ace_bound(beh, 1)[0],
    })
    write_json(artifact_path(cfg, run_dir, "behavior.json"), beh.to_json_dict())
    return out


@router.command(
    "efficiency-sweep",
    help="best noisy I_l22 value on an (eta1, eta2) grid, as CSV; optional thresholds",
    args=[
        arg("--grid", type=int, dest="grid"),
        arg("--restarts", type=int),
        arg("--thresholds", action="store_true", help="also bisect the symmetric and asymmetric thresholds"),
        arg("--boundary", help="comma-separated eta1 values for the (eta1, minimal eta2) boundary"),
    ],
    stochastic=True,
)
def efficiency_sweep_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    restarts = option(cfg, "restarts")
    kwargs = {"seed": cfg.seed} if restarts is None else {"seed": cfg.seed, "restarts": int(restarts)}
    rows = efficiency_sweep(cfg.grid, **kwargs)
    path = write_text(artifact_path(cfg, run_dir, "efficiency_sweep.csv"), sweep_csv(rows))
    out: Dict[str, Any] = {"grid": cfg.grid, "points": len(rows), "file": str(path),
                           "best_Il22": float(np.min([r["best_Il22"] for r in rows]))}
    if option(cfg, "thresholds"):
        out["thresholds"] = {mode: efficiency_threshold(mode, **kwargs) for mode in MODES}
    if option(cfg, "boundary"):
        pairs = efficiency_boundary(parse_list(option(cfg, "boundary"), float), **kwargs)
        out["boundary"] = [{"eta1": e1, "eta2": e2} for e1, e2 in pairs]
        write_json(run_dir / "efficiency_boundary.json", out["boundary"])
    return out
