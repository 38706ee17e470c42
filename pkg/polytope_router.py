# polytope_router.py — comandos: eval, membership, facets
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict

from behaviors import behavior_csv, load_behavior, require_valid
from cli import CommandRouter, arg, artifact_path, option, require_option, write_json, write_text
from errors import DomainError
from polytope import (
    enumerate_facets,
    eval_ace_bound,
    eval_instrumental,
    membership_constructive,
    membership_lp,
    min_over_relabelings,
)
from schemas import RunConfig, Scenario

router = CommandRouter(tags=("polytope",))

INEQUALITIES = ("I1", "I2", "I3", "C1", "C2", "C3", "trivial", "Il22")
CSV_ARG = arg("--csv", action="store_true", help="also write the behavior table as behavior.csv in the run directory")


def _load(cfg: RunConfig, run_dir: Path):
    beh = load_behavior(require_option(cfg, "behavior"))
    require_valid(beh)
    if option(cfg, "csv"):
        write_text(run_dir / "behavior.csv", behavior_csv(beh))
    return beh


def _evaluate(beh, name: str) -> Dict[str, Any]:
    if name in ("trivial", "Il22"):
        value, F = min_over_relabelings(beh, name)
        return {"inequality": name, "min_value": value, "violated": value < 0, "instance": F.name}
    which = int(name[1])
    if name.startswith("I"):
        value = eval_instrumental(beh, which)
        return {"inequality": name, "value": value, "violated": value > 0}
    bound, ok = eval_ace_bound(beh, which)
    return {"inequality": name, "bound": bound, "satisfied": ok}


@router.command(
    "eval",
    help="evaluate a named inequality (minimized over relabelings for trivial/Il22)",
    args=[
        arg("--behavior", help="behavior JSON"),
        arg("--inequality", choices=INEQUALITIES + ("all",)),
        CSV_ARG,
    ],
)
def eval_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    beh = _load(cfg, run_dir)
    name = option(cfg, "inequality", "Il22")
    if name == "all":
        results = []
        for n in INEQUALITIES:
            try:
                results.append(_evaluate(beh, n))
            except DomainError as e:
                results.append({"inequality": n, "skipped": str(e)})
        return {"l": beh.l, "results": results}
    return {"l": beh.l, **_evaluate(beh, name)}


@router.command(
    "membership",
    help="classical-polytope membership (LP with certificate, or the constructive l=2 model)",
    args=[
        arg("--behavior", help="behavior JSON"),
        arg("--method", choices=("lp", "constructive")),
        arg("--exact", action="store_true", help="force the rational LP path"),
        CSV_ARG,
    ],
)
def membership_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    beh = _load(cfg, run_dir)
    if option(cfg, "method", "lp") == "constructive":
        res = membership_constructive(beh)
        out = {"method": "constructive", "feasible": res.feasible, "boundary": res.boundary,
               "s": res.s, "t": res.t, "s_interval": list(res.s_interval)}
        if res.joint is not None:
            write_json(artifact_path(cfg, run_dir, "joint.json"), {"l": res.joint.l, "table": res.joint.table.tolist()})
        return out
    res = membership_lp(beh, exact=True if option(cfg, "exact") else None)
    out: Dict[str, Any] = {"method": "lp", "member": res.member, "exact": res.exact,
                           "weights": {str(k): w for k, w in res.weights.items()}}
    if res.certificate is not None:
        write_json(artifact_path(cfg, run_dir, "certificate.json"), res.certificate.to_json_dict())
        out["certificate_value"] = res.certificate_value
        out["tightest"] = res.tightest.name
        out["tightest_value"] = res.tightest_value
    return out


@router.command(
    "facets",
    help="enumerate the facets of the classical polytope and classify their orbits",
    args=[arg("--l", type=int, dest="l")],
)
def facets_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    report = enumerate_facets(Scenario(l=cfg.l))
    path = write_json(artifact_path(cfg, run_dir, f"facets_l{cfg.l}.json"), report.to_json_dict())
    return {
        "l": report.l,
        "dimension": report.dimension,
        "facets": len(report.facets),
        "orbits": [{"label": o.label, "size": o.size} for o in report.orbits],
        "file": str(path),
    }
