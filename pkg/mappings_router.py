# mappings_router.py — comandos: hardy-check, exogenize
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict

from behaviors import load_behavior
from cli import CommandRouter, arg, artifact_path, option, parse_list, require_option, write_json
from errors import DomainError, SignalingError
from exogenize import bell_dag, chain_dag, dags_isomorphic, exogenize, instrumental_dag
from mappings import bell_to_instrumental, hardy_implies_chsh_check, instrumental_to_bell
from polytope import min_over_relabelings
from quantum_models import tsirelson_bell_behavior
from schemas import BellBehavior, Dag, RunConfig

router = CommandRouter(tags=("mappings",))

NAMED_DAGS = {"instrumental": instrumental_dag, "bell": bell_dag, "chain": chain_dag}


@router.command(
    "hardy-check",
    help="Hardy / CHSH relations of a Bell behavior (default: the Tsirelson point)",
    args=[
        arg("--bell", help="Bell behavior JSON, p[x][y][a][b]"),
        arg("--behavior", help="instrumental behavior JSON (l = 2), mapped to the Bell picture"),
    ],
)
def hardy_check_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    if option(cfg, "bell") and option(cfg, "behavior"):
        raise DomainError("give either --bell or --behavior, not both")
    if option(cfg, "behavior"):
        p = instrumental_to_bell(load_behavior(option(cfg, "behavior")))
        source = "instrumental"
    elif option(cfg, "bell"):
        with open(option(cfg, "bell"), "r", encoding="utf-8") as fh:
            p = BellBehavior.from_json_dict(json.load(fh))
        source = "bell"
    else:
        p = tsirelson_bell_behavior()
        source = "tsirelson"
    report = hardy_implies_chsh_check(p)
    out: Dict[str, Any] = {"source": source, **report.model_dump()}
    try:
        out["min_Il22_of_image"] = min_over_relabelings(bell_to_instrumental(p), "Il22")[0]
    except SignalingError as e:
        out["min_Il22_of_image"] = None
        out["image_error"] = str(e)
    return out


def _load_dag(raw: str) -> Dag:
    if raw in NAMED_DAGS:
        return NAMED_DAGS[raw]()
    with open(raw, "r", encoding="utf-8") as fh:
        return Dag.from_json_dict(json.load(fh))


@router.command(
    "exogenize",
    help="exogenized DAG G_I for intervention targets I",
    args=[
        arg("--dag", help="DAG JSON file, or one of: instrumental, bell, chain"),
        arg("--targets", help="comma-separated node names"),
    ],
)
def exogenize_command(cfg: RunConfig, run_dir: Path) -> Dict[str, Any]:
    dag = _load_dag(require_option(cfg, "dag"))
    targets = parse_list(require_option(cfg, "targets"))
    if not targets:
        raise DomainError("--targets is empty")
    out_dag = exogenize(dag, targets)
    path = write_json(artifact_path(cfg, run_dir, "exogenized.json"), out_dag.to_json_dict())
    return {
        "targets": targets,
        "nodes": [n.name for n in out_dag.nodes],
        "edges": [list(e) for e in out_dag.edges],
        "isomorphic_to_bell": dags_isomorphic(out_dag, bell_dag()),
        "file": str(path),
    }
