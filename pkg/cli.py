# cli.py — núcleo de la CLI: routers de comandos, RunConfig, manifest y códigos de salida
#
# Command modules declare a CommandRouter and register handlers with
# @router.command(...); main.py includes every router into one Cli.
# A handler receives the validated RunConfig and the run directory and
# returns a JSON-serializable summary.

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from errors import (
    BellioError,
    CapacityError,
    DomainError,
    ModelError,
    SignalingError,
    SolverError,
    StructuralError,
    UndefinedConditional,
)
from schemas import RunConfig
from settings import OUTPUT_DIR, SEED

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_SOLVER = 3

EXIT_CODES: Dict[type, int] = {
    DomainError: EXIT_DOMAIN,
    StructuralError: EXIT_DOMAIN,
    CapacityError: EXIT_DOMAIN,
    ModelError: EXIT_DOMAIN,
    SignalingError: EXIT_DOMAIN,
    UndefinedConditional: EXIT_DOMAIN,
    SolverError: EXIT_SOLVER,
}

VERSIONED_PACKAGES = ("numpy", "scipy", "pydantic", "networkx", "python-dotenv")
CONFIG_FIELDS = set(RunConfig.model_fields) - {"subcommand", "options"}

Handler = Callable[[RunConfig, Path], Dict[str, Any]]


# ==============================
# ROUTERS
# ==============================
def arg(*flags: str, **kwargs: Any) -> Tuple[Tuple[str, ...], Dict[str, Any]]:
    """One argparse argument spec: arg("--grid", type=int, help=...)."""
    return flags, kwargs


@dataclass
class Command:
    name: str
    handler: Handler
    help: str = ""
    args: Sequence[Tuple[Tuple[str, ...], Dict[str, Any]]] = ()
    stochastic: bool = False


@dataclass
class CommandRouter:
    tags: Sequence[str] = ()
    commands: Dict[str, Command] = field(default_factory=dict)

    def command(self, name: str, *, help: str = "", args: Sequence = (), stochastic: bool = False):
        def decorator(fn: Handler) -> Handler:
            if name in self.commands:
                raise StructuralError(f"command {name!r} registered twice")
            self.commands[name] = Command(name=name, handler=fn, help=help, args=args, stochastic=stochastic)
            return fn

        return decorator


# ==============================
# MANIFEST
# ==============================
def package_versions() -> Dict[str, Optional[str]]:
    out: Dict[str, Optional[str]] = {"python": platform.python_version()}
    for pkg in VERSIONED_PACKAGES:
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def write_manifest(run_dir: Path, manifest: Dict[str, Any]) -> Path:
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    return path


def write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
    return path


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def artifact_path(cfg: RunConfig, run_dir: Path, default_name: str) -> Path:
    """--out when given, otherwise default_name inside the run directory."""
    return Path(cfg.out) if cfg.out else run_dir / default_name


# ==============================
# APP
# ==============================
class Cli:
    def __init__(self, prog: str = "bellio"):
        self.prog = prog
        self.commands: Dict[str, Command] = {}

    def include_router(self, router: CommandRouter) -> None:
        for name, cmd in router.commands.items():
            if name in self.commands:
                raise StructuralError(f"command {name!r} defined by two routers")
            self.commands[name] = cmd

    def usage(self) -> str:
        lines = [f"usage: {self.prog} <subcommand> [options]  (or --config run.json)", "", "subcommands:"]
        width = max((len(n) for n in self.commands), default=0)
        for name in sorted(self.commands):
            lines.append(f"  {name.ljust(width)}  {self.commands[name].help}")
        return "\n".join(lines)

    def parser(self, name: str) -> argparse.ArgumentParser:
        cmd = self.commands[name]
        p = argparse.ArgumentParser(prog=f"{self.prog} {name}", description=cmd.help,
                                    argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with RunConfig fields and options")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file (default: inside the run directory)")
        for flags, kwargs in cmd.args:
            p.add_argument(*flags, **kwargs)
        return p

    def build_config(self, name: str, argv: Sequence[str]) -> RunConfig:
        ns = vars(self.parser(name).parse_args(list(argv)))
        data: Dict[str, Any] = {}
        config_path = ns.pop("config", None)
        if config_path:
            with open(config_path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            if data.get("subcommand", name) != name:
                raise DomainError(f"config file is for {data['subcommand']!r}, not {name!r}")
        options = dict(data.get("options", {}))
        fields = {k: v for k, v in data.items() if k in CONFIG_FIELDS}
        options.update({k: v for k, v in data.items() if k not in CONFIG_FIELDS | {"subcommand", "options"}})
        # flags override the config file
        for k, v in ns.items():
            if k in CONFIG_FIELDS:
                fields[k] = v
            else:
                options[k] = v
        cfg = RunConfig(subcommand=name, options=options, **fields)
        if self.commands[name].stochastic and cfg.seed is None:
            cfg = cfg.model_copy(update={"seed": SEED})
        return cfg

    def run(self, argv: Optional[Sequence[str]] = None, *, output_dir: Optional[str] = None) -> int:
        argv = list(sys.argv[1:] if argv is None else argv)
        if not argv or argv[0] not in self.commands:
            if argv and argv[0] not in ("-h", "--help"):
                print(f"unknown subcommand {argv[0]!r}", file=sys.stderr)
            print(self.usage(), file=sys.stderr)
            return EXIT_USAGE

        name, rest = argv[0], argv[1:]
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        run_dir = Path(output_dir or OUTPUT_DIR) / f"{name}-{stamp}"
        manifest: Dict[str, Any] = {
            "subcommand": name,
            "argv": argv,
            "started_at": stamp,
            "versions": package_versions(),
        }
        t0 = time.perf_counter()
        status = EXIT_OK
        cfg: Optional[RunConfig] = None
        try:
            cfg = self.build_config(name, rest)
            manifest["config"] = cfg.model_dump()
            manifest["seed"] = cfg.seed
            logger.info(f"{name}: run directory {run_dir}")
            summary = self.commands[name].handler(cfg, run_dir)
            write_json(run_dir / "result.json", summary)
            manifest["result"] = summary
            print(json.dumps(summary, indent=2))
        except SystemExit as e:
            # argparse: bad flags or --help
            status = EXIT_USAGE if e.code else EXIT_OK
        except ValidationError as e:
            status = EXIT_DOMAIN
            manifest["error"] = str(e)
            print(f"error: invalid configuration\n{e}", file=sys.stderr)
        except BellioError as e:
            status = next((code for cls, code in EXIT_CODES.items() if isinstance(e, cls)), EXIT_DOMAIN)
            manifest["error"] = f"{type(e).__name__}: {e}"
            if isinstance(e, SolverError):
                manifest["solver_report"] = e.report
            print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        except (OSError, json.JSONDecodeError) as e:
            status = EXIT_DOMAIN
            manifest["error"] = f"{type(e).__name__}: {e}"
            print(f"error: {e}", file=sys.stderr)
        except Exception as e:
            status = EXIT_SOLVER
            manifest["error"] = f"{type(e).__name__}: {e}"
            logger.exception(f"{name}: unexpected failure")
            raise
        finally:
            manifest["wall_time_s"] = round(time.perf_counter() - t0, 6)
            manifest["exit_status"] = status
            if cfg is not None and "seed" not in manifest:
                manifest["seed"] = cfg.seed
            write_manifest(run_dir, manifest)
        return status


def option(cfg: RunConfig, key: str, default: Any = None) -> Any:
    return cfg.options.get(key, default)


def require_option(cfg: RunConfig, key: str) -> Any:
    if key not in cfg.options or cfg.options[key] is None:
        raise DomainError(f"{cfg.subcommand}: --{key.replace('_', '-')} is required")
    return cfg.options[key]


def parse_list(raw: Any, cast: Callable[[str], Any] = str) -> List[Any]:
    if isinstance(raw, (list, tuple)):
        return [cast(v) for v in raw]
    return [cast(v.strip()) for v in str(raw).split(",") if v.strip()]
