# main.py — punto de entrada de bellio
#
#   python main.py <subcommand> [options]
#   python main.py --help

from __future__ import annotations

import sys

from cli import Cli
from mappings_router import router as mappings_router
from polytope_router import router as polytope_router
from quantum_router import router as quantum_router
from settings import configure_logging
from steering_router import router as steering_router

app = Cli(prog="bellio")
app.include_router(polytope_router)
app.include_router(quantum_router)
app.include_router(mappings_router)
app.include_router(steering_router)


def main() -> int:
    configure_logging()
    return app.run()


if __name__ == "__main__":
    sys.exit(main())
