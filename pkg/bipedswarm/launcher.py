"""bipedswarm launcher.

Runs the preflight checks before importing the numerical modules, which
gives clearer error messages on fresh installs.
"""

from __future__ import annotations

import sys


def main(argv: list[str] | None = None) -> int:
    from bipedswarm.preflight import run_preflight_or_die

    args = sys.argv[1:] if argv is None else argv
    run_preflight_or_die(require_plotting="plot" in args or "--plot" in args, check_deps=True)

    from bipedswarm.cli import run

    return int(run(args))


if __name__ == "__main__":
    raise SystemExit(main())
