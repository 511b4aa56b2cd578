"""Environment and dependency preflight checks.

Set BIPEDSWARM_SKIP_PREFLIGHT=1 to bypass (useful for development).
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from typing import Optional

MIN_PYTHON = (3, 10)
CORE_MODULES = (("numpy", "numpy"), ("scipy", "scipy"), ("pandas", "pandas"))


@dataclass(frozen=True)
class PreflightResult:
    ok: bool
    message: str


def _check_python_version() -> Optional[str]:
    if sys.version_info < MIN_PYTHON:
        found = ".".join(str(v) for v in sys.version_info[:3])
        wanted = ".".join(str(v) for v in MIN_PYTHON)
        return f"bipedswarm needs Python {wanted} or newer, found {found}."
    return None


def _check_python_deps(require_plotting: bool) -> Optional[str]:
    """Return an error message if required deps are missing."""
    for module, package in CORE_MODULES:
        try:
            __import__(module)
        except Exception as exc:  # pylint: disable=broad-except
            return (
                f"Missing Python dependency '{package}'. "
                f"Install it with pip ({package}). Underlying error: {exc}"
            )

    if require_plotting:
        try:
            import cairo  # type: ignore[import-not-found]  # noqa: F401
        except Exception as exc:  # pylint: disable=broad-except
            return (
                "Missing Python dependency 'pycairo', needed for plots. "
                "Install it with pip (pycairo) and ensure cairo is available. "
                f"Underlying error: {exc}"
            )
    return None


def run_preflight(*, require_plotting: bool = False, check_deps: bool = True) -> PreflightResult:
    """Run checks and return a structured result."""
    if os.environ.get("BIPEDSWARM_SKIP_PREFLIGHT") == "1":
        return PreflightResult(True, "Preflight skipped via BIPEDSWARM_SKIP_PREFLIGHT=1")

    version_error = _check_python_version()
    if version_error:
        return PreflightResult(False, version_error)

    if check_deps:
        dep_error = _check_python_deps(require_plotting)
        if dep_error:
            return PreflightResult(False, dep_error)

    return PreflightResult(True, "Preflight OK")


def run_preflight_or_die(*, require_plotting: bool = False, check_deps: bool = True) -> None:
    result = run_preflight(require_plotting=require_plotting, check_deps=check_deps)
    if result.ok:
        return

    sys.stderr.write("\nbipedswarm preflight check failed:\n")
    sys.stderr.write(result.message)
    sys.stderr.write("\n\n")
    sys.stderr.write(
        "Suggested setup:\n"
        "  pip install -r requirements.txt\n\n"
    )
    raise SystemExit(1)
