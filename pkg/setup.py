#!/usr/bin/env python3
"""Setup script for bipedswarm."""

import os
import sys
from setuptools import setup, find_packages


def _run_install_preflight() -> None:
    """Fail fast on unsupported interpreters.

    Note: installing from a wheel will not execute setup.py, so we also
    enforce this at runtime via `bipedswarm.launcher`.
    """
    if os.environ.get("BIPEDSWARM_SKIP_PREFLIGHT") == "1":
        return
    try:
        from bipedswarm.preflight import run_preflight_or_die
        # Do NOT require Python deps before pip has had a chance to install them.
        run_preflight_or_die(check_deps=False)
    except SystemExit:
        raise
    except Exception as exc:  # pylint: disable=broad-except
        sys.stderr.write("\nbipedswarm preflight error while installing:\n")
        sys.stderr.write(str(exc) + "\n")
        raise SystemExit(1)


_run_install_preflight()

setup(
    name="bipedswarm",
    version="1.0.0",
    description="Statically stable biped gait generation with hierarchical particle swarms",
    author="bipedswarm Project",
    license="MIT",
    packages=find_packages(exclude=("tests", "tests.*")),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pandas>=1.5",
        "pycairo>=1.25.0",
    ],
    extras_require={
        "test": ["pytest>=7.0"],
    },
    entry_points={
        "console_scripts": [
            "bipedswarm=bipedswarm.launcher:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering",
    ],
)
