"""Entry point for ``python -m bipedswarm``."""

from bipedswarm.launcher import main


if __name__ == "__main__":
    raise SystemExit(main())
