"""Command-line front end.

Usage:
  bipedswarm generate --height 1.70 --mass 70 --steps 8 --seed 42 --out gait.csv
  bipedswarm check --in gait.csv
  bipedswarm plot --in gait.csv --channel com --out com.svg
  bipedswarm compare --a gait.csv --b capture.csv
  bipedswarm ik --hip 0,0,0.901 --target 0.1,0,0.05 --height 1.70

Exit status: 0 success, 1 usage error, 2 input or parse error (including a
failed check), 3 step infeasible (the partial trajectory is still written).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from bipedswarm import __version__
from bipedswarm.anthro import segment_lengths
from bipedswarm.config import RunConfig, resolve
from bipedswarm.errors import BipedSwarmError, GaitIOError, StepInfeasible
from bipedswarm.gaitgen import GaitTrajectory, Rejected, generate_gait, recheck

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _point(text: str) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected x,y,z numbers, got {text!r}") from exc
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected 3 comma-separated numbers, got {text!r}")
    return np.array(values)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise GaitIOError(f"{path}: {exc.strerror}") from exc


def _write(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise GaitIOError(f"{path}: {exc.strerror}") from exc
    logger.info("wrote %s", path)


def _run_config(args: argparse.Namespace) -> RunConfig:
    return resolve(
        getattr(args, "config", None),
        height=getattr(args, "height", None),
        mass=getattr(args, "mass", None),
        steps=getattr(args, "steps", None),
        seed=getattr(args, "seed", None),
        fitness_mode=getattr(args, "fitness_mode", None),
    )


def _load_trajectory(path: str, height: Optional[float]) -> GaitTrajectory:
    from bipedswarm.gaitio import import_trajectory

    lengths = segment_lengths(height) if height is not None else None
    return import_trajectory(_read(path), lengths)


def _summary(traj: GaitTrajectory, steps: int) -> str:
    stable = sum(1 for rec in traj if rec.stable)
    advance = traj[-1].posture.pelvis[0] - traj[0].posture.pelvis[0]
    mean_fitness = float(np.mean([rec.fitness for rec in traj]))
    return "\n".join([
        f"steps:          {steps}",
        f"records:        {len(traj)}",
        f"stable:         {100.0 * stable / len(traj):.1f}%",
        f"pelvis advance: {advance:.4f} m",
        f"mean fitness:   {mean_fitness:.4g} m",
    ])


# ==================== Commands ====================

def _cmd_generate(args: argparse.Namespace) -> int:
    from bipedswarm.gaitio import export_trajectory

    cfg = _run_config(args)
    if args.workers is not None:
        cfg = replace(cfg, swarm=replace(cfg.swarm, workers=args.workers))
        cfg.validate()
    skeleton = cfg.skeleton()

    status = EXIT_OK
    try:
        traj = generate_gait(skeleton, cfg.gait_config())
    except StepInfeasible as exc:
        traj = exc.trajectory
        sys.stderr.write(f"error: {exc}\n")
        status = EXIT_INFEASIBLE

    if traj is not None and len(traj) > 0:
        _write(args.out, export_trajectory(traj))
        if args.plot:
            from bipedswarm.plot import emit_plot

            if len(traj) >= 2:
                _write(args.plot, emit_plot(traj, "com"))
            else:
                logger.warning("not writing %s: a plot needs at least 2 records, got %d",
                               args.plot, len(traj))
        print(_summary(traj, traj[-1].step))
    return status


def _cmd_check(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    skeleton = cfg.skeleton()
    gait_cfg = cfg.gait_config()
    traj = _load_trajectory(args.input, cfg.height)

    failures = 0
    for i, rec in enumerate(traj):
        outcome = recheck(rec, skeleton.masses, skeleton.lengths, gait_cfg)
        if isinstance(outcome, Rejected):
            failures += 1
            print(f"record {i} (step {rec.step}, via {rec.via}): FAIL {outcome}")
        else:
            print(f"record {i} (step {rec.step}, via {rec.via}): pass "
                  f"(margin {outcome.report.margin:.4f} m)")
    print(f"{len(traj) - failures}/{len(traj)} records pass")
    return EXIT_OK if failures == 0 else EXIT_INPUT


def _cmd_plot(args: argparse.Namespace) -> int:
    from bipedswarm.gaitio import import_markers, is_marker_file
    from bipedswarm.plot import emit_plot

    traj = _load_trajectory(args.input, args.height)
    reference = None
    if args.reference:
        data = _read(args.reference)
        reference = import_markers(data) if is_marker_file(data) else _load_trajectory(
            args.reference, args.height)
    _write(args.out, emit_plot(traj, args.channel, reference))
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    from bipedswarm.compare import compare_trajectories
    from bipedswarm.gaitio import import_markers, is_marker_file

    a = _load_trajectory(args.a, args.height)
    data = _read(args.b)
    b = import_markers(data) if is_marker_file(data) else _load_trajectory(args.b, args.height)
    channels = args.channels.split(",") if args.channels else None
    report = compare_trajectories(a, b, channels=channels, samples=args.samples)
    print(report.format_table())
    return EXIT_OK


def _cmd_ik(args: argparse.Namespace) -> int:
    from bipedswarm.kinematics import leg_ik

    lengths = segment_lengths(args.height)
    hip, knee = leg_ik(args.hip, args.target, lengths.femur_length, lengths.tibia_length)
    print(f"{math.degrees(hip.theta):.6f} {math.degrees(knee.theta):.6f} {math.degrees(hip.alpha):.6f}")
    return EXIT_OK


# ==================== Parser ====================

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bipedswarm", description="Biped gait generation by particle swarms")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="More log output (repeat for debug)")
    parser.add_argument("-q", "--quiet", action="store_true", help="Only log errors")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def body(p: argparse.ArgumentParser) -> None:
        p.add_argument("--height", type=float, help="Body height in meters")
        p.add_argument("--mass", type=float, help="Body mass in kg")
        p.add_argument("--config", help="JSON run configuration (explicit flags win)")
        p.add_argument("--fitness-mode", dest="fitness_mode", choices=("l1", "euclid"))

    p_gen = sub.add_parser("generate", help="Generate a gait and write it as CSV")
    body(p_gen)
    p_gen.add_argument("--steps", type=int, help="Number of half-steps")
    p_gen.add_argument("--seed", type=int, help="RNG seed")
    p_gen.add_argument("--workers", type=int, help="Threads for particle evaluation")
    p_gen.add_argument("--out", required=True, help="Output trajectory CSV")
    p_gen.add_argument("--plot", help="Also write the COM plot to this SVG")
    p_gen.set_defaults(func=_cmd_generate)

    p_chk = sub.add_parser("check", help="Re-validate every record of a trajectory")
    body(p_chk)
    p_chk.add_argument("--in", dest="input", required=True, help="Trajectory CSV")
    p_chk.set_defaults(func=_cmd_check)

    p_plt = sub.add_parser("plot", help="Plot trajectory channels as SVG")
    p_plt.add_argument("--in", dest="input", required=True, help="Trajectory CSV")
    p_plt.add_argument("--channel", default="com",
                       help="Channel, group (com, pelvis, <joint>_<side>) or comma list")
    p_plt.add_argument("--reference", help="Trajectory or marker CSV drawn dashed")
    p_plt.add_argument("--height", type=float, help="Body height, enables foot channels")
    p_plt.add_argument("--out", required=True, help="Output SVG")
    p_plt.set_defaults(func=_cmd_plot)

    p_cmp = sub.add_parser("compare", help="Per-channel RMSE between two gaits")
    p_cmp.add_argument("--a", required=True, help="Trajectory CSV")
    p_cmp.add_argument("--b", required=True, help="Trajectory or marker CSV")
    p_cmp.add_argument("--channels", help="Comma-separated channel names")
    p_cmp.add_argument("--samples", type=int, default=101, help="Common grid size")
    p_cmp.add_argument("--height", type=float, help="Body height, enables foot channels")
    p_cmp.set_defaults(func=_cmd_compare)

    p_ik = sub.add_parser("ik", help="Closed-form leg solution")
    p_ik.add_argument("--hip", type=_point, required=True, help="Hip x,y,z")
    p_ik.add_argument("--target", type=_point, required=True, help="Ankle target x,y,z")
    p_ik.add_argument("--height", type=float, default=1.70, help="Body height in meters")
    p_ik.set_defaults(func=_cmd_ik)
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{parser.format_usage()}{exc}\n")
        return EXIT_USAGE
    _configure_logging(args.verbose, args.quiet)

    try:
        return int(args.func(args))
    except StepInfeasible as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INFEASIBLE
    except BipedSwarmError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(run())
