"""
Command-line surface.

Commands: build-mob, run, eval, export, feasibility, gen-motion, gen-scene.
Global flags: --config, --threads (also OCCU_THREADS), --seed, --verbose.
Exit codes: 0 success, 1 usage, 2 partial batch failure, 3 fatal.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from cli.error_handler import UsageError, handle_command
from core.config import LogLevel, RunConfig, load_config
from core.exceptions import EXIT_OK
from domain.metrics import render_table
from infrastructure.storage.export import EXPORT_FORMATS
from models.params import CylinderSpec
from models.synthetic import MotionKind, SceneKind
from services.batch import batch_exit_code
from services.episode_service import EpisodeService, Suite
from services.evaluation_service import EvaluationService, GridIndex
from services.export_service import ExportService
from services.feasibility_service import FeasibilityService
from services.generation_service import GenerationService
from services.mob_service import MobService

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class CommandParser(argparse.ArgumentParser):
    """Reports usage problems as exceptions so the error handler owns the exit code"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_enum(enum_type) -> Callable[[str], List]:
    def parse(text: str) -> List:
        try:
            return [enum_type(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError:
            choices = ", ".join(member.value for member in enum_type)
            raise argparse.ArgumentTypeError(f"expected a comma-separated subset of: {choices}")

    return parse


def _xy(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got '{text}'")
    if len(values) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected 'x,y', got '{text}'")
    return values


def build_parser() -> CommandParser:
    parser = CommandParser(prog="occumotion", description="Occupancy-based human motion toolkit")
    parser.add_argument("--config", type=Path, help="Run configuration file (key = value, [section] headers)")
    parser.add_argument("--threads", type=int, help="Worker threads for batch commands")
    parser.add_argument("--seed", type=int, help="Base seed")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    build = commands.add_parser("build-mob", help="Pseudo-scene grids from motion files")
    build.add_argument("motions", nargs="+", type=Path)
    build.add_argument("--unit", type=float, help="Voxel edge length (m)")
    build.add_argument("--out", type=Path)

    run = commands.add_parser("run", help="Roll out the baseline policy")
    run.add_argument("episodes", nargs="*", type=Path, help="Episode files")
    run.add_argument("--suite", type=Suite, choices=list(Suite), help="Built-in scenario family instead of files")
    run.add_argument("--count", type=int, default=10, help="Episodes of the suite")
    run.add_argument("--provider", help="Override the provider: empty | door | static:<grid> | swap:<t>")
    run.add_argument("--no-regulation", action="store_true", help="Disable field regulation (suites)")
    run.add_argument("--no-occupancy", action="store_true", help="Ignore scene occupancy (suites)")
    run.add_argument("--out", type=Path)

    evaluate = commands.add_parser("eval", help="Metrics of episode results or ground-truth motions")
    evaluate.add_argument("results", nargs="+", type=Path)
    evaluate.add_argument("--grids", type=Path, help="build-mob or gen-scene manifest")
    evaluate.add_argument("--references", type=Path, help="Directory of <episode name>.json reference motions")
    evaluate.add_argument("--out", type=Path)

    export = commands.add_parser("export", help="Grids as voxel cubes, trajectories as polylines")
    export.add_argument("inputs", nargs="+", type=Path)
    export.add_argument("--format", dest="fmt", default="ply", help=f"One of {', '.join(EXPORT_FORMATS)}")
    export.add_argument("--complement", action="store_true", help="Export the free space instead")
    export.add_argument("--hide-ceiling", type=float, metavar="Z", help="Drop voxels whose center is above Z")
    export.add_argument("--out", type=Path)

    feasibility = commands.add_parser("feasibility", help="Rigid cylinder path search over grids")
    feasibility.add_argument("grids", nargs="*", type=Path)
    feasibility.add_argument("--manifest", type=Path, help="build-mob or gen-scene manifest with start/goal")
    feasibility.add_argument("--start", type=_xy)
    feasibility.add_argument("--goal", type=_xy)
    feasibility.add_argument("--radius", type=float, help="Cylinder radius (m)")
    feasibility.add_argument("--height", type=float, help="Cylinder height (m)")
    feasibility.add_argument("--out", type=Path)

    gen_motion = commands.add_parser("gen-motion", help="Synthetic motion files")
    gen_motion.add_argument("--kinds", type=_csv_enum(MotionKind), default=list(MotionKind))
    gen_motion.add_argument("--count", type=int, default=1, help="Motions per kind")
    gen_motion.add_argument("--duration", type=float, default=3.0)
    gen_motion.add_argument("--speed", type=float)
    gen_motion.add_argument("--fps", type=float, default=30.0)
    gen_motion.add_argument("--out", type=Path)

    gen_scene = commands.add_parser("gen-scene", help="Synthetic scene grids")
    gen_scene.add_argument("--kinds", type=_csv_enum(SceneKind), default=list(SceneKind))
    gen_scene.add_argument("--count", type=int, default=1, help="Scenes per kind")
    gen_scene.add_argument("--out", type=Path)
    return parser


def _out(args, config: RunConfig, name: str) -> Path:
    return args.out or config.paths.output_dir / name


def cmd_build_mob(args, config: RunConfig) -> int:
    service = MobService(args.unit or config.unit, config.threads, config.metrics.contact_height)
    manifest = service.build(args.motions, _out(args, config, "mob"))
    print(f"{len(manifest.entries) - manifest.failed}/{len(manifest.entries)} grids written")
    return batch_exit_code(manifest)


def _absolute_provider(spec: Optional[str]) -> Optional[str]:
    if spec and spec.startswith("static:"):
        return f"static:{Path(spec.split(':', 1)[1]).resolve()}"
    return spec


def cmd_run(args, config: RunConfig) -> int:
    service = EpisodeService(config)
    if args.suite is not None:
        if args.episodes:
            raise UsageError("give episode files or --suite, not both")
        jobs = service.jobs_from_suite(
            args.suite, args.count, config.seed, not args.no_regulation, not args.no_occupancy
        )
    elif args.episodes:
        jobs = service.jobs_from_files(args.episodes, _absolute_provider(args.provider))
    else:
        raise UsageError("run needs episode files or --suite")
    manifest = service.run(jobs, _out(args, config, "episodes"), config.threads)
    print(f"{len(manifest.entries) - manifest.failed}/{len(manifest.entries)} episodes written")
    return batch_exit_code(manifest)


def cmd_eval(args, config: RunConfig) -> int:
    service = EvaluationService(config.metrics, GridIndex(args.grids), args.references, config.threads)
    report, manifest = service.evaluate(args.results, _out(args, config, "eval"))
    print(render_table([*report.rows, report.total]), end="")
    return batch_exit_code(manifest)


def cmd_export(args, config: RunConfig) -> int:
    service = ExportService(args.fmt, args.complement, args.hide_ceiling, config.threads)
    manifest = service.export(args.inputs, _out(args, config, "export"))
    print(f"{len(manifest.entries) - manifest.failed}/{len(manifest.entries)} files exported")
    return batch_exit_code(manifest)


def cmd_feasibility(args, config: RunConfig) -> int:
    updates: Dict[str, float] = {}
    if args.radius is not None:
        updates["radius"] = args.radius
    if args.height is not None:
        updates["height"] = args.height
    cylinder = CylinderSpec(**{**config.cylinder.model_dump(), **updates})
    service = FeasibilityService(cylinder, config.threads)
    if args.manifest is not None:
        queries = service.from_manifest(args.manifest)
    elif args.grids and args.start is not None and args.goal is not None:
        queries = service.from_grids(args.grids, args.start, args.goal)
    else:
        raise UsageError("feasibility needs --manifest, or grid files with --start and --goal")
    summary, manifest = service.analyse(queries, _out(args, config, "feasibility"))
    print(json.dumps(summary.model_dump(mode="json"), sort_keys=True))
    return batch_exit_code(manifest)


def cmd_gen_motion(args, config: RunConfig) -> int:
    service = GenerationService(config.threads)
    specs = service.motion_specs(args.kinds, args.count, config.seed, args.duration, args.speed, args.fps)
    manifest = service.motions(specs, _out(args, config, "motions"))
    print(f"{len(manifest.entries) - manifest.failed}/{len(manifest.entries)} motions written")
    return batch_exit_code(manifest)


def cmd_gen_scene(args, config: RunConfig) -> int:
    service = GenerationService(config.threads)
    specs = service.scene_specs(args.kinds, args.count, config.seed, config.unit)
    manifest = service.scenes(specs, _out(args, config, "scenes"))
    print(f"{len(manifest.entries) - manifest.failed}/{len(manifest.entries)} scenes written")
    return batch_exit_code(manifest)


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "build-mob": cmd_build_mob,
    "run": cmd_run,
    "eval": cmd_eval,
    "export": cmd_export,
    "feasibility": cmd_feasibility,
    "gen-motion": cmd_gen_motion,
    "gen-scene": cmd_gen_scene,
}


def configure_logging(level: LogLevel) -> None:
    logging.basicConfig(
        level=getattr(logging, level.value),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config, {"threads": args.threads, "seed": args.seed})
    configure_logging(LogLevel.DEBUG if args.verbose else config.log_level)
    logger.debug(f"Command {args.command} with {config.threads} threads, seed {config.seed}")
    code = COMMANDS[args.command](args, config)
    return EXIT_OK if code is None else code


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    debug = argv is not None and "--verbose" in argv
    return handle_command(lambda: dispatch(argv), debug=debug)
