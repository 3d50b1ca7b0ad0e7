# Copyright 2024 The lindket Authors - All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command-line front end: ``lindket <evolve|compare|bench|traj|metts>
--config FILE [--out CSV] [--budget-bytes N] [--seed S] [-v]``."""

import argparse
import logging

from . import experiments
from ._core import (
    ConfigError,
    ContractViolation,
    LindketError,
    MemoryBudgetError,
    StepSizeError,
)
from ._version import __version__
from .config import BenchConfig, CompareConfig, RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MEMORY = 3
EXIT_NUMERICAL = 4
EXIT_STEP_SIZE = 5

_LOADERS = {
    "evolve": RunConfig,
    "compare": CompareConfig,
    "bench": BenchConfig,
    "traj": RunConfig,
    "metts": RunConfig,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON input file")
    common.add_argument("--out", default=None, help="CSV output path (overrides Output)")
    common.add_argument(
        "--budget-bytes", type=int, default=None, help="memory budget (overrides the config)"
    )
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides Seed)")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug"
    )

    parser = argparse.ArgumentParser(
        prog="lindket", description="Lindblad master equation time evolution."
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True
    commands.add_parser("evolve", parents=[common], help="evolve a density matrix")
    commands.add_parser("compare", parents=[common], help="compare two runs with a reference")
    commands.add_parser("bench", parents=[common], help="time one step over chain lengths")
    traj = commands.add_parser("traj", parents=[common], help="quantum-jump ensemble")
    traj.add_argument("--workers", type=int, default=None, help="threads for trajectories")
    commands.add_parser("metts", parents=[common], help="METTS thermal sampling")
    return parser


def _configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def load_config(args):
    """Loads the config of a subcommand and applies the overrides."""
    try:
        cfg = _LOADERS[args.command].load(args.config)
        return cfg.with_overrides(args.seed, args.budget_bytes, args.out)
    except ContractViolation as err:
        raise ConfigError(str(err))


def run(args):
    cfg = load_config(args)
    if args.command == "evolve":
        return experiments.run_evolve(cfg)
    if args.command == "compare":
        return experiments.run_compare(cfg)
    if args.command == "bench":
        return experiments.run_bench(cfg)
    if args.command == "traj":
        return experiments.run_traj(cfg, workers=args.workers)
    return experiments.run_metts(cfg)


def exit_code(err):
    """Exit status of a library or I/O error."""
    if isinstance(err, (ConfigError, OSError)):
        return EXIT_CONFIG
    if isinstance(err, MemoryBudgetError):
        return EXIT_MEMORY
    if isinstance(err, StepSizeError):
        return EXIT_STEP_SIZE
    return EXIT_NUMERICAL


def main(argv=None):
    """
    Entry point of the ``lindket`` command.

    Returns:
        int: 0 on success, 2 for configuration and I/O errors, 3 for memory
        budget refusals, 4 for numerical failures and 5 for trajectory
        step-size violations.
    """
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        result = run(args)
    except (LindketError, OSError) as err:
        logger.error("%s", err)
        return exit_code(err)
    logger.info("%s: %d rows written to %s", args.command, result.rows, result.path)
    return EXIT_OK
