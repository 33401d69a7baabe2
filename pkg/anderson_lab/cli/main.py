"""Entry point of the `anderson-lab` command.

Exit codes: 0 on success, 2 for invalid configurations, 3 for numerical failures (including runs
that would go over the memory cap).
"""
from __future__ import annotations

import logging
from argparse import ArgumentParser
from logging import getLogger as get_logger
from pathlib import Path

from pydantic import ValidationError

from anderson_lab.errors import ConfigurationError, NumericalError, ResourceLimitError

from .commands import cmd_eigs, cmd_fk, cmd_gns, cmd_report, cmd_sample, cmd_sweep

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIGURATION = 2
EXIT_NUMERICAL = 3

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="anderson-lab",
        description="Numerical lab for the Anderson Hamiltonian and the parabolic Anderson model.",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="More logging (-v: info, -vv: debug)."
    )
    subparsers = parser.add_subparsers(
        title="command", description="What to compute", dest="command", required=True
    )

    run_options = ArgumentParser(add_help=False)
    run_options.add_argument("--config", type=Path, required=True, help="INI config file.")
    run_options.add_argument("--seed", type=int, default=None, help="Overrides `[mc] seed`.")
    run_options.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker processes (default: ANDERSON_LAB_WORKERS, then the CPUs of the job).",
    )
    run_options.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output directory (default: ./results). ANDERSON_LAB_OUT takes precedence.",
    )

    commands = {
        "sample": (cmd_sample, "Sample the field and dump it"),
        "eigs": (cmd_eigs, "Top eigenpairs of the Anderson Hamiltonian"),
        "fk": (cmd_fk, "Feynman-Kac total mass (and the trace check)"),
        "gns": (cmd_gns, "Variational constants, written to the constant registry"),
        "sweep": (cmd_sweep, "Sweeps in t: phase discrimination, annealed moments or scaling"),
    }
    for name, (function, summary) in commands.items():
        command_parser = subparsers.add_parser(name, help=summary, parents=[run_options])
        command_parser.set_defaults(function=function)
        if name == "gns":
            command_parser.add_argument(
                "--dims", type=int, nargs="+", default=None, help="Overrides `[variational] dims`."
            )

    report_parser = subparsers.add_parser("report", help="Summarize the runs of an output dir")
    report_parser.add_argument("--out", type=Path, default=None)
    report_parser.set_defaults(function=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    args_dict = vars(args)
    command = args_dict.pop("command")
    function = args_dict.pop("function")
    verbose = args_dict.pop("verbose")
    kwargs = args_dict

    logging.basicConfig(
        level=LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        result = function(**kwargs)
    except (ConfigurationError, ValidationError) as err:
        logger.error(f"Invalid configuration for `{command}`:\n{err}")
        return EXIT_CONFIGURATION
    except (NumericalError, ResourceLimitError) as err:
        logger.error(f"`{command}` failed:\n{err}")
        return EXIT_NUMERICAL

    if isinstance(result, str):
        print(result, end="")
    else:
        print(
            f"The outputs of the {command} run can be read from the following directory: "
            f"{result.path}"
        )
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
