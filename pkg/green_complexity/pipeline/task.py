import argparse
import logging
import os
import sys

from green_complexity.pipeline.pipeline import run_pipeline, write_error_report
from green_complexity.src.config import DEFAULT_OUTPUT_DIR, METHODS, STAGES, RunConfig, default_config_json
from green_complexity.src.data.codes import SCHEMES
from green_complexity.src.errors import ConfigError, GreenComplexityError

logger = logging.getLogger(__name__)

EXIT_OK = 0
LOG_FORMAT = "%(levelname)s - %(message)s"

# command-line flag -> configuration key
OVERRIDES = {
    "out": "output_dir",
    "trade": "trade",
    "patents": "patents",
    "layer": "layer",
    "period": "period",
    "digits": "digits",
    "threshold": "threshold",
    "method": "methods",
    "tol": "tol",
    "max_iter": "max_iter",
    "scale": "scale",
    "reference": "reference",
    "exogenous_q": "exogenous_q",
    "exogenous_pci": "exogenous_pci",
    "lag": "lag",
    "samples": "samples",
    "alpha": "alpha",
    "correction": "correction",
    "seed": "seed",
    "green_list": "green_list",
    "green_scheme": "green_scheme",
    "cutoff": "proximity_cutoff",
}


def _common_arguments():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration", default=None)
    common.add_argument("--out", help="output directory", default=None)
    common.add_argument("--trade", help="trade record file", default=None)
    common.add_argument("--patents", help="patent record file", default=None)
    common.add_argument("--layer", choices=["trade", "technology"], default=None)
    common.add_argument("--period", type=int, default=None)
    common.add_argument("--digits", type=int, default=None, help="code aggregation depth")
    common.add_argument("--threshold", type=float, default=None, help="RCA threshold")
    common.add_argument("--method", choices=METHODS, action="append", default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    common.add_argument("--scale", choices=["mean-one", "dummy", "reference"], default=None)
    common.add_argument("--reference", default=None, help="reference geo for --scale reference")
    common.add_argument("--exogenous-q", dest="exogenous_q", default=None,
                        help="activity complexity table for exogenous fitness")
    common.add_argument("--exogenous-pci", dest="exogenous_pci", default=None,
                        help="activity PCI table for exogenous ECI")
    common.add_argument("--lag", type=int, default=None)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--alpha", type=float, default=None)
    common.add_argument("--correction", choices=["bonferroni", "bh-fdr"], default=None)
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    common.add_argument("--green-list", dest="green_list", default=None,
                        help="green list file or built-in list name")
    common.add_argument("--green-scheme", dest="green_scheme", choices=SCHEMES, default=None,
                        help="code scheme of a green list file")
    common.add_argument("--cutoff", type=float, default=None, help="proximity cutoff for plot data")
    common.add_argument("--verbose", "-v", action="store_true")
    return common


def build_parser():
    parser = argparse.ArgumentParser(
        prog="green-complexity",
        description="Economic complexity and green transition metrics",
    )
    parser.add_argument("--print-default-config", action="store_true",
                        help="print the default configuration and exit")
    commands = parser.add_subparsers(dest="command")
    common = _common_arguments()
    for stage in STAGES:
        sub = commands.add_parser(stage, parents=[common], help=f"run the {stage} stage")
        if stage == "green":
            sub.add_argument("action", nargs="?", choices=["score"],
                             help="score from explicit files instead of upstream stages")
            sub.add_argument("--pci", default=None, help="PCI score table")
            sub.add_argument("--proximity", default=None, help="proximity table")
            sub.add_argument("--matrix", default=None, help="binary specialization matrix")
    commands.add_parser("run", parents=[common], help="run every configured stage")
    return parser


def load_config(args):
    config = RunConfig.from_json(args.config) if args.config else RunConfig()
    values = {key: getattr(args, flag, None) for flag, key in OVERRIDES.items()}
    return config.override(**values)


def _score_inputs(args):
    inputs = {"pci": args.pci, "proximity": args.proximity, "matrix": args.matrix}
    for name, path in inputs.items():
        if path and not os.path.isfile(path):
            raise ConfigError(f"--{name} file {path} does not exist")
    if not args.pci or not args.proximity:
        raise ConfigError("green score needs --pci and --proximity")
    return inputs


def execute(args):
    output_dir = args.out or DEFAULT_OUTPUT_DIR
    try:
        config = load_config(args)
        output_dir = config.output_dir
        if args.command == "run":
            run_pipeline(config)
        elif args.command == "green" and args.action == "score":
            run_pipeline(config, ["green"], inputs=_score_inputs(args), validate=False)
        else:
            run_pipeline(config, [args.command])
    except Exception as e:
        write_error_report(e, output_dir)
        raise
    logger.info("done; outputs in %s", output_dir)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_default_config:
        print(default_config_json())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return ConfigError.exit_code
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format=LOG_FORMAT,
    )
    try:
        execute(args)
    except GreenComplexityError as e:
        logger.error("%s", e)
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
