import argparse
import logging
import sys

from dotenv import load_dotenv

from cli.commands import bench_command, fdr_command, fit_command, simulate_command

load_dotenv()


def create_parser() -> argparse.ArgumentParser:
    """
    Create and configure the command line parser

    Returns:
        argparse.ArgumentParser: Parser with the fit, fdr, simulate and bench sub-commands
    """
    parser = argparse.ArgumentParser(
        prog='fdrmix',
        description="Local fdr with a Gaussian empirical null and a smoothed log-concave alternative",
    )
    parser.add_argument('--verbose', '-v', action='store_true', help="progress output and INFO logging")
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    fit_command.register(subparsers)
    fdr_command.register(subparsers)
    simulate_command.register(subparsers)
    bench_command.register(subparsers)
    return parser


def main(argv=None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.verbose:
        logging.getLogger('services').setLevel(logging.INFO)
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
