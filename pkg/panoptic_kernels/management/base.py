"""
Shared plumbing for the kernel management commands: flag types and the
mapping from library errors onto exit codes.
"""
import argparse
import sys

from django.core.management.base import BaseCommand, CommandError

from ..conf import default_threads
from ..exceptions import (CheckFailure, DimensionError, DomainError, FormatError,
                          KernelIndexError, RoutingError)
from ..ops.gradcheck import parse_size

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3

DATA_ERRORS = (FormatError, DimensionError, DomainError, KernelIndexError, RoutingError, OSError)


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def non_negative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must not be negative, got {value}")
    return value


def size_type(parts):
    def parse(text):
        try:
            return parse_size(text, parts)
        except DomainError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    parse.__name__ = f"size{parts}"
    return parse


class KernelCommand(BaseCommand):
    """
    Exit codes: 0 success, 1 usage error, 2 data error, 3 check failure.
    """

    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def usage_error(message):
            if not parser.called_from_command_line:
                raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)
            parser.print_usage(sys.stderr)
            parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")

        parser.error = usage_error
        return parser

    def add_threads_argument(self, parser):
        parser.add_argument("--threads", type=positive_int, default=None,
                            help="worker threads (default: PANOPTIC_KERNELS_THREADS or all cores)")

    def threads(self, options):
        return options.get("threads") or default_threads()

    def usage(self, message):
        raise CommandError(message, returncode=EXIT_USAGE)

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except CheckFailure as exc:
            raise CommandError(str(exc), returncode=EXIT_CHECK)
        except DATA_ERRORS as exc:
            raise CommandError(str(exc), returncode=EXIT_DATA)
