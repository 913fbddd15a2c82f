import argparse
import functools
import sys
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from sounding.exceptions import EXIT_NUMERIC, EXIT_USAGE, NUMERIC_FAILURES, SoundingError
from sounding.models import PRESETS, preset
from sounding.utils import parse_config_payload, read_json


def _usage_error(parser, message):
    if parser.called_from_command_line:
        parser.print_usage(sys.stderr)
        parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
    raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


def seed(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {value!r}") from None
    if number < 0:
        raise argparse.ArgumentTypeError("seed must be a non-negative integer")
    return number


class SoundingCommand(BaseCommand):
    """
    Base for the sounding subcommands.

    Subclasses implement ``run``. Sounding errors leave the command as a
    single ``stage=<name> code=<n> <message>`` line with the matching exit code;
    argument errors exit with 1.
    """

    stage = "cli"

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = functools.partial(_usage_error, parser)
        return parser

    def add_config_arguments(self, parser):
        group = parser.add_mutually_exclusive_group()
        group.add_argument(
            "--preset",
            choices=sorted(PRESETS),
            help=f"Named sounder setup (default: {settings.VUCA_DEFAULT_PRESET}).",
        )
        group.add_argument(
            "--config",
            type=Path,
            help="vuca-1 config JSON; may name a preset and override its fields.",
        )

    def load_configs(self, options):
        if options.get("config"):
            return parse_config_payload(read_json(options["config"]))
        return preset(options.get("preset") or settings.VUCA_DEFAULT_PRESET)

    def handle(self, *args, **options):
        try:
            self.run(*args, **options)
        except SoundingError as e:
            stage = getattr(e, "stage", self.stage)
            raise CommandError(
                f"stage={stage} code={e.exit_code} {e}", returncode=e.exit_code
            ) from e
        except NUMERIC_FAILURES as e:
            raise CommandError(
                f"stage={self.stage} code={EXIT_NUMERIC} {type(e).__name__}: {e}",
                returncode=EXIT_NUMERIC,
            ) from e

    def run(self, *args, **options):
        raise NotImplementedError("subclasses of SoundingCommand must provide a run() method")
