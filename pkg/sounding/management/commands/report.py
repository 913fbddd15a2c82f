from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from sounding.exceptions import EXIT_USAGE
from sounding.params import summarize
from sounding.utils import read_path_set, write_report

from ._base import SoundingCommand


class Command(SoundingCommand):
    help = "Channel parameters, CI path-loss fit and plot data for a set of path files."
    stage = "report"

    def add_arguments(self, parser):
        self.add_config_arguments(parser)
        parser.add_argument("--paths", type=Path, nargs="+", required=True, help="PathSet JSON files.")
        parser.add_argument(
            "--distances", type=float, nargs="+", required=True, help="Tx-Rx distance per file, m."
        )
        parser.add_argument("--names", nargs="+", help="Test point labels (default: file stems).")
        parser.add_argument("--out", type=Path, help="Output directory.")

    def run(self, *args, **options):
        paths = [Path(path) for path in options["paths"]]
        distances = options["distances"]
        names = options["names"] or [path.name.removesuffix(".json") for path in paths]
        if len(paths) != len(distances) or len(paths) != len(names):
            raise CommandError(
                f"Error: got {len(paths)} path files, {len(distances)} distances "
                f"and {len(names)} names",
                returncode=EXIT_USAGE,
            )

        sounder, _ = self.load_configs(options)
        path_sets = [read_path_set(path) for path in paths]
        report = summarize(list(zip(path_sets, distances)), sounder)

        out = Path(options["out"] or Path(settings.VUCA_OUTPUT_DIR) / "report")
        write_report(out, names, path_sets, report, sounder)
        fit = report.ci_fit
        self.stdout.write(
            f"test_points={len(paths)} ci={report.ci_status}"
            + (f" n={fit.exponent:.4f}" if fit else "")
            + f" out={out}"
        )
