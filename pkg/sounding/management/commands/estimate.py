import functools
from pathlib import Path

from sounding.exceptions import DataFormatError
from sounding.models import PATTERN_CHOICES, AntennaPattern
from sounding.pipeline import estimate_paths
from sounding.utils import read_vids, write_bins_csv, write_path_set, write_spectrum_csv

from ._base import SoundingCommand


class Command(SoundingCommand):
    help = "Estimate discrete paths (delay, azimuth, power) from a processed IDSF."
    stage = "estimate"

    def add_arguments(self, parser):
        parser.add_argument("input", type=Path, help="Processed VIDS file.")
        self.add_config_arguments(parser)
        parser.add_argument(
            "--pattern", choices=[kind for kind, _ in PATTERN_CHOICES], default="isotropic"
        )
        parser.add_argument("--boresight-gain", type=float, default=0.0, help="dBi.")
        parser.add_argument("--exponent", type=float, help="cosine_power exponent q.")
        parser.add_argument("--front-to-back", type=float, default=30.0, help="dB.")
        parser.add_argument("--out", type=Path, help="Output base name for .json and .csv.")
        parser.add_argument(
            "--debug-spectrum",
            type=Path,
            metavar="DIR",
            help="Write the MUSIC pseudo-spectrum of every estimated bin into DIR.",
        )

    def run(self, *args, **options):
        sounder, evaluation = self.load_configs(options)
        source = Path(options["input"])
        processed = read_vids(source)
        if not processed.matches(sounder):
            raise DataFormatError(
                f"config mismatch: capture K={processed.num_antennas} "
                f"f0={processed.carrier_frequency:.6g} Hz does not fit sounder {sounder.name!r}"
            )
        pattern = AntennaPattern(
            kind=options["pattern"],
            boresight_gain=options["boresight_gain"],
            exponent=options["exponent"],
            front_to_back=options["front_to_back"],
        )

        spectrum_sink = None
        if options["debug_spectrum"]:
            spectrum_sink = functools.partial(write_spectrum_csv, options["debug_spectrum"])
        estimated = {}
        path_set = estimate_paths(
            processed,
            evaluation,
            pattern,
            spectrum_sink=spectrum_sink,
            bin_sink=lambda bins, selected: estimated.update(bins=bins, selected=selected),
        )
        out = options["out"] or source.with_name(
            source.name.removesuffix(".vids").replace(".processed", "") + ".paths"
        )
        paths_file = write_path_set(out, path_set)
        write_bins_csv(paths_file.with_suffix(".bins.csv"), estimated["bins"], estimated["selected"])
        self.stdout.write(f"paths={len(path_set)} out={paths_file}")
        if path_set.metadata.get("noise_limited"):
            self.stderr.write("warning: estimates lie close to the noise floor")
