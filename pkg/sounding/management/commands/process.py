from pathlib import Path

from django.conf import settings

from sounding.models import power_to_db
from sounding.pipeline import envelope_and_pdp, frequency_window, process_capture
from sounding.utils import read_vids, write_profile_csv, write_vids, write_window_csv
from sounding.waveform import calibration_from_capture, fzc_generate

from ._base import SoundingCommand


class Command(SoundingCommand):
    help = "Correlate and spectrally filter a raw capture into a processed IDSF."
    stage = "process"

    def add_arguments(self, parser):
        parser.add_argument("input", type=Path, help="Raw VIDS file.")
        self.add_config_arguments(parser)
        parser.add_argument("--out", type=Path, help="Output VIDS file.")
        parser.add_argument(
            "--calibration",
            type=Path,
            help="Raw VIDS back-to-back capture used as the system reference.",
        )
        parser.add_argument(
            "--export-window",
            type=Path,
            help="Write the frequency-domain window coefficients to this CSV.",
        )

    def run(self, *args, **options):
        sounder, evaluation = self.load_configs(options)
        source = Path(options["input"])
        raw = read_vids(source)

        calibration = None
        if options["calibration"]:
            reference = fzc_generate(sounder.sequence_length, 1)
            calibration = calibration_from_capture(read_vids(options["calibration"]).data, reference)
        if options["export_window"]:
            write_window_csv(options["export_window"], frequency_window(sounder, evaluation))

        processed = process_capture(
            raw, sounder, evaluation, calibration=calibration, workers=settings.VUCA_THREADS
        )
        out = Path(options["out"] or source.with_name(
            source.name.replace(".raw", "").removesuffix(".vids") + ".processed.vids"
        ))
        write_vids(out, processed)

        profile = envelope_and_pdp(processed)
        envelope_file = out.with_suffix(".envelope.csv")
        write_profile_csv(envelope_file, profile)
        self.stdout.write(
            f"K={processed.num_antennas} N_delay={processed.num_delays} "
            f"floor={power_to_db(profile.noise_floor):.2f}dB out={out} envelope={envelope_file}"
        )
