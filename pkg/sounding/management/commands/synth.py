from pathlib import Path

from django.conf import settings

from sounding.models import MODE_CHOICES
from sounding.synth import synthesize_idsf
from sounding.utils import parse_scene_payload, read_json, write_vids

from ._base import SoundingCommand, seed


class Command(SoundingCommand):
    help = "Synthesize a raw VUCA capture (VIDS file) from a scene JSON."
    stage = "synth"

    def add_arguments(self, parser):
        parser.add_argument("scene", type=Path, help="vuca-1 scene JSON.")
        self.add_config_arguments(parser)
        parser.add_argument("--mode", choices=[mode for mode, _ in MODE_CHOICES], default="ideal")
        parser.add_argument("--seed", type=seed, default=0, help="Noise seed.")
        parser.add_argument("--out", type=Path, help="Output VIDS file.")
        parser.add_argument(
            "--frozen",
            action="store_true",
            help="Hold the antenna still during each sequence period (full_waveform only).",
        )

    def run(self, *args, **options):
        scene_file = Path(options["scene"])
        scene = parse_scene_payload(read_json(scene_file))
        sounder, evaluation = self.load_configs(options)

        raw = synthesize_idsf(
            scene,
            sounder,
            mode=options["mode"],
            noise_seed=options["seed"],
            evaluation=evaluation,
            rotating=not options["frozen"],
            workers=settings.VUCA_THREADS,
        )
        out = Path(options["out"] or Path(settings.VUCA_OUTPUT_DIR) / f"{scene_file.stem}.raw.vids")
        write_vids(out, raw)
        self.stdout.write(
            f"K={raw.num_antennas} N_delay={raw.num_delays} seed={options['seed']} "
            f"mode={options['mode']} T_m={sounder.measurement_time:.6g}s "
            f"correlation_gain={sounder.correlation_gain_db:.1f}dB out={out}"
        )
