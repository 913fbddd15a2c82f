import logging
from pathlib import Path

import numpy as np
from celery import group
from django.conf import settings

from sounding.params import summarize
from sounding.tasks import run_test_point
from sounding.utils import (
    compose_config_payload,
    compose_scene_payload,
    parse_scenario_payload,
    read_json,
    read_path_set,
    write_report,
)

from ._base import SoundingCommand, seed


logger = logging.getLogger("sounding.e2e")


def point_seed(scenario_seed, index):
    """Independent, reproducible noise seed for the test point at ``index``."""

    return int(np.random.SeedSequence([scenario_seed, index]).generate_state(1)[0])


class Command(SoundingCommand):
    help = "Run synth, process, estimate and report for every test point of a scenario."
    stage = "scenario"

    def add_arguments(self, parser):
        parser.add_argument(
            "scenario",
            type=Path,
            nargs="?",
            help="vuca-1 scenario JSON (default: the bundled atrium demo).",
        )
        parser.add_argument("--out", type=Path, help="Output directory.")
        parser.add_argument("--seed", type=seed, help="Overrides the scenario seed.")
        parser.add_argument(
            "--keep-idsf", action="store_true", help="Also write raw and processed VIDS files."
        )

    def run(self, *args, **options):
        scenario_file = Path(
            options["scenario"] or Path(settings.VUCA_SCENARIO_DIR) / "atrium_demo.json"
        )
        scenario = parse_scenario_payload(read_json(scenario_file), base_dir=scenario_file.parent)
        scenario_seed = scenario.seed if options["seed"] is None else options["seed"]
        out = Path(options["out"] or Path(settings.VUCA_OUTPUT_DIR) / scenario.name)
        out.mkdir(parents=True, exist_ok=True)

        config_payload = compose_config_payload(scenario.sounder, scenario.evaluation)
        jobs = group(
            [
                run_test_point.s(
                    point.name,
                    compose_scene_payload(point.scene),
                    config_payload,
                    scenario.mode,
                    point_seed(scenario_seed, index),
                    str(out),
                    options["keep_idsf"],
                )
                for index, point in enumerate(scenario.test_points)
            ]
        )
        logger.info("running %d test points of %s", len(scenario.test_points), scenario.name)
        results = jobs.apply_async().get()

        self.stage = "report"
        path_sets = [read_path_set(result["paths_file"]) for result in results]
        names = [point.name for point in scenario.test_points]
        report = summarize(
            [(path_set, point.distance) for path_set, point in zip(path_sets, scenario.test_points)],
            scenario.sounder,
        )
        write_report(out, names, path_sets, report, scenario.sounder)

        for name, row in zip(names, report.rows):
            self.stdout.write(
                f"{name}: d={row.distance:.2f}m paths={row.num_paths} PL={row.path_loss:.2f}dB"
            )
        fit = report.ci_fit
        self.stdout.write(
            f"ci={report.ci_status}" + (f" n={fit.exponent:.4f}" if fit else "") + f" out={out}"
        )
