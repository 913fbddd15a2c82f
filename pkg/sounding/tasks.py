from pathlib import Path

from celery import shared_task
from celery.utils.log import get_task_logger
from django.conf import settings

from .exceptions import NUMERIC_FAILURES, NumericError, SoundingError
from .pipeline import envelope_and_pdp, estimate_paths, process_capture
from .synth import synthesize_idsf
from .utils import (
    parse_config_payload,
    parse_scene_payload,
    write_bins_csv,
    write_path_set,
    write_profile_csv,
    write_vids,
)


logger = get_task_logger(__name__)


@shared_task(bind=True)
def run_test_point(
    self, name, scene_payload, config_payload, mode="ideal", seed=0, out_dir=".", keep_idsf=False
):
    """
    Synthesize, process and estimate one test point; returns where its path set went.

    Failures carry the name of the stage they happened in as ``stage``.
    """

    out_dir = Path(out_dir)
    stage = "config"
    try:
        sounder, evaluation = parse_config_payload(config_payload)
        workers = settings.VUCA_THREADS

        stage = "synth"
        scene = parse_scene_payload(scene_payload, f"$.test_points[{name}].scene")
        raw = synthesize_idsf(
            scene, sounder, mode=mode, noise_seed=seed, evaluation=evaluation, workers=workers
        )
        if keep_idsf:
            write_vids(out_dir / f"{name}.raw.vids", raw)

        stage = "process"
        processed = process_capture(raw, sounder, evaluation, workers=workers)
        del raw
        profile = envelope_and_pdp(processed)
        write_profile_csv(out_dir / f"{name}.envelope.csv", profile)
        if keep_idsf:
            write_vids(out_dir / f"{name}.vids", processed)

        stage = "estimate"
        estimated = {}
        path_set = estimate_paths(
            processed,
            evaluation,
            scene.rotating_antenna_pattern,
            profile=profile,
            bin_sink=lambda bins, selected: estimated.update(bins=bins, selected=selected),
        )
        paths_file = write_path_set(out_dir / name, path_set)
        write_bins_csv(out_dir / f"{name}.bins.csv", estimated["bins"], estimated["selected"])
    except NUMERIC_FAILURES as e:
        error = NumericError(f"{type(e).__name__}: {e}")
        error.stage = stage
        logger.error("test point %s failed in %s: %s", name, stage, error)
        raise error from e
    except SoundingError as e:
        e.stage = getattr(e, "stage", stage)
        logger.error("test point %s failed in %s: %s", name, stage, e)
        raise

    logger.info("test point %s: %d paths -> %s", name, len(path_set), paths_file)
    return {
        "name": name,
        "distance": scene.tx_rx_distance,
        "paths_file": str(paths_file),
        "num_paths": len(path_set),
    }
