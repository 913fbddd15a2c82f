import csv
import json
import math
import os
import struct
import tempfile
from contextlib import contextmanager, suppress
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .cluster import EstimatedPath, PathSet
from .exceptions import DataFormatError, DomainError, SchemaError
from .forms import (
    AntennaPatternForm,
    ConfigForm,
    EvalConfigForm,
    PathForm,
    ScenarioForm,
    SceneForm,
    SounderConfigForm,
    TestPointForm,
    clean_document,
)
from .models import (
    SCHEMA_VERSION,
    AntennaPattern,
    EvalConfig,
    GroundTruthPath,
    Scenario,
    Scene,
    SounderConfig,
    TestPoint,
    power_to_db,
    preset,
)
from .params import ci_model_pl, free_space_path_loss
from .synth import Idsf


VIDS_MAGIC = b"VIDS"
VIDS_VERSION = 1
VIDS_FLAG_PROCESSED = 0x1
VIDS_HEADER = struct.Struct("<4sIIIIddddd")
VIDS_SAMPLE = np.dtype("<c8")


@contextmanager
def atomic_write(path, mode="w", **kwargs):
    """
    Write to a temporary file next to ``path`` and rename it into place on success.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **kwargs) as handle:
            yield handle
        os.replace(temporary, path)
    except BaseException:
        with suppress(FileNotFoundError):
            os.unlink(temporary)
        raise


def format_number(value):
    """
    Fixed textual form for CSV cells so reruns are byte-identical.
    """

    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".12g")


def write_csv(path, header, rows):
    with atomic_write(path, newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [cell if isinstance(cell, str) else format_number(cell) for cell in row]
            )


def write_json(path, payload):
    with atomic_write(path) as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write("\n")


def read_json(path):
    """
    Load a JSON document; unreadable files and syntax errors become DataFormatError.
    """

    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as e:
        raise DataFormatError("Error reading {}: {}".format(path, e.strerror)) from e
    except json.JSONDecodeError as e:
        raise DataFormatError(
            "Error parsing {}: {} at line {} column {}".format(path, e.msg, e.lineno, e.colno)
        ) from e


def _json_float(value):
    return None if value is None or not math.isfinite(value) else float(value)


def _json_metadata_value(value):
    if isinstance(value, np.generic):
        value = value.item()
    return _json_float(value) if isinstance(value, float) else value


def compose_scene_payload(scene):
    """
    Compose the vuca-1 JSON document for a Scene.
    """

    pattern = scene.rotating_antenna_pattern
    pattern_payload = {"kind": pattern.kind, "boresight_gain": pattern.boresight_gain}
    if pattern.kind == "cosine_power":
        pattern_payload["exponent"] = pattern.exponent
        pattern_payload["front_to_back"] = pattern.front_to_back
    return {
        "version": SCHEMA_VERSION,
        "tx_rx_distance": scene.tx_rx_distance,
        "noise_floor": _json_float(scene.noise_floor),
        "rotating_antenna_pattern": pattern_payload,
        "paths": [
            {
                "delay": path.delay,
                "azimuth": path.azimuth,
                "gain": [path.complex_gain.real, path.complex_gain.imag],
            }
            for path in scene.paths
        ],
    }


def parse_antenna_pattern(data, path):
    cleaned = clean_document(AntennaPatternForm, data, path)
    try:
        return AntennaPattern(**cleaned)
    except DomainError as e:
        raise SchemaError(path, str(e)) from e


def parse_scene_payload(data, path="$", default_distance=None):
    """
    Parse a scene document into a Scene; schema problems name the offending JSON path.
    """

    cleaned = clean_document(SceneForm, data, path)
    distance = cleaned.get("tx_rx_distance", default_distance)
    if distance is None:
        raise SchemaError(f"{path}.tx_rx_distance", "This field is required.")

    pattern = parse_antenna_pattern(
        data.get("rotating_antenna_pattern", {"kind": "isotropic"}),
        f"{path}.rotating_antenna_pattern",
    )

    raw_paths = data.get("paths", [])
    if not isinstance(raw_paths, list):
        raise SchemaError(f"{path}.paths", "expected an array")
    paths = []
    for index, item in enumerate(raw_paths):
        entry = clean_document(PathForm, item, f"{path}.paths[{index}]")
        paths.append(GroundTruthPath(entry["delay"], entry["azimuth"], entry["gain"]))

    try:
        return Scene(
            paths=tuple(paths),
            tx_rx_distance=distance,
            noise_floor=cleaned.get("noise_floor", -math.inf),
            rotating_antenna_pattern=pattern,
        )
    except DomainError as e:
        raise SchemaError(path, str(e)) from e


def compose_config_payload(sounder, evaluation):
    return {
        "version": SCHEMA_VERSION,
        "sounder": asdict(sounder),
        "evaluation": asdict(evaluation),
    }


def parse_config_payload(data, path="$"):
    """
    Parse a config document into (SounderConfig, EvalConfig).

    Without a "preset" every mandatory sounder field must be given; with one,
    the "sounder" and "evaluation" objects override preset values.
    """

    cleaned = clean_document(ConfigForm, data, path)
    base = cleaned.get("preset")
    sounder_values = clean_document(
        SounderConfigForm,
        data.get("sounder", {}),
        f"{path}.sounder",
        complete=base is None,
    )
    evaluation_values = clean_document(EvalConfigForm, data.get("evaluation", {}), f"{path}.evaluation")

    try:
        if base is None:
            sounder = SounderConfig(**sounder_values)
        else:
            sounder = replace(preset(base)[0], **sounder_values)
    except DomainError as e:
        raise SchemaError(f"{path}.sounder", str(e)) from e
    try:
        evaluation = EvalConfig.for_sounder(sounder, **evaluation_values)
        evaluation.validate_against(sounder)
    except DomainError as e:
        raise SchemaError(f"{path}.evaluation", str(e)) from e
    return sounder, evaluation


def parse_scenario_payload(data, base_dir=None, path="$"):
    """
    Parse a scenario document; test point scenes may be inline or in separate files.
    """

    cleaned = clean_document(ScenarioForm, data, path)
    sounder, evaluation = parse_config_payload(
        {key: data[key] for key in ("preset", "sounder", "evaluation") if key in data}, path
    )
    raw_points = data.get("test_points")
    if not isinstance(raw_points, list) or not raw_points:
        raise SchemaError(f"{path}.test_points", "expected a non-empty array")

    points = []
    seen = set()
    for index, item in enumerate(raw_points):
        location = f"{path}.test_points[{index}]"
        entry = clean_document(TestPointForm, item, location)
        if entry["name"] in seen:
            raise SchemaError(f"{location}.name", "duplicate test point name")
        seen.add(entry["name"])
        if "scene_file" in entry:
            scene_path = Path(base_dir or ".") / entry["scene_file"]
            scene_data = read_json(scene_path)
            scene_location = str(scene_path)
        else:
            scene_data = item.get("scene")
            scene_location = f"{location}.scene"
        scene = parse_scene_payload(scene_data, scene_location, default_distance=entry["distance"])
        points.append(TestPoint(name=entry["name"], distance=entry["distance"], scene=scene))

    return Scenario(
        name=cleaned.get("name", "scenario"),
        sounder=sounder,
        evaluation=evaluation,
        test_points=tuple(points),
        mode=cleaned.get("mode", "ideal"),
        seed=cleaned.get("seed", 0),
    )


def write_vids(path, idsf):
    """
    Write an IDSF as a little-endian VIDS file (header, then complex64 rows).
    """

    flags = VIDS_FLAG_PROCESSED if idsf.processed else 0
    header = VIDS_HEADER.pack(
        VIDS_MAGIC,
        VIDS_VERSION,
        flags,
        idsf.num_antennas,
        idsf.num_delays,
        idsf.delay_grid_start,
        idsf.delay_grid_step,
        idsf.carrier_frequency,
        idsf.vuca_radius,
        idsf.arc_coverage,
    )
    with atomic_write(path, "wb") as handle:
        handle.write(header)
        handle.write(np.ascontiguousarray(idsf.data, dtype=VIDS_SAMPLE).tobytes())


def read_vids(path):
    try:
        with open(path, "rb") as handle:
            header = handle.read(VIDS_HEADER.size)
            if len(header) != VIDS_HEADER.size:
                raise DataFormatError(f"{path}: truncated VIDS header")
            (
                magic,
                version,
                flags,
                num_antennas,
                num_delays,
                delay_start,
                delay_step,
                carrier_frequency,
                vuca_radius,
                arc_coverage,
            ) = VIDS_HEADER.unpack(header)
            if magic != VIDS_MAGIC:
                raise DataFormatError(f"{path}: not a VIDS file (magic {magic!r})")
            if version != VIDS_VERSION:
                raise DataFormatError(f"{path}: unsupported VIDS version {version}")
            count = num_antennas * num_delays
            data = np.fromfile(handle, dtype=VIDS_SAMPLE, count=count)
    except OSError as e:
        raise DataFormatError("Error reading {}: {}".format(path, e.strerror)) from e

    if data.size != count:
        raise DataFormatError(f"{path}: expected {count} samples, found {data.size}")
    return Idsf(
        data=data.reshape(num_antennas, num_delays).astype(complex),
        delay_grid_start=delay_start,
        delay_grid_step=delay_step,
        antenna_azimuths=arc_coverage * np.arange(num_antennas) / num_antennas,
        carrier_frequency=carrier_frequency,
        vuca_radius=vuca_radius,
        arc_coverage=arc_coverage,
        processed=bool(flags & VIDS_FLAG_PROCESSED),
    )


def write_profile_csv(path, profile):
    write_csv(path, ("delay_ns", "envelope_db", "min_db", "pointing_deg"), profile.to_rows())


def write_window_csv(path, window):
    write_csv(path, ("index", "coefficient"), window.to_rows())


def write_spectrum_csv(directory, delay, grid, spectrum_db):
    name = "spectrum_{:012.4f}ns.csv".format(delay * 1e9)
    write_csv(Path(directory) / name, ("azimuth_deg", "spectrum_db"), zip(grid, spectrum_db))


def write_bins_csv(path, bins, selected):
    """Every above-threshold bin estimate; ``selected`` marks the cluster maxima kept as paths."""

    write_csv(
        path,
        ("delay_ns", "azimuth_deg", "power_db", "music_peak_quality", "selected"),
        (
            (
                estimate.delay * 1e9,
                estimate.azimuth,
                power_to_db(estimate.power),
                estimate.music_peak_quality,
                int(estimate.index in selected),
            )
            for estimate in bins
        ),
    )


def compose_path_set_payload(path_set):
    return {
        "version": SCHEMA_VERSION,
        "metadata": {
            key: _json_metadata_value(value) for key, value in path_set.metadata.items()
        },
        "paths": [
            {"delay": path.delay, "azimuth": path.azimuth, "power": path.power}
            for path in path_set.paths
        ],
    }


def parse_path_set_payload(data, path="$"):
    if not isinstance(data, dict):
        raise SchemaError(path, "expected an object")
    raw_paths = data.get("paths")
    if not isinstance(raw_paths, list):
        raise SchemaError(f"{path}.paths", "expected an array")
    paths = []
    for index, item in enumerate(raw_paths):
        location = f"{path}.paths[{index}]"
        if not isinstance(item, dict):
            raise SchemaError(location, "expected an object")
        try:
            paths.append(
                EstimatedPath(
                    delay=float(item["delay"]),
                    azimuth=float(item["azimuth"]),
                    power=float(item["power"]),
                )
            )
        except KeyError as e:
            raise SchemaError(f"{location}.{e.args[0]}", "This field is required.") from e
        except (TypeError, ValueError) as e:
            raise SchemaError(location, str(e)) from e
    try:
        return PathSet(paths=tuple(paths), metadata=data.get("metadata") or {})
    except DomainError as e:
        raise SchemaError(f"{path}.paths", str(e)) from e


def write_path_set(base, path_set):
    """
    Write ``base``.json (with metadata) and ``base``.csv; returns the JSON path.
    """

    base = Path(base)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    json_path = base.with_name(base.name + ".json")
    write_json(json_path, compose_path_set_payload(path_set))
    write_csv(
        base.with_name(base.name + ".csv"),
        ("delay_ns", "azimuth_deg", "power_db"),
        ((path.delay * 1e9, path.azimuth, power_to_db(path.power)) for path in path_set.paths),
    )
    return json_path


def read_path_set(path):
    return parse_path_set_payload(read_json(path))


PARAMS_HEADER = (
    "tp",
    "distance_m",
    "num_paths",
    "total_power",
    "path_loss_db",
    "k_factor_db",
    "k_factor_conventional_db",
    "mean_delay_ns",
    "rms_ds_ns",
    "rms_as_deg",
)


def _params_cells(label, values):
    return (
        label,
        values["distance"],
        values["num_paths"],
        values["total_power"],
        values["path_loss"],
        values["k_factor"],
        values["k_factor_conventional"],
        values["mean_delay"] * 1e9,
        values["rms_ds"] * 1e9,
        values["rms_as"],
    )


def compose_params_payload(names, report):
    """
    JSON form of the parameter table; infinite K-factors become null with a flag.
    """

    rows = []
    for name, row in zip(names, report.rows):
        values = row.as_dict()
        entry = {key: _json_float(value) if isinstance(value, float) else value for key, value in values.items()}
        entry["tp"] = name
        entry["k_factor_infinite"] = math.isinf(row.k_factor)
        entry["k_factor_conventional_infinite"] = math.isinf(row.k_factor_conventional)
        rows.append(entry)
    return {"version": SCHEMA_VERSION, "rows": rows}


def compose_ci_fit_payload(report, sounder):
    payload = {
        "version": SCHEMA_VERSION,
        "status": report.ci_status,
        "carrier_frequency": sounder.carrier_frequency,
        "tx_antenna_gain": sounder.tx_antenna_gain,
        "rx_antenna_gain": sounder.rx_antenna_gain,
    }
    if report.ci_fit is not None:
        payload.update(asdict(report.ci_fit))
    return payload


def write_report(out_dir, names, path_sets, report, sounder):
    """
    Emit the parameter table, CI fit and plot-data files for a set of test points.
    """

    out_dir = Path(out_dir)
    write_csv(
        out_dir / "params.csv",
        PARAMS_HEADER,
        [_params_cells(name, row.as_dict()) for name, row in zip(names, report.rows)]
        + [_params_cells("min", report.minimum), _params_cells("max", report.maximum)],
    )
    write_json(out_dir / "params.json", compose_params_payload(names, report))
    write_json(out_dir / "ci_fit.json", compose_ci_fit_payload(report, sounder))

    write_csv(
        out_dir / "pdp.csv",
        ("tp", "delay_ns", "power_db"),
        (
            (name, path.delay * 1e9, power_to_db(path.power))
            for name, path_set in zip(names, path_sets)
            for path in path_set.paths
        ),
    )
    write_csv(
        out_dir / "delay_azimuth.csv",
        ("tp", "delay_ns", "azimuth_deg", "power_db"),
        (
            (name, path.delay * 1e9, path.azimuth, power_to_db(path.power))
            for name, path_set in zip(names, path_sets)
            for path in path_set.paths
        ),
    )
    write_csv(
        out_dir / "rose.csv",
        ("tp", "azimuth_deg", "power_db"),
        (
            (name, path.azimuth, power_to_db(path.power))
            for name, path_set in zip(names, path_sets)
            for path in path_set.paths
        ),
    )

    fit = report.ci_fit
    rows = []
    for name, row in zip(names, report.rows):
        fspl = free_space_path_loss(row.distance, sounder.carrier_frequency) if row.distance > 0 else math.nan
        if fit is not None and row.distance > 0:
            model = ci_model_pl(
                row.distance,
                sounder.carrier_frequency,
                fit.exponent,
                sounder.tx_antenna_gain,
                sounder.rx_antenna_gain,
            )
        else:
            model = math.nan
        rows.append(
            (
                name,
                row.distance,
                row.path_loss,
                row.path_loss - sounder.tx_antenna_gain - sounder.rx_antenna_gain,
                fspl,
                model,
                row.k_factor,
                row.rms_ds * 1e9,
                row.rms_as,
                row.num_paths,
            )
        )
    write_csv(
        out_dir / "params_vs_distance.csv",
        (
            "tp",
            "distance_m",
            "path_loss_db",
            "propagation_loss_db",
            "fspl_db",
            "ci_model_db",
            "k_factor_db",
            "rms_ds_ns",
            "rms_as_deg",
            "num_paths",
        ),
        rows,
    )
