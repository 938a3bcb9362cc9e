"""CSV time series and INI scenario files.

CSV layout: one ``#`` schema line, then a header row, then one row per
recorded sample. Floats are written with ``repr`` (shortest round-trip form),
so a file reproduces the simulated values exactly and identical configs give
identical bytes.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import io
from pathlib import Path

import numpy as np

from ..el_model import RobotGeometry
from .scenarios import CATALOG, ConfigError, ScenarioConfig, SimulationResult, get_scenario

SCHEMA = "pbdrem.timeseries/1"


def csv_columns(result: SimulationResult) -> list[str]:
    w = result.layout.w
    return ["t", *result.names, *(f"theta_tilde_{i + 1}" for i in range(w))]


def csv_table(result: SimulationResult) -> np.ndarray:
    return np.column_stack([result.t, result.signals, result.theta_tilde()])


def _fmt(v: float) -> str:
    return repr(float(v))


def to_csv(result: SimulationResult) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA} scenario={result.config.name}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_columns(result))
    for row in csv_table(result):
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(result: SimulationResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(result))
    return path


def read_csv(path) -> tuple[str, list[str], np.ndarray]:
    """Return ``(schema, columns, data)`` of a file written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema line")
        schema = first.split()[1].split("=", 1)[1]
        reader = csv.reader(fh)
        columns = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return schema, columns, data.reshape(-1, len(columns))


# ---------------------------------------------------------------------------
# INI scenario files


_GEOMETRY_KEYS = {f.name for f in dataclasses.fields(RobotGeometry)}
_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _coerce(name: str, raw: str, current):
    raw = raw.strip()
    if name == "theta_hat0":
        return None if raw.lower() in ("", "none") else tuple(float(v) for v in raw.split(","))
    if name == "out":
        return raw or None
    if isinstance(current, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(current, tuple):
        return tuple(float(v) for v in raw.split(","))
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def config_from_section(name: str, section) -> ScenarioConfig:
    """Build a scenario from one INI section.

    ``base`` names a catalog scenario to start from (default: the section
    name itself if it is in the catalog, else the plain defaults). Other keys
    override config fields; ``l1, l2, m1, m2, g`` set the geometry.
    """
    base_name = section.get("base", name if name in CATALOG else None)
    base = get_scenario(base_name) if base_name else ScenarioConfig()
    changes, geom, errors = {"name": name}, {}, {}
    for key, raw in section.items():
        if key == "base":
            continue
        try:
            if key in _GEOMETRY_KEYS:
                geom[key] = float(raw)
            elif key in _FIELDS and key not in ("name", "geometry"):
                changes[key] = _coerce(key, raw, getattr(base, key))
            else:
                errors[key] = "unknown key"
        except ValueError as exc:
            errors[key] = str(exc)
    if geom:
        try:
            changes["geometry"] = dataclasses.replace(base.geometry, **geom)
        except ValueError as exc:
            errors["geometry"] = str(exc)
    cfg = None
    try:
        cfg = base.replace(**changes)
    except ConfigError as exc:
        errors.update(exc.errors)
    if errors:
        raise ConfigError({f"[{name}] {k}": v for k, v in errors.items()})
    return cfg


def load_config_file(path) -> list[ScenarioConfig]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.sections():
        raise ConfigError({"file": f"{path}: no scenario sections"})
    return [config_from_section(name, parser[name]) for name in parser.sections()]
