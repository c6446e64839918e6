"""CSV, JSON and gnuplot emission for grids, time series and boundary curves.

Every float goes through ``repr`` so it parses back to the identical double.
Grid CSVs hold only deterministic content; run-specific data such as
timestamps lives in the JSON sidecar.  All files are written to a temporary
name in the target directory and renamed into place.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

from .errors import ConfigError
from .stability import ClassifierPolicy, GridResult, GridSpec, Plane, StabilityVerdict, Verdict

CSV_COLUMNS = "x,y,verdict,max_abs,growth_rate"
_AXIS_NAMES = {Plane.DELTA_DELTA1: ("delta1", "Delta"), Plane.EPSILON_OMEGA: ("omega", "epsilon")}
_HEADER_KEYS = ("plane", "model", "mu", "epsilon", "omega_drive", "delta_cap", "alpha",
                "resonance", "x", "y")


def fmt(value) -> str:
    """Shortest round-trip text for a float; empty for None."""
    if value is None:
        return ""
    return repr(float(value))


def parse_float(text: str):
    return None if text == "" else float(text)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


_NON_FINITE = {"nan", "inf", "-inf"}


def _json_float(value):
    return float(value) if isinstance(value, str) and value in _NON_FINITE else value


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _header_value(value) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, sort_keys=True)


def grid_csv_text(result: GridResult) -> str:
    spec = result.spec.to_dict()
    xname, yname = _AXIS_NAMES[result.spec.plane]
    lines = ["# qp-tongues grid"]
    for key in _HEADER_KEYS:
        lines.append(f"# {key}={_header_value(spec[key])}")
    lines.append(f"# axes=x:{xname},y:{yname}")
    lines.append(f"# policy={json.dumps(result.policy.to_dict(), sort_keys=True)}")
    lines.append(CSV_COLUMNS)
    for _, _, x, y, v in result.cells():
        lines.append(",".join([fmt(x), fmt(y), v.kind.value, fmt(v.max_abs), fmt(v.growth_rate)]))
    return "\n".join(lines) + "\n"


def gnuplot_text(result: GridResult, csv_name: str) -> str:
    spec = result.spec
    xname, yname = _AXIS_NAMES[spec.plane]
    png = Path(csv_name).with_suffix(".png").name
    return "\n".join([
        "# render with: gnuplot " + Path(csv_name).with_suffix(".gp").name,
        "set terminal pngcairo size 800,700",
        f"set output '{png}'",
        "set datafile separator ','",
        f"set title '{spec.model.value}, mu={fmt(spec.mu)}'",
        f"set xlabel '{xname}'",
        f"set ylabel '{yname}'",
        f"set xrange [{fmt(spec.x.lo)}:{fmt(spec.x.hi)}]",
        f"set yrange [{fmt(spec.y.lo)}:{fmt(spec.y.hi)}]",
        "unset key",
        # the first data line is the column header
        f"plot '{csv_name}' every ::1 using 1:(strcol(3) eq 'divergent' ? $2 : 1/0) "
        "with points pt 5 ps 0.6 lc rgb 'black'",
        "",
    ])


def sidecar_dict(result: GridResult) -> dict:
    envelopes = []
    notes = {}
    for ix, iy, _, _, v in result.cells():
        envelopes.append(_json_safe(float(v.final_envelope)))
        if v.note is not None:
            notes[f"{iy},{ix}"] = v.note
    return {
        "spec": result.spec.to_dict(),
        "policy": result.policy.to_dict(),
        "metadata": {k: _json_safe(v) for k, v in result.metadata.items()},
        "final_envelope": envelopes,
        "notes": notes,
    }


def write_grid(result: GridResult, out_dir, stem: str) -> dict:
    """Write ``stem.csv``, ``stem.json`` and ``stem.gp`` into ``out_dir``."""
    out_dir = Path(out_dir)
    csv_path = atomic_write(out_dir / f"{stem}.csv", grid_csv_text(result))
    json_path = atomic_write(
        out_dir / f"{stem}.json", json.dumps(sidecar_dict(result), indent=2, sort_keys=True) + "\n"
    )
    gp_path = atomic_write(out_dir / f"{stem}.gp", gnuplot_text(result, csv_path.name))
    return {"csv": csv_path, "json": json_path, "gnuplot": gp_path}


def read_grid(csv_path) -> GridResult:
    """Re-read a grid CSV (and its JSON sidecar when present)."""
    csv_path = Path(csv_path)
    header = {}
    rows = []
    try:
        with open(csv_path) as fh:
            for raw in fh:
                line = raw.rstrip("\n")
                if line.startswith("#"):
                    key, sep, value = line[1:].strip().partition("=")
                    if sep:
                        header[key] = value
                elif line and line != CSV_COLUMNS:
                    rows.append(line.split(","))
    except OSError as exc:
        raise ConfigError(str(csv_path), f"cannot read grid: {exc}") from exc
    try:
        spec_dict = {}
        for key in _HEADER_KEYS:
            value = header[key]
            spec_dict[key] = value if key in ("plane", "model", "resonance") else json.loads(value)
        spec = GridSpec.from_dict(spec_dict)
        policy = ClassifierPolicy.from_dict(json.loads(header["policy"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(csv_path), f"malformed grid header: {exc}") from exc

    sidecar = csv_path.with_suffix(".json")
    envelopes, notes, metadata = None, {}, {}
    if sidecar.exists():
        data = json.loads(sidecar.read_text())
        envelopes = [_json_float(v) for v in data.get("final_envelope", [])]
        notes = data.get("notes", {})
        metadata = {k: _json_float(v) for k, v in data.get("metadata", {}).items()}

    ny, nx = spec.shape
    if len(rows) != nx * ny:
        raise ConfigError(str(csv_path), f"expected {nx * ny} rows, found {len(rows)}")
    verdicts = []
    for iy in range(ny):
        row = []
        for ix in range(nx):
            k = iy * nx + ix
            try:
                _, _, kind, max_abs, rate = rows[k]
                verdict = StabilityVerdict(
                    Verdict(kind),
                    float(max_abs),
                    parse_float(rate),
                    envelopes[k] if envelopes else float("nan"),
                    notes.get(f"{iy},{ix}"),
                )
            except ValueError as exc:
                raise ConfigError(f"{csv_path}:row {k}", str(exc)) from exc
            row.append(verdict)
        verdicts.append(tuple(row))
    return GridResult(spec, policy, tuple(verdicts), metadata)


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return fmt(value)


def table_text(columns, rows, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for r in rows:
        lines.append(",".join(_cell(v) for v in r))
    return "\n".join(lines) + "\n"


def write_table(path, columns, rows, comments=()) -> Path:
    return atomic_write(path, table_text(columns, rows, comments))
