"""CSV/JSON export of fields, trajectories and reports."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .spectral import Field, Grid, Side, Trajectory

HEADER_PREFIX = "# "


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan; keep them readable
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(_to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def stable_hash(obj) -> str:
    text = json.dumps(_to_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_field_csv(field: Field, path, extra: dict | None = None) -> None:
    g = field.grid
    meta = {"grid": g.as_dict(), "side": field.side.value}
    if extra:
        meta.update(extra)
    names = ["i", "j"][: g.d] + ["re", "im"]
    with open(path, "w", newline="") as fh:
        fh.write(HEADER_PREFIX + json.dumps(_to_jsonable(meta), sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(names)
        for idx in np.ndindex(*g.shape):
            v = field.values[idx]
            w.writerow(list(idx) + [repr(float(v.real)), repr(float(v.imag))])


def read_field_csv(path) -> Field:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith(HEADER_PREFIX):
            raise ValueError(f"{path}: missing JSON header block")
        meta = json.loads(first[len(HEADER_PREFIX):])
        rows = list(csv.reader(fh))[1:]
    gd = meta["grid"]
    g = Grid(gd["d"], gd["n"], gd["L"])
    vals = np.zeros(g.shape, dtype=complex)
    for r in rows:
        idx = tuple(int(c) for c in r[: g.d])
        vals[idx] = float(r[g.d]) + 1j * float(r[g.d + 1])
    return Field(g, vals, Side(meta["side"]))


def write_trajectory(traj: Trajectory, directory, config_hash: str = "") -> Path:
    """One field CSV per recorded time plus manifest.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for k, (t, f) in enumerate(zip(traj.times, traj)):
        name = f"field_{k:04d}.csv"
        write_field_csv(f, directory / name, {"t": float(t)})
        files.append(name)
    manifest = {
        "times": [float(t) for t in traj.times],
        "grid": traj.grid.as_dict(),
        "config_hash": config_hash,
        "files": files,
    }
    write_json(directory / "manifest.json", manifest)
    return directory / "manifest.json"


def read_trajectory(directory) -> Trajectory:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    fields = [read_field_csv(directory / name) for name in manifest["files"]]
    return Trajectory(fields[0].grid, manifest["times"], np.stack([f.values for f in fields]))
