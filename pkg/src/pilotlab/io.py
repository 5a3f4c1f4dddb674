"""Deterministic file exports: CSV tables, binary snapshots, run manifests.

Floats are written with repr round-tripping so re-running an experiment with
the same configuration reproduces every output byte for byte, independent of
locale or thread count.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import Ensemble, ScreenRecord
from .errors import GridMismatchError
from .grid import Grid, WaveFunction

#: Bumped on any change to an emitted file layout.
SCHEMA_VERSION = 1

_AXIS_NAMES = ("x", "y")


def fmt(value) -> str:
    """Shortest decimal string that round-trips to the same float."""
    v = float(value)
    if np.isnan(v):
        return "nan"
    return repr(v)


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# --- wavefunctions ----------------------------------------------------------


def export_wavefunction_csv(wf: WaveFunction, path) -> None:
    """One row per grid point: coordinates, re, im, density, phase."""
    grid = wf.grid
    coords = [c.ravel() for c in grid.meshgrid()]
    psi = wf.psi.ravel()
    dens = np.abs(psi) ** 2
    phase = np.angle(psi)
    header = list(_AXIS_NAMES[: grid.dims]) + ["re", "im", "density", "phase"]
    rows = (
        [fmt(c[i]) for c in coords]
        + [fmt(psi[i].real), fmt(psi[i].imag), fmt(dens[i]), fmt(phase[i])]
        for i in range(psi.size)
    )
    _write_rows(path, header, rows)


def save_wavefunction(wf: WaveFunction, path) -> None:
    """Self-describing snapshot: JSON header line + raw complex128 payload."""
    grid = wf.grid
    header = {
        "schema_version": SCHEMA_VERSION,
        "kind": "wavefunction",
        "extents": [list(e) for e in grid.extents],
        "shape": list(grid.shape),
        "mass": wf.mass,
        "hbar": wf.hbar,
        "dtype": "complex128",
    }
    payload = np.ascontiguousarray(wf.psi, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode())
        fh.write(b"\n")
        fh.write(payload.tobytes())


def load_wavefunction(path) -> WaveFunction:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = fh.read()
    if header.get("kind") != "wavefunction":
        raise ValueError(f"{path}: not a wavefunction snapshot")
    grid = Grid(
        extents=tuple(tuple(e) for e in header["extents"]),
        shape=tuple(header["shape"]),
    )
    psi = np.frombuffer(raw, dtype=np.complex128).reshape(grid.shape)
    return WaveFunction(grid, psi.copy(), mass=header["mass"], hbar=header["hbar"])


def roundtrip_equal(a: WaveFunction, b: WaveFunction) -> bool:
    if a.grid != b.grid:
        raise GridMismatchError("snapshots live on different grids")
    return bool(np.array_equal(a.psi, b.psi)) and a.mass == b.mass and a.hbar == b.hbar


# --- ensembles and screens --------------------------------------------------


def export_ensemble_csv(ens: Ensemble, path) -> None:
    """Long-format table: trajectory id, t, then one column per axis."""
    header = ["trajectory", "t"] + list(_AXIS_NAMES[: ens.dims])
    rows = (
        [str(i), fmt(ens.times[s])] + [fmt(ens.positions[i, s, a]) for a in range(ens.dims)]
        for i in range(ens.size)
        for s in range(ens.times.size)
    )
    _write_rows(path, header, rows)


def export_screen_csv(rec: ScreenRecord, path) -> None:
    header = ["trajectory", "crossed", "t"] + list(_AXIS_NAMES[: rec.positions.shape[1]])
    rows = (
        [str(i), str(int(rec.crossed[i])), fmt(rec.times[i])]
        + [fmt(rec.positions[i, a]) for a in range(rec.positions.shape[1])]
        for i in range(rec.crossed.size)
    )
    _write_rows(path, header, rows)


def ensemble_summary(ens: Ensemble, rec: ScreenRecord | None = None) -> dict:
    """JSON-ready run summary: law, seed, error counts, screen statistics."""
    out = {
        "schema_version": SCHEMA_VERSION,
        "law": ens.law,
        "seed": ens.base_seed,
        "size": ens.size,
        "errors": {k: len(v) for k, v in ens.error_indices().items()},
    }
    if rec is not None:
        crossed = rec.positions[rec.crossed]
        out["screen"] = {
            "crossed": int(rec.crossed.sum()),
            "mean": [float(v) for v in crossed.mean(axis=0)] if crossed.size else None,
            "std": [float(v) for v in crossed.std(axis=0)] if crossed.size else None,
        }
    return out


# --- weak measurement tables ------------------------------------------------


def export_weak_run_csv(run, path, report=None) -> None:
    """Per-bin conditional statistics, with the backward-map comparison when
    a trajectory report is supplied."""
    header = ["bin_center", "population", "e_y", "se_y"]
    if report is not None:
        header += ["mean_x0", "delta", "delta_over_se"]
    rows = []
    for b in range(run.e_y.size):
        row = [fmt(run.probe[b]), str(int(run.population[b])), fmt(run.e_y[b]), fmt(run.se_y[b])]
        if report is not None:
            row += [fmt(run.mean_x0[b]), fmt(report.delta[b]), fmt(report.zscore[b])]
        rows.append(row)
    _write_rows(path, header, rows)


def export_velocity_field_csv(field, reference, path) -> None:
    """Operational velocity against the phase-gradient reference, per probe."""
    header = ["x", "v_weak", "se", "v_guidance", "residual"]
    rows = (
        [fmt(field.probe[i]), fmt(field.velocity[i]), fmt(field.se[i]),
         fmt(reference[i]), fmt(field.residual[i])]
        for i in range(field.probe.size)
    )
    _write_rows(path, header, rows)


# --- manifests --------------------------------------------------------------


def write_manifest(path, experiment: str, config: dict, outputs: list[str]) -> None:
    """Config + seeds + schema version; no timestamps, so reruns are stable."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "config": config,
        "outputs": sorted(outputs),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema version {doc.get('schema_version')}")
    return doc
