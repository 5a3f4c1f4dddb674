"""Named experiments behind the command-line driver.

Each experiment consumes a flat key-value configuration (validated against
its documented defaults), writes CSV/JSON artifacts plus an advisory plot
script into an output directory, and is deterministic: re-running with the
same configuration reproduces every data file byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import io as plio
from .discrete import box_projectors, pointer_shift_check, three_box_states, weak_value
from .dynamics import (
    BornResampling,
    DoubleSlitConfig,
    Modified,
    NelsonDiffusion,
    Standard,
    run_double_slit,
)
from .errors import ConfigError, IncompatibleRunsError
from .fields import ConstantField, EllipticSwirlField
from .grid import Grid, make_gaussian_packet
from .stats import ks_against_density, ks_two_sample
from .surreal import SurrealConfig, flip_statistics, run_surreal
from .weakmeas import (
    PointerModel,
    cor_test,
    guidance_reference,
    operational_velocity,
    weak_run_analytic,
    weak_run_monte_carlo,
)

#: Trajectory CSVs keep at most this many members; screens and statistics
#: always cover the full ensemble.
MAX_CSV_TRAJECTORIES = 200

KS_ALPHA = 0.01


def validate_config(name: str, overrides: dict) -> dict:
    """Defaults merged with overrides; unknown keys and type clashes rejected."""
    if name not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {name!r}")
    defaults = EXPERIMENTS[name][0]
    config = dict(defaults)
    for key, value in overrides.items():
        if key not in defaults:
            raise ConfigError(key, f"unknown key for experiment {name!r}")
        ref = defaults[key]
        try:
            if isinstance(ref, bool):
                coerced = bool(value)
            elif isinstance(ref, int) and not isinstance(value, bool):
                coerced = int(value)
            elif isinstance(ref, float):
                coerced = float(value)
            elif isinstance(ref, str):
                coerced = str(value)
            elif isinstance(ref, list):
                coerced = [float(v) for v in value]
            else:
                coerced = value
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, f"cannot coerce {value!r}: {exc}") from exc
        config[key] = coerced
    return config


def _law_from_config(config: dict):
    name = config["law"]
    if name == "standard":
        return Standard()
    if name == "modified":
        if "drift" in config:
            return Modified(ConstantField(components=(config["drift"],)))
        return Modified(
            EllipticSwirlField(
                amplitude=config["swirl_amplitude"],
                widths=(config["swirl_width_x"], config["swirl_width_y"]),
            )
        )
    if name == "born":
        return BornResampling(resample_dt=config["resample_dt"])
    if name == "nelson":
        return NelsonDiffusion(nu=config["nu"])
    raise ConfigError("law", f"unknown law {name!r}")


def _slit_config(config: dict) -> DoubleSlitConfig:
    return DoubleSlitConfig(
        extent=(config["extent_lo"], config["extent_hi"]),
        points=config["points"],
        slit_separation=config["slit_separation"],
        source_y=config["source_y"],
        width=config["width"],
        forward_k=config["forward_k"],
        screen_position=config["screen_position"],
        t_final=config["t_final"],
        dt_snap=config["dt_snap"],
        dt=config["dt"],
        n=config["n"],
        seed=config["seed"],
    )


def _weak_state(config: dict):
    grid = Grid.regular((config["grid_lo"], config["grid_hi"]), config["grid_points"])
    wf = make_gaussian_packet(grid, config["center"], config["width"], config["wavenumber"])
    pointer = PointerModel(
        config["pointer_sigma"],
        Grid.regular((config["pointer_lo"], config["pointer_hi"]), config["pointer_points"]),
    )
    return wf, pointer


def _dump_json(path: Path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- double-slit ------------------------------------------------------------

_DOUBLE_SLIT_DEFAULTS = {
    "law": "standard",
    "swirl_amplitude": 0.004,
    "swirl_width_x": 8.0,
    "swirl_width_y": 1.5,
    "resample_dt": 0.05,
    "nu": 0.5,
    "extent_lo": -32.0,
    "extent_hi": 32.0,
    "points": 256,
    "slit_separation": 6.0,
    "source_y": -10.0,
    "width": 1.0,
    "forward_k": 5.0,
    "screen_position": 5.0,
    "t_final": 4.4,
    "dt_snap": 0.05,
    "dt": 0.01,
    "n": 10000,
    "seed": 7,
}


def _run_double_slit(config: dict, outdir: Path) -> list[str]:
    slit = _slit_config(config)
    law = _law_from_config(config)
    ens, rec = run_double_slit(law, slit)
    keep = min(ens.size, MAX_CSV_TRAJECTORIES)
    sub = ens if keep == ens.size else type(ens)(
        ens.times, ens.positions[:keep], ens.status[:keep], ens.law, ens.base_seed
    )
    plio.export_ensemble_csv(sub, outdir / "trajectories.csv")
    plio.export_screen_csv(rec, outdir / "screen.csv")
    _dump_json(outdir / "summary.json", plio.ensemble_summary(ens, rec))
    (outdir / "plot_double_slit.py").write_text(_PLOT_DOUBLE_SLIT)
    return ["trajectories.csv", "screen.csv", "summary.json", "plot_double_slit.py"]


# --- equivariance -----------------------------------------------------------

_EQUIVARIANCE_DEFAULTS = dict(_DOUBLE_SLIT_DEFAULTS)


def _run_equivariance(config: dict, outdir: Path) -> list[str]:
    slit = _slit_config(config)
    law = _law_from_config(config)
    hist = slit.history()
    ens, _ = run_double_slit(law, slit, history=hist)
    ok = ens.ok_mask()
    checks = []
    for frac in (0.25, 0.5, 0.75):
        t = frac * slit.t_final
        ti = int(np.argmin(np.abs(ens.times - t)))
        rho = hist.density_at_time(ens.times[ti])
        pos = ens.positions[ok, ti, :]
        for axis in range(2):
            other = 1 - axis
            marg = np.trapezoid(rho, hist.grid.axis(other), axis=other)
            res = ks_against_density(pos[:, axis], hist.grid.axis(axis), marg)
            checks.append(
                {
                    "t": float(ens.times[ti]),
                    "axis": "xy"[axis],
                    "statistic": res.statistic,
                    "pvalue": res.pvalue,
                    "pass": res.pvalue > KS_ALPHA,
                }
            )
    doc = {
        "law": ens.law,
        "n": ens.size,
        "failed": int(np.count_nonzero(~ok)),
        "alpha": KS_ALPHA,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }
    _dump_json(outdir / "report.json", doc)
    rows = [
        [plio.fmt(c["t"]), c["axis"], plio.fmt(c["statistic"]), plio.fmt(c["pvalue"]), str(int(c["pass"]))]
        for c in checks
    ]
    plio._write_rows(outdir / "report.csv", ["t", "axis", "statistic", "pvalue", "pass"], rows)
    return ["report.json", "report.csv"]


# --- weak velocity ----------------------------------------------------------

_WEAK_VELOCITY_DEFAULTS = {
    "grid_lo": -30.0,
    "grid_hi": 30.0,
    "grid_points": 1024,
    "center": -1.0,
    "width": 2.0,
    "wavenumber": 1.0,
    "pointer_lo": -40.0,
    "pointer_hi": 40.0,
    "pointer_points": 512,
    "pointer_sigma": 1.0,
    "bins": 40,
    "taus": [0.025, 0.05, 0.1, 0.2],
    "mode": "analytic",
    "law": "standard",
    "drift": 0.2,
    "n": 20000,
    "seed": 7,
}


def _run_weak_velocity(config: dict, outdir: Path) -> list[str]:
    wf, pointer = _weak_state(config)
    runs = []
    for tau in config["taus"]:
        if config["mode"] == "analytic":
            runs.append(weak_run_analytic(wf, pointer, tau, bins=config["bins"]))
        elif config["mode"] == "monte-carlo":
            runs.append(
                weak_run_monte_carlo(
                    wf, pointer, _law_from_config(config), tau,
                    config["n"], config["seed"], bins=config["bins"],
                )
            )
        else:
            raise ConfigError("mode", f"unknown mode {config['mode']!r}")
    field = operational_velocity(runs)
    reference = guidance_reference(wf, field.probe)
    plio.export_velocity_field_csv(field, reference, outdir / "velocity.csv")
    defined = field.defined
    gap = np.abs(field.velocity - reference)
    _dump_json(
        outdir / "summary.json",
        {
            "mode": config["mode"],
            "law": config["law"],
            "taus": list(field.taus),
            "probes_defined": int(defined.sum()),
            "max_abs_gap": float(np.nanmax(gap[defined])) if defined.any() else None,
        },
    )
    (outdir / "plot_velocity.py").write_text(_PLOT_VELOCITY)
    return ["velocity.csv", "summary.json", "plot_velocity.py"]


# --- correspondence test ----------------------------------------------------

_COR_DEFAULTS = {
    "grid_lo": -30.0,
    "grid_hi": 30.0,
    "grid_points": 1024,
    "center": -1.0,
    "width": 2.0,
    "wavenumber": 1.0,
    "pointer_lo": -40.0,
    "pointer_hi": 40.0,
    "pointer_points": 512,
    "pointer_sigma": 1.0,
    "bins": 40,
    "tau": 0.1,
    "law": "standard",
    "drift": 0.3,
    "n": 20000,
    "seed": 11,
}


def _run_cor_test(config: dict, outdir: Path) -> list[str]:
    wf, pointer = _weak_state(config)
    run = weak_run_monte_carlo(
        wf, pointer, _law_from_config(config), config["tau"],
        config["n"], config["seed"], bins=config["bins"],
    )
    report = cor_test(run)
    plio.export_weak_run_csv(run, outdir / "cor.csv", report=report)
    _dump_json(
        outdir / "summary.json",
        {
            "law": config["law"],
            "tau": config["tau"],
            "n": config["n"],
            "n_failed": run.n_failed,
            "null_fraction": report.null_fraction(),
            "exceed_fraction": report.exceed_fraction(),
        },
    )
    (outdir / "plot_cor.py").write_text(_PLOT_COR)
    return ["cor.csv", "summary.json", "plot_cor.py"]


# --- three-box --------------------------------------------------------------

_THREE_BOX_DEFAULTS = {"sigmas": [5.0, 10.0, 20.0, 40.0]}


def _run_three_box(config: dict, outdir: Path) -> list[str]:
    pre, post = three_box_states()
    sigmas = config["sigmas"]
    header = ["operator", "re", "im"] + [f"shift_sigma_{plio.fmt(s)}" for s in sigmas]
    rows = []
    table = []
    for proj in box_projectors():
        wv = weak_value(proj, pre, post)
        shifts = [pointer_shift_check(proj, pre, post, s) for s in sigmas]
        rows.append([proj.label, plio.fmt(wv.real), plio.fmt(wv.imag)] + [plio.fmt(s) for s in shifts])
        table.append(
            {"operator": proj.label, "re": wv.real, "im": wv.imag, "shifts": shifts}
        )
    plio._write_rows(outdir / "weak_values.csv", header, rows)
    _dump_json(outdir / "summary.json", {"sigmas": list(sigmas), "values": table})
    return ["weak_values.csv", "summary.json"]


# --- surreal ----------------------------------------------------------------

_SURREAL_DEFAULTS = {
    "mode": "spin-only",
    "packet_offset": 8.0,
    "width": 1.0,
    "speed": 4.0,
    "t_final": 4.0,
    "dt_snap": 0.05,
    "dt": 0.01,
    "spin_sites": 4,
    "weight_left": 0.5,
    "n": 1000,
    "seed": 0,
}


def _run_surreal(config: dict, outdir: Path) -> list[str]:
    w1 = float(np.sqrt(config["weight_left"]))
    w2 = float(np.sqrt(1.0 - config["weight_left"]))
    scfg = SurrealConfig(
        packet_offset=config["packet_offset"],
        width=config["width"],
        speed=config["speed"],
        t_final=config["t_final"],
        dt_snap=config["dt_snap"],
        dt=config["dt"],
        spin_sites=config["spin_sites"],
        mode=config["mode"],
        weights=(w1, w2),
        n=config["n"],
        seed=config["seed"],
    )
    outcomes, ens = run_surreal(scfg)
    rows = [
        [str(o.trajectory_index), o.traversed, o.recorded, o.final_side, str(int(o.reflected))]
        for o in outcomes
    ]
    plio._write_rows(
        outdir / "outcomes.csv",
        ["trajectory", "traversed", "recorded", "final_side", "reflected"],
        rows,
    )
    summary = flip_statistics(outcomes)
    agreement = (
        sum(1 for o in outcomes if o.recorded == o.traversed) / len(outcomes)
        if outcomes else None
    )
    _dump_json(
        outdir / "summary.json",
        {
            "mode": config["mode"],
            "n": len(outcomes),
            "failed": int(np.count_nonzero(~ens.ok_mask())),
            "agreement_rate": agreement,
            "left_track_fraction": summary.left_fraction,
            "interval_3sigma": list(summary.interval),
        },
    )
    return ["outcomes.csv", "summary.json"]


EXPERIMENTS = {
    "double-slit": (_DOUBLE_SLIT_DEFAULTS, _run_double_slit),
    "equivariance": (_EQUIVARIANCE_DEFAULTS, _run_equivariance),
    "weak-velocity": (_WEAK_VELOCITY_DEFAULTS, _run_weak_velocity),
    "cor-test": (_COR_DEFAULTS, _run_cor_test),
    "three-box": (_THREE_BOX_DEFAULTS, _run_three_box),
    "surreal": (_SURREAL_DEFAULTS, _run_surreal),
}


def run_experiment(name: str, overrides: dict, outdir) -> list[str]:
    """Validate, run, and write the manifest; returns the artifact names."""
    config = validate_config(name, overrides)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = EXPERIMENTS[name][1](config, outdir)
    plio.write_manifest(outdir / "manifest.json", name, config, outputs)
    return outputs + ["manifest.json"]


# --- run comparison ---------------------------------------------------------


def compare_runs(dir_a, dir_b, metric: str = "ks") -> dict:
    """Cross-run report; both directories must hold the same experiment."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    man_a = plio.read_manifest(dir_a / "manifest.json")
    man_b = plio.read_manifest(dir_b / "manifest.json")
    if man_a["experiment"] != man_b["experiment"]:
        raise IncompatibleRunsError(
            f"cannot compare {man_a['experiment']!r} with {man_b['experiment']!r}"
        )
    experiment = man_a["experiment"]
    report = {"experiment": experiment, "metric": metric, "a": str(dir_a), "b": str(dir_b)}
    if experiment in ("double-slit", "equivariance") and metric == "ks":
        xa = _screen_positions(dir_a)
        xb = _screen_positions(dir_b)
        res = ks_two_sample(xa, xb)
        report.update(
            statistic=res.statistic,
            pvalue=res.pvalue,
            verdict="indistinguishable" if res.pvalue > KS_ALPHA else "distinguishable",
        )
        return report
    # generic fallback: numeric column-wise gap on the shared primary CSV
    primary = {
        "weak-velocity": "velocity.csv",
        "cor-test": "cor.csv",
        "three-box": "weak_values.csv",
        "surreal": "outcomes.csv",
        "double-slit": "screen.csv",
        "equivariance": "report.csv",
    }[experiment]
    gap = _max_numeric_gap(dir_a / primary, dir_b / primary)
    report.update(statistic=gap, file=primary)
    return report


def _screen_positions(rundir: Path) -> np.ndarray:
    import csv as _csv

    with open(rundir / "screen.csv") as fh:
        reader = _csv.DictReader(fh)
        return np.array(
            [float(row["x"]) for row in reader if row["crossed"] == "1"]
        )


def _max_numeric_gap(path_a: Path, path_b: Path) -> float:
    import csv as _csv

    def load(path):
        with open(path) as fh:
            return list(_csv.reader(fh))

    ra, rb = load(path_a), load(path_b)
    if len(ra) != len(rb):
        raise IncompatibleRunsError(f"{path_a.name}: row counts differ")
    worst = 0.0
    for row_a, row_b in zip(ra[1:], rb[1:]):
        for va, vb in zip(row_a, row_b):
            try:
                worst = max(worst, abs(float(va) - float(vb)))
            except ValueError:
                if va != vb:
                    raise IncompatibleRunsError("non-numeric cells differ")
    return worst


_PLOT_DOUBLE_SLIT = """\
# Advisory plot: trajectory fan and screen histogram (needs matplotlib).
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

paths = defaultdict(list)
with open("trajectories.csv") as fh:
    for row in csv.DictReader(fh):
        paths[row["trajectory"]].append((float(row["t"]), float(row["x"])))
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for pts in paths.values():
    pts.sort()
    ax1.plot([p[1] for p in pts], [p[0] for p in pts], lw=0.3, color="tab:blue")
ax1.set_xlabel("x"); ax1.set_ylabel("t"); ax1.set_title("trajectories")
xs = []
with open("screen.csv") as fh:
    for row in csv.DictReader(fh):
        if row["crossed"] == "1":
            xs.append(float(row["x"]))
ax2.hist(xs, bins=80, density=True)
ax2.set_xlabel("x at screen"); ax2.set_title("screen statistics")
fig.tight_layout(); fig.savefig("double_slit.png", dpi=150)
"""

_PLOT_VELOCITY = """\
# Advisory plot: operational velocity vs guidance reference (needs matplotlib).
import csv

import matplotlib.pyplot as plt

x, v, se, ref = [], [], [], []
with open("velocity.csv") as fh:
    for row in csv.DictReader(fh):
        if row["v_weak"] == "nan":
            continue
        x.append(float(row["x"])); v.append(float(row["v_weak"]))
        se.append(float(row["se"])); ref.append(float(row["v_guidance"]))
fig, ax = plt.subplots()
ax.errorbar(x, v, yerr=se, fmt="o", ms=3, label="weak measurement")
ax.plot(x, ref, "-", label="phase-gradient guidance")
ax.set_xlabel("x"); ax.set_ylabel("v"); ax.legend()
fig.tight_layout(); fig.savefig("velocity.png", dpi=150)
"""

_PLOT_COR = """\
# Advisory plot: conditional-mean gap per post-selection bin (needs matplotlib).
import csv

import matplotlib.pyplot as plt

x, d, se = [], [], []
with open("cor.csv") as fh:
    for row in csv.DictReader(fh):
        if row["delta"] == "nan":
            continue
        x.append(float(row["bin_center"])); d.append(float(row["delta"]))
        se.append(3 * float(row["se_y"]))
fig, ax = plt.subplots()
ax.errorbar(x, d, yerr=se, fmt="o", ms=3)
ax.axhline(0.0, color="k", lw=0.8)
ax.set_xlabel("bin center"); ax.set_ylabel("E(y | X) - mean x(0)")
fig.tight_layout(); fig.savefig("cor.png", dpi=150)
"""
