"""Experiment configuration, engine dispatch, and the command line entry point.

Configs are flat JSON objects (scalars plus per-site arrays).  Every run
writes a CSV of observables and a JSON summary; reruns with the same
config and seed reproduce both byte-for-byte apart from the recorded
wall time.

Exit codes: 0 success, 2 config validation, 3 photon-cutoff overflow,
4 integration failure.
"""

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import boundary_curve, compare_boundary, detect_t_break, phase_sweep
from .errors import ConfigError, IntegrationError, TruncationError
from .io import (config_hash, write_phase_grid_csv, write_summary_json,
                 write_timeseries_csv)
from .lattice import LatticeConfig, ProductStateSpec
from .master import EvolutionSettings, evolve_master
from .meanfield import MeanfieldSettings, SemiclassicalState, evolve_meanfield
from .operators import product_state
from .trajectories import TrajectorySettings, run_ensemble

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "SweepSettings",
    "parse_config",
    "render_config",
    "run_experiment",
    "write_timeseries_csv",
    "preset_names",
    "preset_text",
    "main",
]

ENGINES = ("master", "trajectories", "meanfield", "phase_sweep")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRUNCATION = 3
EXIT_INTEGRATION = 4

# keys shared by every engine
_COMMON_KEYS = {
    "engine", "description", "output", "M", "J", "delta_c", "delta_q",
    "g", "d", "kappa", "gamma", "periodic",
    "initial_photons", "initial_qubit_z",
}
_QUANTUM_KEYS = {
    "n_max", "initial_kind", "coherent_tail_tol", "t_max", "sample_dt",
    "rtol", "atol", "truncation_tol", "compute_g2",
}
_ENGINE_KEYS = {
    "master": _COMMON_KEYS | _QUANTUM_KEYS | {
        "method", "positivity_tol", "max_steps"},
    "trajectories": _COMMON_KEYS | _QUANTUM_KEYS | {
        "n_traj", "base_seed", "jump_time_tol", "workers"},
    "meanfield": _COMMON_KEYS | {
        "t_max", "sample_dt", "rtol", "atol", "sm_noise",
        "h_floor", "max_steps_per_interval"},
    "phase_sweep": _COMMON_KEYS | {
        "d1_values", "axis2_name", "axis2_values", "horizon", "theta",
        "window", "sample_dt", "rtol", "atol", "sm_noise",
        "boundary_kappa_range"},
}


@dataclass(frozen=True)
class SweepSettings:
    """Grid and stability-detection parameters for a phase-diagram sweep."""

    d1_values: tuple
    axis2_values: tuple
    axis2_name: str = "kappa"
    horizon: float = 1400.0
    theta: float = 0.5
    window: float = 10.0
    sample_dt: float = 1.0
    rtol: float = 1e-8
    atol: float = 1e-10
    boundary_kappa_range: tuple = None


@dataclass
class ExperimentConfig:
    """A fully validated experiment: lattice, initial state, engine settings."""

    engine: str
    lattice: LatticeConfig
    initial: ProductStateSpec
    evolution: EvolutionSettings = None
    trajectory: TrajectorySettings = None
    meanfield: MeanfieldSettings = None
    sweep: SweepSettings = None
    sm_noise: float = 0.0
    output_path: str = "experiment"
    seed: int = None
    raw: dict = field(default_factory=dict, repr=False)


@dataclass
class RunSummary:
    """What a finished run produced, mirrored into the summary JSON."""

    engine: str
    config_sha256: str
    wall_time: float
    outputs: list
    final: dict = None
    t_break: float = None
    stable: bool = None
    truncation_peak: float = 0.0
    details: dict = field(default_factory=dict)


def _type_name(v):
    return type(v).__name__


def _get_number(data, key, default):
    if key not in data:
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key '{key}' must be a number, got {_type_name(v)}")
    return float(v)


def _get_int(data, key, default):
    if key not in data:
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config key '{key}' must be an integer, got {_type_name(v)}")
    return int(v)


def _get_bool(data, key, default):
    if key not in data:
        return default
    v = data[key]
    if not isinstance(v, bool):
        raise ConfigError(f"config key '{key}' must be true or false, got {_type_name(v)}")
    return v


def _get_choice(data, key, default, choices):
    if key not in data:
        return default
    v = data[key]
    if v not in choices:
        raise ConfigError(f"config key '{key}' must be one of {sorted(choices)}, got {v!r}")
    return v


def _site_list(data, key, default, M):
    """Scalar-or-array key broadcast to a length-M list of floats."""
    v = data.get(key, default)
    if isinstance(v, (list, tuple)):
        if len(v) != M:
            raise ConfigError(f"config key '{key}' has {len(v)} entries, lattice has M={M}")
        vals = v
    else:
        vals = [v] * M
    out = []
    for x in vals:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"config key '{key}' must hold numbers, got {_type_name(x)}")
        out.append(float(x))
    return out


def _grid_values(data, key):
    """A sweep axis: an explicit list or {start, stop, num} for a linear grid."""
    if key not in data:
        raise ConfigError(f"config key '{key}' is required for engine 'phase_sweep'")
    v = data[key]
    if isinstance(v, dict):
        extra = sorted(set(v) - {"start", "stop", "num"})
        if extra:
            raise ConfigError(f"config key '{key}' grid spec has unknown field '{extra[0]}'")
        missing = sorted({"start", "stop", "num"} - set(v))
        if missing:
            raise ConfigError(f"config key '{key}' grid spec is missing '{missing[0]}'")
        num = v["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise ConfigError(f"config key '{key}' grid spec needs integer num >= 1")
        return tuple(float(x) for x in np.linspace(float(v["start"]), float(v["stop"]), num))
    if isinstance(v, (list, tuple)) and v:
        out = []
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"config key '{key}' must hold numbers, got {_type_name(x)}")
            out.append(float(x))
        return tuple(out)
    raise ConfigError(f"config key '{key}' must be a nonempty array or a start/stop/num object")


def parse_config(text):
    """Parse and validate a JSON configuration document.

    Defaults: J=1, delta_q=delta_c=0.01, kappa=gamma=0, drive off, vacuum
    photons with qubits down.  Unknown keys are rejected by name.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")

    engine = data.get("engine")
    if engine is None:
        raise ConfigError("config key 'engine' is required")
    if engine not in ENGINES:
        raise ConfigError(f"config key 'engine' must be one of {list(ENGINES)}, got {engine!r}")
    unknown = sorted(set(data) - _ENGINE_KEYS[engine])
    if unknown:
        raise ConfigError(f"unknown config key '{unknown[0]}' for engine '{engine}'")

    M = _get_int(data, "M", None)
    if M is None:
        raise ConfigError("config key 'M' is required")

    quantum = engine in ("master", "trajectories")
    n_max_kw = {}
    if "n_max" in data:
        v = data["n_max"]
        if isinstance(v, (list, tuple)):
            n_max_kw["n_max_site"] = v
        else:
            n_max_kw["n_max"] = v
    elif quantum:
        raise ConfigError(f"config key 'n_max' is required for engine '{engine}'")

    lattice = LatticeConfig(
        M=M,
        J=_get_number(data, "J", 1.0),
        delta_c=_get_number(data, "delta_c", 0.01),
        delta_q=_get_number(data, "delta_q", 0.01),
        g=_site_list(data, "g", 0.0, M),
        d=_site_list(data, "d", 0.0, M),
        kappa=_get_number(data, "kappa", 0.0),
        gamma=_get_number(data, "gamma", 0.0),
        periodic=_get_bool(data, "periodic", False),
        **n_max_kw,
    )

    # semiclassical engines take alpha = sqrt(N): the coherent flavor, which
    # also lifts the integer-occupation constraint of Fock preparation
    default_kind = "fock" if quantum else "coherent"
    kind = _get_choice(data, "initial_kind", default_kind, ("fock", "coherent"))
    initial = ProductStateSpec(
        photons=_site_list(data, "initial_photons", 0, M),
        qubit_z=_site_list(data, "initial_qubit_z", -0.5, M),
        kind=kind,
        coherent_tail_tol=_get_number(data, "coherent_tail_tol", 1e-6),
    )

    raw = {
        "engine": engine,
        "M": M,
        "J": lattice.J,
        "delta_c": lattice.delta_c,
        "delta_q": lattice.delta_q,
        "g": list(lattice.g),
        "d": list(lattice.d),
        "kappa": lattice.kappa,
        "gamma": lattice.gamma,
        "periodic": lattice.periodic,
        "initial_photons": list(initial.photons),
        "initial_qubit_z": list(initial.qubit_z),
    }
    if "description" in data:
        if not isinstance(data["description"], str):
            raise ConfigError("config key 'description' must be a string")
        raw["description"] = data["description"]
    if lattice.n_max_site is not None:
        raw["n_max"] = list(lattice.n_max_site)
    elif lattice.n_max is not None:
        raw["n_max"] = lattice.n_max

    evolution = trajectory = meanfield = sweep = None
    sm_noise = 0.0

    if quantum:
        raw["initial_kind"] = kind
        raw["coherent_tail_tol"] = initial.coherent_tail_tol
        evolution = EvolutionSettings(
            t_max=_get_number(data, "t_max", 100.0),
            sample_dt=_get_number(data, "sample_dt", 0.1),
            rtol=_get_number(data, "rtol", 1e-6),
            atol=_get_number(data, "atol", 1e-9),
            truncation_tol=_get_number(data, "truncation_tol", 1e-6),
            positivity_tol=_get_number(data, "positivity_tol", 1e-6),
            compute_g2=_get_bool(data, "compute_g2", False),
            method=_get_choice(data, "method", "rk45", ("rk45", "chebyshev")),
            max_steps=_get_int(data, "max_steps", 50_000_000),
        )
        raw.update({
            "t_max": evolution.t_max, "sample_dt": evolution.sample_dt,
            "rtol": evolution.rtol, "atol": evolution.atol,
            "truncation_tol": evolution.truncation_tol,
            "compute_g2": evolution.compute_g2,
        })
        if engine == "master":
            raw["method"] = evolution.method
            raw["positivity_tol"] = evolution.positivity_tol
            raw["max_steps"] = evolution.max_steps
        else:
            n_traj = _get_int(data, "n_traj", None)
            if n_traj is None:
                raise ConfigError("config key 'n_traj' is required for engine 'trajectories'")
            trajectory = TrajectorySettings(
                n_traj=n_traj,
                base_seed=_get_int(data, "base_seed", 0),
                jump_time_tol=_get_number(data, "jump_time_tol", 1e-6),
                rtol=evolution.rtol,
                atol=evolution.atol,
                workers=_get_int(data, "workers", 1),
            )
            raw.update({
                "n_traj": trajectory.n_traj,
                "base_seed": trajectory.base_seed,
                "jump_time_tol": trajectory.jump_time_tol,
                "workers": trajectory.workers,
            })
    elif engine == "meanfield":
        meanfield = MeanfieldSettings(
            t_max=_get_number(data, "t_max", 100.0),
            sample_dt=_get_number(data, "sample_dt", 0.1),
            rtol=_get_number(data, "rtol", 1e-8),
            atol=_get_number(data, "atol", 1e-10),
            h_floor=_get_number(data, "h_floor", 1e-11),
            max_steps_per_interval=_get_int(data, "max_steps_per_interval", 20_000_000),
        )
        sm_noise = _get_number(data, "sm_noise", 0.0)
        raw.update({
            "t_max": meanfield.t_max, "sample_dt": meanfield.sample_dt,
            "rtol": meanfield.rtol, "atol": meanfield.atol,
            "h_floor": meanfield.h_floor,
            "max_steps_per_interval": meanfield.max_steps_per_interval,
            "sm_noise": sm_noise,
        })
    else:
        rng_range = None
        if "boundary_kappa_range" in data:
            v = data["boundary_kappa_range"]
            if (not isinstance(v, (list, tuple)) or len(v) != 2
                    or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)):
                raise ConfigError("config key 'boundary_kappa_range' must be [low, high]")
            rng_range = (float(v[0]), float(v[1]))
        sweep = SweepSettings(
            d1_values=_grid_values(data, "d1_values"),
            axis2_values=_grid_values(data, "axis2_values"),
            axis2_name=_get_choice(data, "axis2_name", "kappa", ("kappa", "gamma")),
            horizon=_get_number(data, "horizon", 1400.0),
            theta=_get_number(data, "theta", 0.5),
            window=_get_number(data, "window", 10.0),
            sample_dt=_get_number(data, "sample_dt", 1.0),
            rtol=_get_number(data, "rtol", 1e-8),
            atol=_get_number(data, "atol", 1e-10),
            boundary_kappa_range=rng_range,
        )
        sm_noise = _get_number(data, "sm_noise", 0.0)
        raw.update({
            "d1_values": list(sweep.d1_values),
            "axis2_values": list(sweep.axis2_values),
            "axis2_name": sweep.axis2_name,
            "horizon": sweep.horizon, "theta": sweep.theta,
            "window": sweep.window, "sample_dt": sweep.sample_dt,
            "rtol": sweep.rtol, "atol": sweep.atol,
            "sm_noise": sm_noise,
        })
        if rng_range is not None:
            raw["boundary_kappa_range"] = list(rng_range)

    output = data.get("output", engine)
    if not isinstance(output, str) or not output:
        raise ConfigError("config key 'output' must be a nonempty string")
    raw["output"] = output

    return ExperimentConfig(
        engine=engine, lattice=lattice, initial=initial,
        evolution=evolution, trajectory=trajectory, meanfield=meanfield,
        sweep=sweep, sm_noise=sm_noise, output_path=output, raw=raw,
    )


def render_config(config):
    """The normalized key-value document; parse(render(c)) reproduces c."""
    return dict(config.raw)


def _semiclassical_initial(config):
    """Map the product-state spec onto semiclassical variables.

    alpha_i = sqrt(N_i); qubit_z = 0 is the balanced superposition, which
    carries a transverse component <s_minus> = 1/2.
    """
    photons = np.asarray(config.initial.photons, dtype=np.float64)
    sz = np.asarray(config.initial.qubit_z, dtype=np.float64)
    alpha = np.sqrt(photons).astype(np.complex128)
    sm = np.full(config.lattice.M, config.sm_noise, dtype=np.complex128)
    sm[sz == 0.0] = 0.5
    return SemiclassicalState(alpha=alpha, sm=sm, sz=sz.copy(), time=0.0)


def _series_summary(series):
    final = {
        "t": float(series.times[-1]),
        "N": [float(x) for x in series.N[-1]],
        "sz": [float(x) for x in series.sz[-1]],
        "z": float(series.z[-1]),
    }
    if series.g2 is not None:
        final["g2"] = [float(x) for x in series.g2[-1]]
    return final


def _run_timeseries_engine(config, outdir):
    if config.engine == "master":
        psi0 = product_state(config.initial, config.lattice)
        series = evolve_master(psi0, config.lattice, config.evolution)
    elif config.engine == "trajectories":
        series = run_ensemble(config.initial, config.lattice,
                              config.trajectory, config.evolution)
    else:
        init = _semiclassical_initial(config)
        series = evolve_meanfield(init, config.lattice, config.meanfield)

    csv_path = write_timeseries_csv(series, str(outdir / (config.output_path + ".csv")))
    t_break = stable = None
    if config.engine == "meanfield":
        try:
            res = detect_t_break(series)
            t_break, stable = res.t_break, res.stable
        except ConfigError:
            pass  # series shorter than the detection window
    details = {k: v for k, v in series.meta.items() if k != "wall_time"}
    return series, csv_path, t_break, stable, details


def _run_sweep(config, outdir):
    sw = config.sweep
    init = _semiclassical_initial(config)
    grid = phase_sweep(
        config.lattice, sw.d1_values, sw.axis2_values,
        axis2_name=sw.axis2_name, init=init, horizon=sw.horizon,
        theta=sw.theta, window=sw.window, sample_dt=sw.sample_dt,
        rtol=sw.rtol, atol=sw.atol,
    )
    csv_path = write_phase_grid_csv(grid, str(outdir / (config.output_path + ".csv")))
    edges = grid.band_edges()
    rows = []
    for j, v2 in enumerate(grid.axis2_values):
        rows.append({
            sw.axis2_name: float(v2),
            "d1_min": edges.d1_min[j],
            "d1_max": edges.d1_max[j],
            "open_lower": bool(edges.open_lower[j]),
            "open_upper": bool(edges.open_upper[j]),
            "n_stable": int(np.sum(grid.stable[j])),
        })
    details = {
        "rows": rows,
        "n_stable_cells": int(np.sum(grid.stable)),
        "n_cells": int(grid.stable.size),
        "n_failed_cells": len(grid.errors),
        "contiguity_violations": list(grid.contiguity_violations),
    }
    if sw.axis2_name == "kappa":
        g_eff = max(config.lattice.g)
        d1 = np.asarray(sw.d1_values)
        dense = np.linspace(float(d1.min()), float(d1.max()), 401)
        curve = boundary_curve(g_eff, config.lattice.delta_q, dense)
        details["analytic_boundary"] = {
            "g": g_eff,
            "delta_q": config.lattice.delta_q,
            "d1_min_domain": curve.d1_min,
            "d1": [float(x) for x in curve.d1],
            "kappa": [float(x) for x in curve.kappa],
        }
        if sw.boundary_kappa_range is not None:
            try:
                details["boundary_max_rel_deviation"] = compare_boundary(
                    grid, curve, sw.boundary_kappa_range)
            except ConfigError as exc:
                details["boundary_comparison_error"] = str(exc)
    return grid, csv_path, details


def run_experiment(config, output_dir="."):
    """Dispatch a parsed config to its engine and write the artifacts.

    Returns a RunSummary; the same data lands in <output>_summary.json
    next to the observable CSV.
    """
    t0 = time.perf_counter()
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    final = t_break = stable = None
    truncation_peak = 0.0
    if config.engine == "phase_sweep":
        _, csv_path, details = _run_sweep(config, outdir)
    else:
        series, csv_path, t_break, stable, details = _run_timeseries_engine(config, outdir)
        final = _series_summary(series)
        truncation_peak = float(series.truncation_peak)

    wall = time.perf_counter() - t0
    json_path = str(outdir / (config.output_path + "_summary.json"))
    summary = RunSummary(
        engine=config.engine,
        config_sha256=config_hash(config.raw),
        wall_time=wall,
        outputs=[str(csv_path), json_path],
        final=final,
        t_break=t_break,
        stable=stable,
        truncation_peak=truncation_peak,
        details=details,
    )
    write_summary_json({"config": config.raw,
                        "summary": dataclasses.asdict(summary)}, json_path)
    return summary


# ---------------------------------------------------------------------------
# presets


def preset_names():
    """Names of the configuration files shipped inside the package."""
    root = resources.files("jclattice").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def preset_text(name):
    root = resources.files("jclattice").joinpath("presets")
    path = root.joinpath(name + ".json")
    if not path.is_file():
        raise ConfigError(f"no preset named '{name}'; see 'jclattice presets list'")
    return path.read_text()


def _load_config_text(ref):
    if os.path.exists(ref):
        with open(ref) as fh:
            return fh.read()
    if "/" not in ref and "\\" not in ref and not ref.endswith(".json"):
        try:
            return preset_text(ref)
        except ConfigError:
            pass
    raise ConfigError(f"config file '{ref}' not found and no preset has that name")


# ---------------------------------------------------------------------------
# command line


def _apply_overrides(config, args):
    raw = config.raw
    if getattr(args, "seed", None) is not None:
        if config.trajectory is not None:
            config.trajectory = dataclasses.replace(config.trajectory, base_seed=args.seed)
            raw["base_seed"] = args.seed
            config.seed = args.seed
        else:
            print(f"note: --seed has no effect on engine '{config.engine}'", file=sys.stderr)
    if getattr(args, "workers", None) is not None:
        if config.trajectory is not None:
            config.trajectory = dataclasses.replace(config.trajectory, workers=args.workers)
            raw["workers"] = args.workers
        else:
            print(f"note: --workers has no effect on engine '{config.engine}'", file=sys.stderr)
    if getattr(args, "horizon", None) is not None:
        if config.sweep is not None:
            config.sweep = dataclasses.replace(config.sweep, horizon=args.horizon)
            raw["horizon"] = args.horizon
        else:
            print(f"note: --horizon has no effect on engine '{config.engine}'", file=sys.stderr)
    return config


def _cmd_run(args):
    config = parse_config(_load_config_text(args.config))
    if config.engine == "phase_sweep":
        raise ConfigError("engine 'phase_sweep' runs via the 'sweep' subcommand")
    config = _apply_overrides(config, args)
    summary = run_experiment(config, output_dir=args.output_dir)
    line = f"{config.engine}: wrote {summary.outputs[0]} ({summary.wall_time:.1f}s)"
    if summary.final is not None:
        line += f", final z={summary.final['z']:.6g}"
    print(line)
    return EXIT_OK


def _cmd_sweep(args):
    config = parse_config(_load_config_text(args.config))
    if config.engine != "phase_sweep":
        raise ConfigError(f"'sweep' needs engine 'phase_sweep', config says '{config.engine}'")
    config = _apply_overrides(config, args)
    summary = run_experiment(config, output_dir=args.output_dir)
    n_ok = summary.details["n_stable_cells"]
    n_all = summary.details["n_cells"]
    print(f"phase_sweep: wrote {summary.outputs[0]} "
          f"({n_ok}/{n_all} stable cells, {summary.wall_time:.1f}s)")
    dev = summary.details.get("boundary_max_rel_deviation")
    if dev is not None:
        print(f"analytic boundary deviation (max relative): {dev:.3f}")
    err = summary.details.get("boundary_comparison_error")
    if err is not None:
        print(f"boundary comparison failed: {err}", file=sys.stderr)
    return EXIT_OK


def _cmd_boundary(args):
    config = parse_config(_load_config_text(args.config))
    if config.sweep is None:
        raise ConfigError("'boundary' needs a phase_sweep config with a d1 grid")
    d1 = np.asarray(config.sweep.d1_values)
    dense = np.linspace(float(d1.min()), float(d1.max()), 401)
    g_eff = max(config.lattice.g)
    curve = boundary_curve(g_eff, config.lattice.delta_q, dense)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / (config.output_path + "_boundary.csv")
    lines = ["d1,kappa"]
    for a, b in zip(curve.d1, curve.kappa):
        lines.append("%.17g,%.17g" % (a, b))
    path.write_text("\n".join(lines) + "\n")
    print(f"boundary: wrote {path} ({curve.d1.size} points, "
          f"domain edge d1_min={curve.d1_min:.6g})")
    return EXIT_OK


def _cmd_presets(args):
    for name in preset_names():
        print(name)
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="jclattice",
        description="Driven-dissipative cavity lattice simulations: "
                    "master equation, quantum trajectories, semiclassical "
                    "dynamics, and phase-diagram sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a master/trajectories/meanfield config")
    p_run.add_argument("config", help="config file path or preset name")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the trajectory base seed")
    p_run.add_argument("--workers", type=int, default=None,
                       help="override the trajectory worker count")
    p_run.add_argument("--output-dir", default=".")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a phase-diagram sweep config")
    p_sweep.add_argument("config", help="config file path or preset name")
    p_sweep.add_argument("--horizon", type=float, default=None,
                         help="override the sweep's stability horizon")
    p_sweep.add_argument("--output-dir", default=".")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bound = sub.add_parser("boundary", help="evaluate the analytic stability boundary")
    p_bound.add_argument("config", help="phase_sweep config file path or preset name")
    p_bound.add_argument("--output-dir", default=".")
    p_bound.set_defaults(func=_cmd_boundary)

    p_presets = sub.add_parser("presets", help="inspect bundled configurations")
    p_presets.add_argument("action", choices=["list"])
    p_presets.set_defaults(func=_cmd_presets)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except IntegrationError as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
