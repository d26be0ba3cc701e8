"""Config-driven simulation runs and parameter sweeps."""

from __future__ import annotations

import itertools
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from ..decoupling import default_space, rabi_contrast
from ..experiments import initial_state, simulate_signal
from ..hilbert import HilbertSpace, QuantumState, TruncationWarning
from ..models import ProbeParams, signal_rabi_frequency
from ..sensing import fit_damped_rabi, heating_limited_sensitivity, shot_noise_sensitivity
from ..swtransform import transformation_residual
from .config import ConfigError, ExperimentConfig
from .output import signal_header, signal_rows, write_csv, write_metadata, write_svg

UNITS = "SI: angular frequencies in rad/s (a quoted 'kHz' is 1e3 rad/s), forces in N, lengths in m, times in s"


def worker_count() -> int:
    value = os.environ.get("SIM_THREADS")
    if value is None:
        return os.cpu_count() or 1
    try:
        count = int(value)
    except ValueError:
        raise ConfigError(f"SIM_THREADS must be an integer, got {value!r}") from None
    if count < 1:
        raise ConfigError("SIM_THREADS must be >= 1")
    return count


def parallel_map(fn: Callable, items: Iterable) -> list:
    """Order-preserving map over a process pool capped by SIM_THREADS."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _nbar(state: dict) -> float | tuple:
    return state.get("nbar", 0.0)


def build_space(config: ExperimentConfig, params: ProbeParams, nbar=None) -> HilbertSpace:
    if config.cutoffs is not None:
        return HilbertSpace(config.cutoffs)
    nbar = _nbar(config.state) if nbar is None else nbar
    return default_space(params, float(np.max(nbar)))


def build_initial(config: ExperimentConfig, space: HilbertSpace, nbar=None) -> QuantumState:
    state = config.state
    if state["type"] == "fock":
        occ = state["occupations"]
        if len(occ) == 1 and space.n_modes == 2:
            occ = occ * 2
        return initial_state(space, fock=occ)
    nbar = _nbar(state) if nbar is None else nbar
    if state["type"] == "superposition":
        c_down = state["c_down"] * np.exp(1j * state["phi"])
        return initial_state(space, nbar, state["c_up"], c_down)
    return initial_state(space, nbar)


def simulate_config(config: ExperimentConfig, params: ProbeParams | None = None, nbar=None):
    params = config.params() if params is None else params
    space = build_space(config, params, nbar)
    initial = build_initial(config, space, nbar)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        trace = simulate_signal(
            params,
            config.time.values(),
            initial,
            hamiltonian=config.hamiltonian,
            protocol=config.protocol,
            cpmg_order=config.cpmg_order,
        )
    trace.metadata["truncation_warnings"] = [str(w.message) for w in caught if issubclass(w.category, TruncationWarning)]
    return trace, space, initial


def resolved_metadata(config: ExperimentConfig, params: ProbeParams, space: HilbertSpace) -> dict:
    return {
        "units": UNITS,
        "probe": {
            "kind": params.probe_kind,
            "g": params.g,
            "omega": params.omega,
            "delta": params.spin_frequency,
            "drive_omega": params.drive_omega,
            "z": params.spread,
            "force": list(params.force),
            "heating": list(params.heating),
            "hbar": params.hbar,
        },
        "signal_rabi_frequency": signal_rabi_frequency(params),
        "state": config.state,
        "protocol": {"name": config.protocol, "order": config.cpmg_order, "hamiltonian": config.hamiltonian},
        "time": {"start": config.time.start, "stop": config.time.stop, "points": config.time.points},
        "cutoffs": list(space.mode_cutoffs),
    }


def run(config: ExperimentConfig, outdir: Path, svg: bool = False) -> dict:
    """Simulate one config and write CSV, metadata and (optionally) SVG."""
    params = config.params()
    trace, space, initial = simulate_config(config, params)
    paths = config.resolve(outdir)
    csv_path = paths.get("csv", str(outdir / "signal.csv"))
    meta_path = paths.get("metadata", str(Path(csv_path).with_suffix(".json")))
    write_csv(csv_path, signal_header(space.n_modes), signal_rows(trace))
    meta = resolved_metadata(config, params, space)
    meta["tails"] = {
        "initial_truncated_mass": dict(initial.tail),
        "max_top_level": {k: float(np.max(v)) for k, v in trace.tails.items()},
        "final_top_level": {k: float(v[-1]) for k, v in trace.tails.items()},
    }
    meta["truncation_warnings"] = trace.metadata.get("truncation_warnings", [])
    write_metadata(meta_path, meta)
    out = {"csv": csv_path, "metadata": meta_path}
    if svg or "svg" in paths:
        svg_path = paths.get("svg", str(Path(csv_path).with_suffix(".svg")))
        write_svg(svg_path, [("P_up", trace.times, trace.p_up)], title=f"{params.probe_kind} {config.protocol}",
                  xlabel="t [s]", ylabel="P_up")
        out["svg"] = svg_path
    out["trace"] = trace
    return out


# -- sweeps ----------------------------------------------------------------


def _metric(name: str, config: ExperimentConfig, params: ProbeParams, nbar) -> float:
    if name == "fitted_omega":
        trace, _, _ = simulate_config(config, params, nbar)
        return fit_damped_rabi(trace.times, trace.p_up, fit_decay=True)["omega"]
    if name == "contrast":
        protocol = "driven" if config.protocol == "driven_dd" else "undriven"
        space = build_space(config, params, nbar)
        return rabi_contrast(params, float(np.max(nbar)), protocol, space).contrast
    if name == "sensitivity":
        if params.total_heating > 0:
            return heating_limited_sensitivity(params).value
        return shot_noise_sensitivity(params, config.time.stop).value
    if name == "sw_residual":
        space = build_space(config, params, 0.0)
        margin = 6 if params.probe_kind == "QR" else 2
        return transformation_residual(params.probe_kind, params, space, margin=margin)[0]
    raise ConfigError(f"unknown metric {name!r}")


def sweep_point(job: tuple[ExperimentConfig, dict]) -> list[float]:
    config, point = job
    overrides = {k: v for k, v in point.items() if k != "nbar"}
    nbar = point.get("nbar", _nbar(config.state))
    params = config.params(**overrides)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return [_metric(m, config, params, nbar) for m in config.metrics]


def sweep(config: ExperimentConfig, outdir: Path) -> dict:
    """Cartesian-product sweep; one CSV row per point in deterministic order."""
    if not config.sweep:
        raise ConfigError("sweep needs at least one ranged parameter in [sweep]")
    keys = list(config.sweep)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(config.sweep[k] for k in keys))]
    for point in points:
        config.params(**{k: v for k, v in point.items() if k != "nbar"})
    results = parallel_map(sweep_point, [(config, p) for p in points])
    rows = [[p[k] for k in keys] + r for p, r in zip(points, results)]
    paths = config.resolve(outdir)
    csv_path = paths.get("csv", str(outdir / "sweep.csv"))
    write_csv(csv_path, keys + list(config.metrics), rows)
    meta_path = paths.get("metadata", str(Path(csv_path).with_suffix(".json")))
    params = config.params()
    meta = resolved_metadata(config, params, build_space(config, params))
    meta["sweep"] = config.sweep
    meta["metrics"] = list(config.metrics)
    write_metadata(meta_path, meta)
    return {"csv": csv_path, "metadata": meta_path, "rows": rows}

