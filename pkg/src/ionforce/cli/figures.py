"""Data series for the reference figures: signals, contrast scans, sensitivity curves and Ramsey fringes."""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import numpy as np

from ..decoupling import default_space, driven_signal, rabi_contrast
from ..experiments import (
    FIG1,
    FIG1_NBAR,
    FIG2,
    FIG2_NBAR,
    FIG2_OMEGAS,
    FIG3,
    FIG4,
    initial_state,
    ramsey_scan,
    simulate_signal,
    superposition_amplitudes,
)
from ..hilbert import TruncationWarning
from ..models import signal_rabi_frequency, transverse_force_parameters
from ..sensing import estimate_transverse_force, null_phase, sensitivity_from_signal, shot_noise_sensitivity
from .output import write_csv, write_metadata, write_svg
from .runner import parallel_map

FIGURES = ("fig1a", "fig1b", "fig2", "fig3", "fig4a", "fig4b")
FIG1B_NBARS = tuple(np.round(np.arange(0.0, 3.01, 0.25), 2))
FIG2_TIMES = np.linspace(1e-3, 0.04, 40)
FIG4B_TIMES = (0.005, 0.01, 0.015, 0.02)


def _max_dev(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def fig1a() -> dict:
    rabi = signal_rabi_frequency(FIG1)
    times = np.linspace(0.0, math.pi / rabi, 101)
    space = default_space(FIG1, FIG1_NBAR)
    ini = initial_state(space, FIG1_NBAR)
    exact = simulate_signal(FIG1, times, ini, "exact", "driven_dd")
    eff = simulate_signal(FIG1, times, ini, "effective", "driven_dd")
    plain = simulate_signal(FIG1.replace(drive_omega=0.0), times, ini, "exact", "plain")
    ideal = np.cos(rabi * times) ** 2
    cols = {"p_exact_driven": exact.p_up, "p_effective_driven": eff.p_up, "p_exact_undriven": plain.p_up, "p_ideal": ideal}
    meta = {
        "omega_f": rabi,
        "nbar": FIG1_NBAR,
        "cutoff": space.mode_cutoffs[0],
        "max_dev_driven_vs_ideal": _max_dev(exact.p_up, ideal),
        "max_dev_exact_vs_effective": _max_dev(exact.p_up, eff.p_up),
        "max_dev_undriven_vs_ideal": _max_dev(plain.p_up, ideal),
        "swing_driven": float(np.ptp(exact.p_up)),
        "swing_undriven": float(np.ptp(plain.p_up)),
        "max_top_level": float(max(np.max(exact.tails[0]), np.max(plain.tails[0]))),
    }
    return {"x": ("t_seconds", times), "columns": cols, "meta": meta, "markers": (True, False, False, False),
            "ylabel": "P_up"}


def _contrast_job(job):
    nbar, protocol = job
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return rabi_contrast(FIG1, nbar, protocol).contrast


def fig1b() -> dict:
    jobs = [(n, p) for n in FIG1B_NBARS for p in ("driven", "undriven")]
    values = parallel_map(_contrast_job, jobs)
    driven = np.array(values[0::2])
    undriven = np.array(values[1::2])
    meta = {"omega_f": signal_rabi_frequency(FIG1), "drive_omega": FIG1.drive_omega}
    return {"x": ("nbar", np.array(FIG1B_NBARS)), "columns": {"contrast_driven": driven, "contrast_undriven": undriven},
            "meta": meta, "markers": (True, True), "ylabel": "contrast"}


def _fig2_job(omega: float) -> tuple[np.ndarray, np.ndarray]:
    params = FIG2.replace(omega=omega)
    space = default_space(params, FIG2_NBAR)
    ini = initial_state(space, FIG2_NBAR)
    times = FIG2_TIMES
    analytic = np.array([shot_noise_sensitivity(params, t).value for t in times])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        trace = driven_signal(params, ini, times)

        def simulate(p):
            return driven_signal(p, ini, times).p_up

        report = sensitivity_from_signal(trace, params, simulate=simulate)
    exact = np.where(np.isfinite(report.inputs["per_time"]), report.inputs["per_time"], np.nan)
    return analytic, exact


def fig2() -> dict:
    results = parallel_map(_fig2_job, FIG2_OMEGAS)
    cols = {}
    for omega, (analytic, exact) in zip(FIG2_OMEGAS, results):
        cols[f"analytic_w{omega:.0f}"] = analytic
        cols[f"exact_w{omega:.0f}"] = exact
    ref = shot_noise_sensitivity(FIG2.replace(omega=1.8e5), 0.02).value
    meta = {"omegas": list(FIG2_OMEGAS), "nbar": FIG2_NBAR, "drive_omega": FIG2.drive_omega,
            "analytic_at_180k_20ms": ref}
    markers = tuple(name.startswith("exact") for name in cols)
    return {"x": ("t_seconds", FIG2_TIMES), "columns": cols, "meta": meta, "markers": markers,
            "ylabel": "dF [N/sqrt(Hz)]"}


def fig3() -> dict:
    rabi = signal_rabi_frequency(FIG3)
    times = np.linspace(0.0, math.pi / rabi, 101)
    space = default_space(FIG3, FIG1_NBAR)
    ini = initial_state(space, FIG1_NBAR)
    exact = simulate_signal(FIG3, times, ini, "exact")
    eff = simulate_signal(FIG3, times, ini, "effective")
    ideal = np.cos(rabi * times) ** 2
    meta = {"omega_f": rabi / 2, "nbar": FIG1_NBAR, "cutoff": space.mode_cutoffs[0],
            "max_dev_exact_vs_ideal": _max_dev(exact.p_up, ideal),
            "max_top_level": float(np.max(exact.tails[0]))}
    return {"x": ("t_seconds", times), "columns": {"p_exact": exact.p_up, "p_effective": eff.p_up, "p_ideal": ideal},
            "meta": meta, "markers": (True, False, False), "ylabel": "P_up"}


def fig4a() -> dict:
    tf = transverse_force_parameters(FIG4)
    times = np.linspace(0.0, math.pi / tf.omega_rms, 101)
    space = default_space(FIG4)
    cols, meta = {}, {"omega_rms": tf.omega_rms, "xi": tf.xi, "cutoff": space.mode_cutoffs[0]}
    for label, amps in (("up", (1.0, 0.0)), ("plus", superposition_amplitudes(0.0))):
        ini = initial_state(space, 0.0, *amps)
        exact = simulate_signal(FIG4, times, ini, "exact")
        eff = simulate_signal(FIG4, times, ini, "effective")
        cols[f"p_exact_{label}"] = exact.p_up
        cols[f"p_effective_{label}"] = eff.p_up
        meta[f"max_dev_{label}"] = _max_dev(exact.p_up, eff.p_up)
    cols["p_ideal_up"] = np.cos(tf.omega_rms * times) ** 2
    cols["p_ideal_plus"] = 0.5 * (1 + math.sin(tf.xi) * np.sin(2 * tf.omega_rms * times))
    return {"x": ("t_seconds", times), "columns": cols, "meta": meta,
            "markers": (True, False, True, False, False, False), "ylabel": "P_up"}


def fig4b() -> dict:
    tf = transverse_force_parameters(FIG4)
    phis = np.linspace(-math.pi, math.pi, 73)
    traces = ramsey_scan(FIG4, phis, FIG4B_TIMES)
    cols, nulls = {}, {}
    for j, t in enumerate(FIG4B_TIMES):
        p = np.array([tr.p_up[j] for tr in traces])
        cols[f"p_exact_t{t:g}"] = p
        cols[f"p_eq_t{t:g}"] = 0.5 * (1 + np.sin(tf.xi - phis) * math.sin(2 * tf.omega_rms * t))
        xi0, amp = null_phase(phis, p)
        nulls[f"{t:g}"] = {"null_phase_mod_pi": xi0, "amplitude": amp}
    est = estimate_transverse_force(traces, FIG4)
    meta = {"omega_rms": tf.omega_rms, "xi": tf.xi, "times": list(FIG4B_TIMES), "null_phases": nulls,
            "fit": {"omega_rms": est.diagnostics["omega_rms"], "xi": est.xi, "force": est.magnitude}}
    return {"x": ("phi", phis), "columns": cols, "meta": meta,
            "markers": tuple(k.startswith("p_exact") for k in cols), "ylabel": "P_up"}


BUILDERS = {"fig1a": fig1a, "fig1b": fig1b, "fig2": fig2, "fig3": fig3, "fig4a": fig4a, "fig4b": fig4b}


def reproduce_figure(which: str, outdir: Path) -> dict:
    """Write <which>.csv, <which>.json and <which>.svg into ``outdir``."""
    if which not in BUILDERS:
        raise ValueError(f"unknown figure {which!r}; choose from {FIGURES}")
    data = BUILDERS[which]()
    xname, x = data["x"]
    names = list(data["columns"])
    cols = [data["columns"][n] for n in names]
    csv_path = outdir / f"{which}.csv"
    write_csv(csv_path, [xname] + names, ([x[i]] + [c[i] for c in cols] for i in range(len(x))))
    write_metadata(outdir / f"{which}.json", {"figure": which, **data["meta"]})
    write_svg(outdir / f"{which}.svg", [(n, x, c) for n, c in zip(names, cols)], title=which,
              xlabel=xname, ylabel=data["ylabel"], markers=data["markers"])
    return {"csv": str(csv_path), "metadata": str(outdir / f"{which}.json"), "svg": str(outdir / f"{which}.svg"),
            "meta": data["meta"], "columns": dict(zip(names, cols)), "x": x}
