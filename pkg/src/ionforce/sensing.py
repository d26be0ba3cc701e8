"""Force sensitivity formulas and force estimation from spin signals.

Sensitivities are in N/sqrt(Hz): the smallest force difference resolvable in
a total measurement time of one second.  The projection-noise model is a
single two-outcome measurement per repetition, Delta P = sqrt(P (1 - P)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .dynamics import SignalTrace
from .hilbert import NumericalError
from .models import (
    ProbeParams,
    force_per_signal_frequency,
    signal_rabi_frequency,
)

DERIVATIVE_FLOOR = 1e-9


@dataclass(frozen=True)
class SensitivityReport:
    probe_kind: str
    regime: str
    value: float
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime not in ("shot_noise", "heating_limited"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if not self.value > 0:
            raise ValueError("sensitivity must be positive")


@dataclass(frozen=True)
class ForceEstimate:
    magnitude: float
    xi: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("force magnitude must be non-negative")
        if self.xi is not None and not -math.pi < self.xi <= math.pi:
            raise ValueError("xi must lie in (-pi, pi]")


def _probe(params: ProbeParams, probe: str | None) -> str:
    probe = params.probe_kind if probe is None else probe.upper()
    if probe not in ("JC", "QR", "JT"):
        raise ValueError(f"unknown probe {probe!r}")
    return probe


def _prefactor(params: ProbeParams, probe: str) -> float:
    """hbar omega / (g z), halved for the QR and JT probes."""
    base = params.hbar * params.omega / (params.g * params.spread)
    return base if probe == "JC" else 0.5 * base


def shot_noise_sensitivity(params: ProbeParams, t: float, probe: str | None = None) -> SensitivityReport:
    """Projection-noise-limited sensitivity at evolution time ``t`` (tau = t)."""
    if not t > 0:
        raise ValueError("evolution time must be positive")
    probe = _probe(params, probe)
    value = _prefactor(params, probe) / math.sqrt(t)
    return SensitivityReport(probe, "shot_noise", value, {"t": float(t)})


def heating_limited_sensitivity(params: ProbeParams, probe: str | None = None) -> SensitivityReport:
    """Optimal sensitivity when heating damps the signal at gamma = heating rate.

    JT uses gamma = n_x' + n_y'.  The optimum sits at t = 1 / (2 gamma), which
    is reported as ``optimal_time``.
    """
    probe = _probe(params, probe)
    gamma = params.total_heating if probe == "JT" else params.heating[0]
    if not gamma > 0:
        raise ValueError("heating-limited sensitivity needs a positive heating rate; use shot_noise_sensitivity")
    value = _prefactor(params, probe) * math.sqrt(2.0 * gamma * math.e)
    inputs = {"heating": tuple(params.heating), "gamma": gamma, "optimal_time": 1.0 / (2.0 * gamma)}
    return SensitivityReport(probe, "heating_limited", value, inputs)


def damped_signal_model(params: ProbeParams, times: np.ndarray, gamma: float = 0.0) -> np.ndarray:
    """(1 + exp(-gamma t) cos(2 Omega t)) / 2 with Omega the signal Rabi frequency."""
    rabi = signal_rabi_frequency(params)
    return 0.5 * (1.0 + np.exp(-gamma * times) * np.cos(2.0 * rabi * times))


def sensitivity_from_signal(
    trace: SignalTrace,
    params: ProbeParams,
    repetition_time: float | None = None,
    simulate: Callable[[ProbeParams], np.ndarray] | None = None,
    rel_step: float = 1e-4,
    total_time: float = 1.0,
) -> SensitivityReport:
    """Best projection-noise sensitivity over the sampled times of ``trace``.

    dP/dOmega is a central difference of re-simulated signals at forces
    F (1 +- rel_step).  ``simulate(params)`` must return P_up at
    ``trace.times``; by default the damped closed form with
    ``gamma = trace.metadata.get("gamma", 0)`` is used.  Each repetition lasts
    ``repetition_time`` (default: the evolution time itself).
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    t = trace.times
    gamma = float(trace.metadata.get("gamma", 0.0))
    if simulate is None:
        simulate = lambda p: damped_signal_model(p, t, gamma)  # noqa: E731
    rabi = signal_rabi_frequency(params)
    p_plus = np.asarray(simulate(params.with_force_scale(1.0 + rel_step)), dtype=float)
    p_minus = np.asarray(simulate(params.with_force_scale(1.0 - rel_step)), dtype=float)
    step = rel_step * rabi
    if step == 0:
        raise NumericalError("signal does not depend on the force (zero Rabi frequency)")
    slope = (p_plus - p_minus) / (2.0 * step)

    p = trace.p_up
    noise = np.sqrt(np.clip(p * (1.0 - p), 0.0, None))
    tau = t if repetition_time is None else np.full_like(t, float(repetition_time))
    with np.errstate(divide="ignore", invalid="ignore"):
        reps = total_time / tau
        usable = (np.abs(slope) * np.maximum(rabi, 1.0 / np.maximum(t, 1e-300)) > DERIVATIVE_FLOOR) & (t > 0)
        usable &= noise > 1e-6
        d_rabi = noise / (np.abs(slope) * np.sqrt(reps))
    if not np.any(usable):
        raise NumericalError("signal derivative below numerical floor at every sample time")
    d_force = np.where(usable, d_rabi, np.inf) * force_per_signal_frequency(params)
    best = int(np.argmin(d_force))
    regime = "heating_limited" if gamma > 0 else "shot_noise"
    return SensitivityReport(
        params.probe_kind,
        regime,
        float(d_force[best]),
        {"t": float(t[best]), "gamma": gamma, "per_time": d_force, "repetition_time": repetition_time},
    )


# -- fitting ---------------------------------------------------------------


def _frequency_grid(times: np.ndarray, points_per_rad: float = 20.0) -> np.ndarray:
    """Angular-frequency grid for the factor 2 Omega t, up to the sampling limit."""
    span = times.max() - times.min() if times.size > 1 else times.max()
    span = max(span, times.max())
    dt = np.median(np.diff(np.unique(times))) if np.unique(times).size > 1 else span
    top = math.pi / (2.0 * dt)
    step = 1.0 / (points_per_rad * 2.0 * span)
    return np.arange(step, top, step)


def _pick_lowest(grid: np.ndarray, cost: np.ndarray, rel_tol: float = 1e-3) -> list[float]:
    """Local minima of ``cost`` ordered by cost; near-ties resolved toward low frequency."""
    interior = np.flatnonzero((cost[1:-1] <= cost[:-2]) & (cost[1:-1] <= cost[2:])) + 1
    candidates = list(interior) + [0, len(cost) - 1]
    candidates = sorted(set(candidates), key=lambda i: cost[i])
    best = cost[candidates[0]]
    near = [i for i in candidates if cost[i] <= best * (1 + rel_tol) + 1e-15]
    lowest = min(near, key=lambda i: grid[i])
    ordered = [lowest] + [i for i in candidates if i != lowest]
    return [float(grid[i]) for i in ordered[:4]]


def fit_damped_rabi(times: np.ndarray, p_up: np.ndarray, fit_decay: bool = True) -> dict:
    """Least-squares fit of (1 + exp(-gamma t) cos(2 Omega t)) / 2.

    Returns ``omega``, ``gamma``, ``residual`` (rms), ``omega_std`` (from the
    Jacobian), and ``aliasing`` when the fit sits near the sampling limit.
    """
    t = np.asarray(times, float)
    y = 2.0 * np.asarray(p_up, float) - 1.0
    if t.size < 3 or np.ptp(p_up) < 1e-6:
        raise ValueError("signal is flat; no oscillation to fit")
    grid = _frequency_grid(t)
    c = np.cos(2.0 * np.outer(grid, t))
    amp = np.clip((c @ y) / np.einsum("ij,ij->i", c, c), 0.0, 1.0)
    cost = np.sum((y[None, :] - amp[:, None] * c) ** 2, axis=1)
    seeds = _pick_lowest(grid, cost)

    def residuals(x):
        omega, gamma = x[0], (x[1] if fit_decay else 0.0)
        return np.exp(-gamma * t) * np.cos(2.0 * omega * t) - y

    best = None
    scale_t = 1.0 / max(t.max(), 1e-300)
    for seed in seeds:
        x0 = [seed, 0.1 * scale_t] if fit_decay else [seed]
        bounds = ([0.0, 0.0], [np.inf, np.inf]) if fit_decay else ([0.0], [np.inf])
        sol = least_squares(residuals, x0, bounds=bounds, x_scale=[seed, scale_t][: len(x0)], xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if best is None or sol.cost < best.cost * (1 - 1e-9):
            best = sol
    if best is None or not best.success:
        raise NumericalError("damped Rabi fit did not converge")
    omega = float(best.x[0])
    gamma = float(best.x[1]) if fit_decay else 0.0
    dof = max(t.size - best.x.size, 1)
    s2 = 2.0 * best.cost / dof
    try:
        cov = np.linalg.inv(best.jac.T @ best.jac) * s2
        omega_std = float(math.sqrt(max(cov[0, 0], 0.0)))
    except np.linalg.LinAlgError:
        omega_std = math.inf
    return {
        "omega": omega,
        "gamma": gamma,
        "residual": float(math.sqrt(2.0 * best.cost / t.size)),
        "omega_std": omega_std,
        "aliasing": bool(omega > 0.8 * grid[-1]),
        "span_phase": float(2.0 * omega * t.max()),
    }


def estimate_axial_force(
    trace: SignalTrace, params: ProbeParams, probe: str | None = None, fit_decay: bool = True
) -> ForceEstimate:
    """Force from a fit of the (damped) Rabi signal of an axial probe.

    The fitted oscillation frequency is Omega_F for JC and 2 Omega_F for QR.
    """
    probe = _probe(params, probe)
    if probe == "JT":
        raise ValueError("use estimate_transverse_force for the JT probe")
    fit = fit_damped_rabi(trace.times, trace.p_up, fit_decay)
    if fit["span_phase"] < math.pi - 1e-9:
        fit["short_trace"] = True
    force = fit["omega"] * force_per_signal_frequency(params.replace(probe_kind=probe))
    fit["omega_f"] = fit["omega"] if probe == "JC" else 0.5 * fit["omega"]
    return ForceEstimate(abs(force), None, fit)


def _wrap(angle: float) -> float:
    """Map to (-pi, pi]."""
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    return math.pi if wrapped == -math.pi else wrapped


def null_phase(phis: Sequence[float], p_up: Sequence[float]) -> tuple[float, float]:
    """Phase at which a fixed-time Ramsey fringe vanishes, and the fringe amplitude.

    Fits P - 1/2 = C sin(xi - phi).  The returned xi takes C > 0; it is only
    determined modulo pi when the sign of C is unknown.
    """
    phis = np.asarray(phis, float)
    y = np.asarray(p_up, float) - 0.5
    design = np.column_stack([np.cos(phis), np.sin(phis)])
    (alpha, beta), *_ = np.linalg.lstsq(design, y, rcond=None)
    amplitude = math.hypot(alpha, beta)
    if amplitude < 1e-9:
        raise ValueError("Ramsey fringe has no amplitude; every phase sits at the null")
    return _wrap(math.atan2(alpha, -beta)), amplitude


def _collect(traces: Sequence[SignalTrace]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t, phi, p = [], [], []
    for tr in traces:
        if "phi" not in tr.metadata:
            raise ValueError("each Ramsey trace needs metadata['phi']")
        t.append(tr.times)
        phi.append(np.full(tr.times.size, float(tr.metadata["phi"])))
        p.append(tr.p_up)
    return np.concatenate(t), np.concatenate(phi), np.concatenate(p)


def estimate_transverse_force(traces: Sequence[SignalTrace], params: ProbeParams) -> ForceEstimate:
    """Joint fit of P = (1 + sin(xi - phi) sin(2 Omega t)) / 2 over all traces.

    Every trace carries its superposition phase in ``metadata['phi']``.  With
    fewer than three distinct phases xi is flagged as ambiguous.
    """
    if not traces:
        raise ValueError("no Ramsey traces given")
    t, phi, p = _collect(traces)
    y = 2.0 * p - 1.0
    if np.max(np.abs(y)) < 1e-6:
        raise ValueError("degenerate scan: the fringe vanishes at every phase")
    distinct = np.unique(np.round(phi, 12)).size

    grid = _frequency_grid(np.unique(t)) if np.unique(t).size > 1 else None
    if grid is None:
        raise ValueError("need at least two distinct evolution times to fit the frequency")
    s = np.sin(2.0 * np.outer(grid, t))
    cost = np.empty(grid.size)
    coefs = np.empty((grid.size, 2))
    for i, row in enumerate(s):
        design = np.column_stack([row * np.cos(phi), -row * np.sin(phi)])
        sol, *_ = np.linalg.lstsq(design, y, rcond=None)
        coefs[i] = sol
        cost[i] = np.sum((design @ sol - y) ** 2)
    seeds = _pick_lowest(grid, cost)

    def residuals(x):
        return np.sin(x[1] - phi) * np.sin(2.0 * x[0] * t) - y

    best = None
    for seed in seeds:
        i = int(np.argmin(np.abs(grid - seed)))
        xi0 = math.atan2(coefs[i, 0], coefs[i, 1])
        sol = least_squares(residuals, [seed, xi0], bounds=([0.0, -np.inf], [np.inf, np.inf]),
                            x_scale=[seed, 1.0], xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if best is None or sol.cost < best.cost * (1 - 1e-9):
            best = sol
    if best is None or not best.success:
        raise NumericalError("Ramsey fit did not converge")
    omega, xi = float(best.x[0]), _wrap(float(best.x[1]))
    force = omega * force_per_signal_frequency(params.replace(probe_kind="JT"))
    diagnostics = {
        "omega_rms": omega,
        "residual": float(math.sqrt(2.0 * best.cost / t.size)),
        "distinct_phases": distinct,
        "xi_ambiguous": distinct < 3,
        "aliasing": bool(omega > 0.8 * grid[-1]),
    }
    return ForceEstimate(force, xi, diagnostics)
