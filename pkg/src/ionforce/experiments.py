"""Signal simulations for the three probes, plus the reference parameter sets."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .decoupling import cpmg_sequence, default_space, driven_signal, lab_total
from .dynamics import HeatingChannel, Propagator, PulseSequence, SignalTrace, evolve, evolve_lindblad
from .hilbert import HilbertSpace, QuantumState, fock_state, spin_superposition, thermal_state
from .models import ProbeParams, build_effective_hamiltonian, drive_hamiltonian

PROTOCOLS = ("plain", "driven_dd", "cpmg", "lindblad")

# SI units throughout; kHz figures are read as 1e3 rad/s.
FIG1 = ProbeParams("JC", g=4e3, omega=1.7e5, z=14.5e-9, force=20e-24, drive_omega=1e4)
FIG2 = ProbeParams("JC", g=4e3, omega=1.8e5, z=14.5e-9, force=20e-24, drive_omega=7e3)
FIG2_OMEGAS = (1.7e5, 1.8e5, 1.9e5)
FIG3 = ProbeParams("QR", g=4e3, omega=1.7e5, z=14.5e-9, force=20e-24)
FIG4 = ProbeParams("JT", g=4e3, omega=1.7e5, z=12e-9, force=(20e-24, 15e-24))
FIG1_NBAR = 1.2
FIG2_NBAR = 1.0


def initial_state(
    space: HilbertSpace,
    nbar: float | Sequence[float] = 0.0,
    c_up: complex = 1.0,
    c_down: complex = 0.0,
    fock: Sequence[int] | None = None,
) -> QuantumState:
    """Spin (c_up, c_down) times a Fock state, or thermal modes of mean ``nbar``."""
    if fock is not None:
        motional = fock_state(space.motional(), fock)
    elif np.isscalar(nbar) and nbar == 0:
        motional = fock_state(space.motional(), [0] * space.n_modes)
    else:
        motional = thermal_state(space, None, nbar)
    return spin_superposition(space, c_up, c_down, motional)


def superposition_amplitudes(phi: float) -> tuple[complex, complex]:
    """(1, e^{i phi}) / sqrt 2."""
    return 1.0 / math.sqrt(2.0), complex(np.exp(1j * phi)) / math.sqrt(2.0)


def signal_hamiltonian(params: ProbeParams, space: HilbertSpace, hamiltonian: str = "exact"):
    if hamiltonian == "exact":
        return lab_total(params, space)
    if hamiltonian == "effective":
        return build_effective_hamiltonian(f"{params.probe_kind}_EFF", params, space)
    raise ValueError(f"hamiltonian must be 'exact' or 'effective', got {hamiltonian!r}")


def simulate_signal(
    params: ProbeParams,
    times: Iterable[float],
    initial: QuantumState,
    hamiltonian: str = "exact",
    protocol: str = "plain",
    cpmg_order: int = 1,
) -> SignalTrace:
    """P_up(t) for one probe under the chosen protocol.

    ``driven_dd`` runs each sample time as its own sign-flipped drive
    sequence; ``cpmg`` runs each sample time as an order-``cpmg_order``
    phase-flip sequence of total length t; ``lindblad`` adds the heating
    rates in ``params.heating`` as channels on each mode.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    space = initial.space
    times = np.asarray(list(times), dtype=float)
    h = signal_hamiltonian(params, space, hamiltonian)
    if protocol == "driven_dd":
        trace = driven_signal(params, initial, times, base=h)
    elif protocol == "lindblad":
        channels = [HeatingChannel(k, rate) for k, rate in enumerate(params.heating)]
        if params.drive_omega:
            h = h + drive_hamiltonian(params, space)
        trace = evolve_lindblad(h, channels, initial, times, hbar=params.hbar)
    elif protocol == "cpmg":
        p = np.empty(times.size)
        tails = np.empty((space.n_modes, times.size))
        cache: dict = {}
        for i, t in enumerate(times):
            if t == 0:
                seq = PulseSequence.single(h, 0.0)
            else:
                seq = cpmg_sequence(PulseSequence.single(h, t / 2**cpmg_order), cpmg_order)
            tr = evolve(seq, initial, [seq.duration], hbar=params.hbar, cache=cache)
            p[i] = tr.p_up[0]
            tails[:, i] = [tr.tails[k][0] for k in range(space.n_modes)]
        trace = SignalTrace(times, p, tails={k: tails[k] for k in range(space.n_modes)})
    else:
        if params.drive_omega:
            h = h + drive_hamiltonian(params, space)
        trace = evolve(PulseSequence.single(h, times[-1]), initial, times, hbar=params.hbar)
    trace.metadata.update({"protocol": protocol, "hamiltonian": hamiltonian, "probe": params.probe_kind})
    return trace


def ramsey_scan(
    params: ProbeParams,
    phis: Sequence[float],
    times: Sequence[float],
    hamiltonian: str = "exact",
    space: HilbertSpace | None = None,
) -> list[SignalTrace]:
    """JT Ramsey traces from (|up> + e^{i phi}|down>)/sqrt 2 with modes in vacuum.

    Returns one trace per phase, each carrying ``metadata['phi']``.
    """
    if params.probe_kind != "JT":
        raise ValueError("Ramsey scans use the JT probe")
    space = default_space(params) if space is None else space
    times = np.asarray(times, dtype=float)
    prop = Propagator(signal_hamiltonian(params, space, hamiltonian), params.hbar)
    half = space.dim // 2
    out = []
    for phi in phis:
        psi = initial_state(space, 0.0, *superposition_amplitudes(phi)).data
        states = prop.apply_pure(psi, times)
        p = np.sum(np.abs(states[:, :half]) ** 2, axis=1)
        out.append(SignalTrace(times, p, metadata={"phi": float(phi), "hamiltonian": hamiltonian}))
    return out
