"""Dynamical decoupling of the residual spin-phonon coupling.

Two protocols are provided.  For the JC probe a strong carrier drive
hbar*Omega*sigma_x is applied along the force axis, with its sign reversed
halfway through, so the drive itself cancels at the readout time.  For the JT
probe a phonon phase flip exp(i pi n_x) anticommutes with the residual term
and is interleaved recursively: U_n = R U_{n-1} R U_{n-1}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dynamics import (
    Kick,
    PulseSequence,
    Segment,
    SignalTrace,
    evolve,
    sequence_propagator,
)
from .hilbert import (
    HilbertSpace,
    Operator,
    QuantumState,
    embed_mode,
    embed_spin,
    number_operator,
    operator_norm,
    spin_superposition,
    thermal_state,
)
from .models import (
    ProbeParams,
    build_effective_hamiltonian,
    build_lab_hamiltonian,
    drive_hamiltonian,
    signal_rabi_frequency,
)

SUPPRESSION_RATIO = 0.1


class DecouplingWarning(UserWarning):
    """A decoupling protocol was requested in a regime where it does nothing."""


@dataclass(frozen=True)
class ContrastReport:
    nbar: float
    contrast: float
    protocol: str
    p_t1: float
    p_t2: float
    t1: float
    t2: float

    def __post_init__(self):
        if not -1.0 - 1e-9 <= self.contrast <= 1.0 + 1e-9:
            raise ValueError(f"contrast {self.contrast} outside [-1, 1]")


@dataclass(frozen=True)
class SuppressionCheck:
    dispersive_shift: float  # g^2 / 2 omega [rad/s]
    drive_omega: float
    ratio: float
    satisfied: bool


def lab_total(params: ProbeParams, space: HilbertSpace) -> Operator:
    return build_lab_hamiltonian(f"{params.probe_kind}_TOTAL", params, space)


def default_space(params: ProbeParams, nbar: float = 0.0, cutoff: int | None = None) -> HilbertSpace:
    """Truncated space sized so a thermal state of ``nbar`` loses < 1e-7 to the cutoff.

    Defaults are 30 levels for one mode and 12 per mode for JT.
    """
    base = 12 if params.probe_kind == "JT" else 30
    if cutoff is None:
        cutoff = base
        if nbar > 0:
            needed = math.ceil(math.log(1e-7) / math.log(nbar / (1.0 + nbar)))
            cutoff = max(base, needed)
    modes = (cutoff, cutoff) if params.probe_kind == "JT" else (cutoff,)
    return HilbertSpace(modes)


def suppression_condition(params: ProbeParams) -> SuppressionCheck:
    """Compare the dispersive shift g^2/2 omega with the drive strength."""
    shift = params.g**2 / (2.0 * params.omega)
    drive = abs(params.drive_omega)
    ratio = math.inf if drive == 0 else shift / drive
    return SuppressionCheck(shift, drive, ratio, ratio <= SUPPRESSION_RATIO)


def driven_hamiltonians(
    params: ProbeParams, space: HilbertSpace, base: Operator | None = None
) -> tuple[Operator, Operator]:
    """(H + H_d, H - H_d) for the two halves of the sign-flipped drive."""
    base = lab_total(params, space) if base is None else base
    drive = drive_hamiltonian(params, space)
    return base + drive, base - drive


def driven_dd_sequence(
    params: ProbeParams,
    total_time: float,
    space: HilbertSpace,
    base: Operator | None = None,
    halves: tuple[Operator, Operator] | None = None,
) -> PulseSequence:
    """Two segments of ``total_time / 2``: drive +Omega, then -Omega.

    ``base`` defaults to the probe's total lab Hamiltonian.  Passing
    precomputed ``halves`` lets repeated calls share propagator caches.
    """
    if params.drive_omega == 0:
        warnings.warn("drive amplitude is zero; sequence is plain evolution", DecouplingWarning, stacklevel=2)
    plus, minus = halves if halves is not None else driven_hamiltonians(params, space, base)
    half = 0.5 * float(total_time)
    return PulseSequence((Segment(plus, half), Segment(minus, half)))


def driven_signal(
    params: ProbeParams,
    initial: QuantumState,
    times: Iterable[float],
    base: Operator | None = None,
) -> SignalTrace:
    """P_up at each time t, each from its own sign-flipped run of length t."""
    space = initial.space
    times = np.asarray(list(times), dtype=float)
    halves = driven_hamiltonians(params, space, base)
    cache: dict = {}
    p = np.empty(times.size)
    tails = np.empty((space.n_modes, times.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DecouplingWarning)
        for i, t in enumerate(times):
            seq = driven_dd_sequence(params, t, space, halves=halves)
            tr = evolve(seq, initial, [t], hbar=params.hbar, cache=cache)
            p[i] = tr.p_up[0]
            for k in range(space.n_modes):
                tails[k, i] = tr.tails[k][0]
    return SignalTrace(
        times,
        p,
        tails={k: tails[k] for k in range(space.n_modes)},
        metadata={"protocol": "driven_dd", "drive_omega": params.drive_omega},
    )


def residual_in_drive_frame(params: ProbeParams, space: HilbertSpace, time: float) -> Operator:
    """JC residual coupling seen in the frame rotating with the carrier drive.

    (hbar g^2/omega)(e^{2i Omega t}|+><-| + e^{-2i Omega t}|-><+|) n, where
    |+-> are the sigma_x eigenstates.
    """
    if params.probe_kind != "JC":
        raise ValueError("the drive-frame residual is defined for the JC probe")
    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    minus = np.array([1.0, -1.0]) / math.sqrt(2.0)
    phase = np.exp(2j * params.drive_omega * time)
    spin = phase * np.outer(plus, minus) + np.conj(phase) * np.outer(minus, plus)
    coupling = params.hbar * params.g**2 / params.omega
    return coupling * (embed_spin(space, spin) @ number_operator(space, 0))


def phonon_phase_flip(space: HilbertSpace, mode_index: int = 0) -> Operator:
    """exp(i pi n) on one mode, i.e. diag((-1)^n)."""
    space.check_mode(mode_index)
    n = space.mode_cutoffs[mode_index]
    return embed_mode(space, mode_index, np.diag((-1.0) ** np.arange(n)))


def cpmg_sequence(base: PulseSequence, order: int, mode_index: int = 0) -> PulseSequence:
    """Recursive phase-flip sequence U_n = R U_{n-1} R U_{n-1}, U_0 = base.

    Elements are time-ordered, so each level appends (U_{n-1}, R, U_{n-1}, R).
    Total duration is 2**order times the base; no adjacent kicks are merged.
    """
    if order < 1:
        raise ValueError("CPMG order must be >= 1")
    flip = Kick(phonon_phase_flip(base.space, mode_index))
    seq = base
    for _ in range(order):
        seq = PulseSequence(seq.elements + (flip,) + seq.elements + (flip,))
    return seq


def low_phonon_indices(space: HilbertSpace, max_total: int) -> np.ndarray:
    """Basis states with at most ``max_total`` phonons summed over modes."""
    return np.flatnonzero(space.occupations().sum(axis=1) <= max_total)


def cpmg_propagator_distance(
    params: ProbeParams,
    tau: float,
    order: int,
    space: HilbertSpace,
    max_phonons: int = 4,
    mode_index: int = 0,
) -> float:
    """Distance between the CPMG propagator and residual-free evolution.

    The base segment is the JT effective Hamiltonian with its residual term,
    lasting ``tau``.  The reference is the residual-free effective evolution
    over the same total time.  Both conserve total phonon number, so the
    operator-norm distance is taken on the block with at most
    ``max_phonons`` phonons.
    """
    if params.probe_kind != "JT":
        raise ValueError("the phase-flip protocol targets the JT probe")
    if max_phonons > min(space.mode_cutoffs) - 1:
        raise ValueError("max_phonons exceeds what the truncation represents exactly")
    with_residual = build_effective_hamiltonian("JT_EFF", params, space, include_residual=True)
    free = build_effective_hamiltonian("JT_EFF", params, space, include_residual=False)
    seq = cpmg_sequence(PulseSequence.single(with_residual, tau), order, mode_index)
    u = sequence_propagator(seq, hbar=params.hbar).matrix
    u0 = sequence_propagator(PulseSequence.single(free, seq.duration), hbar=params.hbar).matrix
    idx = low_phonon_indices(space, max_phonons)
    return operator_norm((u - u0)[np.ix_(idx, idx)])


def rabi_contrast(
    params: ProbeParams,
    nbar: float,
    protocol: str = "driven",
    space: HilbertSpace | None = None,
) -> ContrastReport:
    """S = P_up(pi/Omega) - P_up(pi/2 Omega) from exact lab dynamics.

    The spin starts in |up>, the (first) mode thermal with mean ``nbar``.
    ``protocol`` is ``driven`` (sign-flipped carrier drive, one run per
    readout time) or ``undriven`` (plain evolution).
    """
    if protocol not in ("driven", "undriven"):
        raise ValueError(f"unknown protocol {protocol!r}")
    rabi = signal_rabi_frequency(params)
    if rabi <= 0:
        raise ValueError("contrast needs a positive signal Rabi frequency")
    space = default_space(params, nbar) if space is None else space
    motional = thermal_state(space, 0 if params.probe_kind != "JT" else None, nbar)
    initial = spin_superposition(space, 1.0, 0.0, motional)
    t1, t2 = math.pi / (2.0 * rabi), math.pi / rabi
    if protocol == "driven":
        trace = driven_signal(params, initial, [t1, t2])
    else:
        h = lab_total(params, space)
        trace = evolve(PulseSequence.single(h, t2), initial, [t1, t2], hbar=params.hbar)
    p1, p2 = (float(v) for v in trace.p_up)
    return ContrastReport(float(nbar), p2 - p1, protocol, p1, p2, t1, t2)


def check_flip_identity(operator: Operator, flip: Operator, margin: int = 1) -> float:
    """``max|R^dag A R + A|`` away from the top ``margin`` Fock levels, relative to max|A|."""
    conj = flip.dag() @ operator @ flip
    idx = operator.space.safe_indices(margin)
    diff = (conj + operator).matrix[np.ix_(idx, idx)]
    return float(np.max(np.abs(diff))) / operator.max_abs()

