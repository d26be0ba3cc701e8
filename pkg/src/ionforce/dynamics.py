"""Time evolution under piecewise-constant Hamiltonians and motional heating.

Unitary segments are propagated through the eigendecomposition of H/hbar,
so a segment's propagator at any number of sample times costs one
diagonalisation.  Heating builds the sparse Lindblad generator with symmetric
up/down jumps on each heated mode and applies its exponential between sample
times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from .hilbert import (
    HilbertSpace,
    NumericalError,
    Operator,
    QuantumState,
    mode_lowering,
    spin_up_population,
    top_level_mask,
    warn_on_tail,
)
from .models import HBAR

_TIME_EPS = 1e-12


@dataclass(frozen=True)
class Segment:
    hamiltonian: Operator
    duration: float

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError(f"segment duration must be >= 0, got {self.duration}")
        object.__setattr__(self, "duration", float(self.duration))


@dataclass(frozen=True)
class Kick:
    unitary: Operator

    def __post_init__(self):
        u = self.unitary.matrix
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-9:
            raise ValueError("kick operator is not unitary")


Element = Union[Segment, Kick]


@dataclass(frozen=True)
class PulseSequence:
    """Time-ordered segments and instantaneous kicks on one Hilbert space."""

    elements: tuple[Element, ...]

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise ValueError("a pulse sequence needs at least one element")
        spaces = {_element_operator(e).space for e in elements}
        if len(spaces) != 1:
            raise ValueError("all sequence elements must share one Hilbert space")
        object.__setattr__(self, "elements", elements)

    @classmethod
    def single(cls, hamiltonian: Operator, duration: float) -> PulseSequence:
        return cls((Segment(hamiltonian, duration),))

    @property
    def space(self) -> HilbertSpace:
        return _element_operator(self.elements[0]).space

    @property
    def duration(self) -> float:
        return math.fsum(e.duration for e in self.elements if isinstance(e, Segment))

    @property
    def n_kicks(self) -> int:
        return sum(isinstance(e, Kick) for e in self.elements)

    def __add__(self, other: PulseSequence) -> PulseSequence:
        return PulseSequence(self.elements + other.elements)


def _element_operator(element: Element) -> Operator:
    if isinstance(element, Segment):
        return element.hamiltonian
    if isinstance(element, Kick):
        return element.unitary
    raise TypeError(f"not a sequence element: {element!r}")


@dataclass(frozen=True)
class HeatingChannel:
    mode_index: int
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("heating rate must be non-negative")


@dataclass(frozen=True)
class SignalTrace:
    """Spin-up probability sampled at strictly increasing times.

    ``tails[k]`` is the top-Fock-level population of mode ``k`` at each
    sample (empty for analytic traces).
    """

    times: np.ndarray
    p_up: np.ndarray
    tails: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        p = np.asarray(self.p_up, dtype=float)
        if times.ndim != 1 or times.shape != p.shape:
            raise ValueError("times and p_up must be 1-D arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if np.any(p < -1e-9) or np.any(p > 1 + 1e-9):
            raise NumericalError("spin-up probability left [0, 1]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "p_up", np.clip(p, 0.0, 1.0))
        object.__setattr__(self, "tails", {k: np.asarray(v, float) for k, v in self.tails.items()})

    def __len__(self):
        return self.times.size


class Propagator:
    """exp(-i H t / hbar) for a Hermitian H via its eigendecomposition."""

    def __init__(self, hamiltonian: Operator, hbar: float = HBAR):
        if not hamiltonian.is_hermitian(1e-10):
            raise ValueError("segment Hamiltonian is not Hermitian")
        h = hamiltonian.matrix / hbar
        energies, vectors = np.linalg.eigh(0.5 * (h + h.conj().T))
        self.energies = energies
        self.vectors = vectors
        self.rate = float(np.max(np.abs(energies))) if energies.size else 0.0

    def unitary(self, tau: float) -> np.ndarray:
        v = self.vectors
        return (v * np.exp(-1j * self.energies * tau)) @ v.conj().T

    def apply_pure(self, psi: np.ndarray, taus: np.ndarray) -> np.ndarray:
        """States at each tau, shape (len(taus), dim)."""
        coeffs = self.vectors.conj().T @ psi
        phases = np.exp(-1j * np.outer(taus, self.energies))
        return (phases * coeffs) @ self.vectors.T

    def apply_mixed(self, rho: np.ndarray, taus: np.ndarray) -> list[np.ndarray]:
        v = self.vectors
        rotated = v.conj().T @ rho @ v
        out = []
        for tau in taus:
            ph = np.exp(-1j * self.energies * tau)
            out.append(v @ (ph[:, None] * rotated * ph.conj()[None, :]) @ v.conj().T)
        return out


def _apply_unitary(u: np.ndarray, data: np.ndarray) -> np.ndarray:
    if data.ndim == 1:
        return u @ data
    return u @ data @ u.conj().T


def _observe(space: HilbertSpace, data: np.ndarray, masks) -> tuple[float, list[float]]:
    p = spin_up_population(space, data)
    if data.ndim == 1:
        pops = np.abs(data) ** 2
    else:
        pops = np.real(np.diagonal(data))
    return p, [float(pops[m].sum()) for m in masks]


def _check_times(sample_times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(sample_times, dtype=float))
    if times.ndim != 1 or times.size == 0:
        raise ValueError("need at least one sample time")
    if np.any(times < 0):
        raise ValueError("sample times must be non-negative")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return times


def evolve(
    sequence: PulseSequence,
    initial: QuantumState,
    sample_times: Iterable[float],
    *,
    hbar: float = HBAR,
    return_state: bool = False,
    cache: dict | None = None,
):
    """Propagate ``initial`` through ``sequence`` and record P_up at each time.

    A sample taken at an instant where kicks occur sees those kicks.  Pass the
    same ``cache`` dict to repeated calls to reuse segment diagonalisations
    (keyed by Hamiltonian identity).  Returns the trace, or ``(trace,
    final_state)`` with ``return_state``.
    """
    space = sequence.space
    if initial.space != space:
        raise ValueError("initial state and sequence live on different spaces")
    times = _check_times(sample_times)
    total = sequence.duration
    eps = _TIME_EPS * max(total, 1e-300)
    if times[-1] > total + eps:
        raise ValueError(f"sample time {times[-1]} beyond sequence duration {total}")
    cache = {} if cache is None else cache
    masks = [top_level_mask(space, k) for k in range(space.n_modes)]

    p_up = np.empty(times.size)
    tails = np.empty((space.n_modes, times.size))
    state = np.array(initial.data)
    next_sample = 0
    t0 = 0.0

    def record(idx, data):
        p_up[idx], tl = _observe(space, data, masks)
        tails[:, idx] = tl

    for element in sequence.elements:
        if isinstance(element, Kick):
            state = _apply_unitary(element.unitary.matrix, state)
            continue
        while next_sample < times.size and times[next_sample] <= t0 + eps:
            record(next_sample, state)
            next_sample += 1
        t1 = t0 + element.duration
        key = id(element.hamiltonian)
        if key not in cache:
            cache[key] = (element.hamiltonian, Propagator(element.hamiltonian, hbar))
        prop = cache[key][1]
        stop = next_sample
        while stop < times.size and times[stop] < t1 - eps:
            stop += 1
        if stop > next_sample:
            taus = times[next_sample:stop] - t0
            if state.ndim == 1:
                inside = prop.apply_pure(state, taus)
            else:
                inside = prop.apply_mixed(state, taus)
            for offset, data in enumerate(inside):
                record(next_sample + offset, data)
            next_sample = stop
        state = _apply_unitary(prop.unitary(element.duration), state)
        t0 = t1
    while next_sample < times.size:
        record(next_sample, state)
        next_sample += 1

    final = QuantumState(space, _renormalise(state), tail=dict(initial.tail))
    warn_on_tail(space, final.data, "evolve: ")
    trace = SignalTrace(
        times,
        p_up,
        tails={k: tails[k] for k in range(space.n_modes)},
        metadata={"duration": total, "kicks": sequence.n_kicks, "initial_tail": dict(initial.tail)},
    )
    return (trace, final) if return_state else trace


def _renormalise(data: np.ndarray) -> np.ndarray:
    if data.ndim == 1:
        return data / np.linalg.norm(data)
    data = 0.5 * (data + data.conj().T)
    return data / np.trace(data).real


def sequence_propagator(sequence: PulseSequence, *, hbar: float = HBAR, cache: dict | None = None) -> Operator:
    """Full time-ordered unitary of a sequence."""
    cache = {} if cache is None else cache
    u = np.eye(sequence.space.dim, dtype=complex)
    for element in sequence.elements:
        if isinstance(element, Kick):
            u = element.unitary.matrix @ u
            continue
        key = id(element.hamiltonian)
        if key not in cache:
            cache[key] = (element.hamiltonian, Propagator(element.hamiltonian, hbar))
        u = cache[key][1].unitary(element.duration) @ u
    return Operator(sequence.space, u)


def _rk4_step(h: np.ndarray, channels: Sequence[HeatingChannel], space: HilbertSpace) -> float | None:
    limits = []
    h_rate = float(np.linalg.norm(h, 2))
    if h_rate > 0:
        limits.append(0.01 / h_rate)
    d_rate = sum(4.0 * ch.rate * (space.mode_cutoffs[ch.mode_index] - 1) for ch in channels)
    if d_rate > 0:
        limits.append(0.05 / d_rate)
    return min(limits) if limits else None


def evolve_lindblad(
    hamiltonian: Operator,
    channels: Sequence[HeatingChannel],
    initial: QuantumState,
    sample_times: Iterable[float],
    *,
    hbar: float = HBAR,
    return_state: bool = False,
    trace_tol: float = 1e-8,
    method: str = "expm",
):
    """Integrate the master equation with heating channels from t = 0.

    Each channel adds rate * (D[a] + D[a^dag]) on its mode, which makes the
    mean phonon number grow at exactly ``rate`` when H = 0.  With
    ``method="expm"`` the generator acts on the column-stacked density matrix
    and is exponentiated with ``expm_multiply`` over each gap between sample
    times.  ``method="rk4"`` uses fixed RK4 steps of at most 0.01 / ||H/hbar||
    and 0.05 / (dissipator scale); it is exact only to that step and slow for
    lab-frame Hamiltonians, where ||H/hbar|| grows as omega times the cutoff.
    """
    if method not in ("expm", "rk4"):
        raise ValueError(f"unknown Lindblad method {method!r}")
    space = hamiltonian.space
    if initial.space != space:
        raise ValueError("initial state and Hamiltonian live on different spaces")
    if not hamiltonian.is_hermitian(1e-10):
        raise ValueError("Hamiltonian is not Hermitian")
    times = _check_times(sample_times)
    dim = space.dim
    eye = sparse.identity(dim, dtype=complex, format="csr")
    h = sparse.csr_matrix(hamiltonian.matrix / hbar)
    # vec(A X B) = (B^T kron A) vec(X) for column stacking
    gen = -1j * (sparse.kron(eye, h) - sparse.kron(h.T, eye))
    for ch in channels:
        if ch.rate <= 0:
            continue
        a = sparse.csr_matrix(mode_lowering(space, ch.mode_index).matrix)
        for op in (a, a.conj().T.tocsr()):
            nn = (op.conj().T @ op).tocsr()
            gen = gen + ch.rate * (sparse.kron(op.conj(), op) - 0.5 * sparse.kron(eye, nn) - 0.5 * sparse.kron(nn.T, eye))
    gen = gen.tocsr()
    step_max = _rk4_step(hamiltonian.matrix / hbar, channels, space) if method == "rk4" else None

    masks = [top_level_mask(space, k) for k in range(space.n_modes)]
    p_up = np.empty(times.size)
    tails = np.empty((space.n_modes, times.size))
    purity = np.empty(times.size)
    vec = np.array(initial.density_matrix()).reshape(-1, order="F")
    t = 0.0
    for idx, target in enumerate(times):
        span = target - t
        if span > 0:
            if method == "expm":
                vec = expm_multiply(gen * span, vec)
            else:
                n = 1 if step_max is None else max(1, math.ceil(span / step_max))
                step = span / n
                for _ in range(n):
                    k1 = gen @ vec
                    k2 = gen @ (vec + 0.5 * step * k1)
                    k3 = gen @ (vec + 0.5 * step * k2)
                    k4 = gen @ (vec + step * k3)
                    vec = vec + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = target
        rho = vec.reshape(dim, dim, order="F")
        drift = abs(np.trace(rho).real - 1.0)
        if drift > trace_tol or not np.all(np.isfinite(rho)):
            raise NumericalError(f"Lindblad trace drift {drift:.2e} exceeded {trace_tol:.0e}")
        p_up[idx], tl = _observe(space, rho, masks)
        tails[:, idx] = tl
        purity[idx] = float(np.real(np.vdot(rho, rho)))

    final = QuantumState(space, _renormalise(rho), tail=dict(initial.tail))
    warn_on_tail(space, final.data, "evolve_lindblad: ")
    trace = SignalTrace(
        times,
        p_up,
        tails={k: tails[k] for k in range(space.n_modes)},
        metadata={
            "heating": {ch.mode_index: ch.rate for ch in channels},
            "purity": purity,
            "method": method,
        },
    )
    return (trace, final) if return_state else trace


def analytic_damped_signal(omega_f: float, gamma: float, times: Iterable[float]) -> SignalTrace:
    """P_up(t) = (1 + exp(-gamma t) cos(2 omega_f t)) / 2."""
    if gamma < 0:
        raise ValueError("decoherence rate must be non-negative")
    t = _check_times(times)
    p = 0.5 * (1.0 + np.exp(-gamma * t) * np.cos(2.0 * omega_f * t))
    return SignalTrace(t, p, metadata={"omega_f": omega_f, "gamma": gamma})
