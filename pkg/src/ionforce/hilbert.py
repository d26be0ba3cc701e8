"""Truncated Fock-space linear algebra for a spin coupled to one or two modes.

Basis ordering is fixed: spin index slowest, then mode x, then mode y.  Spin
index 0 is |up> (sigma_z |up> = +|up>), index 1 is |down>.  Bosonic operators
are the exact projections of the infinite-dimensional operators onto the
states |0>..|N-1>, so canonical commutators only fail on the top Fock level.

All objects here are immutable; the underlying arrays are flagged read-only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import prod
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

HERMITIAN_RTOL = 1e-12
TAIL_WARN_LEVEL = 1e-6


class TruncationWarning(UserWarning):
    """Population leaked into the top Fock level beyond the accepted level."""


class NumericalError(RuntimeError):
    """A numerical routine failed or produced an unusable result."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HilbertSpace:
    """Spin-1/2 tensored with one or two truncated bosonic modes.

    ``spin_dim`` is 2 for the full space.  A space with ``spin_dim=1`` is the
    motional factor on its own and is what thermal and Fock motional states
    live on before being combined with a spin state.
    """

    mode_cutoffs: tuple[int, ...]
    spin_dim: int = 2

    def __post_init__(self):
        cutoffs = tuple(int(n) for n in self.mode_cutoffs)
        object.__setattr__(self, "mode_cutoffs", cutoffs)
        if not cutoffs:
            raise ValueError("at least one bosonic mode is required")
        if any(n < 2 for n in cutoffs):
            raise ValueError(f"every mode cutoff must be >= 2, got {cutoffs}")
        if self.spin_dim not in (1, 2):
            raise ValueError("spin_dim must be 2 (or 1 for a motional-only factor)")

    @property
    def n_modes(self) -> int:
        return len(self.mode_cutoffs)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.spin_dim, *self.mode_cutoffs)

    @property
    def dim(self) -> int:
        return self.spin_dim * prod(self.mode_cutoffs)

    @property
    def motional_dim(self) -> int:
        return prod(self.mode_cutoffs)

    def motional(self) -> HilbertSpace:
        return HilbertSpace(self.mode_cutoffs, spin_dim=1)

    def with_spin(self) -> HilbertSpace:
        return HilbertSpace(self.mode_cutoffs, spin_dim=2)

    def check_mode(self, mode_index: int) -> int:
        if not 0 <= mode_index < self.n_modes:
            raise ValueError(
                f"mode index {mode_index} invalid for a space with {self.n_modes} mode(s)"
            )
        return mode_index

    def occupations(self) -> np.ndarray:
        """Phonon occupation of every basis state, shape (dim, n_modes)."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1).T
        return grids[:, 1:]

    def safe_indices(self, margin: int = 2) -> np.ndarray:
        """Basis indices whose occupations stay ``margin`` levels below every cutoff."""
        occ = self.occupations()
        limits = np.array(self.mode_cutoffs) - margin
        return np.flatnonzero(np.all(occ < limits, axis=1))


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix acting on a :class:`HilbertSpace`."""

    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        matrix = _frozen(self.matrix)
        if matrix.shape != (self.space.dim, self.space.dim):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match space dimension {self.space.dim}"
            )
        object.__setattr__(self, "matrix", matrix)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Operator):
            if other.space != self.space:
                raise ValueError("operators live on different spaces")
            return other.matrix
        return other * np.eye(self.space.dim)

    def __add__(self, other):
        return Operator(self.space, self.matrix + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Operator(self.space, self.matrix - self._coerce(other))

    def __rsub__(self, other):
        return Operator(self.space, self._coerce(other) - self.matrix)

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.space, scalar * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.space, self.matrix / scalar)

    def __matmul__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return Operator(self.space, self.matrix @ self._coerce(other))

    def dag(self) -> Operator:
        return Operator(self.space, self.matrix.conj().T)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def hermiticity_error(self) -> float:
        """``max|A - A^dag| / max|A|`` (0 for the zero operator)."""
        scale = self.max_abs()
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) / scale

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return self.hermiticity_error() <= rtol


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.dim))


def zero(space: HilbertSpace) -> Operator:
    return Operator(space, np.zeros((space.dim, space.dim)))


def _embed(space: HilbertSpace, factor: int, local: np.ndarray) -> np.ndarray:
    """Tensor ``local`` into factor ``factor`` (0 = spin) with identities elsewhere."""
    out = np.ones((1, 1), dtype=complex)
    for k, d in enumerate(space.dims):
        out = np.kron(out, local if k == factor else np.eye(d))
    return out


def _lowering_matrix(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)


def mode_lowering(space: HilbertSpace, mode_index: int = 0) -> Operator:
    """Annihilation operator of one mode, embedded in the full space."""
    space.check_mode(mode_index)
    local = _lowering_matrix(space.mode_cutoffs[mode_index])
    return Operator(space, _embed(space, 1 + mode_index, local))


def mode_raising(space: HilbertSpace, mode_index: int = 0) -> Operator:
    return mode_lowering(space, mode_index).dag()


def number_operator(space: HilbertSpace, mode_index: int = 0) -> Operator:
    space.check_mode(mode_index)
    local = np.diag(np.arange(space.mode_cutoffs[mode_index], dtype=float))
    return Operator(space, _embed(space, 1 + mode_index, local))


def quadrature(space: HilbertSpace, mode_index: int = 0) -> Operator:
    """``a^dag + a`` for one mode."""
    a = mode_lowering(space, mode_index)
    return a + a.dag()


def momentum_like(space: HilbertSpace, mode_index: int = 0) -> Operator:
    """``a - a^dag`` for one mode (anti-Hermitian)."""
    a = mode_lowering(space, mode_index)
    return a - a.dag()


_SPIN_MATRICES = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
    "up": np.array([[1, 0], [0, 0]], dtype=complex),
    "down": np.array([[0, 0], [0, 1]], dtype=complex),
}


def spin_operator(space: HilbertSpace, which: str) -> Operator:
    """Pauli or ladder matrix on the spin factor.

    ``which`` is one of ``x, y, z, plus, minus`` (plus ``up``/``down``
    projectors).  ``plus`` is ``|up><down|``.
    """
    if space.spin_dim != 2:
        raise ValueError("spin operators need a space with a spin factor")
    try:
        local = _SPIN_MATRICES[which]
    except KeyError:
        raise ValueError(f"unknown spin operator {which!r}") from None
    return Operator(space, _embed(space, 0, local))


def embed_spin(space: HilbertSpace, local: np.ndarray) -> Operator:
    """Arbitrary 2x2 spin matrix tensored with identities on the modes."""
    local = np.asarray(local, dtype=complex)
    if local.shape != (2, 2) or space.spin_dim != 2:
        raise ValueError("need a 2x2 matrix and a space with a spin factor")
    return Operator(space, _embed(space, 0, local))


def embed_mode(space: HilbertSpace, mode_index: int, local: np.ndarray) -> Operator:
    """Single-mode matrix tensored with identities elsewhere."""
    space.check_mode(mode_index)
    local = np.asarray(local, dtype=complex)
    n = space.mode_cutoffs[mode_index]
    if local.shape != (n, n):
        raise ValueError(f"mode matrix must be {n}x{n}")
    return Operator(space, _embed(space, 1 + mode_index, local))


def matrix_exponential(a: Operator, scalar: complex = 1.0) -> Operator:
    """``exp(scalar * A)`` by scaling and squaring with a Pade kernel."""
    m = scalar * a.matrix
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix exponential of a non-finite matrix")
    return Operator(a.space, scipy.linalg.expm(m))


def operator_norm(matrix: np.ndarray) -> float:
    """Largest singular value."""
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


@dataclass(frozen=True)
class QuantumState:
    """Pure state vector or density matrix on a :class:`HilbertSpace`.

    ``tail`` maps a mode index to the probability mass that was cut off by the
    truncation when the state was built (only thermal states set it).
    """

    space: HilbertSpace
    data: np.ndarray = field(repr=False)
    tail: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        data = _frozen(self.data)
        d = self.space.dim
        if data.shape == (d,):
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > 1e-10:
                raise ValueError(f"pure state norm {norm} differs from 1")
        elif data.shape == (d, d):
            tr = np.trace(data).real
            if abs(tr - 1.0) > 1e-10:
                raise ValueError(f"density matrix trace {tr} differs from 1")
            if np.max(np.abs(data - data.conj().T)) > 1e-10:
                raise ValueError("density matrix is not Hermitian")
            if np.linalg.eigvalsh(data)[0] < -1e-10:
                raise ValueError("density matrix has a negative eigenvalue")
        else:
            raise ValueError(f"state shape {data.shape} does not match dimension {d}")
        object.__setattr__(self, "data", data)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def kind(self) -> str:
        return "pure" if self.is_pure else "mixed"

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def expect(self, op: Operator) -> float:
        if op.space != self.space:
            raise ValueError("operator and state live on different spaces")
        if self.is_pure:
            value = np.vdot(self.data, op.matrix @ self.data)
        else:
            value = np.trace(op.matrix @ self.data)
        return float(value.real)

    def purity(self) -> float:
        if self.is_pure:
            return 1.0
        return float(np.real(np.trace(self.data @ self.data)))

    def p_up(self) -> float:
        return spin_up_population(self.space, self.data)

    def top_level_population(self, mode_index: int) -> float:
        return top_level_population(self.space, self.data, mode_index)

    def min_eigenvalue(self) -> float:
        if self.is_pure:
            return 0.0
        return float(np.linalg.eigvalsh(self.data)[0])


def spin_up_population(space: HilbertSpace, data: np.ndarray) -> float:
    """``<up| Tr_modes rho |up>`` for a state vector or density matrix."""
    half = space.motional_dim
    if data.ndim == 1:
        return float(np.sum(np.abs(data[:half]) ** 2))
    return float(np.real(np.trace(data[:half, :half])))


def populations(data: np.ndarray) -> np.ndarray:
    """Basis-state populations of a state vector or density matrix."""
    if data.ndim == 1:
        return np.abs(data) ** 2
    return np.real(np.diagonal(data))


def top_level_mask(space: HilbertSpace, mode_index: int) -> np.ndarray:
    space.check_mode(mode_index)
    occ = space.occupations()[:, mode_index]
    return occ == space.mode_cutoffs[mode_index] - 1


def top_level_population(space: HilbertSpace, data: np.ndarray, mode_index: int) -> float:
    """Population of the highest retained Fock level of one mode."""
    return float(populations(data)[top_level_mask(space, mode_index)].sum())


def warn_on_tail(space: HilbertSpace, data: np.ndarray, context: str = "") -> dict[int, float]:
    """Top-level population per mode; warns when any exceeds ``TAIL_WARN_LEVEL``."""
    tails = {}
    for k in range(space.n_modes):
        value = top_level_population(space, data, k)
        tails[k] = value
        if value > TAIL_WARN_LEVEL:
            warnings.warn(
                f"{context}top Fock level of mode {k} holds population {value:.2e}; "
                f"raise the cutoff ({space.mode_cutoffs[k]})",
                TruncationWarning,
                stacklevel=3,
            )
    return tails


def _basis_index(space: HilbertSpace, spin: int, occupations: Sequence[int]) -> int:
    return int(np.ravel_multi_index((spin, *occupations), space.dims))


def _spin_index(spin) -> int:
    if spin in ("up", 0, "u", "+z"):
        return 0
    if spin in ("down", 1, "d", "-z"):
        return 1
    raise ValueError(f"unknown spin label {spin!r}")


def fock_state(space: HilbertSpace, occupations: Sequence[int] | int, spin="up") -> QuantumState:
    """Pure product state |spin> (x) |n_x> [(x) |n_y>].

    On a motional-only space (``spin_dim=1``) the spin label is ignored.
    """
    occ = (occupations,) if np.isscalar(occupations) else tuple(occupations)
    if len(occ) != space.n_modes:
        raise ValueError(f"expected {space.n_modes} occupation(s), got {len(occ)}")
    for n, cutoff in zip(occ, space.mode_cutoffs):
        if not 0 <= n < cutoff:
            raise ValueError(f"occupation {n} outside truncated range 0..{cutoff - 1}")
    s = 0 if space.spin_dim == 1 else _spin_index(spin)
    vec = np.zeros(space.dim, dtype=complex)
    vec[_basis_index(space, s, occ)] = 1.0
    return QuantumState(space, vec)


def thermal_populations(nbar: float, cutoff: int) -> tuple[np.ndarray, float]:
    """Geometric Fock distribution, renormalised, and the mass lost beyond the cutoff."""
    if nbar < 0:
        raise ValueError(f"mean phonon number must be non-negative, got {nbar}")
    n = np.arange(cutoff)
    if nbar == 0:
        p = (n == 0).astype(float)
        return p, 0.0
    ratio = nbar / (1.0 + nbar)
    p = ratio**n / (1.0 + nbar)
    tail = ratio**cutoff
    return p / p.sum(), float(tail)


def thermal_state(space: HilbertSpace, mode_index: int | None, nbar: float | Sequence[float]) -> QuantumState:
    """Thermal motional state on ``space.motional()``.

    With an integer ``mode_index`` that mode is thermal with mean ``nbar`` and
    any other mode is left in vacuum.  With ``mode_index=None`` every mode is
    thermal; ``nbar`` may then be a scalar or one value per mode.
    """
    mspace = space.motional()
    if mode_index is None:
        nbars = [nbar] * space.n_modes if np.isscalar(nbar) else list(nbar)
        if len(nbars) != space.n_modes:
            raise ValueError("need one mean phonon number per mode")
    else:
        space.check_mode(mode_index)
        nbars = [0.0] * space.n_modes
        nbars[mode_index] = float(nbar)
    diag = np.ones(1)
    tails = {}
    for k, (nb, cutoff) in enumerate(zip(nbars, space.mode_cutoffs)):
        p, tail = thermal_populations(float(nb), cutoff)
        tails[k] = tail
        diag = np.kron(diag, p)
    return QuantumState(mspace, np.diag(diag), tail=tails)


def spin_superposition(
    space: HilbertSpace, c_up: complex, c_down: complex, motional: QuantumState
) -> QuantumState:
    """Product state ``(c_up|up> + c_down|down>) (x) motional``."""
    if abs(abs(c_up) ** 2 + abs(c_down) ** 2 - 1.0) > 1e-10:
        raise ValueError("spin amplitudes are not normalised")
    space = space.with_spin()
    if motional.space != space.motional():
        if motional.space == space:
            raise ValueError("motional state must live on the motional factor space")
        raise ValueError("motional state has mismatched mode cutoffs")
    spin = np.array([c_up, c_down], dtype=complex)
    if motional.is_pure:
        data = np.kron(spin, motional.data)
    else:
        data = np.kron(np.outer(spin, spin.conj()), motional.data)
    return QuantumState(space, data, tail=dict(motional.tail))
