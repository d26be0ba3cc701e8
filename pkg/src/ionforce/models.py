"""Probe Hamiltonians and derived frequencies.

Every operator is in SI energy units (J); divide by hbar for angular
frequency.  Frequencies are angular, in rad/s.  Quoted "kHz" figures from the
literature setups are used as rad/s with the same mantissa (4 kHz -> 4e3
rad/s); that is the convention under which the closed-form sensitivities
come out at the quoted yoctonewton values.

The force term is static: the simulator works in the frame rotating with the
force drive, so F cos(w_d t) has already been absorbed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

from scipy.constants import hbar as HBAR

from .hilbert import (
    HilbertSpace,
    Operator,
    mode_lowering,
    number_operator,
    quadrature,
    spin_operator,
    zero,
)

WEAK_COUPLING_LIMIT = 0.1
PROBES = ("JC", "QR", "JT")

LAB_KINDS = ("JC", "QR", "JT", "JC_TOTAL", "QR_TOTAL", "JT_TOTAL", "DRIVE", "FORCE_AX", "FORCE_2D")
EFFECTIVE_KINDS = ("JC_EFF", "QR_EFF", "JT_EFF")


class WeakCouplingWarning(UserWarning):
    """g/omega is too large for the perturbative elimination to be trusted."""


def _components(value, ncomp: int, name: str) -> tuple[float, ...]:
    """Normalise a scalar or sequence to ``ncomp`` floats; a bare 0 fills all."""
    if value is None:
        value = 0.0
    if isinstance(value, (int, float)):
        if ncomp == 1 or value == 0:
            return (float(value),) * ncomp
        raise ValueError(f"{name} needs {ncomp} components")
    out = tuple(float(v) for v in value)
    if len(out) != ncomp:
        raise ValueError(f"{name} needs {ncomp} component(s), got {len(out)}")
    return out


@dataclass(frozen=True)
class ProbeParams:
    """Physical parameters of one probe.

    Either ``z`` (ground-state spread, m) or ``mass`` together with
    ``trap_frequency`` must be given.  ``force`` and ``heating`` take one
    component for the axial probes (JC, QR) and two (x, y) for JT.
    ``delta`` defaults to g^2 / 2 omega, which cancels the dispersive spin
    shift of the JC probe.
    """

    probe_kind: str
    g: float
    omega: float
    delta: float | None = None
    drive_omega: float = 0.0
    z: float | None = None
    mass: float | None = None
    trap_frequency: float | None = None
    force: float | Sequence[float] = 0.0
    heating: float | Sequence[float] = 0.0
    hbar: float = HBAR

    def __post_init__(self):
        kind = str(self.probe_kind).upper()
        if kind not in PROBES:
            raise ValueError(f"probe_kind must be one of {PROBES}, got {self.probe_kind!r}")
        object.__setattr__(self, "probe_kind", kind)
        if not (self.g > 0 and self.omega > 0):
            raise ValueError("g and omega must be positive")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        has_z = self.z is not None
        has_trap = self.mass is not None or self.trap_frequency is not None
        if has_z == has_trap:
            raise ValueError("give exactly one of z, or (mass, trap_frequency)")
        if has_trap and (self.mass is None or self.trap_frequency is None):
            raise ValueError("mass and trap_frequency must be given together")
        ncomp = 2 if kind == "JT" else 1
        force = _components(self.force, ncomp, "force")
        heating = _components(self.heating, ncomp, "heating")
        if any(h < 0 for h in heating):
            raise ValueError("heating rates must be non-negative")
        object.__setattr__(self, "force", force)
        object.__setattr__(self, "heating", heating)
        if self.coupling_ratio > WEAK_COUPLING_LIMIT:
            warnings.warn(
                f"g/omega = {self.coupling_ratio:.3g} exceeds {WEAK_COUPLING_LIMIT}; "
                "effective Hamiltonians are unreliable",
                WeakCouplingWarning,
                stacklevel=3,
            )

    @property
    def coupling_ratio(self) -> float:
        return self.g / self.omega

    @property
    def spread(self) -> float:
        """Ground-state wavefunction spread z = sqrt(hbar / 2 m w_trap)."""
        if self.z is not None:
            return float(self.z)
        return math.sqrt(self.hbar / (2.0 * self.mass * self.trap_frequency))

    @property
    def spin_frequency(self) -> float:
        if self.delta is None:
            return self.g**2 / (2.0 * self.omega)
        return float(self.delta)

    @property
    def force_x(self) -> float:
        return self.force[0]

    @property
    def force_y(self) -> float:
        return self.force[1] if len(self.force) > 1 else 0.0

    @property
    def force_magnitude(self) -> float:
        return math.hypot(*self.force)

    @property
    def total_heating(self) -> float:
        return float(sum(self.heating))

    def replace(self, **changes) -> ProbeParams:
        return replace(self, **changes)

    def with_force_scale(self, factor: float) -> ProbeParams:
        return replace(self, force=tuple(f * factor for f in self.force))


class TransverseForce(NamedTuple):
    omega_x: float
    omega_y: float
    omega_rms: float
    xi: float | None  # None when both components vanish


def rabi_frequency_axial(params: ProbeParams) -> float:
    """Omega_F = g z F / (2 hbar omega), in rad/s."""
    return params.g * params.spread * params.force_x / (2.0 * params.hbar * params.omega)


def transverse_force_parameters(params: ProbeParams) -> TransverseForce:
    """Rabi frequencies of the two transverse force components.

    ``xi`` uses the full-quadrant arctangent; it is ``None`` for zero force.
    """
    if params.probe_kind != "JT":
        raise ValueError("transverse force parameters need a JT probe")
    scale = params.g * params.spread / (params.hbar * params.omega)
    fx, fy = params.force_x, params.force_y
    xi = None if fx == 0.0 and fy == 0.0 else math.atan2(fy, fx)
    return TransverseForce(scale * fx, scale * fy, scale * math.hypot(fx, fy), xi)


def signal_rabi_frequency(params: ProbeParams) -> float:
    """Angular frequency Omega in the ideal signal P_up = cos^2(Omega t)."""
    if params.probe_kind == "JC":
        return rabi_frequency_axial(params)
    if params.probe_kind == "QR":
        return 2.0 * rabi_frequency_axial(params)
    return transverse_force_parameters(params).omega_rms


def force_per_signal_frequency(params: ProbeParams) -> float:
    """dF/dOmega for the linear map between force and signal Rabi frequency."""
    hw = params.hbar * params.omega
    gz = params.g * params.spread
    if params.probe_kind == "JC":
        return 2.0 * hw / gz
    return hw / gz


def _require_modes(space: HilbertSpace, n: int, kind: str) -> None:
    if space.spin_dim != 2 or space.n_modes != n:
        raise ValueError(f"{kind} needs a spin + {n}-mode space, got modes={space.mode_cutoffs}")


def _require_probe(params: ProbeParams, probes: tuple[str, ...], kind: str) -> None:
    if params.probe_kind not in probes:
        raise ValueError(f"{kind} is incompatible with a {params.probe_kind} probe")


def _free_oscillators(params: ProbeParams, space: HilbertSpace) -> Operator:
    out = zero(space)
    for k in range(space.n_modes):
        out = out + params.hbar * params.omega * number_operator(space, k)
    return out


def drive_hamiltonian(params: ProbeParams, space: HilbertSpace, sign: float = 1.0) -> Operator:
    """Strong carrier drive hbar Omega sigma_x."""
    return sign * params.hbar * params.drive_omega * spin_operator(space, "x")


def build_lab_hamiltonian(kind: str, params: ProbeParams, space: HilbertSpace) -> Operator:
    """Interaction-picture Hamiltonian of one probe, or one of its terms.

    ``*_TOTAL`` kinds are the model plus its force term; ``DRIVE`` is the
    carrier drive alone; ``FORCE_AX`` / ``FORCE_2D`` are the force terms alone.
    """
    kind = kind.upper()
    if kind not in LAB_KINDS:
        raise ValueError(f"unknown Hamiltonian kind {kind!r}")
    h, w, g = params.hbar, params.omega, params.g

    if kind == "DRIVE":
        _require_modes(space, space.n_modes, kind)
        return drive_hamiltonian(params, space)

    if kind.startswith("JC") or kind.startswith("QR") or kind == "FORCE_AX":
        probes = ("JC", "QR") if kind == "FORCE_AX" else (kind[:2],)
        _require_probe(params, probes, kind)
        _require_modes(space, 1, kind)
        force = 0.5 * params.spread * params.force_x * quadrature(space, 0)
        if kind == "FORCE_AX":
            return force
        if kind.startswith("JC"):
            a = mode_lowering(space, 0)
            model = (
                h * w * number_operator(space, 0)
                + h * params.spin_frequency * spin_operator(space, "z")
                + h * g * (spin_operator(space, "minus") @ a.dag() + spin_operator(space, "plus") @ a)
            )
        else:
            model = h * w * number_operator(space, 0) + h * g * spin_operator(space, "x") @ quadrature(space, 0)
        return model + force if kind.endswith("_TOTAL") else model

    # JT family and FORCE_2D
    _require_probe(params, ("JT",), kind)
    _require_modes(space, 2, kind)
    z = params.spread
    force = 0.5 * z * params.force_x * quadrature(space, 0) + 0.5 * z * params.force_y * quadrature(space, 1)
    if kind == "FORCE_2D":
        return force
    model = (
        _free_oscillators(params, space)
        + h * g * spin_operator(space, "x") @ quadrature(space, 0)
        + h * g * spin_operator(space, "y") @ quadrature(space, 1)
    )
    return model + force if kind == "JT_TOTAL" else model


def jt_residual(params: ProbeParams, space: HilbertSpace) -> Operator:
    """Residual coupling 2i (hbar g^2/omega) sigma_z (a_x^dag a_y - a_x a_y^dag)."""
    _require_modes(space, 2, "JT residual")
    ax, ay = mode_lowering(space, 0), mode_lowering(space, 1)
    hop = ax.dag() @ ay - ax @ ay.dag()
    return 2j * params.hbar * params.g**2 / params.omega * (spin_operator(space, "z") @ hop)


def jc_residual(params: ProbeParams, space: HilbertSpace) -> Operator:
    """Residual coupling (hbar g^2/omega) sigma_z n, entering H_eff with a minus sign."""
    _require_modes(space, 1, "JC residual")
    return params.hbar * params.g**2 / params.omega * (spin_operator(space, "z") @ number_operator(space, 0))


def build_effective_hamiltonian(
    kind: str,
    params: ProbeParams,
    space: HilbertSpace,
    include_residual: bool = True,
    include_constants: bool = False,
) -> Operator:
    """Effective spin Hamiltonian after eliminating the phonons to order g^2/omega.

    With ``include_constants`` the free-oscillator term and the scalar shifts
    are added, so the result is the complete second-order expression
    (``e^{-S} H e^{S}`` up to third-order terms).
    """
    kind = kind.upper()
    if kind not in EFFECTIVE_KINDS:
        raise ValueError(f"unknown effective Hamiltonian kind {kind!r}")
    probe = kind[:2]
    _require_probe(params, (probe,), kind)
    _require_modes(space, 2 if probe == "JT" else 1, kind)
    h, w, g, z = params.hbar, params.omega, params.g, params.spread
    sx, sy, sz = (spin_operator(space, s) for s in "xyz")

    if probe == "JC":
        omega_f = rabi_frequency_axial(params)
        shifted = params.spin_frequency - g**2 / (2 * w)
        out = h * shifted * sz - h * omega_f * sx
        if include_residual:
            out = out - jc_residual(params, space)
        constant = -h * g**2 / (2 * w) - (z * params.force_x) ** 2 / (4 * h * w)
    elif probe == "QR":
        out = -2.0 * h * rabi_frequency_axial(params) * sx
        constant = -h * g**2 / w - (z * params.force_x) ** 2 / (4 * h * w)
    else:
        tf = transverse_force_parameters(params)
        out = -h * tf.omega_x * sx - h * tf.omega_y * sy
        if include_residual:
            out = out + jt_residual(params, space)
        constant = -2 * h * g**2 / w - (z * params.force_magnitude) ** 2 / (4 * h * w)

    if include_constants:
        out = out + _free_oscillators(params, space) + constant
    return out
