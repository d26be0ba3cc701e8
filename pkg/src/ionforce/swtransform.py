"""Numerical checks of the canonical (Schrieffer-Wolff) phonon elimination.

For each probe the lab Hamiltonian is split as H = H0 + H_int (+ the JC
spin-frequency term, which is kept separately), the anti-Hermitian generator
S solving H_int + [H0, S] = 0 is built explicitly, and e^{-S} H e^{S} is
compared with the closed-form effective Hamiltonian.  All norms are taken on
the subspace that keeps every mode at least two levels below its cutoff,
since truncation corrupts exactly those rows and columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import (
    HilbertSpace,
    Operator,
    commutator,
    matrix_exponential,
    mode_lowering,
    momentum_like,
    number_operator,
    operator_norm,
    quadrature,
    spin_operator,
)
from .models import ProbeParams, build_effective_hamiltonian, build_lab_hamiltonian

SAFE_MARGIN = 2


@dataclass(frozen=True)
class SwReport:
    kind: str
    g_value: float
    residual_norm: float
    relative_residual: float
    predicted_order: int


def _check_kind(kind: str, params: ProbeParams) -> str:
    kind = kind.upper()
    if kind not in ("JC", "QR", "JT"):
        raise ValueError(f"unknown probe kind {kind!r}")
    if params.probe_kind != kind:
        raise ValueError(f"{kind} transformation needs {kind} parameters")
    return kind


def safe_norm(op: Operator | np.ndarray, space: HilbertSpace | None = None, margin: int = SAFE_MARGIN) -> float:
    """Operator norm restricted to states ``margin`` levels below every cutoff."""
    if isinstance(op, Operator):
        space, matrix = op.space, op.matrix
    else:
        matrix = op
    idx = space.safe_indices(margin)
    return operator_norm(matrix[np.ix_(idx, idx)])


def split_hamiltonian(kind: str, params: ProbeParams, space: HilbertSpace) -> tuple[Operator, Operator]:
    """(H0, H_int): free phonons and the spin-phonon plus force coupling.

    For JC the spin term hbar Delta sigma_z belongs to neither part.
    """
    kind = _check_kind(kind, params)
    total = build_lab_hamiltonian(f"{kind}_TOTAL", params, space)
    h0 = Operator(space, np.zeros((space.dim, space.dim)))
    for k in range(space.n_modes):
        h0 = h0 + params.hbar * params.omega * number_operator(space, k)
    h_int = total - h0
    if kind == "JC":
        h_int = h_int - params.hbar * params.spin_frequency * spin_operator(space, "z")
    return h0, h_int


def build_generator(kind: str, params: ProbeParams, space: HilbertSpace) -> Operator:
    """Anti-Hermitian generator S of the phonon-eliminating transformation."""
    kind = _check_kind(kind, params)
    ratio = params.g / params.omega
    scale = params.spread / (2.0 * params.hbar * params.omega)
    if kind == "JC":
        a = mode_lowering(space, 0)
        sp, sm = spin_operator(space, "plus"), spin_operator(space, "minus")
        return ratio * (sp @ a - sm @ a.dag()) + scale * params.force_x * momentum_like(space, 0)
    if kind == "QR":
        p = momentum_like(space, 0)
        return ratio * (spin_operator(space, "x") @ p) + scale * params.force_x * p
    px, py = momentum_like(space, 0), momentum_like(space, 1)
    return (
        ratio * (spin_operator(space, "x") @ px)
        + ratio * (spin_operator(space, "y") @ py)
        + scale * params.force_x * px
        + scale * params.force_y * py
    )


def conjugate(hamiltonian: Operator, generator: Operator) -> Operator:
    """e^{-S} H e^{S}; Hermitian input stays Hermitian for anti-Hermitian S."""
    if hamiltonian.space != generator.space:
        raise ValueError("Hamiltonian and generator live on different spaces")
    forward = matrix_exponential(generator, 1.0)
    backward = matrix_exponential(generator, -1.0)
    out = backward.matrix @ hamiltonian.matrix @ forward.matrix
    return Operator(hamiltonian.space, 0.5 * (out + out.conj().T))


def first_order_condition(kind: str, params: ProbeParams, space: HilbertSpace) -> float:
    """``||H_int + [H0, S]|| / ||H_int||`` on the safe subspace."""
    h0, h_int = split_hamiltonian(kind, params, space)
    s = build_generator(kind, params, space)
    return safe_norm(h_int + commutator(h0, s)) / safe_norm(h_int)


def third_order_term(kind: str, params: ProbeParams, space: HilbertSpace) -> Operator:
    """Closed-form ``[[H_int, S], S] / 3`` for the JC and JT probes."""
    kind = _check_kind(kind, params)
    h, g, w, z = params.hbar, params.g, params.omega, params.spread
    sx, sy, sz = (spin_operator(space, s) for s in "xyz")
    if kind == "JC":
        a = mode_lowering(space, 0)
        ad = a.dag()
        sp, sm = spin_operator(space, "plus"), spin_operator(space, "minus")
        return (
            (2 * g**2 * z * params.force_x / (3 * w**2)) * (sz @ quadrature(space, 0))
            - (4 * h * g**3 / (3 * w**2)) * (sm @ ad + sp @ a)
            - (4 * h * g**3 / (3 * w**2)) * (sm @ ad @ ad @ a + sp @ ad @ a @ a)
        )
    if kind == "QR":
        return Operator(space, np.zeros((space.dim, space.dim)))
    ax, ay = mode_lowering(space, 0), mode_lowering(space, 1)
    one = Operator(space, np.eye(space.dim))
    nx, ny = number_operator(space, 0), number_operator(space, 1)
    # 4 hbar g^3 / 3 omega^2, same prefactor as JC; matches the numerical double commutator
    c = 4 * h * g**3 / (3 * w**2)
    return (
        2j * (g**2 * z * params.force_x / w**2) * (sz @ (ay.dag() - ay))
        - 2j * (g**2 * z * params.force_y / w**2) * (sz @ (ax.dag() - ax))
        - c * (sy @ (quadrature(space, 1) @ (one + 2 * nx) - 2 * ax.dag() @ ax.dag() @ ay - 2 * ax @ ax @ ay.dag()))
        - c * (sx @ (quadrature(space, 0) @ (one + 2 * ny) - 2 * ay.dag() @ ay.dag() @ ax - 2 * ay @ ay @ ax.dag()))
    )


def effective_full(kind: str, params: ProbeParams, space: HilbertSpace, third_order: bool = False) -> Operator:
    """Complete second-order effective Hamiltonian, optionally with the third-order term."""
    kind = _check_kind(kind, params)
    out = build_effective_hamiltonian(f"{kind}_EFF", params, space, include_residual=True, include_constants=True)
    if third_order:
        out = out + third_order_term(kind, params, space)
    return out


def transformation_residual(
    kind: str,
    params: ProbeParams,
    space: HilbertSpace,
    third_order: bool = False,
    margin: int = SAFE_MARGIN,
) -> tuple[float, float]:
    """``||e^{-S} H_T e^{S} - H_eff_full||`` on the safe subspace, absolute and
    relative to ``||H_int||``."""
    kind = _check_kind(kind, params)
    total = build_lab_hamiltonian(f"{kind}_TOTAL", params, space)
    s = build_generator(kind, params, space)
    diff = conjugate(total, s) - effective_full(kind, params, space, third_order)
    _, h_int = split_hamiltonian(kind, params, space)
    absolute = safe_norm(diff, margin=margin)
    return absolute, absolute / safe_norm(h_int, margin=margin)


def sw_scaling(
    kind: str,
    params: ProbeParams,
    space: HilbertSpace,
    g_values: Sequence[float],
    third_order: bool = False,
    margin: int = SAFE_MARGIN,
) -> list[SwReport]:
    """Transformation residual at each coupling strength in ``g_values``.

    Residuals are reported as computed; use :func:`scaling_slope` for the
    log-log exponent and :func:`is_monotonic` to detect irregular sweeps.
    """
    kind = _check_kind(kind, params)
    order = 4 if third_order else 3
    if kind == "QR":
        order = 0
    reports = []
    for g in g_values:
        absolute, relative = transformation_residual(
            kind, params.replace(g=float(g)), space, third_order, margin
        )
        reports.append(SwReport(kind, float(g), absolute, relative, order))
    return reports


def scaling_slope(reports: Sequence[SwReport]) -> float:
    """Least-squares slope of log(residual) against log(g)."""
    g = np.log([r.g_value for r in reports])
    res = np.log([r.residual_norm for r in reports])
    return float(np.polyfit(g, res, 1)[0])


def is_monotonic(reports: Sequence[SwReport]) -> bool:
    ordered = sorted(reports, key=lambda r: r.g_value)
    values = [r.residual_norm for r in ordered]
    return all(b >= a for a, b in zip(values, values[1:]))


def double_commutator_norm(kind: str, params: ProbeParams, space: HilbertSpace) -> float:
    """``||[[H_int, S], S]|| / ||H_int||`` on the safe subspace."""
    _, h_int = split_hamiltonian(kind, params, space)
    s = build_generator(kind, params, space)
    return safe_norm(commutator(commutator(h_int, s), s)) / safe_norm(h_int)


def qr_double_commutator_norm(params: ProbeParams, space: HilbertSpace) -> float:
    """Relative size of ``[[H_int, S], S]`` for the QR probe (zero analytically)."""
    return double_commutator_norm("QR", params, space)
