import math

import numpy as np
import pytest

from ionforce.decoupling import (
    DecouplingWarning,
    check_flip_identity,
    cpmg_propagator_distance,
    cpmg_sequence,
    default_space,
    driven_dd_sequence,
    driven_signal,
    phonon_phase_flip,
    rabi_contrast,
    residual_in_drive_frame,
    suppression_condition,
)
from ionforce.dynamics import Kick, PulseSequence, evolve, sequence_propagator
from ionforce.hilbert import HilbertSpace, fock_state, number_operator, spin_operator, spin_superposition, thermal_state, zero
from ionforce.models import ProbeParams, build_effective_hamiltonian, build_lab_hamiltonian, jt_residual

FIG1 = ProbeParams("JC", g=4e3, omega=1.7e5, z=14.5e-9, force=20e-24, drive_omega=1e4)
FIG4 = ProbeParams("JT", g=4e3, omega=1.7e5, z=12e-9, force=(20e-24, 15e-24))
OMEGA_F = 32.3521323895942805


def test_zero_drive_is_plain_evolution():
    params = FIG1.replace(drive_omega=0.0)
    space = HilbertSpace((20,))
    with pytest.warns(DecouplingWarning):
        seq = driven_dd_sequence(params, 0.02, space)
    psi = fock_state(space, 0)
    plain = evolve(PulseSequence.single(build_lab_hamiltonian("JC_TOTAL", params, space), 0.02), psi, [0.02])
    assert evolve(seq, psi, [0.02]).p_up[0] == pytest.approx(plain.p_up[0], abs=1e-12)


def test_suppression_condition_fig1():
    check = suppression_condition(FIG1)
    assert check.dispersive_shift == pytest.approx(4e3**2 / 3.4e5)
    assert check.ratio == pytest.approx(47.0588235294 / 1e4)
    assert check.satisfied
    assert not suppression_condition(FIG1.replace(drive_omega=100.0)).satisfied
    assert suppression_condition(FIG1.replace(drive_omega=0.0)).ratio == math.inf


def test_driven_signal_follows_ideal_rabi():
    space = default_space(FIG1, 1.2)
    rho = spin_superposition(space, 1.0, 0.0, thermal_state(space, 0, 1.2))
    times = np.linspace(0, math.pi / OMEGA_F, 21)
    trace = driven_signal(FIG1, rho, times)
    assert np.max(np.abs(trace.p_up - np.cos(OMEGA_F * times) ** 2)) <= 0.02


def test_driven_matches_effective_without_residual():
    space = HilbertSpace((25,))
    rho = spin_superposition(space, 1.0, 0.0, thermal_state(space, 0, 0.5))
    t = 0.7 * math.pi / OMEGA_F
    driven = driven_signal(FIG1, rho, [t]).p_up[0]
    h = build_effective_hamiltonian("JC_EFF", FIG1, space, include_residual=False)
    ideal = evolve(PulseSequence.single(h, t), rho, [t]).p_up[0]
    assert driven == pytest.approx(ideal, abs=0.02)


def test_residual_in_drive_frame():
    space = HilbertSpace((5,))
    coupling = FIG1.hbar * FIG1.g**2 / FIG1.omega
    at_zero = residual_in_drive_frame(FIG1, space, 0.0)
    expected = coupling * spin_operator(space, "z") @ number_operator(space)
    assert np.allclose(at_zero.matrix, expected.matrix, atol=1e-12 * coupling)
    quarter = residual_in_drive_frame(FIG1, space, math.pi / (4 * FIG1.drive_omega))
    assert quarter.is_hermitian()
    # |+><-| picks up i at 2 Omega t = pi/2, turning sigma_z into sigma_y
    expected = coupling * spin_operator(space, "y") @ number_operator(space)
    assert np.allclose(quarter.matrix, expected.matrix, atol=1e-12 * coupling)
    with pytest.raises(ValueError):
        residual_in_drive_frame(FIG4, HilbertSpace((3, 3)), 0.0)


def test_phase_flip_properties():
    space = HilbertSpace((6, 6))
    flip = phonon_phase_flip(space, 0)
    assert np.allclose((flip @ flip).matrix, np.eye(space.dim))
    res = jt_residual(FIG4, space)
    assert check_flip_identity(res, flip) <= 1e-12
    force = build_effective_hamiltonian("JT_EFF", FIG4, space, include_residual=False)
    assert np.allclose((flip @ force @ flip).matrix, force.matrix)


def test_cpmg_structure():
    space = HilbertSpace((3,))
    base = PulseSequence.single(zero(space), 1.0)
    for order in (1, 2, 3):
        seq = cpmg_sequence(base, order)
        assert seq.duration == pytest.approx(2.0**order)
        assert sum(isinstance(e, Kick) for e in seq.elements) == 2 ** (order + 1) - 2
        u = sequence_propagator(seq).matrix
        assert np.allclose(u, np.eye(space.dim))
    with pytest.raises(ValueError):
        cpmg_sequence(base, 0)


def _slope(order, taus):
    space = HilbertSpace((8, 8))
    dist = [cpmg_propagator_distance(FIG4, t, order, space) for t in taus]
    return np.polyfit(np.log(taus), np.log(dist), 1)[0]


def test_cpmg_first_order_scaling():
    assert _slope(1, np.array([1e-4, 2e-4, 4e-4])) == pytest.approx(2.0, abs=0.2)


def test_cpmg_second_order_scaling():
    assert _slope(2, np.array([1e-4, 2e-4, 4e-4])) == pytest.approx(3.0, abs=0.3)


def test_cpmg_suppresses_residual():
    space = HilbertSpace((8, 8))
    tau = 2e-4
    with_res = build_effective_hamiltonian("JT_EFF", FIG4, space, include_residual=True)
    free = build_effective_hamiltonian("JT_EFF", FIG4, space, include_residual=False)
    bare = PulseSequence.single(with_res, 4 * tau)
    u = sequence_propagator(bare).matrix
    u0 = sequence_propagator(PulseSequence.single(free, 4 * tau)).matrix
    idx = np.flatnonzero(space.occupations().sum(axis=1) <= 4)
    unprotected = np.linalg.norm((u - u0)[np.ix_(idx, idx)], 2)
    assert cpmg_propagator_distance(FIG4, tau, 2, space) < 0.05 * unprotected


def test_cpmg_distance_rejects_jc():
    with pytest.raises(ValueError):
        cpmg_propagator_distance(FIG1, 1e-4, 1, HilbertSpace((8,)))


@pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0])
def test_driven_contrast_beats_undriven(nbar):
    driven = rabi_contrast(FIG1, nbar, "driven")
    undriven = rabi_contrast(FIG1, nbar, "undriven")
    assert driven.contrast >= undriven.contrast
    assert driven.contrast >= 0.9


def test_undriven_contrast_degrades():
    values = [rabi_contrast(FIG1, n, "undriven").contrast for n in (0.0, 0.5, 1.0, 2.0)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 0.6


def test_contrast_errors():
    with pytest.raises(ValueError):
        rabi_contrast(FIG1, 1.0, "pulsed")
    with pytest.raises(ValueError):
        rabi_contrast(FIG1.replace(force=0.0), 1.0)


def test_default_space_grows_with_nbar():
    assert default_space(FIG1).mode_cutoffs == (30,)
    assert default_space(FIG1, 3.0).mode_cutoffs[0] >= 57
    assert default_space(FIG4).mode_cutoffs == (12, 12)
