import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionforce.hilbert import (
    HilbertSpace,
    NumericalError,
    Operator,
    QuantumState,
    commutator,
    fock_state,
    identity,
    matrix_exponential,
    mode_lowering,
    number_operator,
    quadrature,
    spin_operator,
    spin_superposition,
    thermal_populations,
    thermal_state,
)


def mode_block(op, space, spin=0):
    """Mode factor of a spin-diagonal single-mode operator."""
    n = space.motional_dim
    return op.matrix[spin * n:(spin + 1) * n, spin * n:(spin + 1) * n]


def test_space_dimensions():
    assert HilbertSpace((5,)).dim == 10
    assert HilbertSpace((4, 3)).dim == 24
    assert HilbertSpace((4, 3)).dims == (2, 4, 3)


@pytest.mark.parametrize("cutoffs", [(), (1,), (3, 1)])
def test_space_rejects_bad_cutoffs(cutoffs):
    with pytest.raises(ValueError):
        HilbertSpace(cutoffs)


def test_lowering_superdiagonal():
    space = HilbertSpace((3,))
    block = mode_block(mode_lowering(space), space)
    expected = np.zeros((3, 3))
    expected[0, 1], expected[1, 2] = 1.0, math.sqrt(2.0)
    assert np.allclose(block, expected, atol=0)


def test_number_operator_diagonal():
    space = HilbertSpace((4,))
    a = mode_lowering(space)
    n = a.dag() @ a
    assert np.allclose(mode_block(n, space), np.diag([0, 1, 2, 3]))
    assert np.allclose(n.matrix, number_operator(space).matrix)


def test_canonical_commutator_fails_only_at_top_level():
    space = HilbertSpace((5,))
    a = mode_lowering(space)
    comm = mode_block(commutator(a, a.dag()), space)
    assert comm[4, 4] == pytest.approx(-4.0)
    dev = comm - np.eye(5)
    dev[4, 4] = 0.0
    assert np.max(np.abs(dev)) <= 1e-14


def test_invalid_mode_index():
    with pytest.raises(ValueError):
        mode_lowering(HilbertSpace((3,)), 1)


def test_sigma_z_convention():
    space = HilbertSpace((2,))
    sz = spin_operator(space, "z").matrix
    assert np.allclose(np.diag(sz)[[0, 2]], [1, -1])
    up = fock_state(space, 0, "up")
    assert up.expect(spin_operator(space, "z")) == 1.0


def test_ladder_and_pauli_algebra():
    space = HilbertSpace((3,))
    sp, sm = spin_operator(space, "plus"), spin_operator(space, "minus")
    assert np.allclose((sp @ sm + sm @ sp).matrix, np.eye(space.dim))
    sx, sy, sz = (spin_operator(space, s) for s in "xyz")
    assert np.allclose(commutator(sx, sy).matrix, 2j * sz.matrix)
    # sigma+ = |up><down|
    down = fock_state(space, 0, "down").data
    assert np.allclose(sp.matrix @ down, fock_state(space, 0, "up").data)


def test_unknown_spin_operator():
    with pytest.raises(ValueError):
        spin_operator(HilbertSpace((2,)), "w")


def test_expm_zero_is_identity():
    space = HilbertSpace((4,))
    out = matrix_exponential(quadrature(space), 0.0)
    assert np.array_equal(out.matrix, np.eye(space.dim))


def test_expm_phase_flip():
    space = HilbertSpace((3,))
    out = matrix_exponential(number_operator(space), 1j * math.pi)
    assert np.allclose(mode_block(out, space), np.diag([1, -1, 1]), atol=1e-14)


def test_expm_rejects_nonfinite():
    space = HilbertSpace((2,))
    bad = Operator(space, np.full((4, 4), np.nan))
    with pytest.raises(NumericalError):
        matrix_exponential(bad)


def _random_hermitian(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (m + m.conj().T)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(20,), (10,), (4, 5)]), st.floats(1e-3, 10.0))
def test_expm_unitary(seed, cutoffs, t):
    space = HilbertSpace(cutoffs)
    h = Operator(space, _random_hermitian(np.random.default_rng(seed), space.dim))
    u = matrix_exponential(h, -1j * t).matrix
    assert np.max(np.abs(u.conj().T @ u - np.eye(space.dim))) <= 1e-9


def test_expm_unitary_dimension_400():
    space = HilbertSpace((10, 20))
    h = Operator(space, _random_hermitian(np.random.default_rng(7), space.dim))
    u = matrix_exponential(h, -0.3j).matrix
    assert np.max(np.abs(u.conj().T @ u - np.eye(space.dim))) <= 1e-9


def test_builders_hermitian():
    space = HilbertSpace((4, 3))
    for op in [quadrature(space, 0), quadrature(space, 1), number_operator(space, 1)] + [
        spin_operator(space, s) for s in "xyz"
    ]:
        assert op.is_hermitian()


def test_factors_commute():
    space = HilbertSpace((4, 3))
    ops = [mode_lowering(space, 0), mode_lowering(space, 1), spin_operator(space, "plus")]
    for i, a in enumerate(ops):
        for b in ops[i + 1:]:
            assert commutator(a, b).max_abs() <= 1e-12


def test_fock_state():
    space = HilbertSpace((4,))
    psi = fock_state(space, 0, "up")
    assert psi.data[0] == 1.0 and np.sum(np.abs(psi.data)) == 1.0
    two = fock_state(space, 2, "up")
    assert two.expect(number_operator(space)) == pytest.approx(2.0)
    one = fock_state(space, 1, "up")
    assert np.vdot(one.data, two.data) == 0


def test_fock_state_out_of_range():
    with pytest.raises(ValueError):
        fock_state(HilbertSpace((3,)), 3)


def test_thermal_vacuum():
    space = HilbertSpace((5,))
    rho = thermal_state(space, 0, 0.0)
    expected = np.zeros((5, 5))
    expected[0, 0] = 1.0
    assert np.array_equal(rho.data.real, expected)


def test_thermal_populations_formula():
    n = np.arange(200)
    nbar = 1.2
    raw = nbar**n / (1 + nbar) ** (n + 1)
    assert raw[0] == pytest.approx(0.454545454545, rel=1e-10)
    assert raw[1] == pytest.approx(0.247933884298, rel=1e-10)
    p, tail = thermal_populations(nbar, 200)
    assert np.allclose(p, raw / raw.sum(), rtol=1e-12)
    p30, tail30 = thermal_populations(nbar, 30)
    assert tail30 == pytest.approx(1.0 - raw[:30].sum(), rel=1e-9)


def test_thermal_rejects_negative():
    with pytest.raises(ValueError):
        thermal_state(HilbertSpace((5,)), 0, -0.1)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 3.0))
def test_thermal_mean_and_spectrum(nbar):
    cutoff = max(2, math.ceil(10 * (nbar + 1)))
    space = HilbertSpace((cutoff,))
    rho = thermal_state(space, 0, nbar)
    evals = np.linalg.eigvalsh(rho.data)
    assert evals.min() >= 0.0
    assert abs(evals.sum() - 1.0) <= 1e-12
    mean = rho.expect(number_operator(space.motional()))
    assert mean == pytest.approx(nbar, rel=0.01, abs=1e-12)
    assert rho.tail[0] == pytest.approx((nbar / (1 + nbar)) ** cutoff if nbar else 0.0, rel=1e-9)


def test_superposition_matches_fock():
    space = HilbertSpace((4,))
    vac = fock_state(space.motional(), 0)
    assert np.allclose(spin_superposition(space, 1.0, 0.0, vac).data, fock_state(space, 0, "up").data)


@pytest.mark.parametrize("phi", [0.0, 0.7, math.pi / 2, 2.5])
def test_superposition_expectations(phi):
    space = HilbertSpace((3,))
    vac = fock_state(space.motional(), 0)
    psi = spin_superposition(space, 1 / math.sqrt(2), np.exp(1j * phi) / math.sqrt(2), vac)
    assert psi.expect(spin_operator(space, "z")) == pytest.approx(0.0, abs=1e-15)
    # sigma_y = i(sigma- - sigma+) with sigma+ = |up><down|
    sy = 1j * (spin_operator(space, "minus") - spin_operator(space, "plus"))
    assert np.allclose(sy.matrix, spin_operator(space, "y").matrix)
    assert psi.expect(sy) == pytest.approx(math.sin(phi), abs=1e-15)


def test_superposition_mixed_motion():
    space = HilbertSpace((6,))
    state = spin_superposition(space, 0.6, 0.8, thermal_state(space, 0, 0.5))
    assert state.kind == "mixed"
    assert state.p_up() == pytest.approx(0.36)
    assert state.purity() < 1.0


def test_superposition_not_normalised():
    space = HilbertSpace((3,))
    with pytest.raises(ValueError):
        spin_superposition(space, 1.0, 0.1, fock_state(space.motional(), 0))


def test_state_validation():
    space = HilbertSpace((2,))
    with pytest.raises(ValueError):
        QuantumState(space, np.ones(4))
    with pytest.raises(ValueError):
        QuantumState(space, np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(ValueError):
        QuantumState(space, np.eye(3) / 3)


def test_operator_arithmetic():
    space = HilbertSpace((3,))
    a = mode_lowering(space)
    assert np.allclose((2 * a - a).matrix, a.matrix)
    assert np.allclose((a + 1).matrix, a.matrix + np.eye(space.dim))
    assert np.allclose(identity(space).matrix, np.eye(6))
    with pytest.raises(ValueError):
        a @ mode_lowering(HilbertSpace((4,)))
