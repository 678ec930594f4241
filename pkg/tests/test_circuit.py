import math

import numpy as np
import pytest

from qcredit.circuit import (
    RegisterLayout,
    StateVector,
    apply,
    compose,
    controlled,
    h_gate,
    permutation_operator,
    probability_of,
    ry_gate,
    x_gate,
    z_gate,
)
from qcredit.errors import DimensionError, ReversibilityError, SizeError

from conftest import random_state


def test_hadamard_on_zero(backend):
    s = apply(h_gate(1, 0), StateVector.zero(1), backend)
    np.testing.assert_allclose(s.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_ry_pi_over_3_gives_quarter(backend):
    s = apply(ry_gate(1, math.pi / 3, 0), StateVector.zero(1), backend)
    assert probability_of(s, 0, 1) == pytest.approx(0.25, abs=1e-12)


def test_x_is_involution(backend):
    op = compose(x_gate(1, 0), x_gate(1, 0))
    s = apply(op, StateVector.zero(1), backend)
    np.testing.assert_allclose(s.amplitudes, [1, 0], atol=1e-15)


def test_little_endian_ordering():
    s = apply(x_gate(3, 1), StateVector.zero(3))
    assert np.argmax(np.abs(s.amplitudes)) == 0b010


def test_arity_mismatch_rejected():
    with pytest.raises(DimensionError):
        apply(x_gate(2, 0), StateVector.zero(3))


class TestControlled:
    def test_control_off_leaves_target(self, backend):
        op = controlled(ry_gate(2, 1.1, 0), [1])
        s = apply(op, StateVector.zero(2), backend)
        np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0], atol=1e-15)

    def test_control_on_matches_plain_rotation(self, backend):
        op = controlled(ry_gate(2, 1.1, 0), [1])
        s = apply(op, StateVector.basis(2, 0b10), backend)
        ref = apply(ry_gate(1, 1.1, 0), StateVector.zero(1))
        np.testing.assert_allclose(s.amplitudes[[0b10, 0b11]], ref.amplitudes, atol=1e-15)
        assert np.abs(s.amplitudes[[0, 1]]).max() == 0

    def test_cnot_entangler(self, backend):
        # (|10> + |00>)/sqrt2 with qubit 1 as control: qubit 1 is the left label
        plus = StateVector(2, np.array([1, 0, 1, 0]) / math.sqrt(2))
        s = apply(controlled(x_gate(2, 0), [1]), plus, backend)
        np.testing.assert_allclose(s.amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2), atol=1e-15)

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            controlled(ry_gate(2, 0.2, 0), [0])

    def test_open_control(self, backend):
        op = controlled(x_gate(2, 0), [(1, 0)])
        s = apply(op, StateVector.zero(2), backend)
        assert abs(s.amplitudes[1]) == pytest.approx(1.0)


class TestPermutation:
    def test_identity_map(self, backend, rng):
        s = random_state(3, rng)
        op = permutation_operator(lambda b: b, [0, 1, 2], 3)
        np.testing.assert_allclose(apply(op, s, backend).amplitudes, s.amplitudes, atol=0)

    def test_swap_map_is_x(self, backend, rng):
        s = random_state(2, rng)
        perm = permutation_operator({0: 1, 1: 0}.__getitem__, [1], 2)
        np.testing.assert_allclose(apply(perm, s, backend).amplitudes,
                                   apply(x_gate(2, 1), s, backend).amplitudes, atol=1e-15)

    def test_non_injective_rejected(self):
        with pytest.raises(ReversibilityError):
            permutation_operator({0: 0, 1: 0}.__getitem__, [0], 1)

    def test_out_of_range_rejected(self):
        with pytest.raises(ReversibilityError):
            permutation_operator([0, 2], [0], 1)

    def test_basis_state_maps_to_single_unit_amplitude(self, backend, rng):
        n = 5
        table = rng.permutation(1 << 3)
        op = permutation_operator(table, [4, 0, 2], n, phases=np.exp(1j * rng.uniform(0, 6, 8)))
        for b in range(1 << n):
            out = apply(op, StateVector.basis(n, b), backend).amplitudes
            nz = np.flatnonzero(np.abs(out) > 1e-15)
            assert nz.size == 1
            assert abs(out[nz[0]]) == pytest.approx(1.0, abs=1e-15)


class TestProbability:
    def test_prepared_probability(self):
        s = apply(ry_gate(1, 2 * math.asin(math.sqrt(0.15)), 0), StateVector.zero(1))
        assert probability_of(s, 0, 1) == pytest.approx(0.15, abs=1e-12)

    def test_outcomes_sum_to_one(self, rng):
        s = random_state(4, rng)
        for q in range(4):
            assert probability_of(s, q, 0) + probability_of(s, q, 1) == pytest.approx(1.0, abs=1e-12)

    def test_bell_state(self):
        bell = apply(compose(h_gate(2, 0), controlled(x_gate(2, 1), [0])), StateVector.zero(2))
        assert probability_of(bell, 1, 1) == pytest.approx(0.5, abs=1e-12)

    def test_index_bounds(self):
        with pytest.raises(IndexError):
            probability_of(StateVector.zero(2), 2, 1)


def _random_circuit(n, rng, length=20):
    ops = []
    for _ in range(length):
        kind = rng.integers(4)
        t = int(rng.integers(n))
        others = [q for q in range(n) if q != t]
        ctrls = [int(q) for q in rng.choice(others, size=min(len(others), rng.integers(0, 3)), replace=False)]
        if kind == 0:
            ops.append(h_gate(n, t, ctrls))
        elif kind == 1:
            ops.append(ry_gate(n, float(rng.uniform(-4, 4)), t, ctrls))
        elif kind == 2:
            ops.append(z_gate(n, t, ctrls))
        else:
            ops.append(x_gate(n, t, ctrls))
    return compose(*ops)


def test_norm_preserved_over_random_sequences(rng):
    for trial in range(1000):
        n = int(rng.integers(1, 13))
        op = _random_circuit(n, rng, length=10)
        s = apply(op, StateVector.zero(n))
        assert abs(s.norm() - 1.0) < 1e-10


def test_adjoint_inverts_random_circuits(backend, rng):
    for _ in range(50):
        n = int(rng.integers(1, 8))
        op = _random_circuit(n, rng)
        s = random_state(n, rng)
        back = apply(op.adjoint(), apply(op, s, backend), backend)
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-10)


def test_embed_and_widen():
    op = x_gate(2, 1).embed(4, [3, 0])
    s = apply(op, StateVector.zero(4))
    assert np.argmax(np.abs(s.amplitudes)) == 1
    with pytest.raises(DimensionError):
        x_gate(2, 1).embed(4, [0, 0])


def test_state_size_guard():
    with pytest.raises(SizeError):
        StateVector.zero(40)


def test_register_layout():
    lay = RegisterLayout(2, 2, 2)
    assert lay.n_qubits == 7
    regs = [*lay.z_register, *lay.asset_register, *lay.sum_register, lay.objective]
    assert regs == list(range(7))
    with pytest.raises(ValueError):
        RegisterLayout(1, 0, 1)
