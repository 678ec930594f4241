import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcredit.resources import (
    EXCLUDED_COSTS,
    REFERENCE_PARAMS,
    ResourceParams,
    depth_C,
    depth_S,
    depth_U,
    estimate,
    rotation_costs,
)


def P(**kw):
    base = dict(REFERENCE_PARAMS)
    base.update(kw)
    return ResourceParams(**base)


class TestRotationCosts:
    def test_reference_precision(self):
        assert rotation_costs(2.0 ** -10) == (26, 28)

    def test_coarse(self):
        assert rotation_costs(0.25) == (2, 4)

    @settings(max_examples=200)
    @given(st.floats(1e-12, 0.99))
    def test_difference_is_two(self, eps):
        single, ctrl = rotation_costs(eps)
        assert ctrl - single == 2

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.5])
    def test_domain(self, eps):
        with pytest.raises(ValueError):
            rotation_costs(eps)


class TestDepths:
    def test_U(self):
        assert depth_U(P()) == 306
        assert depth_U(P(n_Z=0)) == 26
        assert depth_U(P(w=2 ** 19)) == 26 + 28 * 2 * 10

    def test_S(self):
        assert depth_S(P()) == 20 * (4 + 3 + 7) == 280
        assert depth_S(P(K=2, n_S=2)) == 7
        for k in range(1, 20):
            assert depth_S(P(K=2 ** (k + 1))) - depth_S(P(K=2 ** k)) == 14

    def test_S_rounds_log_up(self):
        assert depth_S(P(K=3)) == depth_S(P(K=4))

    def test_C(self):
        assert depth_C(P()) == 17
        assert depth_C(P(n_S=2)) == 9
        vals = [depth_C(P(n_S=n)) for n in range(2, 200)]
        assert vals == sorted(vals)

    def test_C_exact_floor(self):
        for n in range(2, 300):
            assert depth_C(P(n_S=n)) == 2 * math.floor(math.log2(n - 1)) + 9


class TestEstimate:
    def test_reference_parameters(self):
        r = estimate(P())
        assert (r.depth_U, r.depth_S, r.depth_C, r.depth_A) == (306, 280, 17, 603)
        assert r.a_calls == 30 * 2047
        assert r.total_depth == 30 * 2047 * 603 == 37_030_230
        assert r.total_depth == pytest.approx(37e6, rel=0.01)
        assert r.runtime_s == pytest.approx(3703.023, abs=1e-3)
        assert r.runtime_s / 3600 == pytest.approx(1.03, abs=0.005)

    def test_rounded_depth(self):
        r = estimate(P())
        assert r.depth_A_rounded == 600
        assert r.total_depth_rounded == 36_846_000
        assert estimate(P(), depth_A_override=600).total_depth == 36_846_000

    def test_qft_free_halving(self):
        r = estimate(P(qft_free_halving=True))
        assert r.runtime_s == pytest.approx(1851.5115, abs=1e-3)
        assert r.runtime_s / 60 == pytest.approx(31, abs=0.5)

    def test_single_call(self):
        r = estimate(P(m=0, n_S=1))
        assert r.total_depth == r.depth_A

    def test_ancilla_notes(self):
        r = estimate(P(w=4))
        assert r.ancilla_notes["z_copy_ancillas"] == 10 * 3
        assert r.ancilla_notes["copy_cnot_depth"] == 4
        assert r.ancilla_notes["controlled_rotation_depth"] == 10 * 2 ** 20 // 4

    def test_excluded_items_listed(self):
        d = estimate(P()).as_dict()
        items = {e["item"] for e in d["excluded_costs"]}
        assert {"inverse_qft", "reflections_S0_Spsi0", "clifford_gates",
                "swap_routing", "median_repetitions"} <= items
        assert all(e["cost"] == 0 and e["reason"] for e in d["excluded_costs"])
        assert len(EXCLUDED_COSTS) == len(items)

    def test_non_power_of_two_noted(self):
        r = estimate(P(K=1000))
        assert r.notes and "1000" in r.notes[0]

    @pytest.mark.parametrize("kw", [dict(K=0), dict(epsilon=1.0), dict(w=0), dict(w=2 ** 21),
                                    dict(m=-1), dict(gate_time_s=0.0)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            P(**kw)


params = st.builds(
    ResourceParams,
    K=st.integers(1, 2 ** 30),
    n_Z=st.integers(0, 20),
    n_S=st.integers(1, 64),
    m=st.integers(0, 16),
    epsilon=st.floats(1e-12, 0.5),
    qft_free_halving=st.booleans(),
)


@settings(max_examples=1000, deadline=None)
@given(params)
def test_internal_consistency(p):
    r = estimate(p)
    assert r.depth_A == r.depth_U + r.depth_S + r.depth_C
    full = p.n_S * (2 ** (p.m + 1) - 1) * r.depth_A
    assert r.total_depth == (math.ceil(full / 2) if p.qft_free_halving else full)
    assert r.runtime_s == pytest.approx(r.total_depth * p.gate_time_s)


@settings(max_examples=300, deadline=None)
@given(params, st.sampled_from(["K", "n_Z", "n_S", "m"]), st.integers(1, 8))
def test_monotone(p, field, step):
    bigger = ResourceParams(**{**p.__dict__, field: getattr(p, field) + step})
    assert estimate(bigger).total_depth >= estimate(p).total_depth
