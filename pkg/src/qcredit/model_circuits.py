"""Operators of the loss-CDF oracle: loading ``U``, weighted sum ``S``,
comparator ``C``, the oracle ``A = C S U`` and the Grover operator ``Q``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import (
    Operator,
    RegisterLayout,
    compose,
    permutation_operator,
    ry_gate,
    single_qubit,
    x_gate,
)
from .distributions import (
    LatentGrid,
    Portfolio,
    angle_of,
    conditional_pd,
    fit_linear_angles,
)

MODES = ("linear", "exact")

# diag(-1, 1): sign flip on the |0> branch of the target
_FLIP0 = ((-1, 0), (0, 1))


def layout_for(portfolio: Portfolio, grid: LatentGrid | None) -> RegisterLayout:
    return RegisterLayout(0 if grid is None else grid.n_z, portfolio.K, portfolio.n_S)


def prepare_distribution(probs) -> Operator:
    """RY tree loading ``sum_i sqrt(p_i)|i>`` onto ``log2(len(probs))`` qubits.

    Starts at the most significant qubit; each deeper qubit is rotated by the
    conditional probability of its bit given the already-fixed higher bits.
    """
    probs = np.asarray(probs, dtype=float)
    n = int(probs.shape[0]).bit_length() - 1
    if probs.shape[0] != 1 << n:
        raise ValueError("distribution length must be a power of two")
    steps = []
    for j in range(n - 1, -1, -1):
        higher = n - 1 - j
        # value = prefix * 2**(j+1) + bit * 2**j + lower
        blocks = probs.reshape(1 << higher, 2, 1 << j)
        mass = blocks.sum(axis=2)
        for prefix in range(1 << higher):
            total = mass[prefix].sum()
            if total <= 0:
                continue
            theta = angle_of(min(1.0, mass[prefix, 1] / total))
            if theta == 0.0:
                continue
            ctrls = [(j + 1 + b, (prefix >> b) & 1) for b in range(higher)]
            steps += ry_gate(n, theta, j, ctrls).steps
    return Operator(n, tuple(steps), "U_Z")


def build_U_independent(portfolio: Portfolio) -> Operator:
    """Product of RY(2 asin sqrt(p_k)) on the K asset qubits."""
    K = portfolio.K
    steps = []
    for k, asset in enumerate(portfolio.assets):
        theta = angle_of(asset.pd0)
        if theta != 0.0:
            steps += ry_gate(K, theta, k).steps
    return Operator(K, tuple(steps), "U")


def build_U_gci(portfolio: Portfolio, grid: LatentGrid, fits=None, mode="linear") -> Operator:
    """Loading of the latent-factor model on ``n_z + K`` qubits.

    ``linear`` rotates asset ``k`` by ``b_k`` and, per latent qubit ``j``, by
    ``a_k * 2**j`` controlled on that qubit, so the total angle is
    ``a_k * i + b_k``. ``exact`` applies the exact angle for every grid
    point with a rotation conditioned on the full latent register value.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    nz, K = grid.n_z, portfolio.K
    n = nz + K
    if fits is None:
        fits = [fit_linear_angles(a, grid) for a in portfolio.assets]
    steps = list(prepare_distribution(grid.q).embed(n, range(nz)).steps)
    for k, asset in enumerate(portfolio.assets):
        tq = nz + k
        if mode == "linear":
            fit = fits[k]
            steps += ry_gate(n, fit.intercept, tq).steps
            if fit.slope != 0.0:
                for j in range(nz):
                    steps += ry_gate(n, fit.slope * (1 << j), tq, [j]).steps
        else:
            thetas = angle_of(np.atleast_1d(conditional_pd(asset, grid.z)))
            for i, theta in enumerate(thetas):
                ctrls = [(j, (i >> j) & 1) for j in range(nz)]
                steps += ry_gate(n, float(theta), tq, ctrls).steps
    return Operator(n, tuple(steps), "U")


def build_S(portfolio: Portfolio) -> Operator:
    """XOR the weighted loss ``lambda . x`` into the sum register.

    Acts on ``K + n_S`` qubits (assets first). Self-inverse; equals the
    weighted-sum map whenever the sum register starts in ``|0>``.
    """
    K, nS = portfolio.K, portfolio.n_S
    lgd = portfolio.lgds
    x = np.arange(1 << K, dtype=np.int64)
    bits = (x[:, None] >> np.arange(K)) & 1
    loss = bits @ lgd
    s = np.arange(1 << nS, dtype=np.int64)
    table = (x[None, :] | ((s[:, None] ^ loss[None, :]) << K)).ravel()
    # row-major over (s, x) matches index = x + s * 2**K
    return permutation_operator(table, range(K + nS), K + nS, name="S")


def build_C(x: int, n_S: int) -> Operator:
    """Flip the objective (qubit ``n_S``) iff the sum register value is ``<= x``."""
    if not 0 <= x <= (1 << n_S) - 1:
        raise ValueError(f"threshold {x} outside the {n_S}-qubit register range")
    i = np.arange(1 << (n_S + 1), dtype=np.int64)
    val = i & ((1 << n_S) - 1)
    table = i ^ ((val <= x).astype(np.int64) << n_S)
    return permutation_operator(table, range(n_S + 1), n_S + 1, name="C")


@dataclass(frozen=True, eq=False)
class AmplitudeOracle:
    """A state preparation whose ``objective`` qubit carries the amplitude."""

    operator: Operator
    objective: int

    @property
    def n_qubits(self):
        return self.operator.n_qubits


@dataclass(frozen=True, eq=False)
class CdfOracle(AmplitudeOracle):
    layout: RegisterLayout = None
    threshold: int = 0
    portfolio: Portfolio = None
    grid: LatentGrid | None = None
    mode: str = "linear"


def build_A(portfolio: Portfolio, grid: LatentGrid | None, x: int, mode="linear") -> CdfOracle:
    """CDF oracle: objective ``|1>`` probability equals ``P[L <= x]``."""
    lay = layout_for(portfolio, grid)
    n = lay.n_qubits
    if grid is None:
        U = build_U_independent(portfolio).embed(n, lay.asset_register)
    else:
        U = build_U_gci(portfolio, grid, mode=mode).embed(
            n, [*lay.z_register, *lay.asset_register])
    S = build_S(portfolio).embed(n, [*lay.asset_register, *lay.sum_register])
    C = build_C(x, portfolio.n_S).embed(n, [*lay.sum_register, lay.objective])
    A = compose(U, S, C, name="A")
    return CdfOracle(A, lay.objective, lay, int(x), portfolio, grid, mode)


@dataclass(frozen=True, eq=False)
class GroverOperator:
    """``Q = A S_0 A^dg S_psi0`` on the oracle register plus one ancilla.

    Both reflections use phase kickback on the ancilla (highest qubit),
    which starts and ends in ``|0>``. ``S_psi0`` flips the sign of the
    objective-``|0>`` branch, ``S_0`` that of the all-zero state.
    """

    operator: Operator
    source: AmplitudeOracle
    ancilla: int
    factors: dict

    @property
    def n_qubits(self):
        return self.operator.n_qubits


def _kickback(n, ancilla, controls, name):
    flip = x_gate(n, ancilla)
    z = single_qubit(n, ((1, 0), (0, -1)), ancilla, controls, "z")
    return compose(flip, z, flip, name=name)


def build_Q(oracle: AmplitudeOracle) -> GroverOperator:
    n0 = oracle.n_qubits
    n = n0 + 1
    anc = n0
    A = oracle.operator.widen(n)
    S_psi0 = _kickback(n, anc, [(oracle.objective, 0)], "S_psi0")
    S_0 = _kickback(n, anc, [(q, 0) for q in range(n0)], "S_0")
    A_dg = A.adjoint()
    Q = compose(S_psi0, A_dg, S_0, A, name="Q")
    factors = {"A": A, "S_0": S_0, "A_dg": A_dg, "S_psi0": S_psi0}
    return GroverOperator(Q, oracle, anc, factors)


def reference_S_psi0(n_qubits, objective) -> Operator:
    """Direct sign flip on the objective-``|0>`` branch (no ancilla)."""
    return single_qubit(n_qubits, _FLIP0, objective, (), "S_psi0")


__all__ = [
    "AmplitudeOracle",
    "CdfOracle",
    "GroverOperator",
    "MODES",
    "build_A",
    "build_C",
    "build_Q",
    "build_S",
    "build_U_gci",
    "build_U_independent",
    "layout_for",
    "prepare_distribution",
    "reference_S_psi0",
]
