"""Canonical amplitude estimation: phase estimation on the Grover operator.

The evaluation register holds ``m`` qubits placed above the oracle register
and its ancilla. Evaluation qubit ``j`` controls ``Q**(2**j)``; after the
inverse QFT the register value ``y`` maps to ``sin(y*pi/2**m)**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import (
    MAX_QUBITS,
    Operator,
    StateVector,
    apply,
    compose,
    controlled,
    h_gate,
    permutation_operator,
    phase_gate,
    ry_gate,
)
from .errors import SizeError
from .model_circuits import AmplitudeOracle, build_A, build_Q

QAE_MAX_QUBITS = 22
TIE_TOL = 1e-12


def error_bound(a: float, M: int) -> float:
    """``2*pi*sqrt(a(1-a))/M + pi**2/M**2``."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    if M < 1:
        raise ValueError("M must be at least 1")
    return 2.0 * math.sqrt(a * (1.0 - a)) * math.pi / M + math.pi ** 2 / M ** 2


def grid_values(m: int) -> np.ndarray:
    M = 1 << m
    y = np.arange(M)
    # fold onto y <= M/2 so mirrored outcomes give bitwise-equal values
    return np.sin(np.minimum(y, M - y) * math.pi / M) ** 2


@dataclass(frozen=True, eq=False)
class QaeResult:
    m: int
    outcome_probs: np.ndarray
    estimate: float
    grid: np.ndarray
    error_bound: float
    samples_M: int
    n_qubits: int

    @property
    def q_applications(self):
        return (1 << self.m) - 1

    @property
    def most_likely_y(self):
        return int(np.argmin(np.abs(self.grid - self.estimate)))

    def estimate_distribution(self):
        """Probability of each distinct estimate value, sorted by value."""
        uniq, inv = np.unique(self.grid, return_inverse=True)
        return uniq, np.bincount(inv, weights=self.outcome_probs)


def inverse_qft(n_qubits: int, qubits) -> Operator:
    """Exact inverse QFT on ``qubits`` (little-endian register value)."""
    qubits = list(qubits)
    m = len(qubits)
    ops = []
    for j in range(m // 2):
        a, b = qubits[j], qubits[m - 1 - j]
        ops.append(permutation_operator([0, 2, 1, 3], [a, b], n_qubits, name="swap"))
    for j in range(m):
        for k in range(j):
            ops.append(phase_gate(n_qubits, -math.pi / (1 << (j - k)), qubits[j], [qubits[k]]))
        ops.append(h_gate(n_qubits, qubits[j]))
    if not ops:
        return Operator(n_qubits, (), "iqft")
    return compose(*ops, name="iqft")


def qae_circuit(oracle: AmplitudeOracle, m: int) -> tuple[Operator, list[int]]:
    """Full estimation circuit and the evaluation qubit indices."""
    grover = build_Q(oracle)
    n_base = grover.n_qubits
    n = n_base + m
    evals = list(range(n_base, n))
    ops = [oracle.operator.widen(n)]
    ops += [h_gate(n, q) for q in evals]
    Q = grover.operator.widen(n)
    for j, q in enumerate(evals):
        ops.append(controlled(Q, [q]).power(1 << j))
    ops.append(inverse_qft(n, evals))
    return compose(*ops, name="QAE"), evals


def _pick_estimate(probs, grid):
    top = probs.max()
    cand = np.flatnonzero(probs >= top - TIE_TOL)
    return float(grid[cand].min())


def run_qae(oracle: AmplitudeOracle, m: int, max_qubits: int = QAE_MAX_QUBITS,
            backend: str | None = None) -> QaeResult:
    """Exact outcome distribution of amplitude estimation with ``m`` qubits."""
    if m < 1:
        raise ValueError("m must be at least 1")
    n_total = oracle.n_qubits + 1 + m
    if n_total > min(max_qubits, MAX_QUBITS):
        raise SizeError(f"amplitude estimation needs {n_total} qubits, budget is {max_qubits}")
    circuit, evals = qae_circuit(oracle, m)
    state = apply(circuit, StateVector.zero(circuit.n_qubits), backend=backend)
    probs = state.marginal(evals)
    probs.setflags(write=False)
    grid = grid_values(m)
    grid.setflags(write=False)
    est = _pick_estimate(probs, grid)
    M = 1 << m
    return QaeResult(m, probs, est, grid, error_bound(est, M), M, n_total)


def synthetic_oracle(a: float) -> AmplitudeOracle:
    """Single-qubit oracle ``RY(2 asin sqrt(a))`` with amplitude ``a``."""
    return AmplitudeOracle(ry_gate(1, 2.0 * math.asin(math.sqrt(a)), 0), 0)


def sample_estimate(result: QaeResult, shots: int, seed=None) -> float:
    """Estimate from ``shots`` measurements: the most frequent outcome's value."""
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(seed)
    p = np.clip(result.outcome_probs, 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    return _pick_estimate(counts.astype(float), result.grid)


def median_estimate(estimates) -> float:
    """Lower median of a non-empty list of estimates."""
    vals = sorted(float(getattr(e, "estimate", e)) for e in estimates)
    if not vals:
        raise ValueError("median of an empty list")
    return vals[(len(vals) - 1) // 2]


def estimate_cdf_point(portfolio, grid, x, m, mode="linear", shots=None, seed=None,
                       max_qubits=QAE_MAX_QUBITS, backend=None) -> float:
    """Amplitude-estimated ``P[L <= x]``."""
    result = run_qae(build_A(portfolio, grid, x, mode), m, max_qubits, backend)
    if shots is None:
        return result.estimate
    return sample_estimate(result, shots, seed)
