"""Dense statevector simulator and operator algebra.

Qubit ordering is little-endian: qubit ``q`` is bit ``q`` of the basis
index, so ``|b>`` with ``b = sum_q bit_q * 2**q``.

Operators are immutable sequences of primitive steps. Two primitives exist:

* :class:`Gate` -- a 2x2 unitary on one target qubit, optionally
  conditioned on other qubits taking given values (``1`` for an ordinary
  control, ``0`` for an open control).
* :class:`Permutation` -- a basis permutation of a group of qubits with an
  optional phase per input basis state, built from a classical reversible
  function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ._backend import get_kernels
from .errors import DimensionError, ReversibilityError, SizeError

MAX_QUBITS = 24
NORM_TOL = 1e-12


def _check_size(n_qubits, limit=MAX_QUBITS):
    if n_qubits > limit:
        raise SizeError(
            f"{n_qubits} qubits exceeds the statevector budget of {limit}"
        )


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over ``n_qubits`` qubits (read-only)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != 1 << self.n_qubits:
            raise DimensionError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits):
        _check_size(n_qubits)
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits, index):
        _check_size(n_qubits)
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def _wrap(cls, n_qubits, buf):
        obj = object.__new__(cls)
        buf.setflags(write=False)
        object.__setattr__(obj, "n_qubits", n_qubits)
        object.__setattr__(obj, "amplitudes", buf)
        return obj

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def norm(self):
        return float(np.sqrt(np.sum(self.probabilities())))

    def marginal(self, qubits: Sequence[int]):
        """Distribution over the integer value of ``qubits`` (first = LSB)."""
        probs = self.probabilities()
        idx = np.arange(probs.shape[0], dtype=np.int64)
        value = np.zeros_like(idx)
        for j, q in enumerate(qubits):
            value |= ((idx >> q) & 1) << j
        return np.bincount(value, weights=probs, minlength=1 << len(qubits))


def _normalize_controls(controls) -> tuple[tuple[int, int], ...]:
    out = {}
    for c in controls:
        q, v = (c, 1) if isinstance(c, (int, np.integer)) else c
        q, v = int(q), int(v)
        if v not in (0, 1):
            raise ValueError(f"control value must be 0 or 1, got {v}")
        if q in out and out[q] != v:
            raise ValueError(f"conflicting control values on qubit {q}")
        out[q] = v
    return tuple(sorted(out.items()))


def _masks(controls):
    cmask = cval = 0
    for q, v in controls:
        cmask |= 1 << q
        cval |= v << q
    return cmask, cval


@dataclass(frozen=True, eq=False)
class Gate:
    matrix: tuple[complex, complex, complex, complex]
    target: int
    controls: tuple[tuple[int, int], ...] = ()
    label: str = ""

    @property
    def qubits(self):
        return frozenset([self.target, *(q for q, _ in self.controls)])

    def adjoint(self):
        u00, u01, u10, u11 = self.matrix
        mat = (u00.conjugate(), u10.conjugate(), u01.conjugate(), u11.conjugate())
        return Gate(mat, self.target, self.controls, self.label + "_dg")

    def relabel(self, mapping):
        ctrls = tuple((mapping[q], v) for q, v in self.controls)
        return Gate(self.matrix, mapping[self.target], _normalize_controls(ctrls), self.label)

    def add_controls(self, extra):
        return Gate(self.matrix, self.target,
                    _normalize_controls(self.controls + extra), self.label)

    def __post_init__(self):
        object.__setattr__(self, "_masks", _masks(self.controls))

    def run(self, buf, tmp, kern):
        cmask, cval = self._masks
        kern.apply_1q(buf, *self.matrix, self.target, cmask, cval)
        return buf, tmp


@dataclass(frozen=True, eq=False)
class Permutation:
    qubits: tuple[int, ...]
    table: np.ndarray
    phases: np.ndarray
    controls: tuple[tuple[int, int], ...] = ()
    label: str = ""

    @property
    def qubit_set(self):
        return frozenset([*self.qubits, *(q for q, _ in self.controls)])

    def adjoint(self):
        inv = np.empty_like(self.table)
        inv[self.table] = np.arange(self.table.shape[0], dtype=np.int64)
        ph = np.empty_like(self.phases)
        ph[self.table] = self.phases.conj()
        return _make_permutation(self.qubits, inv, ph, self.controls, self.label + "_dg")

    def relabel(self, mapping):
        ctrls = tuple((mapping[q], v) for q, v in self.controls)
        return _make_permutation(tuple(mapping[q] for q in self.qubits), self.table,
                                 self.phases, _normalize_controls(ctrls), self.label)

    def add_controls(self, extra):
        return _make_permutation(self.qubits, self.table, self.phases,
                                 _normalize_controls(self.controls + extra), self.label)

    def __post_init__(self):
        object.__setattr__(self, "_masks", _masks(self.controls))
        object.__setattr__(self, "_qubit_array", np.asarray(self.qubits, dtype=np.int64))

    def run(self, buf, tmp, kern):
        cmask, cval = self._masks
        kern.apply_permutation(buf, tmp, self._qubit_array, self.table, self.phases, cmask, cval)
        return tmp, buf


def _make_permutation(qubits, table, phases, controls, label):
    table = np.ascontiguousarray(table, dtype=np.int64)
    phases = np.ascontiguousarray(phases, dtype=np.complex128)
    table.setflags(write=False)
    phases.setflags(write=False)
    return Permutation(tuple(qubits), table, phases, controls, label)


def _step_qubits(step):
    return step.qubits if isinstance(step, Gate) else step.qubit_set


@dataclass(frozen=True, eq=False)
class Operator:
    """A unitary on ``n_qubits`` qubits, stored as a sequence of steps."""

    n_qubits: int
    steps: tuple = ()
    name: str = "op"

    @property
    def arity(self):
        return self.n_qubits

    @property
    def touched(self) -> frozenset:
        out = frozenset()
        for s in self.steps:
            out |= _step_qubits(s)
        return out

    def adjoint(self):
        return Operator(self.n_qubits, tuple(s.adjoint() for s in reversed(self.steps)),
                        self.name + "^dg")

    def power(self, k):
        if k < 0:
            return self.adjoint().power(-k)
        return Operator(self.n_qubits, self.steps * k, f"{self.name}^{k}")

    def embed(self, n_qubits, qubits: Sequence[int], name=None):
        """Place this operator on ``qubits`` of a wider ``n_qubits`` register."""
        if len(qubits) != self.n_qubits or len(set(qubits)) != len(qubits):
            raise DimensionError("qubit map must list each target qubit once")
        if max(qubits, default=-1) >= n_qubits:
            raise DimensionError("qubit map exceeds the target register")
        mapping = dict(enumerate(qubits))
        return Operator(n_qubits, tuple(s.relabel(mapping) for s in self.steps),
                        name or self.name)

    def widen(self, n_qubits):
        return self.embed(n_qubits, range(self.n_qubits))

    def to_matrix(self):
        """Dense unitary, column ``b`` being the image of ``|b>``. Small ops only."""
        _check_size(self.n_qubits, 12)
        dim = 1 << self.n_qubits
        cols = [apply(self, StateVector.basis(self.n_qubits, b)).amplitudes
                for b in range(dim)]
        return np.stack(cols, axis=1)


def identity(n_qubits):
    return Operator(n_qubits, (), "I")


def compose(*ops: Operator, name="composite") -> Operator:
    """Sequence operators in application order: ``compose(U, S, C)`` is C*S*U."""
    if not ops:
        raise ValueError("compose needs at least one operator")
    n = ops[0].n_qubits
    for op in ops:
        if op.n_qubits != n:
            raise DimensionError(f"cannot compose {op.n_qubits}- and {n}-qubit operators")
    return Operator(n, tuple(s for op in ops for s in op.steps), name)


def apply(op: Operator, state: StateVector, backend: str | None = None) -> StateVector:
    if op.n_qubits != state.n_qubits:
        raise DimensionError(
            f"operator {op.name!r} acts on {op.n_qubits} qubits, state has {state.n_qubits}"
        )
    kern = get_kernels(backend)
    buf = state.amplitudes.copy()
    tmp = np.empty_like(buf)
    for step in op.steps:
        buf, tmp = step.run(buf, tmp, kern)
    return StateVector._wrap(state.n_qubits, buf)


def controlled(op: Operator, controls: Iterable, name=None) -> Operator:
    """Condition every step of ``op`` on ``controls``.

    ``controls`` holds qubit indices (control on ``|1>``) or ``(qubit, value)``
    pairs. Controls must not overlap any qubit the operator acts on.
    """
    ctrls = _normalize_controls(controls)
    cq = {q for q, _ in ctrls}
    if any(q >= op.n_qubits or q < 0 for q in cq):
        raise DimensionError("control qubit outside the operator's register")
    overlap = cq & op.touched
    if overlap:
        raise ValueError(f"control qubits {sorted(overlap)} overlap the operator's targets")
    return Operator(op.n_qubits, tuple(s.add_controls(ctrls) for s in op.steps),
                    name or f"c-{op.name}")


def single_qubit(n_qubits, matrix, target, controls=(), label="u"):
    m = np.asarray(matrix, dtype=np.complex128).reshape(2, 2)
    if not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12):
        raise ValueError(f"gate {label!r} is not unitary")
    if not 0 <= target < n_qubits:
        raise DimensionError(f"target {target} outside {n_qubits}-qubit register")
    ctrls = _normalize_controls(controls)
    if any(q == target for q, _ in ctrls):
        raise ValueError("control overlaps target")
    if any(not 0 <= q < n_qubits for q, _ in ctrls):
        raise DimensionError("control qubit outside register")
    g = Gate(tuple(complex(v) for v in m.ravel()), int(target), ctrls, label)
    return Operator(n_qubits, (g,), label)


_SQ2 = 1 / math.sqrt(2)
X = ((0, 1), (1, 0))
H = ((_SQ2, _SQ2), (_SQ2, -_SQ2))
Z = ((1, 0), (0, -1))


def ry_matrix(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return ((c, -s), (s, c))


def phase_matrix(phi):
    return ((1, 0), (0, complex(math.cos(phi), math.sin(phi))))


def x_gate(n_qubits, target, controls=()):
    return single_qubit(n_qubits, X, target, controls, "x")


def h_gate(n_qubits, target, controls=()):
    return single_qubit(n_qubits, H, target, controls, "h")


def z_gate(n_qubits, target, controls=()):
    return single_qubit(n_qubits, Z, target, controls, "z")


def ry_gate(n_qubits, theta, target, controls=()):
    return single_qubit(n_qubits, ry_matrix(theta), target, controls, "ry")


def phase_gate(n_qubits, phi, target, controls=()):
    return single_qubit(n_qubits, phase_matrix(phi), target, controls, "p")


def permutation_operator(
    f: Callable[[int], int] | Sequence[int],
    qubits: Sequence[int],
    n_qubits: int | None = None,
    phases=None,
    name="perm",
) -> Operator:
    """Operator ``|b> -> phase_b |f(b)>`` on the register ``qubits``.

    ``f`` is a callable or a lookup table over the ``2**len(qubits)`` register
    values (``qubits[0]`` is the least significant bit). The map is checked
    exhaustively for bijectivity.
    """
    qubits = tuple(int(q) for q in qubits)
    if n_qubits is None:
        n_qubits = max(qubits) + 1
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n_qubits for q in qubits):
        raise DimensionError("permutation qubits must be distinct and inside the register")
    dim = 1 << len(qubits)
    if callable(f):
        table = np.fromiter((f(b) for b in range(dim)), dtype=np.int64, count=dim)
    else:
        table = np.asarray(f, dtype=np.int64)
        if table.shape != (dim,):
            raise DimensionError(f"lookup table must have {dim} entries")
    if table.min(initial=0) < 0 or table.max(initial=0) >= dim:
        raise ReversibilityError(f"{name}: image leaves the register")
    if np.unique(table).shape[0] != dim:
        raise ReversibilityError(f"{name}: map is not injective")
    if phases is None:
        phases = np.ones(dim, dtype=np.complex128)
    else:
        phases = np.asarray(phases, dtype=np.complex128)
        if phases.shape != (dim,) or not np.allclose(np.abs(phases), 1.0, atol=1e-12):
            raise ValueError("phases must be unit-modulus, one per register value")
    return Operator(n_qubits, (_make_permutation(qubits, table, phases, (), name),), name)


def probability_of(state: StateVector, qubit: int, outcome: int = 1) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} outside {state.n_qubits}-qubit state")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    probs = state.probabilities().reshape(-1, 2, 1 << qubit)
    return float(probs[:, outcome, :].sum())


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit allocation of the CDF circuit: Z | assets | sum | objective."""

    n_z: int
    n_assets: int
    n_sum: int
    z_register: range = field(init=False)
    asset_register: range = field(init=False)
    sum_register: range = field(init=False)
    objective: int = field(init=False)

    def __post_init__(self):
        if self.n_z < 0 or self.n_assets < 1 or self.n_sum < 1:
            raise ValueError("register sizes must be n_z >= 0, K >= 1, n_S >= 1")
        a0 = self.n_z
        s0 = a0 + self.n_assets
        o = s0 + self.n_sum
        object.__setattr__(self, "z_register", range(0, a0))
        object.__setattr__(self, "asset_register", range(a0, s0))
        object.__setattr__(self, "sum_register", range(s0, o))
        object.__setattr__(self, "objective", o)

    @property
    def n_qubits(self):
        return self.n_z + self.n_assets + self.n_sum + 1
