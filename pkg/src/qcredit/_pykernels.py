"""Pure numpy statevector kernels, used when the compiled core is absent.

Index arithmetic is cached per (state size, qubits, controls) so repeated
application of the same gate only pays for the gather/scatter.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=4096)
def _pair_indices(n_states, target, cmask, cval):
    g = np.arange(n_states >> 1, dtype=np.int64)
    tbit = 1 << target
    i0 = ((g >> target) << (target + 1)) | (g & (tbit - 1))
    if cmask:
        i0 = i0[(i0 & cmask) == cval]
    i1 = i0 | tbit
    i0.setflags(write=False)
    i1.setflags(write=False)
    return i0, i1


def apply_1q(state, u00, u01, u10, u11, target, cmask, cval):
    i0, i1 = _pair_indices(state.shape[0], int(target), int(cmask), int(cval))
    a = state[i0]
    b = state[i1]
    state[i0] = u00 * a + u01 * b
    state[i1] = u10 * a + u11 * b


@lru_cache(maxsize=1024)
def _perm_indices(n_states, qubits, table_bytes, cmask, cval):
    table = np.frombuffer(table_bytes, dtype=np.int64)
    b = np.arange(n_states, dtype=np.int64)
    if cmask:
        b = b[(b & cmask) == cval]
    sub = np.zeros_like(b)
    regmask = 0
    for j, q in enumerate(qubits):
        sub |= ((b >> q) & 1) << j
        regmask |= 1 << q
    new = table[sub]
    nb = b & ~regmask
    for j, q in enumerate(qubits):
        nb |= ((new >> j) & 1) << q
    for arr in (b, sub, nb):
        arr.setflags(write=False)
    return b, sub, nb


def apply_permutation(state, out, qubits, table, phases, cmask, cval):
    src, sub, dst = _perm_indices(
        state.shape[0],
        tuple(int(q) for q in qubits),
        np.ascontiguousarray(table, dtype=np.int64).tobytes(),
        int(cmask),
        int(cval),
    )
    if cmask:
        out[:] = state
    out[dst] = state[src] * phases[sub]
