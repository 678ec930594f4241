# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels.

Both kernels release the GIL, so independent simulations can run on
separate threads. Signatures match :mod:`qcredit._pykernels`.
"""
from libc.stdint cimport int64_t

import numpy as np


def apply_1q(double complex[::1] state,
             double complex u00, double complex u01,
             double complex u10, double complex u11,
             Py_ssize_t target, int64_t cmask, int64_t cval):
    """In-place 2x2 unitary on ``target`` where ``(b & cmask) == cval``."""
    cdef Py_ssize_t half = state.shape[0] >> 1
    cdef Py_ssize_t g
    cdef int64_t tbit = (<int64_t> 1) << target
    cdef int64_t low = tbit - 1
    cdef int64_t i0, i1
    cdef double complex a, b
    with nogil:
        for g in range(half):
            i0 = ((g >> target) << (target + 1)) | (g & low)
            if (i0 & cmask) != cval:
                continue
            i1 = i0 | tbit
            a = state[i0]
            b = state[i1]
            state[i0] = u00 * a + u01 * b
            state[i1] = u10 * a + u11 * b


def apply_permutation(const double complex[::1] state, double complex[::1] out,
                      const int64_t[::1] qubits, const int64_t[::1] table,
                      const double complex[::1] phases,
                      int64_t cmask, int64_t cval):
    """Write ``out[f(b)] = phase * state[b]`` for a register permutation."""
    cdef Py_ssize_t n = state.shape[0]
    cdef Py_ssize_t nq = qubits.shape[0]
    cdef Py_ssize_t dim = table.shape[0]
    cdef Py_ssize_t j, s
    cdef int64_t b, sub, nb, keep
    cdef int64_t regmask = 0
    cdef int64_t q0 = qubits[0]
    cdef bint contiguous = 1
    cdef bint unit = 1
    cdef int64_t[::1] dest = np.empty(dim, dtype=np.int64)
    for j in range(nq):
        regmask |= (<int64_t> 1) << qubits[j]
        if qubits[j] != q0 + j:
            contiguous = 0
    # destination bits of each register value, already scattered
    for s in range(dim):
        nb = 0
        for j in range(nq):
            if (table[s] >> j) & 1:
                nb |= (<int64_t> 1) << qubits[j]
        dest[s] = nb
        if phases[s] != 1.0:
            unit = 0
    keep = ~regmask
    with nogil:
        if cmask != 0:
            for b in range(n):
                out[b] = state[b]
        for b in range(n):
            if (b & cmask) != cval:
                continue
            if contiguous:
                sub = (b >> q0) & (dim - 1)
            else:
                sub = 0
                for j in range(nq):
                    if (b >> qubits[j]) & 1:
                        sub |= (<int64_t> 1) << j
            if unit:
                out[(b & keep) | dest[sub]] = state[b]
            else:
                out[(b & keep) | dest[sub]] = state[b] * phases[sub]
