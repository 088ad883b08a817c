# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint16_t, uint32_t

cnp.import_array()

ctypedef fused count_t:
    uint8_t
    uint16_t
    uint32_t


def accumulate_counts(count_t[:, ::1] counts, const int64_t[:, ::1] units):
    cdef Py_ssize_t m = units.shape[0], c = units.shape[1]
    cdef Py_ssize_t mu, a, b
    cdef int64_t u
    with nogil:
        for mu in range(m):
            for a in range(c):
                u = units[mu, a]
                for b in range(c):
                    if b != a:
                        counts[u, units[mu, b]] += 1


cdef void _add_row(const count_t[:, ::1] counts, Py_ssize_t k, int64_t[::1] h, int sign) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(h.shape[0]):
        h[j] += sign * <int64_t>counts[k, j]


def fields(const count_t[:, ::1] counts, const uint8_t[::1] v):
    cdef Py_ssize_t n = counts.shape[0], k
    out = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] h = out
    with nogil:
        for k in range(n):
            if v[k]:
                _add_row(counts, k, h, 1)
    return out


def sweep_sequential(const count_t[:, ::1] counts, const uint8_t[::1] v, int64_t fire_level):
    cdef Py_ssize_t n = counts.shape[0], k
    state_arr = np.array(v, dtype=np.uint8)
    cdef uint8_t[::1] state = state_arr
    h_arr = fields(counts, v)
    cdef int64_t[::1] h = h_arr
    cdef uint8_t new
    with nogil:
        for k in range(n):
            new = 1 if h[k] >= fire_level else 0
            if new != state[k]:
                state[k] = new
                _add_row(counts, k, h, 1 if new else -1)
    return state_arr


def gb_step(const uint8_t[:, ::1] bits, const uint8_t[::1] v, Py_ssize_t c, Py_ssize_t l):
    cdef Py_ssize_t n = c * l, u, b, r
    out = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    cdef bint ok, hit
    with nogil:
        for u in range(n):
            ok = True
            for b in range(c):
                hit = False
                for r in range(l):
                    if bits[u, b * l + r] and v[b * l + r]:
                        hit = True
                        break
                if not hit:
                    ok = False
                    break
            o[u] = 1 if ok else 0
    return out


def count_unstable(const count_t[:, ::1] counts, const int64_t[:, ::1] units, int64_t fire_level):
    cdef Py_ssize_t m = units.shape[0], c = units.shape[1], n = counts.shape[0]
    cdef Py_ssize_t mu, a, j
    cdef int64_t h
    cdef bint member
    cdef Py_ssize_t bad = 0
    with nogil:
        for mu in range(m):
            for j in range(n):
                h = 0
                member = False
                for a in range(c):
                    h += counts[units[mu, a], j]
                    if units[mu, a] == j:
                        member = True
                if (h >= fire_level) != member:
                    bad += 1
                    break
    return bad
