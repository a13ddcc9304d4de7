# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: one annealing chain, exhaustive QUBO minimisation.

Arithmetic mirrors the pure-python fallback operation for operation (libm
exp, per-element field updates) so both back-ends agree bit for bit on the
same platform.  Both entry points release the GIL, so independent chains
can run on a thread pool.
"""
from libc.math cimport exp

import numpy as np


def sa_chain(double[::1] h, double[:, ::1] w, unsigned char[::1] z,
             double[::1] betas, double[:, ::1] u, double e0):
    """Anneal one Metropolis chain in place; returns the final energy.

    See the fallback implementation for the parameter contract.
    """
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t sweeps = betas.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double beta, de, s
    cdef double e = e0
    with nogil:
        for t in range(sweeps):
            beta = betas[t]
            for i in range(n):
                s = 1.0 - 2.0 * z[i]
                de = s * h[i]
                if de <= 0.0 or u[t, i] < exp(-beta * de):
                    z[i] = 1 - z[i]
                    e += de
                    # w's diagonal is zero, so h[i] stays untouched.
                    for j in range(n):
                        h[j] += s * w[i, j]
    return e


cdef inline int _ctz(unsigned long long x) nogil:
    cdef int c = 0
    while not (x & 1ULL):
        x >>= 1
        c += 1
    return c


cdef inline unsigned long long _lexkey(unsigned long long g, Py_ssize_t n) nogil:
    # Reverse the low n bits: numeric order on the result equals
    # lexicographic order on (z_0, z_1, ..., z_{n-1}).
    cdef unsigned long long k = 0
    cdef Py_ssize_t i
    for i in range(n):
        k = (k << 1) | ((g >> i) & 1ULL)
    return k


def exact_argmin(double[::1] qdiag, double[:, ::1] w):
    """Global minimum of z^T Q z over all 2^n bit vectors.

    Walks the states in Gray-code order so each step flips a single bit and
    costs O(n) for the maintained local-field update.  Ties go to the
    lexicographically smallest bit vector.  Returns (bits, energy).
    """
    cdef Py_ssize_t n = qdiag.shape[0]
    if n < 1 or n > 63:
        raise ValueError(f"exact enumeration supports 1..63 bits, got {n}")
    cdef unsigned long long total = 1ULL << n
    cdef unsigned long long m, key
    cdef unsigned long long g = 0, best_g = 0, best_key = 0
    cdef double e = 0.0, best_e = 0.0
    cdef double s
    cdef Py_ssize_t i, j
    h_arr = np.asarray(qdiag).copy()
    z_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] h = h_arr
    cdef unsigned char[::1] z = z_arr
    with nogil:
        # State 0 (all bits clear) has energy 0 and is the incumbent.
        for m in range(1, total):
            i = _ctz(m)
            s = 1.0 - 2.0 * z[i]
            e += s * h[i]
            z[i] = 1 - z[i]
            g ^= 1ULL << i
            for j in range(n):
                h[j] += s * w[i, j]
            if e < best_e:
                best_e = e
                best_g = g
                best_key = _lexkey(g, n)
            elif e == best_e:
                key = _lexkey(g, n)
                if key < best_key:
                    best_g = g
                    best_key = key
    bits = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        bits[i] = (best_g >> i) & 1ULL
    return bits, best_e
