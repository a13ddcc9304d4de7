"""Pure-python kernels, used when the compiled extension is unavailable.

Both implementations follow the same arithmetic, operation for operation, as
the compiled ones so that a given platform produces identical bits either
way: scalar ``math.exp`` (same libm call), per-element local-field updates,
and the shared tie-breaking rule (lexicographically smallest bit vector).
"""
from __future__ import annotations

import math

import numpy as np


def sa_chain(h, w, z, betas, u, e0):
    """Anneal one Metropolis chain in place; returns the final energy.

    Parameters
    ----------
    h : (n,) float64
        Local fields for the initial state: h_i = Q_ii + sum_{j!=i} W_ij z_j.
        Updated in place.
    w : (n, n) float64
        W = Q + Q^T with a zeroed diagonal.
    z : (n,) uint8
        State, updated in place.
    betas : (sweeps,) float64
        Inverse temperature per sweep.
    u : (sweeps, n) float64
        Pre-drawn uniforms, one per proposal; every proposal consumes one
        regardless of the outcome so the stream layout is fixed.
    e0 : float
        Energy of the initial state.
    """
    n = z.shape[0]
    e = e0
    for t in range(betas.shape[0]):
        beta = betas[t]
        ut = u[t]
        for i in range(n):
            zi = z[i]
            de = (1.0 - 2.0 * zi) * h[i]
            if de <= 0.0 or ut[i] < math.exp(-beta * de):
                z[i] = 1 - zi
                e += de
                # w's diagonal is zero so h[i] is untouched, as required:
                # the field of a bit excludes that bit's own state.
                h += (1.0 - 2.0 * zi) * w[i]
    return e


def exact_argmin(qdiag, w):
    """Global minimum of z^T Q z over all 2^n bit vectors.

    Enumerates states in blocks with vectorised energy evaluation
    E(z) = qdiag.z + 0.5 z^T W z.  Ties go to the lexicographically
    smallest bit vector (z_0 most significant).  Returns (bits, energy).
    """
    n = qdiag.shape[0]
    total = 1 << n
    block = min(total, 1 << 16)
    shifts = np.arange(n, dtype=np.uint64)
    # z_0 weighted heaviest: numeric order on keys == lex order on bits.
    lex_weights = 2.0 ** (n - 1 - np.arange(n))
    best_e = np.inf
    best_key = np.inf
    best_bits = None
    for start in range(0, total, block):
        codes = np.arange(start, min(start + block, total), dtype=np.uint64)
        z = ((codes[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.float64)
        e = z @ qdiag + 0.5 * np.einsum("ij,ij->i", z @ w, z)
        i = int(np.argmin(e))
        if e[i] > best_e:
            continue
        ties = np.flatnonzero(e == e[i])
        keys = z[ties] @ lex_weights
        j = ties[int(np.argmin(keys))]
        if e[j] < best_e or keys.min() < best_key:
            best_e = float(e[j])
            best_key = float(keys.min())
            best_bits = z[j].astype(np.uint8)
    return best_bits, best_e
