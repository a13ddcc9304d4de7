"""Shared helpers: finite differences and error measures."""
import numpy as np


def fd_gradient(func, x, eps=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        h = eps * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (func(xp) - func(xm)) / (2.0 * h)
    return g


def fd_hessian(func, x, eps=1e-6):
    """Central-difference Hessian built from gradient differences of ``func``
    when ``func`` returns a vector, or from value differences otherwise."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    h_mat = np.empty((n, n))
    for i in range(n):
        h = eps * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        h_mat[:, i] = (np.asarray(func(xp)) - np.asarray(func(xm))) / (2.0 * h)
    return 0.5 * (h_mat + h_mat.T)


def rel_err(approx, exact):
    """Max elementwise error relative to the scale of ``exact``."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = max(1.0, float(np.max(np.abs(exact))))
    return float(np.max(np.abs(approx - exact))) / scale
