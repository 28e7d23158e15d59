"""Compiled kernels for Prufer shooting with piecewise-constant coefficients.

On each mesh cell ``p`` and ``V`` are frozen at their midpoint values, so
``-(p u')' + V u = lam u`` has an exact trigonometric / hyperbolic solution
there.  The Prufer angle ``phi = atan2(u, p u')`` is advanced cell by cell
without ever integrating an ODE numerically; zero counting is exact.
"""

import math

import numpy as np
from numba import njit

_SERIES = 1e-6
_LOG2 = math.log(2.0)


@njit(cache=True, nogil=True)
def cell_step(q, p, h, u, w):
    """Propagate ``(u, p u')`` across a cell of signed width ``h``.

    ``q = (lam - V) / p``.  For ``q < 0`` the matrix is divided by
    ``cosh(kappa |h|)``; the returned log factor restores the scale.
    """
    z = q * h * h
    if abs(z) < _SERIES:
        c = 1.0 - 0.5 * z + z * z / 24.0
        s = h * (1.0 - z / 6.0 + z * z / 120.0)
        return c * u + s * w / p, -q * p * s * u + c * w, 0.0
    if q > 0.0:
        k = math.sqrt(q)
        c = math.cos(k * h)
        s = math.sin(k * h) / k
        return c * u + s * w / p, -q * p * s * u + c * w, 0.0
    kap = math.sqrt(-q)
    t = kap * abs(h)
    th = math.tanh(kap * h) / kap
    logc = t + math.log1p(math.exp(-2.0 * t)) - _LOG2
    return u + th * w / p, -q * p * th * u + w, logc


@njit(cache=True, nogil=True)
def phase_step(phi, q, p, h):
    """Advance the continuous Prufer angle across one cell (``h > 0``)."""
    n0 = math.floor(phi / math.pi)
    r0 = phi - n0 * math.pi
    if q > 0.0 and q * h * h >= _SERIES:
        k = math.sqrt(q)
        g = p * k
        psi = math.atan2(g * math.sin(r0), math.cos(r0)) + k * h
        m = math.floor(psi / math.pi)
        rho = psi - m * math.pi
        return (n0 + m) * math.pi + math.atan2(math.sin(rho) / g, math.cos(rho))
    # at most one zero of u in this cell
    u1, w1, _ = cell_step(q, p, h, math.sin(r0), math.cos(r0))
    if u1 < 0.0 or (u1 == 0.0 and w1 < 0.0):
        return (n0 + 1) * math.pi + math.atan2(-u1, -w1)
    return n0 * math.pi + math.atan2(u1, w1)


@njit(cache=True, nogil=True)
def end_phase(widths, pc, vc, lam, alpha):
    """Prufer angle at the right end, starting from ``alpha`` at the left."""
    phi = alpha
    for i in range(widths.size):
        phi = phase_step(phi, (lam - vc[i]) / pc[i], pc[i], widths[i])
    return phi


@njit(cache=True, nogil=True)
def sweep(widths, pc, vc, lam, u0, w0, forward):
    """Unit state vectors, log amplitudes and cumulative decay at every node.

    ``forward`` runs left to right from ``(u0, w0)`` at node 0; otherwise
    right to left from ``(u0, w0)`` at the last node.  The decay measure
    sums the drops of the local energy amplitude inside classically
    forbidden cells; contamination by the growing solution scales like
    ``exp(2 * decay)``.
    """
    n = widths.size
    U = np.empty(n + 1)
    W = np.empty(n + 1)
    A = np.empty(n + 1)
    D = np.empty(n + 1)
    nrm = math.hypot(u0, w0)
    start = 0 if forward else n
    U[start] = u0 / nrm
    W[start] = w0 / nrm
    A[start] = 0.0
    D[start] = 0.0
    for j in range(n):
        if forward:
            i, src, dst, h = j, j, j + 1, widths[j]
        else:
            i, src, dst, h = n - 1 - j, n - j, n - 1 - j, -widths[n - 1 - j]
        q = (lam - vc[i]) / pc[i]
        u, w = U[src], W[src]
        u1, w1, logc = cell_step(q, pc[i], h, u, w)
        nrm = math.hypot(u1, w1)
        U[dst] = u1 / nrm
        W[dst] = w1 / nrm
        A[dst] = A[src] + logc + math.log(nrm)
        drop = 0.0
        if q < 0.0 and -q * h * h >= _SERIES:
            g = pc[i] * math.sqrt(-q)
            e0 = math.log(math.hypot(g * u, w))
            e1 = math.log(math.hypot(g * u1, w1)) + logc
            if e1 < e0:
                drop = e0 - e1
        D[dst] = D[src] + drop
    return U, W, A, D
