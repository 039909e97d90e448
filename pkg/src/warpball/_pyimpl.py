"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_core.pyx`` mirrors them loop by loop.
Triangular fields are stored as ``(N+1, N+1)`` arrays indexed ``[i, j]`` with
``j <= i`` valid and the strict upper part held at zero.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def rowcum(F: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order cumulative integral along each row of a lower triangle.

    ``C[i, j]`` approximates the integral of row ``i`` from node 0 to node
    ``j``.  Interior steps use the cubic through four neighbours; the end steps
    use one-sided cubics, and rows with fewer than four nodes fall back to
    the trapezoid (2 nodes) or the quadratic (3 nodes).
    """
    n1 = F.shape[0]
    N = n1 - 1
    F = np.tril(F)
    C = np.zeros_like(F)
    if N == 0:
        return C
    d = np.zeros((n1, N))
    c = h / 24.0
    if N >= 3:
        d[:, 1:N - 1] = c * (-F[:, 0:N - 2] + 13.0 * F[:, 1:N - 1]
                             + 13.0 * F[:, 2:N] - F[:, 3:N + 1])
        r = np.arange(3, n1)
        d[r, 0] = c * (9.0 * F[r, 0] + 19.0 * F[r, 1] - 5.0 * F[r, 2] + F[r, 3])
        d[r, r - 1] = c * (F[r, r - 3] - 5.0 * F[r, r - 2] + 19.0 * F[r, r - 1] + 9.0 * F[r, r])
    d[1, 0] = 0.5 * h * (F[1, 0] + F[1, 1])
    if N >= 2:
        d[2, 0] = h / 12.0 * (5.0 * F[2, 0] + 8.0 * F[2, 1] - F[2, 2])
        d[2, 1] = h / 12.0 * (-F[2, 0] + 8.0 * F[2, 1] + 5.0 * F[2, 2])
    C[:, 1:] = np.cumsum(d, axis=1)
    return np.tril(C)


def colcum_rev(F: np.ndarray, h: float) -> np.ndarray:
    """``I[i, j]`` = integral of column ``j`` from node ``i`` up to node ``N``.

    Column ``j`` is valid for ``i >= j``; flipping both axes and transposing
    turns it into a row problem of the same lower-triangular shape.
    """
    B = np.ascontiguousarray(F[::-1, ::-1].T)
    return np.ascontiguousarray(rowcum(B, h).T[::-1, ::-1])


def picard_apply(W: np.ndarray, L: np.ndarray, h: float) -> np.ndarray:
    """One application of the Volterra operator: outer column integral of inner row integrals."""
    return colcum_rev(rowcum(W * L, h), h)


_SERIES_TERMS = 16
_SERIES_SWITCH = 1.0


def filon_moments(theta: np.ndarray):
    """Moments ``int_{-1}^{1} tau^k exp(-theta tau) d tau`` for k = 0, 1, 2."""
    theta = np.asarray(theta, dtype=complex)
    small = np.abs(theta) < _SERIES_SWITCH
    S = np.empty_like(theta)
    S1 = np.empty_like(theta)
    S2 = np.empty_like(theta)
    if np.any(small):
        ts = theta[small]
        t2 = ts * ts
        s0 = np.zeros_like(ts)
        s1 = np.zeros_like(ts)
        s2 = np.zeros_like(ts)
        # S = sum theta^{2k}/(2k+1)!, differentiated term by term
        for k in range(_SERIES_TERMS - 1, -1, -1):
            f = 1.0 / _factorial(2 * k + 1)
            s0 = s0 * t2 + f
            if k >= 1:
                s1 = s1 * t2 + 2 * k * f
                s2 = s2 * t2 + 2 * k * (2 * k - 1) * f
        S[small] = s0
        S1[small] = s1 * ts
        S2[small] = s2
    big = ~small
    if np.any(big):
        tb = theta[big]
        sh = np.sinh(tb)
        ch = np.cosh(tb)
        S[big] = sh / tb
        S1[big] = (tb * ch - sh) / tb ** 2
        S2[big] = ((tb * tb + 2.0) * sh - 2.0 * tb * ch) / tb ** 3
    return 2.0 * S, -2.0 * S1, 2.0 * S2


_FACT = [1.0]


def _factorial(n: int) -> float:
    while len(_FACT) <= n:
        _FACT.append(_FACT[-1] * len(_FACT))
    return _FACT[n]


def filon_laplace(G: np.ndarray, H: float, w: np.ndarray) -> np.ndarray:
    """Exponentially fitted Simpson rule for ``int_0^{MH} g(s) exp(-w s) ds``.

    ``G`` has shape ``(M+1, ncol)`` with ``M`` even, samples on a uniform grid of
    spacing ``H``; each column is one integrand ``g``.  On every double panel
    ``g`` is replaced by its interpolating quadratic and the product with the
    exponential is integrated exactly, so the rule stays accurate for large
    ``|w| H``.  It reduces to Simpson's rule as ``w -> 0``.

    Returns an array of shape ``(len(w), ncol)``.
    """
    G = np.asarray(G, dtype=float)
    w = np.asarray(w, dtype=complex).ravel()
    M = G.shape[0] - 1
    ncol = G.shape[1]
    mu0, mu1, mu2 = filon_moments(w * H)
    wm = 0.5 * (mu2 - mu1)
    w0 = mu0 - mu2
    wp = 0.5 * (mu2 + mu1)
    E = np.exp(-2.0 * w * H)
    coeffs = np.concatenate([G[0:M:2], G[1:M:2], G[2:M + 1:2]], axis=1)
    P = np.polynomial.polynomial.polyval(E, coeffs, tensor=True)  # (3 ncol, nw)
    Pe, Po, Pe2 = P[:ncol], P[ncol:2 * ncol], P[2 * ncol:]
    pref = H * np.exp(-w * H)
    out = pref * (wm * Pe + w0 * Po + wp * Pe2)
    return np.ascontiguousarray(out.T)
