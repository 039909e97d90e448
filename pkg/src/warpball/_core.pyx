# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; see ``_pyimpl`` for the reference code."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, cos, sinh, cosh, sqrt

cnp.import_array()

NAME = "cython"

ctypedef double complex cplx


cdef inline cplx cexp_(cplx z) nogil:
    cdef double e = exp(z.real)
    return e * cos(z.imag) + 1j * (e * sin(z.imag))


cdef inline cplx csinh_(cplx z) nogil:
    return sinh(z.real) * cos(z.imag) + 1j * (cosh(z.real) * sin(z.imag))


cdef inline cplx ccosh_(cplx z) nogil:
    return cosh(z.real) * cos(z.imag) + 1j * (sinh(z.real) * sin(z.imag))


cdef inline double cabs_(cplx z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef void _rowcum_row(const double[:, :] F, double[:, :] C, Py_ssize_t i, double h) noexcept nogil:
    cdef Py_ssize_t j
    cdef double c = h / 24.0
    cdef double acc = 0.0
    C[i, 0] = 0.0
    if i == 0:
        return
    if i == 1:
        C[i, 1] = 0.5 * h * (F[i, 0] + F[i, 1])
        return
    if i == 2:
        acc = h / 12.0 * (5.0 * F[i, 0] + 8.0 * F[i, 1] - F[i, 2])
        C[i, 1] = acc
        C[i, 2] = acc + h / 12.0 * (-F[i, 0] + 8.0 * F[i, 1] + 5.0 * F[i, 2])
        return
    acc = c * (9.0 * F[i, 0] + 19.0 * F[i, 1] - 5.0 * F[i, 2] + F[i, 3])
    C[i, 1] = acc
    for j in range(1, i - 1):
        acc += c * (-F[i, j - 1] + 13.0 * F[i, j] + 13.0 * F[i, j + 1] - F[i, j + 2])
        C[i, j + 1] = acc
    acc += c * (F[i, i - 3] - 5.0 * F[i, i - 2] + 19.0 * F[i, i - 1] + 9.0 * F[i, i])
    C[i, i] = acc


def rowcum(F, double h):
    cdef double[:, :] Fv = np.ascontiguousarray(np.tril(F), dtype=np.float64)
    cdef Py_ssize_t n1 = Fv.shape[0]
    out = np.zeros((n1, n1), dtype=np.float64)
    cdef double[:, :] C = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n1):
            _rowcum_row(Fv, C, i, h)
    return out


def colcum_rev(F, double h):
    B = np.ascontiguousarray(F[::-1, ::-1].T)
    return np.ascontiguousarray(rowcum(B, h).T[::-1, ::-1])


def picard_apply(W, L, double h):
    """Inner row integrals then outer reversed column integrals, in place of two passes of numpy."""
    cdef double[:, :] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef double[:, :] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef Py_ssize_t n1 = Wv.shape[0]
    cdef Py_ssize_t N = n1 - 1
    prod = np.zeros((n1, n1), dtype=np.float64)
    cdef double[:, :] P = prod
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n1):
            for j in range(i + 1):
                P[i, j] = Wv[i, j] * Lv[i, j]
    inner = np.zeros((n1, n1), dtype=np.float64)
    cdef double[:, :] C = inner
    with nogil:
        for i in range(n1):
            _rowcum_row(P, C, i, h)
    # reversed column integrals via the transposed flipped array
    Bt = np.ascontiguousarray(inner[::-1, ::-1].T)
    outer = np.zeros((n1, n1), dtype=np.float64)
    cdef double[:, :] Bv = Bt
    cdef double[:, :] O = outer
    with nogil:
        for i in range(n1):
            _rowcum_row(Bv, O, i, h)
    return np.ascontiguousarray(outer.T[::-1, ::-1])


cdef double _FACT_INV[32]
cdef int _k
_FACT_INV[0] = 1.0
for _k in range(1, 32):
    _FACT_INV[_k] = _FACT_INV[_k - 1] / _k


cdef inline void _moments(cplx theta, cplx* mu0, cplx* mu1, cplx* mu2) noexcept nogil:
    cdef cplx t2, s0, s1, s2, sh, ch
    cdef double f
    cdef int k
    if cabs_(theta) < 1.0:
        t2 = theta * theta
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for k in range(15, -1, -1):
            f = _FACT_INV[2 * k + 1]
            s0 = s0 * t2 + f
            if k >= 1:
                s1 = s1 * t2 + 2 * k * f
                s2 = s2 * t2 + 2 * k * (2 * k - 1) * f
        mu0[0] = 2.0 * s0
        mu1[0] = -2.0 * s1 * theta
        mu2[0] = 2.0 * s2
    else:
        sh = csinh_(theta)
        ch = ccosh_(theta)
        mu0[0] = 2.0 * sh / theta
        mu1[0] = -2.0 * (theta * ch - sh) / (theta * theta)
        mu2[0] = 2.0 * ((theta * theta + 2.0) * sh - 2.0 * theta * ch) / (theta * theta * theta)


def filon_laplace(G, double H, w):
    cdef double[:, :] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef cplx[:] wv = np.ascontiguousarray(np.ravel(w), dtype=np.complex128)
    cdef Py_ssize_t M = Gv.shape[0] - 1
    cdef Py_ssize_t ncol = Gv.shape[1]
    cdef Py_ssize_t nw = wv.shape[0]
    cdef Py_ssize_t half = M // 2
    if ncol > 16:
        raise ValueError("at most 16 integrand columns")
    out = np.zeros((nw, ncol), dtype=np.complex128)
    cdef cplx[:, :] O = out
    cdef cplx ww, mu0, mu1, mu2, E, pref, wm, w0, wp
    cdef cplx pe[16]
    cdef cplx po[16]
    cdef cplx pe2[16]
    cdef Py_ssize_t q, j, c
    with nogil:
        for q in range(nw):
            ww = wv[q]
            _moments(ww * H, &mu0, &mu1, &mu2)
            wm = 0.5 * (mu2 - mu1)
            w0 = mu0 - mu2
            wp = 0.5 * (mu2 + mu1)
            E = cexp_(-2.0 * ww * H)
            for c in range(ncol):
                pe[c] = 0.0
                po[c] = 0.0
                pe2[c] = 0.0
            for j in range(half - 1, -1, -1):
                for c in range(ncol):
                    pe[c] = pe[c] * E + Gv[2 * j, c]
                    po[c] = po[c] * E + Gv[2 * j + 1, c]
                    pe2[c] = pe2[c] * E + Gv[2 * j + 2, c]
            pref = H * cexp_(-ww * H)
            for c in range(ncol):
                O[q, c] = pref * (wm * pe[c] + w0 * po[c] + wp * pe2[c])
    return out
