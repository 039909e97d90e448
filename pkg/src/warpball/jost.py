"""Modified Jost function, its x-derivative at 0, and the Weyl-Titchmarsh value.

With ``psi_0(x, z) = J_z(sqrt(lam) e^{-x})``,

    psi(0, z)  = J_z(sqrt(lam)) + int_0^{2a} K(0,s) J_z(sqrt(lam) e^{-s}) ds,
    psi'(0, z) = -sqrt(lam) J_z'(sqrt(lam)) - K(0,0) J_z(sqrt(lam))
                 + int_0^{2a} d_x K(0,s) J_z(sqrt(lam) e^{-s}) ds.

Expanding the Bessel function in its ascending series,

    J_z(sqrt(lam) e^{-s}) = (sqrt(lam)/2)^z sum_m c_m(z) exp(-(z + 2m) s),

turns both integrals into Laplace transforms of the kernel trace at the
frequencies ``z + 2m``.  Those are computed with the exponentially fitted
Simpson rule of ``_accel.filon_laplace``, which stays exact for the
exponential factor however large ``|z| h`` becomes.  The z-derivative follows
from the same sums and the extra trace ``s K(0, s)``.

In the ``lam = 0`` debug mode the unperturbed solution is ``exp(-x z)`` and
only the ``m = 0`` term survives.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DomainError
from .kernel import KernelSolution
from .special import bessel_j, drgamma, rgamma, sinpi

__all__ = [
    "JostFunction",
    "JostEvaluation",
    "POLE",
    "jost_function",
    "psi_unperturbed",
    "psi",
    "psi_prime",
    "psi_dz",
    "weyl_m",
    "evaluate",
    "identity_checks",
]

TERM_RTOL = 1e-18
POLE_RTOL = 1e-12


class _PoleFlag:
    def __repr__(self):
        return "POLE"

    def __bool__(self):
        return False


POLE = _PoleFlag()


@dataclass(frozen=True)
class JostEvaluation:
    z: complex
    psi0: complex
    psi0_prime: complex
    m: object  # complex, or POLE
    scale: float

    @property
    def at_pole(self) -> bool:
        return self.m is POLE


def _as_array(z):
    arr = np.asarray(z, dtype=complex)
    return arr.ravel(), arr.shape, arr.ndim == 0


class JostFunction:
    """Evaluator bound to one kernel (or to the unperturbed operator when ``kernel`` is None)."""

    def __init__(self, kernel: KernelSolution | None, lam: float | None = None):
        if lam is None:
            if kernel is None:
                raise DomainError("lambda is required without a kernel")
            lam = kernel.lam
        if lam < 0:
            raise DomainError("lambda must be nonnegative")
        if kernel is not None and abs(kernel.lam - lam) > 1e-14 * max(1.0, lam):
            raise DomainError("kernel was solved for a different lambda")
        self.kernel = kernel
        self.lam = float(lam)
        self.debug = self.lam == 0.0
        if kernel is not None:
            s, g0, g1 = kernel.trace()
            self.G = np.ascontiguousarray(np.stack([g0, g1, s * g0], axis=1))
            self.H = kernel.grid.h
            self.K00 = float(g0[0])
            self.a = kernel.a
        else:
            self.G = None
            self.H = None
            self.K00 = 0.0
            self.a = 0.0
        self._x4 = self.lam / 4.0
        self._logpref = np.log(np.sqrt(self.lam) / 2.0) if not self.debug else 0.0

    # -- series coefficients
    def _n_terms(self, z: np.ndarray, normalized: bool) -> int:
        if self.debug or z.size == 0:
            return 1
        mcap = int(min(200, np.max(np.abs(z.real)) + 40))
        m = np.arange(mcap)
        logfac = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, mcap)))])
        base = m * np.log(self._x4) - logfac
        if normalized:
            poch = np.cumprod(np.abs(z[:, None] + m[None, 1:]), axis=1)
            mags = np.exp(base[None, :]) / np.concatenate([np.ones((z.size, 1)), poch], axis=1)
        else:
            mags = np.exp(base)[None, :] * np.abs(rgamma(z[:, None] + m[None, :] + 1.0))
        keep = mags > TERM_RTOL * np.max(mags, axis=1, keepdims=True)
        last = mcap - np.argmax(keep[:, ::-1], axis=1)
        return int(max(2, np.max(last)))

    def _coefficients(self, z: np.ndarray, M: int, normalized: bool, deriv: bool):
        """``coef[:, m]`` multiplying ``exp(-(z+2m)s)`` and, if asked, its z-derivative."""
        if self.debug:
            coef = np.ones((z.size, 1), dtype=complex)
            return coef, (np.zeros_like(coef) if deriv else None)
        m = np.arange(M)
        sgnfac = np.empty(M)
        sgnfac[0] = 1.0
        for k in range(1, M):
            sgnfac[k] = -sgnfac[k - 1] * self._x4 / k
        if normalized:
            # (-1)^m (lam/4)^m / (m! (z+1)_m)
            ratio = np.ones((z.size, M), dtype=complex)
            if M > 1:
                ratio[:, 1:] = 1.0 / np.cumprod(z[:, None] + m[None, 1:], axis=1)
            coef = sgnfac[None, :] * ratio
            if not deriv:
                return coef, None
            dlog = np.zeros((z.size, M), dtype=complex)
            if M > 1:
                dlog[:, 1:] = -np.cumsum(1.0 / (z[:, None] + m[None, 1:]), axis=1)
            return coef, coef * dlog
        arg = z[:, None] + m[None, :] + 1.0
        pw = np.exp(z * self._logpref)[:, None]
        coef = pw * sgnfac[None, :] * rgamma(arg)
        if not deriv:
            return coef, None
        dcoef = pw * sgnfac[None, :] * drgamma(arg) + self._logpref * coef
        return coef, dcoef

    def _laplace(self, z: np.ndarray, M: int) -> np.ndarray:
        if self.G is None:
            return np.zeros((z.size, M, 3), dtype=complex)
        w = z[:, None] + 2.0 * np.arange(M)[None, :]
        return _accel.filon_laplace(self.G, self.H, w.ravel()).reshape(z.size, M, 3)

    def _evaluate(self, z, normalized: bool = False, deriv: bool = True):
        zf, shape, scalar = _as_array(z)
        M = self._n_terms(zf, normalized)
        coef, dcoef = self._coefficients(zf, M, normalized, deriv)
        M = coef.shape[1]
        L = self._laplace(zf, M)
        w = zf[:, None] + 2.0 * np.arange(M)[None, :]
        onep = 1.0 + L[..., 0]
        val = np.sum(coef * onep, axis=1)
        dx = np.sum(coef * (-w - self.K00 + L[..., 1]), axis=1)
        scale = np.sum(np.abs(coef) * (1.0 + np.abs(L[..., 0])), axis=1)
        dz = np.sum(dcoef * onep - coef * L[..., 2], axis=1) if deriv else None
        out = [val, dx, dz, scale]
        if scalar:
            return [None if o is None else (complex(o[0]) if o.dtype.kind == "c" else float(o[0]))
                    for o in out]
        return [None if o is None else o.reshape(shape) for o in out]

    # -- public evaluators
    def psi(self, z):
        """``psi(0, z)``."""
        return self._evaluate(z, deriv=False)[0]

    def psi_prime(self, z):
        """``d/dx psi(x, z)`` at ``x = 0``."""
        return self._evaluate(z, deriv=False)[1]

    def psi_dz(self, z):
        """``d/dz psi(0, z)``."""
        return self._evaluate(z, deriv=True)[2]

    def value_and_derivative(self, z):
        """``(psi(0,z), d/dz psi(0,z))``; the hook used by the contour root finder."""
        v, _, dz, _ = self._evaluate(z, deriv=True)
        return v, dz

    def all(self, z):
        """``(psi, psi', d_z psi, scale)`` where ``scale`` sums the moduli of the series terms."""
        return self._evaluate(z, deriv=True)

    def psi_tilde(self, z, deriv: bool = False):
        """Classical normalisation ``Gamma(z+1) 2^z lam^{-z/2} psi``.

        Returns ``(psi_tilde, psi_tilde', d_z psi_tilde)`` (the last is None unless
        ``deriv``).  Poles at the negative integers are inherent.
        """
        v, dx, dz, _ = self._evaluate(z, normalized=True, deriv=deriv)
        return v, dx, dz

    def m(self, z):
        """Weyl-Titchmarsh value ``psi'(0,z)/psi(0,z)``; NaN where flagged as a pole."""
        v, dx, _, scale = self._evaluate(z, deriv=False)
        v = np.asarray(v)
        at_pole = np.abs(v) <= POLE_RTOL * np.asarray(scale)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(at_pole, np.nan + 0j, np.asarray(dx) / np.where(at_pole, 1.0, v))
        return complex(out) if out.ndim == 0 else out

    # -- solution at interior points
    def psi_at(self, k: int, z):
        """``(psi(x_k, z), psi'(x_k, z))`` at the kernel abscissa ``x_k = k a/N`` (``N - k`` even)."""
        if self.kernel is None or self.debug:
            raise DomainError("interior evaluation needs a kernel with lam > 0")
        zf, shape, scalar = _as_array(z)
        sol = self.kernel
        if (sol.N - k) % 2:
            raise DomainError("N - k must be even")
        x = k * sol.grid.hc
        t, Kl, dKl = sol.line(k)
        G = np.stack([Kl, dKl], axis=1)
        M = self._n_terms(zf, False)
        coef, _ = self._coefficients(zf, M, False, False)
        w = zf[:, None] + 2.0 * np.arange(M)[None, :]
        if len(t) > 1:
            L = _accel.filon_laplace(G, sol.grid.h, w.ravel()).reshape(zf.size, M, 2)
        else:
            L = np.zeros((zf.size, M, 2), dtype=complex)
        ex = np.exp(-w * x)
        val = np.sum(coef * ex * (1.0 + L[..., 0]), axis=1)
        der = np.sum(coef * ex * (-w - Kl[0] + L[..., 1]), axis=1)
        if scalar:
            return complex(val[0]), complex(der[0])
        return val.reshape(shape), der.reshape(shape)


_CACHE: "weakref.WeakKeyDictionary[KernelSolution, dict]" = weakref.WeakKeyDictionary()
_FREE: dict = {}


def jost_function(kernel: KernelSolution | None, lam: float | None = None) -> JostFunction:
    """Cached evaluator for ``(kernel, lam)``."""
    if kernel is None:
        key = float(lam)
        if key not in _FREE:
            _FREE[key] = JostFunction(None, key)
        return _FREE[key]
    lam = kernel.lam if lam is None else float(lam)
    per = _CACHE.setdefault(kernel, {})
    if lam not in per:
        per[lam] = JostFunction(kernel, lam)
    return per[lam]


def psi_unperturbed(x, z, lam: float):
    """``J_z(sqrt(lam) e^{-x})``."""
    if np.any(np.asarray(x) < 0):
        raise DomainError("x must be nonnegative")
    return bessel_j(z, np.sqrt(lam) * np.exp(-np.asarray(x, dtype=float)))


def psi(z, kernel: KernelSolution | None, lam: float | None = None):
    return jost_function(kernel, lam).psi(z)


def psi_prime(z, kernel: KernelSolution | None, lam: float | None = None):
    return jost_function(kernel, lam).psi_prime(z)


def psi_dz(z, kernel: KernelSolution | None, lam: float | None = None):
    return jost_function(kernel, lam).psi_dz(z)


def evaluate(z: complex, kernel: KernelSolution | None, lam: float | None = None) -> JostEvaluation:
    v, dx, _, scale = jost_function(kernel, lam).all(complex(z))
    m = POLE if abs(v) <= POLE_RTOL * scale else dx / v
    return JostEvaluation(complex(z), v, dx, m, scale)


def weyl_m(z: complex, kernel: KernelSolution | None, lam: float | None = None):
    """``psi'(0,z)/psi(0,z)``, or ``POLE`` when ``|psi(0,z)|`` is below ``1e-12`` of the series scale."""
    return evaluate(z, kernel, lam).m


def wronskian_target(z, lam: float):
    """``W(psi(0,z), psi(0,-z))``: ``2 sin(pi z)/pi``, or ``2z`` in the ``lam = 0`` mode."""
    z = np.asarray(z, dtype=complex)
    return 2.0 * z if lam == 0.0 else 2.0 * sinpi(z) / np.pi


def identity_checks(z, kernel: KernelSolution | None, lam: float | None = None):
    """Wronskian and reflection-identity residuals at ``z``.

    Both are scaled by the magnitude of the products involved (floored at 1),
    so they are absolute residuals near unit size and relative ones where
    ``sin(pi z)`` is exponentially large off the real axis.
    """
    J = jost_function(kernel, lam)
    zf, shape, scalar = _as_array(z)
    both = np.concatenate([zf, -zf])
    v, dx, _, _ = J.all(both)
    n = zf.size
    pz, pmz, dz, dmz = v[:n], v[n:], dx[:n], dx[n:]
    target = wronskian_target(zf, J.lam)
    t1, t2 = pz * dmz, dz * pmz
    wr = np.abs(t1 - t2 - target) / np.maximum(1.0, np.abs(t1) + np.abs(t2))
    mz, mmz = dz / pz, dmz / pmz
    corr = target / (pz * pmz)
    rr = np.abs(mz - mmz + corr) / np.maximum(1.0, np.abs(mz) + np.abs(mmz) + np.abs(corr))
    if scalar:
        return float(wr[0]), float(rr[0])
    return wr.reshape(shape), rr.reshape(shape)
