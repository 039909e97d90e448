"""Gelfand-Levitan-Marchenko data and the inverse reconstruction of ``Q_f``.

Forward: with the classical Jost function ``f(k) = psi~(0, -ik)``,

    S(k)   = psi~(0, ik) / psi~(0, -ik),
    F_S(x) = (1/2 pi) int_R (1 - S(k)) e^{ikx} dk,
    F(x)   = sum_k e^{-alpha_k x} / m_k + F_S(x),

where ``alpha_k > 0`` are the zeros of ``psi(0, .)`` on the positive axis and
``m_k = psi~'(0, alpha_k) d_z psi~(0, alpha_k) / (2 alpha_k)`` equals the
squared norm of ``psi~(., alpha_k)``.

Inverse: for each ``x`` solve

    K(x, y) + F(x + y) + int_x^X K(x, t) F(t + y) dt = 0,    x <= y <= X,

by the trapezoid Nystrom method and recover ``q = -2 d/dx K(x, x)``.  The
full potential is ``q = Q_f - lam e^{-2x}``, so ``Q_f = q + lam e^{-2x}``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import sici

from . import _accel
from .errors import DataError, ResolutionError, ValidationError
from .jost import JostFunction, jost_function
from .kernel import solve_kernel
from .model import PotentialTable
from .poles import locate_poles

__all__ = [
    "ScatteringData",
    "s_function",
    "find_bound_states",
    "norming_constant",
    "assemble_F",
    "scattering_data",
    "solve_glm",
    "recover_q",
    "RoundtripResult",
    "roundtrip",
]

COND_MAX = 1e10


@dataclass(frozen=True, eq=False)
class ScatteringData:
    k_grid: np.ndarray
    S_values: np.ndarray
    bound_states: tuple  # (alpha_k, m_k)
    x_grid: np.ndarray | None = None
    F_samples: np.ndarray | None = None
    K_max: float = 0.0
    tail: dict = field(default_factory=dict)
    flags: tuple = ()

    def __post_init__(self):
        for alpha, m in self.bound_states:
            if alpha <= 0 or m <= 0:
                raise DataError("bound states need alpha > 0 and m > 0", alpha=alpha, m=m)


def _jost(kernel, lam) -> JostFunction:
    return kernel if isinstance(kernel, JostFunction) else jost_function(kernel, lam)


def s_function(k_grid, kernel, lam: float | None = None, return_flags: bool = False):
    """``S(k) = psi~(0, ik)/psi~(0, -ik)`` on real ``k``.

    At ``k = 0`` with ``psi~(0, 0)`` at rounding level the limit ``S(0) = -1``
    is used and flagged.

    Raises
    ------
    DataError
        If the denominator vanishes at some ``k != 0`` (a real resonance).
    """
    J = _jost(kernel, lam)
    k = np.asarray(k_grid, dtype=float)
    z = np.concatenate([1j * k.ravel(), -1j * k.ravel()])
    v, _, _ = J.psi_tilde(z)
    raw, _, _, scale = J.all(z)
    n = k.size
    num, den = v[:n], v[n:]
    # zero test on the entire normalisation, against the size of its series terms
    small = np.abs(raw[n:]) <= 1e-12 * scale[n:]
    flags = []
    if np.any(small & (k.ravel() != 0)):
        bad = k.ravel()[small & (k.ravel() != 0)]
        raise DataError("Jost function vanishes on the real k axis", k=float(bad[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        S = num / den
    if np.any(small):
        S = np.where(small, -1.0 + 0j, S)
        flags.append("S(0) replaced by its limit -1: psi~(0, 0) vanishes")
    S = S.reshape(k.shape)
    return (S, tuple(flags)) if return_flags else S


def find_bound_states(kernel, lam: float | None = None, alpha_max: float | None = None,
                      q_min: float | None = None) -> list:
    """Regge poles on the positive real axis, ascending.

    ``alpha^2`` cannot exceed ``max(-q)`` and ``q >= -lam + min(Q_f, 0)``,
    which bounds the search interval.
    """
    J = _jost(kernel, lam)
    if alpha_max is None:
        depth = J.lam - min(0.0, q_min if q_min is not None else 0.0)
        alpha_max = math.sqrt(max(depth, 0.0)) + 1.0
    found = locate_poles((1e-3, alpha_max, -0.5, 0.5), jost=J, residues=False)
    return sorted(p.location.real for p in found if abs(p.location.imag) < 1e-8)


def norming_constant(kernel, alpha: float, lam: float | None = None) -> float:
    """``m_k = psi~'(0, alpha) d_z psi~(0, alpha) / (2 alpha)``, the squared norm of ``psi~(., alpha)``."""
    J = _jost(kernel, lam)
    _, dx, dz = J.psi_tilde(complex(alpha), deriv=True)
    m = complex(dx * dz / (2.0 * alpha))
    if abs(m.imag) > 1e-8 * abs(m) or m.real <= 0:
        raise DataError("norming constant is not positive", alpha=alpha, value=str(m))
    return m.real


def _tail_fit(k: np.ndarray, g: np.ndarray):
    """Least squares ``g(k) ~ i b/k + c/k^2`` (``b`` real, ``c`` complex) on the given samples."""
    A = np.zeros((2 * k.size, 3))
    A[:k.size, 1] = 1 / k ** 2          # Re: Re c / k^2
    A[k.size:, 0] = 1 / k               # Im: b / k
    A[k.size:, 2] = 1 / k ** 2          # Im: Im c / k^2
    rhs = np.concatenate([g.real, g.imag])
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    b, c = coef[0], complex(coef[1], coef[2])
    resid = g - (1j * b / k + c / k ** 2)
    return b, c, float(np.sqrt(np.mean(np.abs(resid) ** 2)))


def _tail_integral(b: float, c: complex, K: float, x: np.ndarray, sign: int) -> np.ndarray:
    """``int_K^inf (i b/k + c/k^2) e^{sign ikx} dk``; the log term is dropped at ``x = 0``."""
    si, ci = sici(K * x)
    ci = np.where(x > 0, ci, 0.0)
    E = -ci + 1j * (np.pi / 2 - si)  # int_{Kx}^inf e^{iu}/u du
    if sign < 0:
        E = np.conj(E)
    ex = np.exp(sign * 1j * K * x)
    return 1j * b * E + c * (ex / K + sign * 1j * x * E)


def assemble_F(k_grid, S_plus, S_minus, bound_states, x_grid, *, tail: bool = True,
               tail_tol: float = 1e-3):
    """``F`` on ``x_grid`` from ``S(k)`` and ``S(-k)`` sampled on a uniform ``k_grid`` from 0.

    Each half-line integral runs through the Filon rule with ``w = -+ ix`` and
    gets an algebraic tail beyond ``K_max`` fitted on ``[K_max/2, K_max]``.
    Returns ``(F, info)`` where ``info`` reports the largest imaginary part
    (reality check) and the tail estimates.

    Raises
    ------
    ResolutionError
        If the unmodelled part of the tail may exceed ``tail_tol``; increase ``K_max``.
    """
    k = np.asarray(k_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    if k[0] != 0.0 or (k.size - 1) % 2:
        raise ValidationError("k_grid must start at 0 with an even number of panels", field="k_grid")
    dk = k[1] - k[0]
    if not np.allclose(np.diff(k), dk, rtol=1e-10, atol=0):
        raise ValidationError("k_grid must be uniform", field="k_grid")
    K = k[-1]
    total = np.zeros(x.shape, dtype=complex)
    info = {"K_max": float(K), "tail_max": 0.0, "tail_error": 0.0}
    for sign, S in ((1, np.asarray(S_plus)), (-1, np.asarray(S_minus))):
        g = 1.0 - S
        G = np.stack([g.real, g.imag], axis=1)
        L = _accel.filon_laplace(G, dk, -sign * 1j * x)
        part = L[:, 0] + 1j * L[:, 1]
        if tail:
            sel = k >= K / 2
            b, c, rho = _tail_fit(k[sel], g[sel])
            tl = _tail_integral(b, c, K, x, sign)
            part = part + tl
            info["tail_max"] = max(info["tail_max"], float(np.max(np.abs(tl))) / (2 * np.pi))
            # residual assumed to keep decaying like 1/k^2 beyond K
            info["tail_error"] = max(info["tail_error"], rho * K / (2 * np.pi))
        total += part
    FS = total / (2 * np.pi)
    info["max_imag"] = float(np.max(np.abs(FS.imag)))
    if tail and info["tail_error"] > tail_tol:
        raise ResolutionError("Fourier tail not resolved; increase K_max",
                              tail_error=info["tail_error"], hint_K_max=2 * K)
    F = FS.real.copy()
    for alpha, m in bound_states:
        F += np.exp(-alpha * x) / m
    return F, info


def scattering_data(kernel, lam: float | None = None, *, dk: float = 0.05,
                    K_max: float | None = None, delta: float = 0.01, x_max: float | None = None,
                    tail_tol: float = 1e-3, q_min: float | None = None) -> ScatteringData:
    """``S`` on ``[0, K_max]``, bound states, and ``F`` on ``[0, 2 x_max]`` with step ``delta``.

    Defaults: ``K_max = 200/a`` and ``x_max = 4a + 5/min(alpha_k or 1)``.
    """
    J = _jost(kernel, lam)
    if J.kernel is None:
        raise ValidationError("scattering data needs a kernel", field="kernel")
    a = J.kernel.a
    K_max = 200.0 / a if K_max is None else float(K_max)
    n_k = int(math.ceil(K_max / dk / 2)) * 2
    k = np.arange(n_k + 1) * dk
    S, flags = s_function(k, J, return_flags=True)
    S_minus = s_function(-k, J)
    bound = []
    if J.lam > 0:
        for alpha in find_bound_states(J, q_min=q_min):
            bound.append((alpha, norming_constant(J, alpha)))
    if x_max is None:
        x_max = 4 * a + 5.0 / min([al for al, _ in bound] + [1.0])
    n_x = int(math.ceil(2 * x_max / delta))
    xg = np.arange(n_x + 1) * delta
    F, info = assemble_F(k, S, S_minus, bound, xg, tail_tol=tail_tol)
    info["dk"] = dk
    info["delta"] = delta
    info["x_max"] = float(xg[-1] / 2)
    return ScatteringData(k, S, tuple(bound), xg, F, float(k[-1]), info, flags)


def _trapezoid_weights(n: int, delta: float) -> np.ndarray:
    w = np.full(n, delta)
    w[0] = w[-1] = 0.5 * delta
    return w


def solve_glm(F_samples, delta: float, x_index: int):
    """``K(x, y)`` for ``x = x_index delta`` and ``y = x, x + delta, ..., X``.

    ``F_samples`` holds ``F(j delta)`` for ``j = 0..2 n_X``; ``X = n_X delta``.
    Returns ``(y, K_row, condition)``.

    Raises
    ------
    ResolutionError
        If the 1-norm condition estimate exceeds ``1e10``.
    """
    F = np.asarray(F_samples, dtype=float)
    if (F.size - 1) % 2:
        raise ValidationError("F_samples must cover [0, 2X] on the delta grid", field="F_samples")
    nX = (F.size - 1) // 2
    l = int(x_index)
    if not 0 <= l < nX:
        raise ValidationError("x outside [0, X)", field="x")
    n = nX - l + 1
    idx = 2 * l + np.arange(n)[:, None] + np.arange(n)[None, :]
    A = F[idx] * _trapezoid_weights(n, delta)[None, :]
    A[np.diag_indices(n)] += 1.0
    rhs = -F[2 * l + np.arange(n)]
    anorm = np.max(np.sum(np.abs(A), axis=0))
    lu, piv = linalg.lu_factor(A, check_finite=False)
    rcond, _ = linalg.lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if cond > COND_MAX:
        raise ResolutionError("GLM system ill-conditioned", x=l * delta, condition=cond)
    K = linalg.lu_solve((lu, piv), rhs, check_finite=False)
    return (l + np.arange(n)) * delta, K, float(cond)


def recover_q(F_samples, delta: float, x_end: float, stride: int = 2, workers: int = 1):
    """``q = -2 d/dx K(x, x)`` at the midpoints of the nodes ``x = 0, stride delta, ...``.

    The diagonal is differenced between neighbouring nodes, so the recovered
    value at a midpoint never mixes samples across a breakpoint lying on a node.
    Returns ``(x_mid, q, x_nodes, K_diag, max_condition)``.
    """
    n_nodes = int(round(x_end / (stride * delta))) + 1
    ls = stride * np.arange(n_nodes)

    def one(l):
        _, K, cond = solve_glm(F_samples, delta, int(l))
        return K[0], cond

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(one, ls))
    else:
        res = [one(l) for l in ls]
    Kd = np.array([r[0] for r in res])
    conds = [r[1] for r in res]
    xn = ls * delta
    h = stride * delta
    q = -2.0 * np.diff(Kd) / h
    return 0.5 * (xn[1:] + xn[:-1]), q, xn, Kd, float(max(conds))


@dataclass(frozen=True, eq=False)
class RoundtripResult:
    x: np.ndarray
    qf_true: np.ndarray
    qf_recovered: np.ndarray
    l2_error: float
    linf_error: float
    K_max: float
    grids: dict
    data: ScatteringData = field(repr=False)

    def summary(self) -> dict:
        return {"l2_relative_error": self.l2_error, "linf_error": self.linf_error,
                "K_max": self.K_max, "grids": self.grids,
                "bound_states": [list(b) for b in self.data.bound_states],
                "tail": {k: v for k, v in self.data.tail.items()}, "flags": list(self.data.flags)}


def roundtrip(potential: PotentialTable, *, N: int = 512, dk: float = 0.05,
              K_max: float | None = None, delta: float = 0.01, stride: int = 2,
              window: float = 1.5, refine: int = 0, workers: int = 1,
              tail_tol: float = 1e-3) -> RoundtripResult:
    """Forward data from ``potential``, then GLM recovery of ``Q_f`` on ``[0, window a]``.

    Each ``refine`` level halves ``dk`` and ``delta``, doubles ``N`` and ``K_max``.
    The relative L2 error is taken on the recovery midpoints.
    """
    a, lam = potential.a, potential.lam
    K_max = 200.0 / a if K_max is None else K_max
    for _ in range(refine):
        N, dk, delta, K_max = 2 * N, dk / 2, delta / 2, 2 * K_max
    sol = solve_kernel(potential, N=N)
    J = jost_function(sol)
    qmin = float(np.min(potential.qf_values))
    data = scattering_data(J, dk=dk, K_max=K_max, delta=delta, tail_tol=tail_tol, q_min=qmin)
    xm, q, _, _, cond = recover_q(data.F_samples, delta, window * a, stride, workers)
    qf_rec = q + lam * np.exp(-2.0 * xm)
    qf_true = potential.q(xm)
    err = qf_rec - qf_true
    norm = math.sqrt(np.sum(qf_true ** 2))
    l2 = math.sqrt(np.sum(err ** 2)) / norm if norm > 0 else math.sqrt(np.sum(err ** 2) * stride * delta)
    grids = {"N": N, "dk": dk, "delta": delta, "dx": stride * delta, "x_max": data.tail["x_max"],
             "window": window * a, "max_condition": cond}
    return RoundtripResult(xm, qf_true, qf_rec, float(l2), float(np.max(np.abs(err))),
                           data.K_max, grids, data)
