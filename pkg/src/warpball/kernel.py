"""Transformation-operator kernel K(x, t) on the triangle 0 <= x <= t, x + t <= 2a.

Work in characteristic coordinates ``u = (t+x)/2``, ``v = (t-x)/2`` where the
triangle becomes ``0 <= v <= u <= a`` and the fixed-point equation reads

    K(u, v) = 1/2 int_u^a Q_f + int_u^a d alpha int_0^v w(alpha, beta) K(alpha, beta) d beta,

    w(alpha, beta) = Q_f(alpha - beta) - lam e^{-2(alpha - beta)} + lam e^{-2(alpha + beta)}.

The outer integral formally runs to infinity; it is cut at ``a`` because the
first term carries ``Q_f`` (support ``[0, a]``) and every iterate vanishes at
``u >= a``, so the truncation is exact.

Nodes are ``u_i = i a/N``, ``v_j = j a/N`` with ``j <= i``; fields are stored as
``(N+1, N+1)`` arrays whose strict upper triangle is zero.  The trace ``x = 0``
is the diagonal ``i = j`` with ``t = 2 u_i``.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import DivergenceError, ResolutionError, ValidationError
from .model import PotentialTable

__all__ = [
    "TriGrid",
    "KernelSolution",
    "picard_term",
    "solve_kernel",
    "jump_estimate",
    "jump_candidate",
    "x_jump_check",
    "contraction_constant",
]


@dataclass(frozen=True)
class TriGrid:
    """Uniform lattice on the triangle; ``h = 2a/N`` is the spacing along ``t`` at fixed ``x``."""

    N: int
    a: float

    @property
    def h(self) -> float:
        return 2.0 * self.a / self.N

    @property
    def hc(self) -> float:
        """Step in the characteristic coordinates."""
        return self.a / self.N

    @property
    def u(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.hc

    def xt(self):
        """Arrays ``(x, t)`` at every stored node (garbage above the diagonal)."""
        u = self.u
        return u[:, None] - u[None, :], u[:, None] + u[None, :]

    @property
    def mask(self) -> np.ndarray:
        return np.tri(self.N + 1, dtype=bool)


def _weight(grid: TriGrid, potential: PotentialTable, lam: float) -> np.ndarray:
    N, hc = grid.N, grid.hc
    qn = potential.q(np.arange(N + 1) * hc)
    i, j = np.indices((N + 1, N + 1))
    d = np.clip(i - j, 0, N)
    W = qn[d] - lam * np.exp(-2.0 * d * hc) + lam * np.exp(-2.0 * (i + j) * hc)
    return np.tril(W)


def _first_term(grid: TriGrid, potential: PotentialTable) -> np.ndarray:
    half_int = 0.5 * potential.integral_to_a(grid.u)
    return np.tril(np.repeat(half_int[:, None], grid.N + 1, axis=1))


def picard_term(prev: np.ndarray, potential: PotentialTable, lam: float) -> np.ndarray:
    """Apply the Volterra operator once to a node field on the triangle."""
    N = prev.shape[0] - 1
    grid = TriGrid(N, potential.a)
    return _accel.picard_apply(_weight(grid, potential, lam), np.tril(prev), grid.hc)


def contraction_constant(potential: PotentialTable, lam: float, N: int) -> float:
    """``M = sup_alpha int_0^alpha |w(alpha, beta)| d beta`` from the node values."""
    grid = TriGrid(N, potential.a)
    C = _accel.rowcum(np.abs(_weight(grid, potential, lam)), grid.hc)
    return float(np.max(np.diag(C)))


@dataclass(frozen=True, eq=False)
class KernelSolution:
    grid: TriGrid
    K: np.ndarray
    dK_u: np.ndarray
    dK_v: np.ndarray
    jump_s_p: float
    iterations: int
    residual: float
    lam: float
    p: int
    jump_value: float
    q_nodes: np.ndarray = field(repr=False)
    increments: tuple = field(repr=False, default=())
    M: float = 0.0
    backend: str = ""

    @property
    def a(self) -> float:
        return self.grid.a

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def dKx(self) -> np.ndarray:
        return 0.5 * (self.dK_u - self.dK_v)

    @property
    def dKt(self) -> np.ndarray:
        return 0.5 * (self.dK_u + self.dK_v)

    def trace(self):
        """``(s, K(0,s), d_x K(0,s))`` on ``s = 0, h, ..., 2a``."""
        s = 2.0 * self.grid.u
        return s, np.diag(self.K).copy(), 0.5 * (np.diag(self.dK_u) - np.diag(self.dK_v))

    def line(self, k: int):
        """``(t, K(x_k, t), d_x K(x_k, t))`` along ``x = x_k = k a/N`` for ``t`` in ``[x_k, 2a - x_k]``."""
        N = self.grid.N
        j = np.arange(N - k + 1)
        i = j + k
        t = (i + j) * self.grid.hc
        return t, self.K[i, j].copy(), 0.5 * (self.dK_u[i, j] - self.dK_v[i, j])

    # -- persistence
    _MAGIC = b"WBKN"
    _HEADER = "<4sIIddiiddd"

    def save(self, path) -> None:
        """Binary cache: header (N, a, lam, p, ...) then K, dK_u, dK_v row-major float64."""
        head = struct.pack(self._HEADER, self._MAGIC, 1, self.N, self.a, self.lam, self.p,
                           self.iterations, self.residual, self.jump_s_p, self.jump_value)
        with open(path, "wb") as fh:
            fh.write(head)
            for arr in (self.K, self.dK_u, self.dK_v, self.q_nodes):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "KernelSolution":
        size = struct.calcsize(cls._HEADER)
        with open(path, "rb") as fh:
            raw = fh.read()
        magic, ver, N, a, lam, p, it, res, jsp, jv = struct.unpack(cls._HEADER, raw[:size])
        if magic != cls._MAGIC or ver != 1:
            raise ValidationError("not a kernel cache file", field="path")
        n1 = N + 1
        data = np.frombuffer(raw[size:], dtype="<f8")
        K, du, dv = (data[k * n1 * n1:(k + 1) * n1 * n1].reshape(n1, n1).copy() for k in range(3))
        qn = data[3 * n1 * n1:3 * n1 * n1 + n1].copy()
        return cls(TriGrid(N, a), K, du, dv, jsp, it, res, lam, p, jv, qn, backend="cache")

    def to_csv(self, path, stride: int = 1) -> None:
        x, t = self.grid.xt()
        dKx, dKt = self.dKx, self.dKt
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "t", "K", "dKx", "dKt"])
            for i in range(0, self.N + 1, stride):
                for j in range(0, i + 1, stride):
                    w.writerow([f"{x[i, j]:.17g}", f"{t[i, j]:.17g}", f"{self.K[i, j]:.17g}",
                                f"{dKx[i, j]:.17g}", f"{dKt[i, j]:.17g}"])


def jump_candidate(jump_value: float, p: int) -> float:
    """Analytic ``d_s^p K(0, 2a^-) = -2^{-(p+1)} Q_f^{(p-1)}(a^-)``."""
    return -(2.0 ** -(p + 1)) * jump_value


def solve_kernel(potential: PotentialTable, lam: float | None = None, N: int = 512,
                 tol: float = 1e-10, max_terms: int = 400) -> KernelSolution:
    """Sum the Picard series until the sup-norm increment drops below ``tol``.

    Raises
    ------
    DivergenceError
        If increments stop halving after ``ceil(e M a)`` terms; the factorial
        bound guarantees they must, so this means the quadrature failed.
    """
    if lam is None:
        lam = potential.lam
    if N < 128 or N % 2:
        raise ValidationError("N must be even and at least 128", field="N")
    if tol <= 0:
        raise ValidationError("tol must be positive", field="tol")
    grid = TriGrid(N, potential.a)
    W = _weight(grid, potential, lam)
    M = float(np.max(np.diag(_accel.rowcum(np.abs(W), grid.hc))))
    n_check = math.ceil(math.e * M * potential.a)
    term = _first_term(grid, potential)
    K = term.copy()
    incs = [float(np.max(np.abs(term)))]
    n = 1
    while incs[-1] >= tol:
        if n >= max_terms:
            raise DivergenceError("Picard series did not converge", terms=n, last=incs[-1])
        term = _accel.picard_apply(W, term, grid.hc)
        K += term
        incs.append(float(np.max(np.abs(term))))
        n += 1
        if n > n_check + 1 and incs[-1] > 0.5 * incs[-2] and incs[-1] > tol:
            raise DivergenceError("Picard increments stopped contracting",
                                  term=n, increment=incs[-1], previous=incs[-2])
    F = W * K
    qn = potential.q(grid.u)
    dK_u = np.tril(-0.5 * qn[:, None] - _accel.rowcum(F, grid.hc))
    dK_v = _accel.colcum_rev(F, grid.hc)
    p = potential.jump_order
    return KernelSolution(grid=grid, K=K, dK_u=dK_u, dK_v=dK_v,
                          jump_s_p=jump_candidate(potential.jump_value, p), iterations=n,
                          residual=incs[-1] if n > 1 else 0.0, lam=float(lam), p=p,
                          jump_value=potential.jump_value, q_nodes=qn, increments=tuple(incs),
                          M=M, backend=_accel.BACKEND)


def _richardson(vals) -> float:
    d1, d2, d4 = vals
    return (8.0 * d1 - 6.0 * d2 + d4) / 3.0


def _backward_derivative(values_at_offsets, p: int, step: float) -> float:
    return sum((-1) ** j * math.comb(p, j) * values_at_offsets[j] for j in range(p + 1)) / step ** p


def jump_estimate(sol: KernelSolution, p: int | None = None, check: bool = True) -> float:
    """One-sided ``p``-th difference of ``K(0, t)`` at ``t = 2a^-``, Richardson-extrapolated.

    The analytic candidate is authoritative; this estimate validates the grid.

    Raises
    ------
    ResolutionError
        If the numeric and analytic values differ by more than 10%.
    """
    p = sol.p if p is None else p
    _, g, _ = sol.trace()
    N, h = sol.N, sol.grid.h
    est = []
    for ell in (1, 2, 4):
        vals = [g[N - j * ell] for j in range(p + 1)]
        est.append(_backward_derivative(vals, p, ell * h))
    num = _richardson(est)
    ana = jump_candidate(sol.jump_value, p) if p == sol.p else None
    if check and ana is not None and ana != 0.0 and abs(num - ana) > 0.1 * abs(ana):
        raise ResolutionError("numeric jump disagrees with the analytic value; increase N",
                              numeric=num, analytic=ana)
    return float(num)


def x_jump_check(sol: KernelSolution, x0: float, order: int, q_left_derivative: float):
    """One-sided ``x``-derivative of ``K`` at ``(x0^-, 2a - x0)`` against its analytic value.

    Returns ``(numeric, analytic)`` with analytic ``-2^{-(order+1)} Q_f^{(order-1)}(a^-)``,
    where ``q_left_derivative`` is that one-sided derivative of ``Q_f``.
    """
    hc, N = sol.grid.hc, sol.N
    j0 = int(round((sol.a - x0) / hc))
    if abs(j0 * hc - (sol.a - x0)) > 1e-9 or j0 <= 0:
        raise ValidationError("x0 must be a positive grid abscissa below a", field="x0")
    est = []
    for ell in (1, 2, 4):
        if j0 + order * ell > N - order * ell:
            raise ValidationError("x0 too close to 0 for this difference stencil", field="x0")
        # x decreases by 2 ell hc per step at fixed t: u -> u - ell, v -> v + ell
        vals = [sol.K[N - j * ell, j0 + j * ell] for j in range(order + 1)]
        est.append(_backward_derivative(vals, order, 2.0 * ell * hc))
    return _richardson(est), jump_candidate(q_left_derivative, order)
