"""Warping perturbation -> one-dimensional Schrodinger data.

A warped ball with conformal factor ``f = exp(-x) + V(x)`` reduces, mode by
mode, to the half-line operator

    H = -d^2/dx^2 - lam exp(-2x) + Q_f(x),

    Q_f = (f^k)'' / f^k - k^2 - lam (f - e^{-x})(f + e^{-x}),   k = n/2 - 1,

with ``Q_f`` supported in ``[0, a]``.  ``V`` is a piecewise polynomial so that
every derivative of ``f`` is available in closed form; no user input is ever
differentiated numerically.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigError, ModelError, ValidationError

__all__ = [
    "WarpSpec",
    "PotentialTable",
    "TransversalSpectrum",
    "build_potential",
    "constant_potential",
    "callable_potential",
    "shifted_momenta",
    "sphere_spectrum",
    "template_spec",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


# ---------------------------------------------------------------- Taylor series
# Truncated power series are plain coefficient arrays in the local variable y.

def _tmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    return np.convolve(a, b)[:n]


def _tdiv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    out = np.zeros(n)
    for i in range(n):
        out[i] = (a[i] - np.dot(out[:i], b[i:0:-1])) / b[0]
    return out


def _tder(a: np.ndarray) -> np.ndarray:
    n = len(a)
    out = np.zeros(n)
    out[:n - 1] = a[1:] * np.arange(1, n)
    return out


# ---------------------------------------------------------------- input spec

@dataclass(frozen=True)
class WarpSpec:
    """Geometric input: dimension, energy and a piecewise-polynomial ``V``.

    ``coefficients[i]`` holds ascending-power coefficients of ``V`` on
    ``[breakpoints[i], breakpoints[i+1]]`` in the local variable
    ``x - breakpoints[i]``.  ``breakpoints`` runs from 0 to ``a``.
    """

    n: int
    lam: float
    a: float
    p: int
    breakpoints: tuple
    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "coefficients",
                           tuple(tuple(float(c) for c in row) for row in self.coefficients))
        self.validate()

    # -- validation
    def validate(self) -> None:
        if int(self.n) != self.n or self.n < 3:
            raise ValidationError("dimension n must be an integer >= 3", field="n")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValidationError("lambda must be positive", field="lambda")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValidationError("a must be positive", field="a")
        if int(self.p) != self.p or self.p < 1:
            raise ValidationError("p must be a positive integer", field="p")
        b = np.asarray(self.breakpoints)
        if len(b) < 2 or b[0] != 0.0 or abs(b[-1] - self.a) > 1e-14 * self.a or np.any(np.diff(b) <= 0):
            raise ValidationError("breakpoints must increase from 0 to a", field="breakpoints")
        if len(self.coefficients) != len(b) - 1 or any(len(c) == 0 for c in self.coefficients):
            raise ValidationError("need one nonempty coefficient list per interval",
                                  field="coefficients")
        scale = max(1.0, max(np.max(np.abs(c)) for c in self.coefficients))
        tol = 1e-10 * scale
        p = int(self.p)
        for i in range(1, len(b) - 1):
            left = self._derivs_at(i - 1, b[i], p)
            right = self._derivs_at(i, b[i], p)
            bad = np.nonzero(np.abs(left - right) > tol * (1 + np.arange(p + 1)) ** 2)[0]
            if bad.size:
                raise ValidationError(
                    f"V is not C^{p} at breakpoint {b[i]}: derivative {bad[0]} jumps",
                    field="coefficients")
        end = self._derivs_at(len(b) - 2, b[-1], p + 1)
        if np.any(np.abs(end[:p + 1]) > tol * (1 + np.arange(p + 1)) ** 2):
            raise ValidationError(f"V must vanish to order {p} at x = a", field="coefficients")
        if not self.is_zero and abs(end[p + 1]) <= tol:
            raise ValidationError(f"the (p+1)-th derivative of V must jump at a (p = {p})",
                                  field="p")
        xs = np.linspace(0.0, self.a, 4001)
        positivity = 1.0 + np.exp(xs) * self.V(xs)
        if np.min(positivity) <= 1e-8:
            raise ModelError("f = exp(-x) + V must stay positive on [0, a]",
                             min_ratio=float(np.min(positivity)))

    def _derivs_at(self, piece: int, x: float, order: int) -> np.ndarray:
        c = np.asarray(self.coefficients[piece])
        y = x - self.breakpoints[piece]
        out = np.zeros(order + 1)
        for j in range(order + 1):
            out[j] = P.polyval(y, c) if len(c) else 0.0
            c = P.polyder(c) if len(c) > 1 else np.zeros(1)
        return out

    @property
    def is_zero(self) -> bool:
        return all(np.all(np.asarray(c) == 0.0) for c in self.coefficients)

    @property
    def k(self) -> float:
        return self.n / 2.0 - 1.0

    # -- evaluation
    def _pieces(self, x: np.ndarray) -> np.ndarray:
        b = np.asarray(self.breakpoints)
        idx = np.searchsorted(b, x, side="right") - 1
        return np.clip(idx, 0, len(b) - 2)

    def V(self, x, deriv: int = 0) -> np.ndarray:
        """``V`` or its derivative; zero for ``x > a`` (left limit used at ``a``)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        idx = self._pieces(x)
        inside = (x >= 0) & (x <= self.a)
        for i, c in enumerate(self.coefficients):
            sel = inside & (idx == i)
            if not np.any(sel):
                continue
            cd = np.asarray(c)
            for _ in range(deriv):
                cd = P.polyder(cd) if len(cd) > 1 else np.zeros(1)
            out[sel] = P.polyval(x[sel] - self.breakpoints[i], cd)
        return out

    def taylor_left(self, order: int) -> np.ndarray:
        """Taylor coefficients of ``V`` at ``a`` from the last piece."""
        c = np.asarray(self.coefficients[-1])
        shift = self.a - self.breakpoints[-2]
        out = np.zeros(order + 1)
        for j in range(order + 1):
            out[j] = P.polyval(shift, c) / math.factorial(j) if len(c) else 0.0
            c = P.polyder(c) if len(c) > 1 else np.zeros(1)
        return out

    # -- config
    @classmethod
    def from_mapping(cls, data: dict, prefix: str = "warp") -> "WarpSpec":
        if not isinstance(data, dict):
            raise ConfigError("warp section must be a mapping", field=prefix)
        for key in ("n", "lambda", "a", "p", "breakpoints", "coefficients"):
            if key not in data:
                raise ConfigError(f"missing key '{key}'", field=f"{prefix}.{key}")
        try:
            return cls(n=int(data["n"]), lam=float(data["lambda"]), a=float(data["a"]),
                       p=int(data["p"]), breakpoints=tuple(data["breakpoints"]),
                       coefficients=tuple(tuple(r) for r in data["coefficients"]))
        except ValidationError as exc:
            raise ConfigError(exc.message, field=f"{prefix}.{exc.details.get('field', '')}")
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value: {exc}", field=prefix)

    def to_mapping(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "a": self.a, "p": self.p,
                "breakpoints": list(self.breakpoints),
                "coefficients": [list(c) for c in self.coefficients]}


def template_spec(n: int = 3, lam: float = 1.0, a: float = 1.0, p: int = 1,
                  c: float | None = None, jump: float | None = None) -> WarpSpec:
    """Single-piece ``V = c x (a - x)^{p+1}``.

    Pass ``jump`` instead of ``c`` to scale ``V`` so that the one-sided limit of
    the ``(p-1)``-th derivative of ``Q_f`` at ``a`` equals ``jump``; that limit is
    linear in ``c`` because every lower derivative of ``V`` vanishes at ``a``.
    """
    base = P.polymul([0.0, 1.0], P.polypow([a, -1.0], p + 1))
    if c is None:
        unit = WarpSpec(n, lam, a, p, (0.0, a), (tuple(base * 1e-3),))
        val = _profile_from_spec(unit).left_derivative(p - 1)
        c = 1e-3 * (1.0 if jump is None else jump / val)
    return WarpSpec(n, lam, a, p, (0.0, a), (tuple(base * c),))


# ---------------------------------------------------------------- Q profiles

class _QProfile:
    """Exact evaluator of ``Q_f`` on ``[0, a]`` (zero beyond)."""

    a: float
    breaks: np.ndarray

    def __call__(self, x) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def left_derivative(self, j: int) -> float:  # pragma: no cover - interface
        raise NotImplementedError


class _SpecProfile(_QProfile):
    def __init__(self, spec: WarpSpec):
        self.spec = spec
        self.a = spec.a
        self.breaks = np.asarray(spec.breakpoints)

    def __call__(self, x):
        s = self.spec
        x = np.asarray(x, dtype=float)
        e = np.exp(-np.minimum(x, s.a))
        V0, V1, V2 = s.V(x), s.V(x, 1), s.V(x, 2)
        f, f1, f2 = e + V0, -e + V1, e + V2
        k = s.k
        r = f1 / f
        Q = k * f2 / f + k * (k - 1.0) * r * r - k * k - s.lam * V0 * (V0 + 2.0 * e)
        return np.where(x > s.a, 0.0, Q)

    def left_derivative(self, j: int) -> float:
        s = self.spec
        order = j + 3
        V = s.taylor_left(order)
        ex = np.exp(-s.a) * np.array([(-1.0) ** i / math.factorial(i) for i in range(order + 1)])
        f = ex + V
        f1 = _tder(f)
        f2 = _tder(f1)
        k = s.k
        r = _tdiv(f1, f)
        Q = k * _tdiv(f2, f) + k * (k - 1.0) * _tmul(r, r) - s.lam * _tmul(V, V + 2.0 * ex)
        Q[0] -= k * k
        return float(Q[j] * math.factorial(j))


class _ConstantProfile(_QProfile):
    def __init__(self, c: float, a: float):
        self.c = float(c)
        self.a = float(a)
        self.breaks = np.array([0.0, a])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > self.a, 0.0, self.c)

    def left_derivative(self, j: int) -> float:
        return self.c if j == 0 else 0.0


class _CallableProfile(_QProfile):
    def __init__(self, fn: Callable, a: float, breaks: Sequence[float] | None,
                 left_derivs: Sequence[float]):
        self.fn = fn
        self.a = float(a)
        self.breaks = np.asarray(breaks if breaks is not None else [0.0, a], dtype=float)
        self.left_derivs = tuple(left_derivs)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > self.a, 0.0, np.asarray(self.fn(np.minimum(x, self.a)), dtype=float))

    def left_derivative(self, j: int) -> float:
        if j < len(self.left_derivs):
            return float(self.left_derivs[j])
        raise ModelError(f"left derivative of order {j} not supplied")


def _profile_from_spec(spec: WarpSpec) -> _SpecProfile:
    return _SpecProfile(spec)


# ---------------------------------------------------------------- tables

@dataclass(frozen=True)
class PotentialTable:
    """Samples of ``Q_f`` on a uniform grid of ``[0, a]`` with jump metadata at ``a``.

    ``jump_value`` is the left limit of the ``(p-1)``-th derivative of ``Q_f``
    at ``a``; since ``Q_f`` vanishes beyond ``a`` it is minus the jump.
    """

    grid: np.ndarray
    qf_values: np.ndarray
    jump_order: int
    jump_value: float
    f0: float
    f0_prime: float
    a: float
    lam: float
    n: int
    degenerate: bool = False
    profile: _QProfile = field(repr=False, compare=False, default=None)

    def q(self, x) -> np.ndarray:
        """Exact ``Q_f`` at arbitrary points (zero for ``x > a``)."""
        return self.profile(x)

    def left_derivative(self, j: int) -> float:
        """Left limit at ``a`` of the ``j``-th derivative of ``Q_f``."""
        return self.profile.left_derivative(j)

    def integral_to_a(self, x_nodes) -> np.ndarray:
        """``int_x^a Q_f`` at increasing nodes ``x_nodes`` ending at ``a``.

        Gauss-Legendre on every cell between consecutive nodes, split at the
        breakpoints of ``V``; ``Q_f`` is analytic on each piece so this is exact
        to rounding.
        """
        x = np.asarray(x_nodes, dtype=float)
        cells = np.zeros(len(x) - 1)
        for i in range(len(x) - 1):
            lo, hi = x[i], x[i + 1]
            inner = self.profile.breaks[(self.profile.breaks > lo) & (self.profile.breaks < hi)]
            edges = np.concatenate([[lo], inner, [hi]])
            for l, r in zip(edges[:-1], edges[1:]):
                mid, half = 0.5 * (l + r), 0.5 * (r - l)
                # keep nodes strictly inside the piece
                cells[i] += half * np.dot(_GL_W, self.profile(mid + half * _GL_X))
        out = np.zeros(len(x))
        out[:-1] = np.cumsum(cells[::-1])[::-1]
        return out

    def to_csv(self, path, x=None) -> None:
        xs = self.grid if x is None else np.asarray(x, dtype=float)
        qs = self.qf_values if x is None else self.q(xs)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "Qf"])
            for xv, qv in zip(xs, qs):
                w.writerow([f"{xv:.17g}", f"{qv:.17g}"])

    def metadata(self) -> dict:
        return {"a": self.a, "lambda": self.lam, "n": self.n, "jump_order": self.jump_order,
                "jump_value": self.jump_value, "f0": self.f0, "f0_prime": self.f0_prime,
                "degenerate": self.degenerate, "grid_size": int(len(self.grid))}


def _table(profile: _QProfile, a: float, lam: float, n: int, p: int, grid_size: int,
           f0: float, f0_prime: float) -> PotentialTable:
    if grid_size < 64:
        raise ValidationError("grid_size must be at least 64", field="grid_size")
    grid = np.linspace(0.0, a, grid_size)
    jump = profile.left_derivative(p - 1)
    if abs(jump) < 1e-14:
        jump = 0.0
    return PotentialTable(grid=grid, qf_values=profile(grid), jump_order=p,
                          jump_value=float(jump), f0=f0, f0_prime=f0_prime, a=a, lam=lam,
                          n=n, degenerate=(jump == 0.0), profile=profile)


def build_potential(spec: WarpSpec, grid_size: int = 513) -> PotentialTable:
    """Sample ``Q_f`` for ``spec`` on a uniform grid of ``grid_size`` points."""
    prof = _SpecProfile(spec)
    f0 = 1.0 + float(spec.V(0.0))
    f0p = -1.0 + float(spec.V(0.0, 1))
    return _table(prof, spec.a, spec.lam, spec.n, spec.p, grid_size, f0, f0p)


def constant_potential(c: float, a: float, lam: float = 0.0, grid_size: int = 513,
                       n: int = 3) -> PotentialTable:
    """Constant well ``Q_f = c`` on ``[0, a]``; pairs with the ``lam = 0`` debug mode."""
    return _table(_ConstantProfile(c, a), a, lam, n, 1, grid_size, 1.0, -1.0)


def callable_potential(fn: Callable, a: float, lam: float, p: int = 1,
                       left_derivs: Sequence[float] = (), breaks=None, grid_size: int = 513,
                       n: int = 3) -> PotentialTable:
    """Table from an arbitrary vectorised ``Q_f``; left derivatives at ``a`` supplied by the caller."""
    prof = _CallableProfile(fn, a, breaks, left_derivs or (float(fn(np.array([a]))[0]),))
    return _table(prof, a, lam, n, p, grid_size, 1.0, -1.0)


# ---------------------------------------------------------------- transversal data

@dataclass(frozen=True)
class TransversalSpectrum:
    mu_sq: tuple
    multiplicity: tuple
    z: tuple
    n: int


def shifted_momenta(spectrum_in: Iterable, n: int) -> TransversalSpectrum:
    """``z_k = sqrt(mu_k^2 + (n-2)^2/4)``.

    ``spectrum_in`` holds eigenvalues ``mu_k^2`` or ``(mu_k^2, multiplicity)`` pairs.
    """
    mus, mults = [], []
    for item in spectrum_in:
        if isinstance(item, (tuple, list)):
            mu2, m = float(item[0]), int(item[1])
        else:
            mu2, m = float(item), 1
        if mu2 < 0:
            raise ValidationError("eigenvalues mu^2 must be nonnegative", field="mu_sq")
        mus.append(mu2)
        mults.append(m)
    if any(b < a for a, b in zip(mus, mus[1:])):
        raise ValidationError("eigenvalues must be sorted", field="mu_sq")
    shift = (n - 2) ** 2 / 4.0
    z = tuple(math.sqrt(m + shift) for m in mus)
    return TransversalSpectrum(tuple(mus), tuple(mults), z, n)


def _comb(a: int, b: int) -> int:
    return math.comb(a, b) if a >= 0 else 0


def sphere_spectrum(n: int, kmax: int) -> list:
    """Eigenvalues ``k(k+n-2)`` of the Laplacian on ``S^{n-1}`` with multiplicities."""
    return [(float(k * (k + n - 2)), _comb(k + n - 1, n - 1) - _comb(k + n - 3, n - 1))
            for k in range(kmax + 1)]


def load_config(path) -> dict:
    """Read a JSON run configuration."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", field="")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", field="")
