"""Regge poles: zeros of psi(0, .) located by the argument principle.

``count_zeros`` integrates ``f'/f`` around a rectangle with an adaptive
Simpson rule and cross-checks the result against the accumulated change of
``arg f``; both must agree on the same integer.  ``locate_poles`` bisects a
region until every cell isolates one zero, then polishes it with Newton's
method started from the contour centroid ``(1/2 pi i) \\oint z f'/f``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import BoundaryTooCloseError, ModelError, PrecisionError, WarpballError
from .jost import JostFunction, jost_function

__all__ = [
    "ReggePole",
    "PoleList",
    "ContourCount",
    "count_zeros",
    "cauchy_derivative",
    "locate_poles",
    "residue_at",
    "classify",
    "predict_poles",
    "predict_alpha",
    "constant_A",
    "assign_beta_index",
    "wronskian_bootstrap",
    "integer_residue_formula",
]

Rect = tuple  # (re0, re1, im0, im1)


@dataclass(frozen=True)
class ReggePole:
    location: complex
    multiplicity: int
    family: str
    residue: complex
    winding_certificate: int
    laurent: tuple = ()

    def conjugate_of(self, other: "ReggePole", rtol: float = 1e-7) -> bool:
        z, w = self.location, other.location
        return abs(z - w.conjugate()) <= rtol * max(1.0, abs(z))


class PoleList(list):
    """List of poles plus the search report."""

    def __init__(self, poles=(), region=None, uncovered=(), cells=0, notes=()):
        super().__init__(poles)
        self.region = region
        self.uncovered = list(uncovered)
        self.cells = cells
        self.notes = list(notes)


# ---------------------------------------------------------------- derivative helpers

def cauchy_derivative(f: Callable, z, radius: float = 0.05, n: int = 16):
    """``f'(z)`` from the trapezoid rule on a circle; spectrally accurate for analytic ``f``."""
    z = np.asarray(z, dtype=complex)
    w = np.exp(2j * np.pi * np.arange(n) / n)
    pts = z[..., None] + radius * w
    vals = np.asarray(f(pts.ravel()), dtype=complex).reshape(pts.shape)
    return np.sum(vals / w, axis=-1) / (n * radius)


def _handle(f, fprime=None):
    if fprime is not None:
        return lambda z: (np.asarray(f(z), dtype=complex), np.asarray(fprime(z), dtype=complex))
    vd = getattr(f, "value_and_derivative", None)
    if vd is not None:
        return lambda z: tuple(np.asarray(x, dtype=complex) for x in vd(z))
    return lambda z: (np.asarray(f(z), dtype=complex), cauchy_derivative(f, z))


# ---------------------------------------------------------------- argument principle

@dataclass
class ContourCount:
    count: int
    winding: complex
    m1: complex
    m2: complex
    max_abs: float
    nodes: int


def _perimeter_nodes(rect: Rect, n_side: int) -> np.ndarray:
    re0, re1, im0, im1 = rect
    c = [complex(re0, im0), complex(re1, im0), complex(re1, im1), complex(re0, im1)]
    pts = []
    for k in range(4):
        a, b = c[k], c[(k + 1) % 4]
        pts.append(a + (b - a) * np.arange(n_side) / n_side)
    return np.concatenate(pts)


def count_zeros(rect: Rect, f, fprime=None, *, tol: float = 2e-3, n_side: int = 16,
                max_nodes: int = 60000, margin: float = 1e-3,
                details: bool = False):
    """Number of zeros of ``f`` inside ``rect = (re0, re1, im0, im1)``.

    ``f`` is a vectorised callable; the derivative comes from ``fprime``, from
    an analytic ``f.value_and_derivative`` hook, or from a Cauchy circle.

    Raises
    ------
    BoundaryTooCloseError
        If ``|f/f'|`` on the contour falls below ``margin`` times the shorter
        side, a zero sits on or near the boundary; ``hint`` is that point.
    PrecisionError
        If the winding number is not within 0.25 of an integer or disagrees
        with the accumulated argument change.
    """
    re0, re1, im0, im1 = rect
    if not (re1 > re0 and im1 > im0):
        raise ValueError("empty rectangle")
    fd = _handle(f, fprime)
    size = min(re1 - re0, im1 - im0)
    perim = 2.0 * ((re1 - re0) + (im1 - im0))
    closest = [np.inf, None]

    def ev(z):
        v, d = fd(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(v) / np.abs(d)
        ratio = np.where(v == 0, 0.0, ratio)
        k = int(np.argmin(ratio))
        if ratio[k] < closest[0]:
            closest[0], closest[1] = float(ratio[k]), complex(z[k])
        if closest[0] < margin * size:
            raise BoundaryTooCloseError("a zero lies too close to the contour", hint=closest[1])
        return v, d / v

    z0 = _perimeter_nodes(rect, n_side)
    za = z0
    zb = np.roll(z0, -1)
    fv, gv = ev(z0)
    fa, ga = fv, gv
    fb, gb = np.roll(fv, -1), np.roll(gv, -1)
    nodes = len(z0)
    total = m1 = m2 = 0j
    argsum = 0.0
    max_abs = float(np.max(np.abs(fv)))
    while za.size:
        zm = 0.5 * (za + zb)
        fm, gm = ev(zm)
        nodes += zm.size
        max_abs = max(max_abs, float(np.max(np.abs(fm))))
        dz = zb - za
        T1 = 0.5 * (ga + gb) * dz
        T2 = 0.25 * (ga + 2.0 * gm + gb) * dz
        arg1 = np.angle(fm / fa)
        arg2 = np.angle(fb / fm)
        seg_tol = 2.0 * np.pi * tol * np.abs(dz) / perim
        ok = (np.abs(T1 - T2) <= seg_tol) & (np.abs(arg1) < np.pi / 4) & (np.abs(arg2) < np.pi / 4)
        if np.any(ok):
            w = dz[ok] / 6.0
            total += np.sum(w * (ga[ok] + 4.0 * gm[ok] + gb[ok]))
            m1 += np.sum(w * (za[ok] * ga[ok] + 4.0 * zm[ok] * gm[ok] + zb[ok] * gb[ok]))
            m2 += np.sum(w * (za[ok] ** 2 * ga[ok] + 4.0 * zm[ok] ** 2 * gm[ok] + zb[ok] ** 2 * gb[ok]))
            argsum += float(np.sum(arg1[ok] + arg2[ok]))
        bad = ~ok
        if not np.any(bad):
            break
        if nodes > max_nodes:
            raise PrecisionError("contour refinement exceeded its node budget", rect=list(rect))
        za = np.concatenate([za[bad], zm[bad]])
        zb = np.concatenate([zm[bad], zb[bad]])
        fa, fb = np.concatenate([fa[bad], fm[bad]]), np.concatenate([fm[bad], fb[bad]])
        ga, gb = np.concatenate([ga[bad], gm[bad]]), np.concatenate([gm[bad], gb[bad]])
    wind = total / (2j * np.pi)
    n = int(round(wind.real))
    if abs(wind - n) > 0.25:
        raise PrecisionError("winding number is not close to an integer", value=[wind.real, wind.imag])
    n_arg = int(round(argsum / (2.0 * np.pi)))
    if n_arg != n:
        raise PrecisionError("trapezoid and argument-change windings disagree",
                             trapezoid=n, argument=n_arg)
    if details:
        return ContourCount(n, wind, m1 / (2j * np.pi), m2 / (2j * np.pi), max_abs, nodes)
    return n


# ---------------------------------------------------------------- Newton

def _newton(fd, z0: complex, mult: int, tol: float, maxit: int = 60):
    z = complex(z0)
    step = np.inf
    for _ in range(maxit):
        v, d = fd(np.array([z]))
        v, d = complex(v[0]), complex(d[0])
        if v == 0:
            return z, True
        if d == 0:
            return z, False
        step = mult * v / d
        z -= step
        if abs(step) < tol:
            return z, True
    return z, abs(step) < 1e3 * tol


def _inside(z: complex, rect: Rect, pad: float) -> bool:
    re0, re1, im0, im1 = rect
    return re0 - pad <= z.real <= re1 + pad and im0 - pad <= z.imag <= im1 + pad


_SPLITS = (0.5, 0.4472, 0.5528, 0.3819, 0.6181, 0.3333, 0.6667, 0.2764)


def _split(rect: Rect, frac: float):
    re0, re1, im0, im1 = rect
    if (re1 - re0) >= (im1 - im0):
        c = re0 + frac * (re1 - re0)
        return (re0, c, im0, im1), (c, re1, im0, im1)
    c = im0 + frac * (im1 - im0)
    return (re0, re1, im0, c), (re0, re1, c, im1)


def locate_poles(region: Rect, kernel=None, lam: float | None = None, tol: float = 1e-10, *,
                 jost: JostFunction | None = None, f=None, max_cells: int = 4000,
                 min_cell: float = 1e-5, workers: int = 1, residues: bool = True,
                 count_tol: float = 2e-3) -> PoleList:
    """Isolate and refine every zero of ``psi(0, .)`` in ``region``.

    ``f`` may replace the Jost function by any handle accepted by
    ``count_zeros`` (used for closed-form oracles).  Cells left unresolved when
    the budget runs out are reported in ``PoleList.uncovered``.
    """
    if f is None:
        jost = jost if jost is not None else jost_function(kernel, lam)
        f = jost
    fd = _handle(f)
    notes = []

    def counted(rect):
        return rect, count_zeros(rect, f, tol=count_tol, details=True)

    # jitter the outer boundary if a zero sits on it
    root = tuple(float(v) for v in region)
    for k in range(12):
        try:
            root, root_count = counted(root)
            break
        except BoundaryTooCloseError:
            re0, re1, im0, im1 = root
            d = 1e-3 * (k + 1) * max(1.0, min(re1 - re0, im1 - im0))
            root = (re0 - d, re1 + 0.7 * d, im0 - 0.9 * d, im1 + 0.8 * d)
            notes.append(f"region boundary moved outward by {d:.3g}")
    else:
        raise PrecisionError("could not place the region boundary away from zeros")

    found = []
    uncovered = []
    frontier = [(root, root_count)]
    cells = 1

    def process(item):
        rect, cc = item
        out_poles, children, fails = [], [], []
        size = max(rect[1] - rect[0], rect[3] - rect[2])
        if cc.count == 0:
            return out_poles, children, fails
        if cc.count == 1 or size < min_cell:
            mult = cc.count
            z0 = cc.m1 / mult
            z, ok = _newton(fd, z0, mult, tol)
            if ok and _inside(z, rect, 1e-9 * max(1.0, abs(z))):
                v = complex(fd(np.array([z]))[0][0])
                out_poles.append((z, mult, cc.count, abs(v), cc.max_abs))
                return out_poles, children, fails
            if size < min_cell:
                fails.append(rect)
                return out_poles, children, fails
        for frac in _SPLITS:
            a, b = _split(rect, frac)
            try:
                ca = count_zeros(a, f, tol=count_tol, details=True)
                cb = count_zeros(b, f, tol=count_tol, details=True)
            except (BoundaryTooCloseError, PrecisionError):
                continue
            if ca.count + cb.count != cc.count:
                continue
            children = [(a, ca), (b, cb)]
            return out_poles, children, fails
        fails.append(rect)
        return out_poles, children, fails

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while frontier:
            if cells > max_cells:
                uncovered.extend(r for r, _ in frontier)
                notes.append("cell budget exhausted")
                break
            results = list(pool.map(process, frontier)) if pool else [process(c) for c in frontier]
            nxt = []
            for poles_, children, fails in results:
                found.extend(poles_)
                nxt.extend(children)
                uncovered.extend(fails)
            cells += len(nxt)
            frontier = nxt
    finally:
        if pool:
            pool.shutdown()

    # merge duplicates within 1e-8
    found.sort(key=lambda p: (round(p[0].real, 7), round(p[0].imag, 7)))
    merged = []
    for p in found:
        if merged and abs(merged[-1][0] - p[0]) < 1e-8 * max(1.0, abs(p[0])):
            continue
        merged.append(p)
    locs = [p[0] for p in merged]
    poles = []
    for idx, (z, mult, wind, absv, maxabs) in enumerate(merged):
        if absv > 1e-8 * maxabs:
            notes.append(f"weak zero certificate at {z}")
        res, laurent = 0j, ()
        if residues and jost is not None:
            others = [w for k, w in enumerate(locs) if k != idx]
            res, laurent = _residue(jost, z, mult, others)
        poles.append(ReggePole(complex(z), int(mult), "unclassified", complex(res), int(wind), laurent))
    poles = classify(poles)
    poles.sort(key=lambda p: (p.location.real, p.location.imag))
    return PoleList(poles, region=root, uncovered=uncovered, cells=cells, notes=notes)


# ---------------------------------------------------------------- classification

def classify(poles: Sequence[ReggePole], imag_tol: float = 1e-6) -> list:
    """Tag poles: near-real near a negative integer -> alpha; conjugate-paired -> beta."""
    out = []
    for p in poles:
        z = p.location
        # every real point left of -1/2 is within 1/2 of a negative integer
        if abs(z.imag) < imag_tol and z.real < -0.5:
            fam = "alpha"
        elif abs(z.imag) >= imag_tol and any(p.conjugate_of(q) for q in poles if q is not p):
            fam = "beta"
        else:
            fam = "unclassified"
        out.append(replace(p, family=fam))
    return out


# ---------------------------------------------------------------- residues

def _cauchy_radius(z: complex, others: Sequence[complex]) -> float:
    if not others:
        return 0.1
    d = min(abs(z - w) for w in others)
    return min(0.1, 0.5 * d)


def _residue(jost: JostFunction, z: complex, mult: int, others: Sequence[complex], n: int = 64):
    r = _cauchy_radius(z, others)
    if mult == 1:
        d = complex(cauchy_derivative(jost.psi, z, radius=r, n=32))
        scale = jost.all(z)[3]
        if abs(d) > 1e-10 * scale / r:
            return complex(jost.psi_prime(z)) / d, ()
        mult = 2
    w = np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    pts = z + r * w
    mv = jost.m(pts)
    coeffs = []
    for l in range(1, mult + 1):
        # c_{-l} = (1/2 pi i) \oint m(mu) (mu - z)^{l-1} d mu
        coeffs.append(complex(np.mean(mv * (r * w) ** l)))
    return coeffs[0], tuple(coeffs)


def residue_at(pole: complex, multiplicity: int, kernel=None, lam: float | None = None, *,
               jost: JostFunction | None = None, neighbors: Sequence[complex] = ()) -> complex:
    """Residue of ``m`` at a zero of ``psi(0, .)``.

    Simple poles use ``psi'(0,z)/(d/dz psi)(0,z)`` with the z-derivative from a
    Cauchy circle of radius ``min(0.1, half the distance to the nearest other
    pole)``.  Higher multiplicities use contour integrals of ``m``.
    """
    jost = jost if jost is not None else jost_function(kernel, lam)
    return _residue(jost, complex(pole), int(multiplicity), list(neighbors))[0]


def wronskian_bootstrap(z: complex, kernel=None, lam: float | None = None, *, jost=None) -> complex:
    """``psi'(0, z_k) = -2 sin(pi z_k) / (pi psi(0, -z_k))`` at a zero ``z_k``."""
    from .jost import wronskian_target

    jost = jost if jost is not None else jost_function(kernel, lam)
    return complex(-wronskian_target(z, jost.lam) / jost.psi(-z))


def integer_residue_formula(n: int, dpsi_n: complex) -> complex:
    """Closed form ``(-1)^n / (2 (d/dz psi(0,n))^2)`` proposed for poles at integers."""
    return (-1) ** n / (2.0 * dpsi_n ** 2)


# ---------------------------------------------------------------- predictors

def constant_A(jump_s_p: float, p: int) -> float:
    """``A = (-1)^p d_s^p K(0, 2a^-) / (p-1)!``."""
    A = (-1) ** p * jump_s_p / math.factorial(p - 1)
    if A == 0:
        raise ModelError("A = 0: the perturbation has no jump at a")
    return A


def predict_poles(j_range, A: float, a: float, p: int) -> list:
    """Beta-family predictor, evaluated literally from the asymptotic formula.

    ``beta_{+-j} = +- i (pi/2a)(2|j| + (p-1)/2 +- (sgn A + 1))
                   - ((p+1)/2a) log(|j| pi/a) + (1/2a) log(|A| (p-1)!)``
    """
    if A == 0:
        raise ModelError("A = 0: the perturbation has no jump at a")
    sg = 1.0 if A > 0 else -1.0
    out = []
    for j in j_range:
        if j == 0:
            raise ValueError("j must be nonzero")
        s = 1.0 if j > 0 else -1.0
        im = s * (np.pi / (2 * a)) * (2 * abs(j) + (p - 1) / 2 + s * (sg + 1))
        re = -((p + 1) / (2 * a)) * math.log(abs(j) * np.pi / a) \
            + math.log(abs(A) * math.factorial(p - 1)) / (2 * a)
        out.append(complex(re, im))
    return out


def predict_alpha(k_range) -> list:
    return [complex(-k, 0.0) for k in k_range]


def assign_beta_index(z: complex, A: float, a: float, p: int) -> int:
    """Nearest ``j`` whose predicted imaginary part matches ``|Im z|``."""
    sg = 1.0 if A > 0 else -1.0
    j = (abs(z.imag) * 2 * a / np.pi - (p - 1) / 2 - (sg + 1)) / 2
    return max(1, int(round(j)))


def index_beta_family(upper: Sequence[ReggePole], A: float, a: float, p: int) -> list:
    """Indices ``j`` for the upper beta poles, in the order given.

    The topmost pole is anchored with :func:`assign_beta_index`; lower poles step
    down by the number of ``pi / a`` spacings to their neighbour.  Poles that land
    on ``j <= 0`` lie below the predictor's range and get ``None``.
    """
    if not upper:
        return []
    order = sorted(range(len(upper)), key=lambda i: -upper[i].location.imag)
    out = [None] * len(upper)
    j = assign_beta_index(upper[order[0]].location, A, a, p)
    prev = upper[order[0]].location.imag
    out[order[0]] = j
    for i in order[1:]:
        im = upper[i].location.imag
        j -= max(1, int(round((prev - im) * a / np.pi)))
        prev = im
        out[i] = j if j >= 1 else None
    return out
