"""Weyl-Titchmarsh reconstruction from Regge poles, and Dirichlet-to-Neumann multipliers.

With ``h_z(mu) = (z/mu)^2/(z - mu)`` the residue theorem on growing contours gives

    m(z) = m(0) + z m'(0) + sum_i res_{z_i}(h_z m),

and, when ``psi(0, 0) = 0``, with ``g(mu) = mu m(mu)``

    m(z) = g'(0) + z g''(0)/2 + res_0(m)/z + sum_{z_i != 0} res_{z_i}(h_z m).

For a simple pole the summand is ``a_i (z/z_i)^2 / (z - z_i)``.  Higher
multiplicities use the Laurent coefficients stored on the pole together with
the partial fractions ``h_z(mu) = 1/(z-mu) + 1/mu + z/mu^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PoleProximityError, ValidationError
from .jost import JostFunction
from .model import TransversalSpectrum
from .poles import ReggePole, cauchy_derivative, locate_poles

__all__ = [
    "H_EXPONENT",
    "WeylModel",
    "build_weyl_model",
    "reconstruct_m",
    "truncation_budget",
    "SyntheticExpansion",
    "synthetic_expansion",
    "evaluate_synthetic",
    "DtnMode",
    "dtn_multipliers",
    "choose_tau",
    "contour_gamma",
    "contour_proxy",
]

# exponent of z/mu in the auxiliary function; tied to m = O(|z|)
H_EXPONENT = 2
POLE_DISTANCE = 1e-6
ZERO_POLE_RTOL = 1e-10


@dataclass(frozen=True)
class WeylModel:
    poles: tuple
    m0: complex
    m0_prime: complex
    zero_pole_mode: bool
    truncation_radius: float
    g: tuple = ()  # (res_0(m), g'(0), g''(0)/2) in zero-pole mode
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for p in self.poles:
            if abs(p.location) > self.truncation_radius * (1 + 1e-12):
                raise ValidationError("stored pole lies outside the truncation radius",
                                      field="poles", pole=str(p.location))
            if not np.isfinite(p.residue):
                raise ValidationError("non-finite residue", field="poles", pole=str(p.location))
        if self.zero_pole_mode and len(self.g) != 3:
            raise ValidationError("zero-pole mode needs (res0, g'(0), g''(0)/2)", field="g")

    @property
    def sum_poles(self) -> tuple:
        """Poles entering the residue sum (the one at 0 is handled separately)."""
        if not self.zero_pole_mode:
            return self.poles
        return tuple(p for p in self.poles if abs(p.location) > 1e-8)


def _circle_coefficients(f, r: float, kmax: int, n: int = 64) -> list:
    """Taylor coefficients ``c_0..c_kmax`` of ``f`` at 0 from a circle of radius ``r``."""
    w = np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    vals = np.asarray(f(r * w), dtype=complex)
    return [complex(np.mean(vals * w ** (-k)) / r ** k) for k in range(kmax + 1)]


def build_weyl_model(jost: JostFunction, truncation_radius: float, *, region=None,
                     poles: Sequence[ReggePole] | None = None, tol: float = 1e-10,
                     workers: int = 1) -> WeylModel:
    """Locate poles in ``region`` (default ``[-R, R]^2``) and keep those with ``|z| <= R``.

    ``poles`` may be passed to reuse a search made on a larger region.
    ``m(0)`` and ``m'(0)`` are evaluated directly, the derivative on a Cauchy
    circle of radius ``min(0.25, half the distance to the nearest pole)``.
    """
    R = float(truncation_radius)
    if R <= 0:
        raise ValidationError("truncation_radius must be positive", field="truncation_radius")
    notes = []
    if poles is None:
        region = (-R, R, -R, R) if region is None else region
        found = locate_poles(region, jost=jost, tol=tol, workers=workers)
        notes.extend(found.notes)
        if found.uncovered:
            notes.append(f"{len(found.uncovered)} cells unresolved in the pole search")
        poles = list(found)
    kept = tuple(sorted((p for p in poles if abs(p.location) <= R),
                        key=lambda p: (p.location.real, p.location.imag)))

    v, _, _, scale = jost.all(0.0)
    zero_mode = abs(v) < ZERO_POLE_RTOL * scale
    others = [abs(p.location) for p in kept if abs(p.location) > 1e-8]
    r0 = min(0.25, 0.5 * min(others)) if others else 0.25
    if zero_mode:
        g = _circle_coefficients(lambda mu: mu * jost.m(mu), r0, 2)
        return WeylModel(kept, np.nan + 0j, np.nan + 0j, True, R, tuple(g), tuple(notes))
    m0 = complex(jost.m(0.0))
    m0p = complex(cauchy_derivative(jost.m, 0.0, radius=r0, n=32))
    return WeylModel(kept, m0, m0p, False, R, (), tuple(notes))


def _h_taylor(z: np.ndarray, mu: complex, r: int) -> np.ndarray:
    """``h_z^{(r)}(mu) / r!`` from the partial-fraction form."""
    s = (-1.0) ** r
    return 1.0 / (z - mu) ** (r + 1) + s / mu ** (r + 1) + s * (r + 1) * z / mu ** (r + 2)


def _pole_terms(z: np.ndarray, poles) -> np.ndarray:
    """``res_{z_i}(h_z m)`` for each pole, shape ``(len(poles),) + z.shape``."""
    out = np.zeros((len(poles),) + z.shape, dtype=complex)
    for k, p in enumerate(poles):
        zi = p.location
        if p.multiplicity == 1 or not p.laurent:
            out[k] = p.residue * (z / zi) ** H_EXPONENT / (z - zi)
        else:
            # res of h_z m = sum_l c_{-l} h_z^{(l-1)}(z_i)/(l-1)!
            out[k] = sum(c * _h_taylor(z, zi, l) for l, c in enumerate(p.laurent))
    return out


def _check_distance(z: np.ndarray, model: WeylModel) -> None:
    locs = [p.location for p in model.poles]
    if model.zero_pole_mode:
        locs.append(0j)
    for zi in locs:
        d = np.abs(z - zi)
        if np.any(d < POLE_DISTANCE):
            raise PoleProximityError("evaluation point within 1e-6 of a Regge pole",
                                     pole=str(zi), distance=float(np.min(d)))


def reconstruct_m(z, model: WeylModel):
    """Truncated residue expansion of ``m`` at ``z`` (scalar or array).

    Raises
    ------
    PoleProximityError
        If ``z`` lies within ``1e-6`` of a stored pole.
    """
    za = np.asarray(z, dtype=complex)
    _check_distance(za, model)
    terms = _pole_terms(za, model.sum_poles).sum(axis=0)
    if model.zero_pole_mode:
        res0, g1, g2 = model.g
        with np.errstate(divide="ignore", invalid="ignore"):
            out = g1 + za * g2 + res0 / za + terms
    else:
        out = model.m0 + za * model.m0_prime + terms
    return complex(out) if out.ndim == 0 else out


def _ring_budget(locs: Sequence[complex], families: Sequence[str], T: np.ndarray) -> np.ndarray:
    """Sum over families of (largest term on the family's outermost ring) x (family size).

    If the summands decay like ``1/|z_i|^2`` along a family with uniform
    spacing, the tail beyond rank ``J`` is about ``J`` times the ``J``-th term.
    Families are separated because a tiny outer alpha residue says nothing
    about the beta tail.
    """
    out = np.zeros(T.shape[1:])
    for fam in sorted(set(families) - {"zero"}):
        idx = [k for k, f in enumerate(families) if f == fam]
        top = max(abs(locs[k]) for k in idx)
        ring = [k for k in idx if abs(locs[k]) >= top * (1 - 1e-6)]
        out = out + np.max(np.abs(T[ring]), axis=0) * len(idx)
    return out


def truncation_budget(z, model: WeylModel):
    """Heuristic size of the omitted tail: first omitted term times the pole count, per family.

    The first omitted term is estimated by the outermost stored one.  A floor
    of ``1e-13 |m|`` stands for rounding.
    """
    za = np.asarray(z, dtype=complex)
    poles = model.sum_poles
    value = np.abs(reconstruct_m(za, model))
    if poles:
        b = _ring_budget([p.location for p in poles], [p.family for p in poles],
                         _pole_terms(za, poles))
    else:
        b = np.zeros(za.shape)
    out = np.maximum(b, 1e-13 * value)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- synthetic form

@dataclass(frozen=True)
class SyntheticExpansion:
    """``M(-z^2) = -z + sum_i a_i/(z - z_i)`` plus Laurent blocks for multiple poles."""

    leading: float
    terms: tuple  # (z_i, a_i)
    blocks: tuple = ()  # (z_i, (c_-1, c_-2, ...))
    simple: bool = True
    notes: tuple = ()
    families: tuple = ()  # family of each term, then of each block


def synthetic_expansion(model: WeylModel) -> SyntheticExpansion:
    """Coefficients of the synthetic form from the stored poles.

    A non-simple pole cannot be written as ``a/(z - z_i)``; it is returned as
    a Laurent block ``sum_l c_{-l}/(z - z_i)^l`` and ``simple`` is False.
    """
    terms, blocks, notes, tf, bf = [], [], [], [], []
    if model.zero_pole_mode:
        terms.append((0j, complex(model.g[0])))
        tf.append("zero")
    for p in model.sum_poles:
        if p.multiplicity == 1 or not p.laurent:
            terms.append((complex(p.location), complex(p.residue)))
            tf.append(p.family)
        else:
            blocks.append((complex(p.location), tuple(complex(c) for c in p.laurent)))
            bf.append(p.family)
            notes.append(f"pole of multiplicity {p.multiplicity} at {p.location} kept as a Laurent block")
    return SyntheticExpansion(-1.0, tuple(terms), tuple(blocks), not blocks, tuple(notes),
                              tuple(tf + bf))


def _synthetic_terms(za: np.ndarray, exp: SyntheticExpansion) -> np.ndarray:
    parts = [a / (za - zi) for zi, a in exp.terms]
    for zi, cs in exp.blocks:
        parts.append(sum(c / (za - zi) ** (l + 1) for l, c in enumerate(cs)))
    if not parts:
        return np.zeros((0,) + za.shape, dtype=complex)
    return np.stack([np.broadcast_to(p, za.shape) for p in parts])


def evaluate_synthetic(z, exp: SyntheticExpansion, budget: bool = False):
    """Value of the synthetic form; with ``budget`` also the truncation heuristic.

    The budget follows ``truncation_budget``: per family, the outermost term
    times the family size.  It is only meaningful when the residues decay; along a beta
    family they grow like ``|z_i|`` and the unsubtracted series diverges.
    """
    za = np.asarray(z, dtype=complex)
    T = _synthetic_terms(za, exp)
    val = exp.leading * za + T.sum(axis=0)
    val = complex(val) if val.ndim == 0 else val
    if not budget:
        return val
    locs = [zi for zi, _ in exp.terms] + [zi for zi, _ in exp.blocks]
    if locs:
        fams = exp.families if len(exp.families) == len(locs) else ("all",) * len(locs)
        b = _ring_budget(locs, fams, T)
    else:
        b = np.zeros(za.shape)
    b = np.maximum(b, 1e-13 * np.abs(val))
    return val, (float(b) if np.ndim(b) == 0 else b)


# ---------------------------------------------------------------- DtN map

@dataclass(frozen=True)
class DtnMode:
    mu_sq: float
    multiplicity: int
    z: float
    value: complex
    collision: bool


def dtn_multipliers(model: WeylModel | None, spectrum: TransversalSpectrum, f0: float,
                    f0_prime: float, n: int | None = None, *, jost: JostFunction | None = None,
                    source: str = "reconstruct") -> list:
    """``Lambda_k = -[m(z_k) - (n/2 - 1) f'(0)/f(0)]`` for each distinct ``mu_k^2``.

    ``source`` is ``"reconstruct"`` (residue expansion) or ``"direct"`` (the
    Jost quotient).  A ``z_k`` sitting on a Regge pole means ``lam`` is an
    eigenvalue; that mode gets ``collision=True`` and a NaN value.
    """
    n = spectrum.n if n is None else n
    if f0 == 0:
        raise ValidationError("f(0) must be nonzero", field="f0")
    shift = (n / 2.0 - 1.0) * f0_prime / f0
    # one evaluation per distinct mu^2; repeated entries pool their multiplicities
    merged: dict = {}
    for mu2, mult, zk in zip(spectrum.mu_sq, spectrum.multiplicity, spectrum.z):
        prev = merged.get(mu2)
        merged[mu2] = (mult + (prev[0] if prev else 0), zk)
    out = []
    for mu2, (mult, zk) in merged.items():
        if source == "direct":
            if jost is None:
                raise ValidationError("direct evaluation needs a Jost function", field="jost")
            m = complex(jost.m(zk))
            hit = not np.isfinite(m)
        elif source == "reconstruct":
            if model is None:
                raise ValidationError("reconstruction needs a Weyl model", field="model")
            if zk > model.truncation_radius:
                raise ValidationError("z_k beyond the truncation radius", field="spectrum", z=zk)
            try:
                m, hit = reconstruct_m(zk, model), False
            except PoleProximityError:
                m, hit = complex(np.nan, np.nan), True
        else:
            raise ValidationError("source must be 'reconstruct' or 'direct'", field="source")
        value = complex(np.nan, np.nan) if hit else -(m - shift)
        out.append(DtnMode(mu2, mult, zk, value, hit))
    return out


# ---------------------------------------------------------------- contour proxy

def _half_integer(x: float) -> float:
    """Closest half-integer to ``x``; ``x + 1/2`` when ``x`` is an integer."""
    if float(x).is_integer():
        return x + 0.5
    return math.floor(x) + 0.5


def choose_tau(jost: JostFunction, a: float, n_values: Sequence[int], eps: float = 0.25,
               samples: int = 64, nodes: int = 48) -> float:
    """``tau`` in ``[0, 2 pi)`` maximising the smallest ``|g|`` on the arcs near the imaginary axis.

    ``g = Gamma(z+1) 2^z lam^{-z/2} psi(0, z)`` is sampled on the parts of the
    circles ``|mu| = (2 pi n + tau)/2a`` with ``-eps |Im mu| <= Re mu <= 0``,
    where the large-|mu| asymptotics bound it below by 1/3 for a suitable ``tau``.
    """
    phi = math.atan(eps)
    th = np.pi / 2 + phi * (np.arange(nodes) + 0.5) / nodes
    unit = np.concatenate([np.exp(1j * th), np.exp(-1j * th)])
    taus = np.arange(samples) * 2 * np.pi / samples
    radii = np.array([[(2 * np.pi * n + tau) / (2 * a) for n in n_values] for tau in taus])
    pts = (radii[..., None] * unit).ravel()
    g = np.abs(np.asarray(jost.psi_tilde(pts)[0])).reshape(radii.shape + (unit.size,))
    score = g.min(axis=(1, 2))
    return float(taus[int(np.argmax(score))])


def contour_gamma(n: int, a: float, tau: float, eps: float = 0.25, density: float = 8.0):
    """Gauss-Legendre nodes and weights ``(mu, dmu)`` along the closed contour ``gamma_n``.

    Counterclockwise: the arc of radius ``r = (2 pi n + tau)/2a`` right of the
    lines ``Re mu = -eps |Im mu|``, the upper joining segment, the arc of
    half-integer radius to the left, then the lower segment.
    """
    r = (2 * np.pi * n + tau) / (2 * a)
    R1 = _half_integer(r)
    phi = np.pi / 2 + math.atan(eps)
    xg, wg = np.polynomial.legendre.leggauss(32)
    mus, dmus = [], []

    def arc(rad, t0, t1):
        k = max(1, int(math.ceil(rad * abs(t1 - t0) * density / 32)))
        edges = np.linspace(t0, t1, k + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
            mu = rad * np.exp(1j * th)
            mus.append(mu)
            dmus.append(1j * mu * 0.5 * (hi - lo) * wg)

    def seg(z0, z1):
        k = max(1, int(math.ceil(abs(z1 - z0) * density / 32)))
        edges = np.linspace(0, 1, k + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
            mus.append(z0 + (z1 - z0) * s)
            dmus.append((z1 - z0) * 0.5 * (hi - lo) * wg)

    arc(r, -phi, phi)
    seg(r * np.exp(1j * phi), R1 * np.exp(1j * phi))
    arc(R1, phi, 2 * np.pi - phi)
    seg(R1 * np.exp(-1j * phi), r * np.exp(-1j * phi))
    return np.concatenate(mus), np.concatenate(dmus), (r, R1)


def _inside_gamma(mu: complex, r: float, R1: float, eps: float) -> bool:
    if mu.real >= -eps * abs(mu.imag):
        return abs(mu) < r
    return abs(mu) < R1


def contour_proxy(z: complex, jost: JostFunction, a: float, n: int, tau: float,
                  eps: float = 0.25, density: float = 8.0) -> complex:
    """``(1/2 pi i) \\oint_{gamma_n} h_z(mu) m(mu) d mu``; tends to 0 as ``n`` grows."""
    mu, dmu, _ = contour_gamma(n, a, tau, eps, density)
    h = (z / mu) ** H_EXPONENT / (z - mu)
    mv = jost.m(mu)
    if np.any(~np.isfinite(mv)):
        raise PoleProximityError("gamma_n passes through a Regge pole", n=n, tau=tau)
    return complex(np.sum(h * mv * dmu) / (2j * np.pi))


def enclosed(poles: Sequence[ReggePole], n: int, a: float, tau: float, eps: float = 0.25) -> list:
    """Poles inside ``gamma_n``."""
    r = (2 * np.pi * n + tau) / (2 * a)
    R1 = _half_integer(r)
    return [p for p in poles if _inside_gamma(p.location, r, R1, eps)]
