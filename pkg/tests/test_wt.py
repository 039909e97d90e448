import math

import mpmath as mp
import numpy as np
import pytest

from warpball.errors import PoleProximityError
from warpball.jost import jost_function
from warpball.model import shifted_momenta, sphere_spectrum
from warpball.poles import locate_poles
from warpball.wt import (SyntheticExpansion, build_weyl_model, choose_tau,
                         contour_gamma, contour_proxy, dtn_multipliers, enclosed, evaluate_synthetic,
                         reconstruct_m, synthetic_expansion, truncation_budget)


@pytest.fixture(scope="module")
def free_models(free_jost):
    poles = locate_poles((-30.5, 1.0, -30.0, 30.0), jost=free_jost, workers=4)
    return {R: build_weyl_model(free_jost, R, poles=poles) for R in (10, 15, 20, 30)}


@pytest.fixture(scope="module")
def cf3_wide_poles(cf3_jost):
    return locate_poles((-25.5, 1.0, -25.5, 25.5), jost=cf3_jost, workers=4)


@pytest.fixture(scope="module")
def cf3_models(cf3_jost, cf3_wide_poles):
    return {R: build_weyl_model(cf3_jost, R, poles=cf3_wide_poles) for R in (10, 15, 20, 25)}


def _rel(model, jost, z):
    direct = jost.m(z)
    return np.abs(reconstruct_m(z, model) - direct) / np.abs(direct)


def test_zero_gives_m0(cf3_models, cf3_jost):
    model = cf3_models[20]
    assert reconstruct_m(0.0, model) == model.m0
    assert model.m0 == pytest.approx(cf3_jost.m(0.0), rel=1e-15)


def test_stored_poles_within_radius(cf3_models):
    for R, model in cf3_models.items():
        assert all(abs(p.location) <= R for p in model.poles)
        assert all(np.isfinite(p.residue) for p in model.poles)


def test_unperturbed_truncation_improves(free_models, free_jost):
    # the alpha residues decay so fast that the error reaches rounding by R = 10
    errs = [_rel(free_models[R], free_jost, 2.0) for R in (10, 15, 20)]
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 <= max(1.1 * e0, 1e-12)
    assert errs[-1] < 1e-10


def test_perturbed_truncation_improves(cf3_models, cf3_jost):
    errs = [_rel(cf3_models[R], cf3_jost, 2.0) for R in (10, 15, 20, 25)]
    assert all(e1 < e0 for e0, e1 in zip(errs, errs[1:]))
    assert errs[-1] < 0.1


def test_truncation_monotone_in_noise_band(cf3_models, cf3_jost):
    z = np.array([1.5, -0.7 + 2.1j, 3.0 - 1.0j, 0.3 + 4.0j])
    errs = np.array([_rel(cf3_models[R], cf3_jost, z) for R in (10, 15, 20, 25)])
    assert np.all(errs[1:] <= 1.1 * errs[:-1])


def test_budget_covers_error(cf3_models, cf3_jost):
    z = np.array([2.0, 1.0 + 1.0j, -0.5 + 3.0j])
    for R in (15, 25):
        model = cf3_models[R]
        err = np.abs(reconstruct_m(z, model) - cf3_jost.m(z))
        assert np.all(err <= truncation_budget(z, model))


def test_conjugation_symmetry(cf3_models):
    model = cf3_models[20]
    z = np.array([1.3 + 2.2j, -2.4 + 0.6j, 4.0 - 3.0j])
    assert np.allclose(reconstruct_m(np.conj(z), model), np.conj(reconstruct_m(z, model)),
                       rtol=1e-12, atol=0)


def test_pole_proximity(cf3_models):
    model = cf3_models[20]
    z0 = model.poles[3].location
    with pytest.raises(PoleProximityError):
        reconstruct_m(z0 + 1e-8, model)


def test_zero_pole_mode():
    t = float(mp.besseljzero(0, 1))
    J = jost_function(None, t * t)
    model = build_weyl_model(J, 20.0)
    assert model.zero_pole_mode
    res0, g1, g2 = model.g
    # residue of m = psi'/psi at 0
    assert res0 == pytest.approx(complex(-t * mp.besselj(0, t, derivative=1) /
                                         mp.diff(lambda nu: mp.besselj(nu, t), 0)), rel=1e-8)
    z = np.array([0.5, 1.5 + 1.0j, -0.4 + 2.0j])
    assert np.max(np.abs(reconstruct_m(z, model) - J.m(z)) / np.abs(J.m(z))) < 1e-8
    with pytest.raises(PoleProximityError):
        reconstruct_m(1e-9, model)


def test_synthetic_unperturbed_within_budget(free_models, free_jost):
    exp = synthetic_expansion(free_models[20])
    assert exp.simple and exp.leading == -1
    z = np.linspace(3.0, 8.0, 10)
    val, budget = evaluate_synthetic(z, exp, budget=True)
    assert np.all(np.abs(val - free_jost.m(z)) <= budget)


def test_synthetic_large_real_z(free_models, free_jost):
    exp = synthetic_expansion(free_models[20])
    for z in (10.0, 15.0):
        assert evaluate_synthetic(z, exp) / -z == pytest.approx(1.0, abs=0.02)
        assert reconstruct_m(z, free_models[20]) == pytest.approx(free_jost.m(z), rel=1e-8)


def test_synthetic_pole_free():
    exp = SyntheticExpansion(-1.0, ())
    z = np.array([0.5, 3.0 + 2j])
    assert np.array_equal(evaluate_synthetic(z, exp), -z)


def test_synthetic_conjugate_coefficients(cf3_models):
    exp = synthetic_expansion(cf3_models[20])
    terms = {complex(zi): complex(ai) for zi, ai in exp.terms}
    n_pairs = 0
    for zi, ai in terms.items():
        if zi.imag > 1e-6:
            partner = min(terms, key=lambda w: abs(w - zi.conjugate()))
            assert abs(terms[partner] - ai.conjugate()) <= 1e-8 * abs(ai)
            n_pairs += 1
    assert n_pairs >= 3


def test_dtn_example(free_models, free_jost):
    spec = shifted_momenta(sphere_spectrum(3, 0), 3)
    modes = dtn_multipliers(None, spec, 1.0, -1.0, 3, jost=free_jost, source="direct")
    t = 1.0
    j = math.sqrt(2 / (math.pi * t)) * math.sin(t)
    dj = math.sqrt(2 / math.pi) * (math.cos(t) / math.sqrt(t) - 0.5 * math.sin(t) / t ** 1.5)
    m_half = -dj / j
    assert modes[0].z == 0.5
    assert modes[0].value == pytest.approx(-m_half - 0.5, abs=1e-12)
    recon = dtn_multipliers(free_models[20], spec, 1.0, -1.0, 3)
    assert recon[0].value == pytest.approx(modes[0].value, abs=1e-10)


def test_dtn_direct_vs_reconstructed(cf3_models, cf3_jost):
    spec = shifted_momenta(sphere_spectrum(3, 2), 3)
    direct = dtn_multipliers(None, spec, 1.0, -1.0, 3, jost=cf3_jost, source="direct")
    recon = dtn_multipliers(cf3_models[25], spec, 1.0, -1.0, 3)
    for d, r in zip(direct[1:], recon[1:]):
        budget = truncation_budget(r.z, cf3_models[25])
        assert abs(d.value - r.value) <= budget


def test_dtn_mode_count(free_jost):
    raw = [(0.0, 1), (2.0, 3), (2.0, 1), (6.0, 5)]
    spec = shifted_momenta(raw, 3)
    modes = dtn_multipliers(None, spec, 1.0, -1.0, 3, jost=free_jost, source="direct")
    assert len(modes) == 3
    assert [m.multiplicity for m in modes] == [1, 4, 5]


def test_dtn_collision_flag():
    # sqrt(lam) = pi makes J_{1/2}(sqrt(lam)) = 0, so z = 1/2 is a pole
    J = jost_function(None, math.pi ** 2)
    spec = shifted_momenta([0.0, 2.0], 3)
    modes = dtn_multipliers(None, spec, 1.0, -1.0, 3, jost=J, source="direct")
    assert modes[0].collision and np.isnan(modes[0].value)
    assert not modes[1].collision


def test_contour_geometry():
    mu, dmu, (r, R1) = contour_gamma(3, 1.0, 0.7)
    assert r == pytest.approx((6 * np.pi + 0.7) / 2)
    assert R1 % 1 == 0.5 and abs(R1 - r) <= 1.0
    # closed curve with winding number one about the origin
    assert abs(np.sum(dmu)) < 1e-8 * r
    assert np.sum(dmu / mu) / (2j * np.pi) == pytest.approx(1.0, abs=1e-10)


def test_contour_proxy_decreases(cf3_jost, cf3_wide_poles):
    tau = choose_tau(cf3_jost, 1.0, range(2, 9))
    vals = [abs(contour_proxy(2.0, cf3_jost, 1.0, n, tau)) for n in range(2, 9)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # consistency: the proxy equals the residue sum over the poles it encloses
    n = 3
    inside = enclosed(list(cf3_wide_poles), n, 1.0, tau)
    model = build_weyl_model(cf3_jost, 1e9, poles=inside)
    direct = cf3_jost.m(2.0)
    proxy = contour_proxy(2.0, cf3_jost, 1.0, n, tau)
    assert abs(proxy - (reconstruct_m(2.0, model) - direct)) <= 1e-8 * abs(direct)
