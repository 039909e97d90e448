import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from warpball.errors import DomainError
from warpball.jost import (POLE, evaluate, identity_checks, jost_function, psi, psi_prime,
                           psi_unperturbed, weyl_m)
from warpball.kernel import solve_kernel
from warpball.model import WarpSpec, build_potential, constant_potential, template_spec
from warpball.special import loggamma

from conftest import random_cf3


def _ode_oracle(pot, lam, z, a):
    """Integrate psi'' = (z^2 - lam e^{-2x} + Q_f) psi from x = a down to 0."""
    t = math.sqrt(lam) * math.exp(-a)
    y0 = [complex(mp.besselj(z, t)), -t * complex(mp.diff(lambda s: mp.besselj(z, s), t))]

    def rhs(x, y):
        return [y[1], (z * z - lam * math.exp(-2 * x) + float(pot.q(x))) * y[0]]

    sol = solve_ivp(rhs, (a, 0.0), y0, method="DOP853", rtol=1e-12, atol=1e-14,
                    first_step=1e-4, max_step=a / 200)
    return sol.y[0, -1], sol.y[1, -1]


def _constant_well(c, a, z):
    mu = cmath.sqrt(z * z + c)
    e = cmath.exp(-a * z)
    return (e * (cmath.cosh(a * mu) + z / mu * cmath.sinh(a * mu)),
            e * (-mu * cmath.sinh(a * mu) - z * cmath.cosh(a * mu)))


def test_unperturbed_values():
    assert psi_unperturbed(0.0, 0.5, 1.0) == pytest.approx(0.6713967, abs=5e-8)
    assert abs(psi_unperturbed(40.0, 2.0 + 1j, 1.0)) <= 1e-30
    z, x = 1.3 - 2.2j, 0.4
    assert psi_unperturbed(x, np.conj(z), 2.0) == pytest.approx(np.conj(psi_unperturbed(x, z, 2.0)))


def test_zero_potential_matches_bessel(free_jost):
    for z in (0.5, 2.0 - 3j, -4.5 + 1j):
        assert free_jost.psi(z) == pytest.approx(complex(mp.besselj(z, 1)), rel=1e-12, abs=1e-15)
        dj = complex(mp.diff(lambda s: mp.besselj(z, s), 1))
        assert free_jost.psi_prime(z) == pytest.approx(-dj, rel=1e-12, abs=1e-15)


def test_zero_potential_kernel_equals_none():
    zero = WarpSpec(3, 1.0, 1.0, 1, (0.0, 1.0), ((0.0,),))
    J = jost_function(solve_kernel(build_potential(zero), N=128))
    z = np.array([0.3, 2 + 1j, -3.3 - 2j])
    assert np.allclose(J.psi(z), jost_function(None, 1.0).psi(z), rtol=1e-14, atol=0)


def test_constant_well_example():
    sol = solve_kernel(constant_potential(1.0, 1.0), N=512)
    v, d = _constant_well(1.0, 1.0, 1.0)
    assert v == pytest.approx(1.3046, abs=1e-4)
    assert psi(1.0, sol, 0.0) == pytest.approx(v, abs=1e-9)
    assert psi_prime(1.0, sol, 0.0) == pytest.approx(d, abs=1e-8)


def test_constant_well_complex_points(rng):
    c, a = -0.7, 1.4
    J = jost_function(solve_kernel(constant_potential(c, a), N=512), 0.0)
    for _ in range(20):
        z = complex(rng.uniform(-4, 6), rng.uniform(-6, 6))
        v, d = _constant_well(c, a, z)
        assert abs(J.psi(z) - v) <= 1e-8 * max(1.0, abs(v))
        assert abs(J.psi_prime(z) - d) <= 1e-7 * max(1.0, abs(d))


@pytest.mark.parametrize("z", [0.5, 2.0 + 1.5j, -1.7 + 0.4j, 4.0 - 6.0j])
def test_matches_ode_oracle(cf3_spec, cf3_kernel, cf3_jost, z):
    pot = build_potential(cf3_spec)
    v, d = _ode_oracle(pot, cf3_spec.lam, z, cf3_spec.a)
    assert abs(cf3_jost.psi(z) - v) <= 1e-9 * max(1.0, abs(v))
    assert abs(cf3_jost.psi_prime(z) - d) <= 1e-8 * max(1.0, abs(d))


def test_wronskian_at_example_point(cf3_kernel):
    target = 2 * math.sin(0.3 * math.pi) / math.pi
    assert target == pytest.approx(0.51504, abs=5e-6)
    w, r = identity_checks(0.3, cf3_kernel)
    assert w < 1e-8
    assert r < 1e-8


def test_integer_wronskian_target_zero(cf3_jost):
    for n in (1, 2, 3):
        w = (cf3_jost.psi(n) * cf3_jost.psi_prime(-n) - cf3_jost.psi_prime(n) * cf3_jost.psi(-n))
        assert abs(w) <= 1e-10


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_identities_random_potential(seed):
    rng = np.random.default_rng(seed)
    sol = solve_kernel(build_potential(random_cf3(rng)), N=512)
    w, r = identity_checks(0.5 + 0.5j, sol)
    assert w < 1e-7 and r < 1e-7


def test_conjugation_symmetry(cf3_jost, rng):
    z = rng.uniform(-8, 8, 30) + 1j * rng.uniform(-8, 8, 30)
    a, b = cf3_jost.psi(z), cf3_jost.psi(np.conj(z))
    assert np.all(np.abs(b - np.conj(a)) <= 1e-13 * np.maximum(1.0, np.abs(a)))


def test_cauchy_formula_center_value(cf3_jost):
    for z0 in (0.0, -2.5 + 3j, 5.0 - 1j):
        nodes = z0 + 0.3 * np.exp(2j * np.pi * np.arange(64) / 64)
        assert abs(np.mean(cf3_jost.psi(nodes)) - cf3_jost.psi(z0)) <= 1e-8 * max(1, abs(cf3_jost.psi(z0)))


def test_analytic_z_derivative(cf3_jost):
    for z0 in (0.7, -3.2 + 2j):
        nodes = z0 + 0.1 * np.exp(2j * np.pi * np.arange(32) / 32)
        d_circle = np.mean(cf3_jost.psi(nodes) * np.exp(-2j * np.pi * np.arange(32) / 32)) / 0.1
        assert abs(cf3_jost.psi_dz(z0) - d_circle) <= 1e-8 * max(1.0, abs(d_circle))


def test_growth_order_one(cf3_jost, rng):
    r = np.linspace(10, 60, 11)
    theta = rng.uniform(0, 2 * np.pi, 80)
    logs = [np.max(np.log(np.abs(cf3_jost.psi(rr * np.exp(1j * theta))))) for rr in r]
    basis = np.column_stack([r * np.log(r), r, np.ones_like(r)])
    assert np.linalg.lstsq(basis, logs, rcond=None)[0][0] <= 1.1


def test_right_half_plane_normalization(cf3_jost):
    z = 40 * np.exp(1j * np.linspace(-np.pi / 2, np.pi / 2, 181))
    assert np.max(np.abs(cf3_jost.psi_tilde(z)[0] - 1)) <= 0.2


def test_left_sector_asymptotics(cf3_kernel, cf3_jost):
    # psi ~ -D lam^{z/2} e^{-2az} / (2^z Gamma(z+1) z^{p+1}), D = d_s^p K(0, 2a-)
    D, p, a = cf3_kernel.jump_s_p, cf3_kernel.p, cf3_kernel.a
    devs = []
    for r in (20, 30, 40, 50):
        z = r * np.exp(1j * (np.pi - np.pi / 8))
        log_pred = (np.log(-D + 0j) + z * np.log(math.sqrt(cf3_kernel.lam) / 2) - 2 * a * z
                    - loggamma(z + 1) - (p + 1) * np.log(z))
        devs.append(abs(cf3_jost.psi(z) / np.exp(log_pred) - 1))
    assert devs[-1] <= 0.3
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_m_growth_and_large_real_limit(free_jost):
    for r in (20.0, 40.0, 80.0):
        assert abs(free_jost.m(r * np.exp(0.3j))) <= 2 * r
    assert free_jost.m(60.0) / -60.0 == pytest.approx(1.0, abs=0.01)


def test_pole_flag(free_jost):
    z0 = float(mp.findroot(lambda z: mp.besselj(z, 1), -1.0))
    ev = evaluate(z0, None, 1.0)
    assert ev.at_pole and ev.m is POLE
    assert weyl_m(z0, None, 1.0) is POLE
    assert not evaluate(z0 + 1e-3, None, 1.0).at_pole
    assert np.isnan(free_jost.m(z0))


def test_lambda_mismatch_rejected(cf3_kernel):
    with pytest.raises(DomainError):
        jost_function(cf3_kernel, lam=2.0)
