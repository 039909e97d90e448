import numpy as np
import pytest

from warpball.jost import jost_function
from warpball.kernel import solve_kernel
from warpball.model import build_potential, template_spec
from warpball.poles import locate_poles


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def free_jost():
    """V = 0, lam = 1: psi(0, z) = J_z(1)."""
    return jost_function(None, lam=1.0)


@pytest.fixture(scope="session")
def cf3_spec():
    return template_spec(p=1, jump=1.0, lam=1.0, a=1.0)


@pytest.fixture(scope="session")
def cf3_kernel(cf3_spec):
    return solve_kernel(build_potential(cf3_spec), N=512)


@pytest.fixture(scope="session")
def cf3_jost(cf3_kernel):
    return jost_function(cf3_kernel)


@pytest.fixture(scope="session")
def cf3_poles(cf3_jost):
    return locate_poles((-12.0, 1.0, -30.0, 30.0), jost=cf3_jost, workers=4)


def random_cf3(rng, p=1):
    """A random single-piece template with a jump of moderate size."""
    jump = rng.uniform(0.3, 1.5) * rng.choice([-1.0, 1.0])
    a = rng.uniform(0.7, 1.5)
    lam = rng.uniform(0.5, 2.0)
    return template_spec(p=p, jump=jump, lam=lam, a=a)
