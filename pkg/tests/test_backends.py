import numpy as np
import pytest

from warpball import _accel

backends = _accel.available_backends()
needs_both = pytest.mark.skipif("cython" not in backends, reason="compiled extension not built")


def test_numpy_backend_always_available():
    assert "numpy" in backends
    assert _accel.BACKEND in backends


@pytest.fixture
def fields():
    rng = np.random.default_rng(7)
    N = 200
    return (np.tril(rng.standard_normal((N + 1, N + 1))), np.tril(rng.standard_normal((N + 1, N + 1))),
            1.0 / N, rng)


@needs_both
@pytest.mark.parametrize("name", ["rowcum", "colcum_rev"])
def test_cumulative_integrals_agree(fields, name):
    W, _, h, _ = fields
    a = getattr(backends["cython"], name)(W, h)
    b = getattr(backends["numpy"], name)(W, h)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(b)))


@needs_both
def test_picard_apply_agrees(fields):
    W, L, h, _ = fields
    a = backends["cython"].picard_apply(W, L, h)
    b = backends["numpy"].picard_apply(W, L, h)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(b)))


@needs_both
def test_filon_agrees(fields):
    _, _, h, rng = fields
    G = rng.standard_normal((401, 3))
    w = np.concatenate([rng.uniform(-2, 40, 200) + 1j * rng.uniform(-40, 40, 200), [0.0, 1e-9]])
    a = backends["cython"].filon_laplace(G, h, w)
    b = backends["numpy"].filon_laplace(G, h, w)
    assert np.max(np.abs(a - b)) <= 1e-11 * max(1.0, np.max(np.abs(b)))


def test_rowcum_integrates_polynomials_exactly():
    # the fourth-order rule is exact for cubics
    mod = backends["numpy"]
    N = 64
    x = np.arange(N + 1) / N
    F = np.tril(np.broadcast_to(x ** 3, (N + 1, N + 1)))
    C = mod.rowcum(F, 1.0 / N)
    assert C[N, N] == pytest.approx(0.25, abs=1e-14)
