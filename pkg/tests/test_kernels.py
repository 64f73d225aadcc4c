import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biconsurf import kernels

CASES = [(o, p, a) for o in (1, 2) for p in (True, False) for a in (0, 1)]


@pytest.mark.parametrize("order,periodic,axis", CASES)
def test_backends_agree(order, periodic, axis, rng):
    f = rng.standard_normal((17, 23))
    a = kernels.derivative(f, 0.37, axis, order, periodic, backend="numba")
    b = kernels.derivative(f, 0.37, axis, order, periodic, backend="numpy")
    np.testing.assert_allclose(a, b, atol=1e-12, rtol=0)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    order=st.sampled_from([1, 2]),
    periodic=st.booleans(),
    axis=st.sampled_from([0, 1]),
    n=st.integers(4, 12),
    m=st.integers(4, 12),
)
def test_backends_agree_property(seed, order, periodic, axis, n, m):
    f = np.random.default_rng(seed).standard_normal((n, m))
    a = kernels.derivative(f, 0.1, axis, order, periodic, backend="numba")
    b = kernels.derivative(f, 0.1, axis, order, periodic, backend="numpy")
    np.testing.assert_allclose(a, b, atol=1e-10, rtol=0)


@pytest.mark.parametrize("periodic", [True, False])
def test_second_order_accuracy(periodic):
    errs = []
    for n in (32, 64):
        if periodic:
            x = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
            h = 2.0 * np.pi / n
        else:
            x = np.linspace(0.0, 1.0, n)
            h = 1.0 / (n - 1)
        f = np.sin(x)[:, None] * np.ones((1, 5))
        d1 = kernels.derivative(f, h, 0, 1, periodic)
        d2 = kernels.derivative(f, h, 0, 2, periodic)
        e1 = np.max(np.abs(d1[:, 0] - np.cos(x)))
        e2 = np.max(np.abs(d2[:, 0] + np.sin(x)))
        errs.append(max(e1, e2))
    order = np.log2(errs[0] / errs[1])
    assert order > 1.8


def test_polynomials_exact_nonperiodic():
    # the clamped stencils are exact on quadratics, including the edges
    n = 16
    x = np.linspace(-1.0, 2.0, n)
    h = x[1] - x[0]
    f = (3.0 * x**2 - 2.0 * x + 1.0)[:, None] * np.ones((1, 4))
    d1 = kernels.derivative(f, h, 0, 1, periodic=False)
    d2 = kernels.derivative(f, h, 0, 2, periodic=False)
    np.testing.assert_allclose(d1[:, 0], 6.0 * x - 2.0, atol=1e-12)
    np.testing.assert_allclose(d2[:, 0], 6.0, atol=1e-11)


def test_complex_input(rng):
    f = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    d = kernels.derivative(f, 0.2, 1, 1, periodic=True)
    np.testing.assert_allclose(
        d, kernels.derivative(f.real, 0.2, 1, 1, True) + 1j * kernels.derivative(f.imag, 0.2, 1, 1, True)
    )


def test_axis1_matches_transposed_axis0(rng):
    f = rng.standard_normal((9, 14))
    a = kernels.derivative(f, 0.3, 1, 2, periodic=False)
    b = kernels.derivative(f.T, 0.3, 0, 2, periodic=False).T
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_validation_errors():
    f = np.zeros((8, 8))
    with pytest.raises(ValueError):
        kernels.derivative(f, 0.1, 0, 3, True)
    with pytest.raises(ValueError):
        kernels.derivative(f, 0.1, 2, 1, True)
    with pytest.raises(ValueError):
        kernels.derivative(np.zeros((3, 8)), 0.1, 0, 1, True)


def test_backend_name_reports_active():
    assert kernels.backend_name() in ("numba", "numpy")
