"""Compiled and pure-Python integrator cores must agree bit for bit."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from gimbench import kernels
from gimbench.kernels import python_backend

compiled = kernels.compiled_backend
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")

I, KG, KF, B = 1.319325e-4, 8.33565e-6, 9.93643e-5, 4.14645e-4


def test_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


@needs_ext
@given(tau=st.lists(st.floats(-2e-5, 2e-5), min_size=1, max_size=6),
       th0=st.floats(-0.2, 0.2), n=st.integers(1, 400), start=st.integers(0, 50))
def test_constant_backends_identical(tau, th0, n, start):
    m = len(tau)
    start = min(start, n)
    args = ([I] * m, [KG] * m, [KF] * m, [B] * m, tau, [th0] * m, [0.0] * m, 1e-3, n, start)
    a = compiled.integrate_constant(*args)
    b = python_backend.integrate_constant(*args)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_array_equal(a[2], b[2])
    np.testing.assert_array_equal(a[3], b[3])


@needs_ext
def test_sampled_backends_identical():
    n = 500
    tq = 1e-5 * np.sin(np.linspace(0, 6, 2 * n + 1))
    a = compiled.integrate_sampled(I, KG, KF, B, tq, 0.01, 0.0, 1e-3, n)
    b = python_backend.integrate_sampled(I, KG, KF, B, tq, 0.01, 0.0, 1e-3, n)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert a[2] == b[2] == -1


@pytest.mark.parametrize("backend", [python_backend] + ([compiled] if compiled else []),
                         ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_divergence_flagged_and_masked(backend):
    # undamped, weak spring, large torque: angle runs past pi/2
    rec, th, _, div = backend.integrate_constant([1e-8, I], [0.0, KG], [1e-9, KF], [0.0, B],
                                                 [1e-5, 1e-6], [0.0, 0.0], [0.0, 0.0], 1e-3, 200, 0)
    assert div[0] > 0 and div[1] == -1
    assert np.isnan(rec[0, div[0] + 1:]).all()
    assert np.isfinite(rec[1]).all()


def test_record_from_out_of_range():
    with pytest.raises(ValueError):
        python_backend.integrate_constant([I], [KG], [KF], [B], [0.0], [0.0], [0.0], 1e-3, 10, 11)


def test_sampled_length_checked():
    with pytest.raises(ValueError):
        python_backend.integrate_sampled(I, KG, KF, B, np.zeros(5), 0.0, 0.0, 1e-3, 10)
