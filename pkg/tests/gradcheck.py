"""Central-difference gradient checks shared by the test modules."""
import numpy as np

STEP = 1e-5


def numeric_grad(f, x):
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + STEP
        plus = f()
        x[idx] = old - STEP
        minus = f()
        x[idx] = old
        grad[idx] = (plus - minus) / (2 * STEP)
    return grad


def assert_grad_close(analytic, numeric, rtol=1e-4, atol=1e-7):
    np.testing.assert_allclose(analytic, numeric, rtol=rtol, atol=atol)
