import numpy as np
import pytest

from promptforge.numerics import autodiff as ad


def central_difference(fn, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central finite-difference gradient of a scalar fn at x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(x)
        flat[i] = orig - h
        fm = fn(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray,
                      rel: float = 1e-4, abs_floor: float = 1e-6) -> None:
    """Relative error < rel, falling back to an absolute floor near zero."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    err = np.abs(analytic - numeric)
    ok = (err <= rel * denom) | (err <= abs_floor)
    assert np.all(ok), f"gradient mismatch: max abs err {err.max()}, max rel err {(err / np.maximum(denom, 1e-300)).max()}"


def check_op_gradient(build, x: np.ndarray, rel: float = 1e-4) -> None:
    """Compare tape gradients of scalar build(leaf) against central differences."""

    def scalar_fn(arr):
        return float(build(ad.constant(arr.copy())).value)

    lf = ad.leaf(x.copy())
    out = build(lf)
    _, (got,) = ad.evaluate_with_gradients(out, [lf])
    want = central_difference(scalar_fn, x.copy())
    assert_grad_close(got, want, rel=rel)


@pytest.fixture
def finite_diff():
    return central_difference
