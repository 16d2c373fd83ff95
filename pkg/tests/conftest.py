import numpy as np
import pytest

from blockssl import numcore as nc


def numeric_grad(fn, arrays, h=1e-5):
    """Central finite differences of scalar fn w.r.t. each array in `arrays`."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = fn()
            flat[i] = orig - h
            fm = fn()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def rel_err(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-10)
    return np.abs(a - b).max() / denom


def gradcheck(build, arrays, h=1e-5, tol=1e-5):
    """Compare autodiff gradients of scalar build(*tensors) with central FD.

    `build` receives Tensors wrapping `arrays` and returns a scalar Tensor.
    Returns the worst relative error over all inputs.
    """
    tensors = [nc.Tensor(a, requires_grad=True) for a in arrays]
    out = build(*tensors)
    out.backward()
    analytic = [t.grad.copy() for t in tensors]

    def value():
        with nc.no_grad():
            fresh = [nc.Tensor(a) for a in arrays]
            return build(*fresh).item()

    numeric = numeric_grad(value, arrays, h=h)
    worst = max(rel_err(a, n) for a, n in zip(analytic, numeric))
    assert worst < tol, f"gradient mismatch: rel err {worst:.3e} >= {tol}"
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
