"""The numba kernels and their numpy twins must agree."""

import numpy as np
import pytest

from rdwate import _accel
from rdwate.bandwidth import couple_bandwidths, cv_curve
from rdwate.estimators import point_fit
from rdwate.kernels import KernelSpec
from rdwate.simulation import generate_setting2
from rdwate.weights import Estimand, WeightScheme

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def both(fn):
    original = _accel.get_backend()
    try:
        _accel.set_backend("numpy")
        a = fn()
        _accel.set_backend("numba")
        b = fn()
    finally:
        _accel.set_backend(original)
    return a, b


@pytest.mark.parametrize("family", [_accel.UNIFORM, _accel.TRIANGULAR, _accel.EPANECHNIKOV])
@pytest.mark.parametrize("dim", [1, 2, 4])
def test_product_kde_sums_agree(family, dim, rng):
    s = rng.standard_normal((300, dim))
    q = rng.standard_normal((50, dim))
    bw = rng.uniform(0.2, 1.5, dim)
    a, b = both(lambda: _accel.product_kde_sums(q, s, bw, family))
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_product_kde_sums_brute_force(rng):
    s = rng.standard_normal((40, 2))
    q = rng.standard_normal((7, 2))
    bw = np.array([0.7, 0.9])
    expected = [sum(max(0.0, 1 - abs((qi[0] - sj[0]) / bw[0])) * max(0.0, 1 - abs((qi[1] - sj[1]) / bw[1]))
                    for sj in s) for qi in q]
    a, b = both(lambda: _accel.product_kde_sums(q, s, bw, _accel.TRIANGULAR))
    np.testing.assert_allclose(a, expected, rtol=1e-12)
    np.testing.assert_allclose(b, expected, rtol=1e-12)


def test_empty_sample_gives_zeros():
    out = _accel.product_kde_sums(np.zeros((3, 1)), np.zeros((0, 1)), np.ones(1), _accel.UNIFORM)
    assert np.array_equal(out, np.zeros(3))


@pytest.mark.parametrize("is_left", [True, False])
def test_onesided_loo_sse_agree(is_left, rng):
    xs = np.sort(rng.uniform(-1, 0, 200)) if is_left else np.sort(rng.uniform(0, 1, 200))
    ys = 1 + xs + rng.standard_normal(200)
    idx = np.flatnonzero(np.abs(xs) < 0.5)
    for h in (0.05, 0.2, 0.6):
        a, b = both(lambda: _accel.onesided_loo_sse(xs, ys, is_left, idx, h, _accel.TRIANGULAR))
        if np.isnan(a):
            assert np.isnan(b)
        else:
            assert abs(a - b) < 1e-10 * max(1.0, abs(a))


def test_pipeline_agrees_across_backends():
    ds = generate_setting2(1500, 1.0, 3)
    bw = couple_bandwidths(0.6, False, ds.x.std(ddof=1))
    for est in Estimand:
        a, b = both(lambda: point_fit(ds, WeightScheme(est), KernelSpec.TRIANGULAR, bw).tau)
        assert abs(a - b) < 1e-10
    grid = np.linspace(0.2, 1.0, 5)
    a, b = both(lambda: cv_curve(ds, KernelSpec.TRIANGULAR, grid))
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")
