import logging

import numpy as np
import pytest
from scipy import integrate

from rdwate.data import Dataset
from rdwate.density import (DensityError, Side, f_x_at_cutoff, fit_densities,
                            fit_onesided_joint, fit_pretreatment_joint, fit_univariate_kde)
from rdwate.kernels import KernelSpec

U, T = KernelSpec.UNIFORM, KernelSpec.TRIANGULAR


def tiny(points, cutoff=0.0):
    x = np.array([p[0] for p in points], dtype=float)
    z = np.array([p[1] for p in points], dtype=float)
    return Dataset(y=np.zeros(len(points)), x=x, z=z, cutoff=cutoff)


class TestUnivariate:
    def test_single_point(self):
        f = fit_univariate_kde([0.0], U, 1.0)
        assert f(0.0) == 0.5
        assert f(2.0) == 0.0

    def test_two_points_triangular(self):
        assert fit_univariate_kde([-1.0, 1.0], T, 2.0)(0.0) == pytest.approx(0.25, abs=1e-15)

    def test_integrates_to_one(self, kernel, rng):
        v = rng.standard_normal(300)
        h = 0.4
        f = fit_univariate_kde(v, kernel, h)
        grid = np.linspace(v.min() - h, v.max() + h, 20001)
        assert abs(integrate.trapezoid(f(grid), grid) - 1.0) < 1e-4
        assert np.all(f(grid) >= 0)

    def test_errors(self):
        with pytest.raises(DensityError):
            fit_univariate_kde([], U, 1.0)
        with pytest.raises(DensityError):
            fit_univariate_kde([0.0], U, 0.0)


class TestOneSided:
    def test_single_treated_point(self):
        f = fit_onesided_joint(tiny([(0.1, 0.0)]), Side.TREATED, U, 1.0)
        assert f(0.0) == 0.5
        assert f(3.0) == 0.0

    def test_divisor_is_total_n(self):
        ds = tiny([(0.5, 0.0), (-0.5, 0.0)])
        assert fit_onesided_joint(ds, Side.TREATED, U, 1.0)(0.0) == 0.25

    def test_empty_side_errors(self):
        with pytest.raises(DensityError):
            fit_onesided_joint(tiny([(0.5, 0.0)]), Side.CONTROL, U, 1.0)

    def test_point_at_cutoff_is_control(self):
        ds = tiny([(0.0, 0.0), (0.3, 0.0)])
        # 2 / (2 * 1) * K(0) K(0) for the control point alone
        assert fit_onesided_joint(ds, Side.CONTROL, U, 1.0)(0.0) == 0.25

    def test_vectorized_matches_scalar(self, rng):
        ds = Dataset(y=np.zeros(200), x=rng.uniform(-1, 1, 200), z=rng.standard_normal(200))
        f = fit_onesided_joint(ds, Side.TREATED, T, 0.5)
        grid = np.linspace(-2, 2, 9)
        assert np.allclose(f(grid), [f(g) for g in grid], rtol=0, atol=1e-15)


class TestPretreatment:
    def test_single_point(self):
        assert fit_pretreatment_joint(tiny([(0.0, 0.0)]), U, 1.0)(0.0) == 0.25

    def test_far_point(self):
        assert fit_pretreatment_joint(tiny([(2.0, 0.0)]), U, 1.0)(0.0) == 0.0

    def test_two_points(self):
        assert fit_pretreatment_joint(tiny([(-0.5, 0.0), (0.5, 0.0)]), U, 1.0)(0.0) == 0.25

    def test_average_of_onesided(self, rng):
        # two-sided estimate is exactly the mean of the two one-sided ones
        n = 400
        ds = Dataset(y=np.zeros(n), x=rng.uniform(-1, 1, n), z=rng.standard_normal(n))
        both = fit_pretreatment_joint(ds, T, 0.6)
        f1 = fit_onesided_joint(ds, Side.TREATED, T, 0.6)
        f0 = fit_onesided_joint(ds, Side.CONTROL, T, 0.6)
        grid = np.linspace(-2.5, 2.5, 41)
        assert np.max(np.abs(both(grid) - 0.5 * (f1(grid) + f0(grid)))) < 1e-12


class TestFxAtCutoff:
    def test_trivial(self):
        assert f_x_at_cutoff(tiny([(0.0, 0.0)]), U, 1.0) == 0.5
        assert f_x_at_cutoff(tiny([(2.0, 0.0)]), U, 1.0) == 0.0

    def test_standard_normal(self):
        rng = np.random.default_rng(2024)
        n = 5000
        ds = Dataset(y=np.zeros(n), x=rng.standard_normal(n))
        h = 1.06 * n ** (-1 / 5)
        assert abs(f_x_at_cutoff(ds, T, h) - 0.3989) < 0.05


class TestFitDensities:
    def test_original_units(self, rng):
        # a covariate in different units gives the same density up to the Jacobian
        n = 1000
        x = rng.standard_normal(n)
        z = rng.standard_normal(n)
        a = fit_densities(Dataset(y=np.zeros(n), x=x, z=z), T, 0.5, 0.5)
        b = fit_densities(Dataset(y=np.zeros(n), x=x, z=100 * z), T, 0.5, 0.5)
        grid = np.linspace(-2, 2, 11)
        np.testing.assert_allclose(b.f_z(100 * grid) * 100, a.f_z(grid), rtol=1e-10)
        np.testing.assert_allclose(b.f_xz1_at_c(100 * grid) * 100, a.f_xz1_at_c(grid), rtol=1e-10)

    def test_needs_covariates(self, rng):
        with pytest.raises(DensityError):
            fit_densities(Dataset(y=np.zeros(20), x=rng.standard_normal(20)), T, 0.5, 0.5)

    def test_too_many_covariates(self, rng):
        ds = Dataset(y=np.zeros(50), x=rng.standard_normal(50), z=rng.standard_normal((50, 4)))
        with pytest.raises(DensityError):
            fit_densities(ds, T, 0.5, 0.5)

    def test_multivariate_logs_warning(self, rng, caplog):
        ds = Dataset(y=np.zeros(200), x=rng.standard_normal(200), z=rng.standard_normal((200, 2)))
        with caplog.at_level(logging.WARNING, logger="rdwate.density"):
            dens = fit_densities(ds, T, 0.8, 0.8)
        assert "dimensions" in caplog.text
        assert dens.f_z(np.zeros(2)) > 0

    def test_nonnegative(self, rng):
        ds = Dataset(y=np.zeros(300), x=rng.standard_normal(300), z=rng.standard_normal(300))
        dens = fit_densities(ds, KernelSpec.EPANECHNIKOV, 0.4, 0.4)
        grid = np.linspace(-4, 4, 81)
        for f in (dens.f_z, dens.f_xz1_at_c, dens.f_xz0_at_c):
            assert np.all(f(grid) >= 0)
