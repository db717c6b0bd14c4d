import numpy as np
import pytest

from rdwate.bandwidth import BandwidthSet
from rdwate.data import DataError, Dataset
from rdwate.diagnostics import covariate_jump_test, density_profile, jump_table
from rdwate.estimators import estimate_sharp
from rdwate.kernels import KernelSpec
from rdwate.simulation import generate_setting1, generate_setting2
from rdwate.weights import Estimand, WeightScheme

T = KernelSpec.TRIANGULAR


def test_detects_jump():
    res = covariate_jump_test(generate_setting2(5000, 1.0, 0), 0, T, 1.0, B=200, seed=0)
    assert abs(res.jump - 1.0) < 0.2 and res.z_score > 5


def test_null_is_quiet():
    res = covariate_jump_test(generate_setting1(5000, 2.0, 0), 0, T, 1.0, B=200, seed=0)
    assert abs(res.z_score) < 4


def test_gamma_zero_is_quiet():
    res = covariate_jump_test(generate_setting2(5000, 0.0, 2), 0, T, 1.0, B=100, seed=0)
    assert abs(res.z_score) < 4


def test_constant_covariate():
    ds = generate_setting1(500, 1.0, 0)
    ds = Dataset(y=ds.y, x=ds.x, z=np.full(ds.n, 3.0))
    res = covariate_jump_test(ds, 0, T, 0.8, B=50)
    assert (res.jump, res.se, res.z_score) == (0.0, 0.0, 0.0)


def test_outcome_as_covariate_reproduces_classic_rd():
    ds = generate_setting2(1000, 1.0, 4)
    as_z = Dataset(y=ds.y, x=ds.x, z=ds.y)
    res = covariate_jump_test(as_z, 0, T, 0.7, B=50)
    rd = estimate_sharp(ds, WeightScheme(Estimand.UNWEIGHTED), T, BandwidthSet(0.7, 0.7, 0.7))
    assert res.jump == rd.tau_hat


def test_bad_index():
    with pytest.raises(DataError):
        covariate_jump_test(generate_setting1(200, 1.0, 0), 1, T, 0.8)


def test_jump_table_one_row_per_covariate():
    ds = generate_setting2(800, 1.0, 1)
    ds = Dataset(y=ds.y, x=ds.x, z=np.column_stack([ds.z[:, 0], ds.x ** 2]))
    rows = jump_table(ds, T, 0.8, B=50, threads=2)
    assert [r.covariate for r in rows] == ["z1", "z2"]


GRID = np.linspace(-5, 6, 221)


class TestProfile:
    def test_balanced_curves_agree(self):
        prof = density_profile(generate_setting1(5000, 1.0, 1), 0, GRID, T, 0.5)
        assert np.max(np.abs(prof.left - prof.right)) < 0.1

    def test_shifted_covariate(self):
        prof = density_profile(generate_setting2(5000, 1.0, 0), 0, GRID, T, 0.5)
        shift = np.trapezoid(GRID * prof.right, GRID) - np.trapezoid(GRID * prof.left, GRID)
        assert abs(shift - 1.0) < 0.2

    def test_curves_are_densities(self):
        prof = density_profile(generate_setting2(3000, 1.0, 2), 0, GRID, T, 0.5)
        for curve in (prof.left, prof.right):
            assert np.all(curve >= 0)
            assert abs(np.trapezoid(curve, GRID) - 1.0) < 0.02

    def test_one_sided_data(self):
        rng = np.random.default_rng(0)
        ds = Dataset(y=np.zeros(300), x=rng.uniform(0.01, 1, 300), z=rng.standard_normal(300))
        prof = density_profile(ds, 0, GRID, T, 0.5)
        assert np.all(prof.left == 0.0)
        assert prof.right.max() > 0

    def test_csv(self):
        prof = density_profile(generate_setting1(500, 1.0, 1), 0, np.linspace(-3, 3, 5), T, 0.8)
        lines = prof.to_csv().splitlines()
        assert lines[0] == "z,left,right" and len(lines) == 6

    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            density_profile(generate_setting1(200, 1.0, 1), 0, [1.0, 0.0], T, 0.5)
