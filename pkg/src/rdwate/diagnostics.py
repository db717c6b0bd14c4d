"""Checks for covariate discontinuities at the cutoff.

If the covariates are balanced at the cutoff, their conditional mean given
the running variable is continuous there. ``covariate_jump_test`` measures
the jump in that mean. Only the mean is tested, not the full distribution;
``density_profile`` gives the two one-sided conditional densities for a
visual check.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .data import DataError, Dataset
from .density import Side, covariate_scale, fit_onesided_joint
from .estimators import local_linear_rd
from .inference import InferenceConfig, Method, _summarize, bootstrap_replicates, parallel_map
from .kernels import KernelSpec


@dataclass(frozen=True)
class JumpTest:
    covariate: str
    jump: float
    se: float
    z_score: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_index(ds: Dataset, j: int) -> None:
    if not 0 <= j < ds.p:
        raise DataError(f"covariate index {j} out of range; dataset has {ds.p} covariates")


def covariate_jump_test(ds: Dataset, j: int, kernel: KernelSpec, h: float,
                        B: int = 200, seed: int = 0, threads: int = 1) -> JumpTest:
    """Local linear jump in E[Z_j | X] at the cutoff, with a pairs-bootstrap SE.

    A constant covariate returns jump, se and z-score all zero.
    """
    _check_index(ds, j)
    name = ds.covariate_names[j]
    zj = ds.z[:, j]
    if np.ptp(zj) == 0:
        return JumpTest(name, 0.0, 0.0, 0.0)
    target = ds.with_outcome(zj)
    jump = local_linear_rd(target, kernel, h)
    inf = InferenceConfig(Method.BOOTSTRAP, B=B, seed=seed, threads=threads)
    reps = bootstrap_replicates(target, lambda rep: local_linear_rd(rep, kernel, h), inf)
    se = _summarize(reps, B)
    if se > 0:
        z = jump / se
    else:
        # every resample gave the same jump
        z = math.copysign(math.inf, jump) if jump else 0.0
    return JumpTest(name, float(jump), float(se), float(z))


def jump_table(ds: Dataset, kernel: KernelSpec, h: float, B: int = 200, seed: int = 0,
               threads: int = 1) -> list[JumpTest]:
    """One jump test per covariate; covariates are run in parallel."""
    return parallel_map(lambda j: covariate_jump_test(ds, j, kernel, h, B, seed),
                        range(ds.p), threads)


@dataclass(frozen=True)
class DensityProfile:
    covariate: str
    grid: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "left", "right"])
        for z, lo, hi in zip(self.grid, self.left, self.right):
            w.writerow([repr(float(z)), repr(float(lo)), repr(float(hi))])
        return buf.getvalue()


def _normalized(vals: np.ndarray, grid: np.ndarray) -> np.ndarray:
    area = np.trapezoid(vals, grid)
    return vals / area if area > 0 else np.zeros_like(vals)


def density_profile(ds: Dataset, j: int, grid, kernel: KernelSpec, h1: float) -> DensityProfile:
    """Left and right one-sided joint densities of (X, Z_j) at the cutoff, along ``grid``.

    Each curve is divided by its trapezoid integral over the grid, so it reads
    as the conditional density of Z_j just below / above the cutoff. A side
    with no observations yields a curve of zeros.
    """
    _check_index(ds, j)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("profile grid must be strictly increasing with at least two points")
    single = Dataset(y=ds.y, x=ds.x, cutoff=ds.cutoff, z=ds.z[:, j], t=ds.t, fuzzy=ds.fuzzy)
    scale = covariate_scale(single)
    scaled = Dataset(y=ds.y, x=ds.x, cutoff=ds.cutoff, z=single.z * scale, t=ds.t, fuzzy=ds.fuzzy)
    curves = {}
    for side in (Side.CONTROL, Side.TREATED):
        mask = scaled.above if side is Side.TREATED else ~scaled.above
        if not mask.any():
            curves[side] = np.zeros(grid.size)
            continue
        f = fit_onesided_joint(scaled, side, kernel, h1)
        curves[side] = _normalized(f(grid * scale[0]), grid)
    return DensityProfile(ds.covariate_names[j], grid, curves[Side.CONTROL], curves[Side.TREATED])
