"""Kernel density estimators behind the plug-in weights.

All joint estimators use the product kernel K(u) * prod_k K(v_k) with one
bandwidth on every axis. ``fit_densities`` first rescales each covariate to
the running variable's standard deviation so that sharing that bandwidth
across axes is sensible; the low-level ``fit_*`` functions work in whatever
units they are handed.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _accel
from .data import Dataset
from .kernels import KernelSpec

log = logging.getLogger(__name__)

MAX_COVARIATES = 3


class DensityError(ValueError):
    pass


class Side(enum.Enum):
    TREATED = "treated"
    CONTROL = "control"


def side_mask(ds: Dataset, side: Side) -> np.ndarray:
    # x == c sits on the control side
    return ds.above if side is Side.TREATED else ~ds.above


def _as_points(z, p: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=np.float64)
    scalar = arr.ndim == 0 or (arr.ndim == 1 and p > 1 and arr.size == p)
    if p == 1:
        arr = arr.reshape(-1, 1)
    else:
        arr = arr.reshape(-1, p)
    return arr, scalar


class KDE:
    """A fitted kernel density estimate, evaluated by calling it.

    Evaluates ``scale * sum_j K((c - x_j) / bw) * prod_k K((z_k - z_jk) / bw_k)``
    where the running-variable factor is present only for joint densities at
    a fixed point ``c`` (``anchor``). Sample rows outside the anchor's support
    window are dropped at fit time since they can never contribute.
    """

    def __init__(self, zsample: np.ndarray, bw: np.ndarray, kernel: KernelSpec, scale: float,
                 anchor: float | None = None, xsample: np.ndarray | None = None,
                 hx: float | None = None):
        zsample = np.asarray(zsample, dtype=np.float64).reshape(len(zsample), -1)
        self.p = zsample.shape[1]
        self.kernel = kernel
        self.scale = float(scale)
        self.anchor = anchor
        self.zscale = np.ones(self.p)
        if anchor is not None:
            keep = np.abs(np.asarray(xsample) - anchor) <= hx
            cols = np.column_stack([zsample[keep], np.asarray(xsample)[keep]])
            bws = np.append(np.asarray(bw, dtype=np.float64), hx)
        else:
            cols = zsample
            bws = np.asarray(bw, dtype=np.float64)
        order = np.argsort(cols[:, 0], kind="stable")
        self.sample = np.ascontiguousarray(cols[order])
        self.bw = np.ascontiguousarray(bws)

    def __call__(self, z):
        pts, scalar = _as_points(z, self.p)
        pts = pts * self.zscale
        if self.anchor is not None:
            pts = np.column_stack([pts, np.full(pts.shape[0], self.anchor)])
        vals = self.scale * _accel.product_kde_sums(
            pts, self.sample, self.bw, self.kernel.code, presorted=True)
        return float(vals[0]) if scalar else vals


def _check_bw(name: str, h: float) -> None:
    if not (np.isfinite(h) and h > 0):
        raise DensityError(f"{name} must be positive, got {h}")


def fit_univariate_kde(values, kernel: KernelSpec, h2: float) -> KDE:
    """Standard KDE (n h2^p)^-1 sum K((z - z_i) / h2); product kernel when p > 1."""
    _check_bw("h2", h2)
    arr = np.asarray(values, dtype=np.float64)
    arr = arr.reshape(-1, 1) if arr.ndim <= 1 else arr
    n, p = arr.shape
    if n == 0:
        raise DensityError("cannot fit a density to an empty sample")
    return KDE(arr, np.full(p, h2), kernel, 1.0 / (n * h2 ** p))


def fit_onesided_joint(ds: Dataset, side: Side, kernel: KernelSpec, h1: float) -> KDE:
    """Boundary-corrected joint density of (X, Z(t)) at X = c from one side.

    The sum runs over the chosen side only while the divisor uses the total
    sample size; the factor 2 undoes the half-kernel mass lost at the boundary.
    """
    _check_bw("h1", h1)
    mask = side_mask(ds, side)
    if not mask.any():
        raise DensityError(f"no observations on the {side.value} side of the cutoff")
    p = ds.p
    return KDE(ds.z[mask], np.full(p, h1), kernel, 2.0 / (ds.n * h1 ** (p + 1)),
               anchor=ds.cutoff, xsample=ds.x[mask], hx=h1)


def fit_pretreatment_joint(ds: Dataset, kernel: KernelSpec, h1: float) -> KDE:
    """Two-sided joint density of (X, Z) at X = c, for pre-treatment covariates."""
    _check_bw("h1", h1)
    p = ds.p
    return KDE(ds.z, np.full(p, h1), kernel, 1.0 / (ds.n * h1 ** (p + 1)),
               anchor=ds.cutoff, xsample=ds.x, hx=h1)


def f_x_at_cutoff(ds: Dataset, kernel: KernelSpec, h2: float) -> float:
    return fit_univariate_kde(ds.x, kernel, h2)(ds.cutoff)


@dataclass(frozen=True)
class DensityEstimates:
    """Plug-in densities for one dataset.

    Callables take covariates in the dataset's original units. When
    ``pretreatment`` is set, ``f_xz_at_c`` holds the two-sided joint estimate
    and both one-sided fields point to it.
    """

    f_z: Callable
    f_x_at_c: float
    f_xz1_at_c: Callable
    f_xz0_at_c: Callable
    h1: float
    h2: float
    pretreatment: bool = False
    f_xz_at_c: Callable | None = None
    zscale: tuple[float, ...] = ()


def covariate_scale(ds: Dataset) -> np.ndarray:
    """Per-covariate factors mapping each column onto the running variable's spread."""
    sx = ds.x.std(ddof=1)
    sz = ds.z.std(axis=0, ddof=1)
    scale = np.ones(ds.p)
    ok = (sz > 0) & np.isfinite(sz)
    if sx > 0:
        scale[ok] = sx / sz[ok]
    return scale


def fit_densities(ds: Dataset, kernel: KernelSpec, h1: float, h2: float,
                  pretreatment: bool = False) -> DensityEstimates:
    if ds.p == 0:
        raise DensityError("density plug-in weights need at least one covariate")
    if ds.p > MAX_COVARIATES:
        raise DensityError(
            f"{ds.p} covariates given; kernel density weights support at most {MAX_COVARIATES}"
        )
    if ds.p > 1:
        log.warning("joint kernel density in %d dimensions: expect slow convergence", ds.p + 1)
    scale = covariate_scale(ds)
    scaled = Dataset(y=ds.y, x=ds.x, cutoff=ds.cutoff, z=ds.z * scale, t=ds.t, fuzzy=ds.fuzzy)

    f_z = fit_univariate_kde(scaled.z, kernel, h2)
    f_z.zscale = scale
    # Jacobian of the rescaling keeps f_z a density in original units
    f_z.scale *= float(np.prod(scale))
    fx = f_x_at_cutoff(ds, kernel, h2)
    if pretreatment:
        joint = fit_pretreatment_joint(scaled, kernel, h1)
        joint.zscale = scale
        joint.scale *= float(np.prod(scale))
        return DensityEstimates(f_z, fx, joint, joint, h1, h2, True, joint, tuple(scale))
    f1 = fit_onesided_joint(scaled, Side.TREATED, kernel, h1)
    f0 = fit_onesided_joint(scaled, Side.CONTROL, kernel, h1)
    for f in (f1, f0):
        f.zscale = scale
        f.scale *= float(np.prod(scale))
    return DensityEstimates(f_z, fx, f1, f0, h1, h2, False, None, tuple(scale))
