"""Per-observation inverse weights 1 / pi_t(z) for each estimand."""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .density import DensityEstimates
from .kernels import KernelSpec, eval_kernel

log = logging.getLogger(__name__)

CLIP_WARN_FRACTION = 0.20


class Estimand(enum.Enum):
    """Which covariate distribution the effect is averaged over.

    UNWEIGHTED is the classic RD jump; W1 averages over the marginal of Z,
    W2 over the locally untreated, W3 over the locally randomized population.
    """

    UNWEIGHTED = "srd"
    W1 = "w1"
    W2 = "w2"
    W3 = "w3"

    @classmethod
    def parse(cls, value) -> "Estimand":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("unweighted", "rd"):
            return cls.UNWEIGHTED
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown estimand {value!r}; choose srd, w1, w2 or w3") from None


class WeightError(ValueError):
    pass


class OverlapWarning(UserWarning):
    """Many density denominators were floored: overlap at the cutoff is poor."""


@dataclass(frozen=True)
class WeightScheme:
    estimand: Estimand = Estimand.W1
    clip_epsilon: float = 1e-3
    pretreatment: bool = False

    def __post_init__(self):
        object.__setattr__(self, "estimand", Estimand.parse(self.estimand))
        if not self.clip_epsilon > 0:
            raise WeightError(f"clip_epsilon must be positive, got {self.clip_epsilon}")


@dataclass(frozen=True)
class ObservationWeights:
    treated_weights: np.ndarray
    control_weights: np.ndarray
    scale_note: dict
    estimand: Estimand = Estimand.UNWEIGHTED
    clipped_fraction: tuple[float, float] = (0.0, 0.0)

    def as_full(self, ds: Dataset) -> np.ndarray:
        """Weights laid out in the dataset's row order."""
        w = np.empty(ds.n)
        w[ds.above] = self.treated_weights
        w[~ds.above] = self.control_weights
        return w


def _floored(values: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    if values.size == 0:
        return values, 0.0
    top = values.max()
    if not top > 0:
        raise WeightError("density estimate is zero at every sample point")
    floor = eps * top
    hit = values < floor
    return np.maximum(values, floor), float(hit.mean())


def _normalize(w: np.ndarray) -> tuple[np.ndarray, float]:
    if w.size == 0:
        return w, 1.0
    m = w.mean()
    return w / m, float(m)


def build_weights(ds: Dataset, scheme: WeightScheme, dens: DensityEstimates | None) -> ObservationWeights:
    """Inverse weights on each side, rescaled to mean 1 per side.

    Only ratios of densities matter, so each side may be scaled freely.
    Denominators are floored at ``clip_epsilon`` times their largest value on
    that side; an ``OverlapWarning`` fires when more than 20% are floored.
    """
    above = ds.above
    n1, n0 = int(above.sum()), int((~above).sum())
    est = scheme.estimand
    if est is Estimand.UNWEIGHTED:
        return ObservationWeights(np.ones(n1), np.ones(n0), {"treated": 1.0, "control": 1.0}, est)
    if dens is None:
        raise WeightError(f"estimand {est.value} needs fitted densities")
    if dens.pretreatment != scheme.pretreatment:
        raise WeightError("densities were fitted with a different pretreatment flag than the scheme")

    z1, z0 = ds.z[above], ds.z[~above]
    if scheme.pretreatment:
        f1_at_1 = f0_at_1 = dens.f_xz_at_c(z1) if n1 else np.empty(0)
        f1_at_0 = f0_at_0 = dens.f_xz_at_c(z0) if n0 else np.empty(0)
    else:
        f1_at_1 = dens.f_xz1_at_c(z1) if n1 else np.empty(0)
        f0_at_0 = dens.f_xz0_at_c(z0) if n0 else np.empty(0)
        f0_at_1 = dens.f_xz0_at_c(z1) if n1 and est is not Estimand.W1 else None
        f1_at_0 = dens.f_xz1_at_c(z0) if n0 and est is Estimand.W3 else None

    eps = scheme.clip_epsilon
    d1, clip1 = _floored(np.asarray(f1_at_1, dtype=float), eps)
    d0, clip0 = _floored(np.asarray(f0_at_0, dtype=float), eps)

    if est is Estimand.W1:
        num1 = dens.f_z(z1) if n1 else np.empty(0)
        num0 = dens.f_z(z0) if n0 else np.empty(0)
        w1, w0 = num1 / d1, num0 / d0
    elif est is Estimand.W2:
        w1 = np.asarray(f0_at_1, dtype=float) / d1
        w0 = np.ones(n0)
        clip0 = 0.0
    else:
        w1 = (np.asarray(f0_at_1, dtype=float) + f1_at_1) / d1
        w0 = (np.asarray(f1_at_0, dtype=float) + f0_at_0) / d0

    # a zero numerator (e.g. no controls near z_i under W2) would drop the point
    for w in (w1, w0):
        if w.size and not np.all(np.isfinite(w)):
            raise WeightError("non-finite inverse weight")
    tiny1 = w1.max() * eps if w1.size and w1.max() > 0 else 1.0
    tiny0 = w0.max() * eps if w0.size and w0.max() > 0 else 1.0
    w1 = np.maximum(w1, tiny1)
    w0 = np.maximum(w0, tiny0)

    for side, frac in (("treated", clip1), ("control", clip0)):
        if frac > CLIP_WARN_FRACTION:
            warnings.warn(
                f"{frac:.0%} of {side}-side density denominators hit the floor; "
                "covariate overlap at the cutoff is poor",
                OverlapWarning, stacklevel=2,
            )
    w1, m1 = _normalize(w1)
    w0, m0 = _normalize(w0)
    return ObservationWeights(w1, w0, {"treated": m1, "control": m0}, est, (clip1, clip0))


# 1/pi_1 = factor * raw treated weight, where raw is the density ratio built above
_ABSOLUTE_FACTOR = {
    Estimand.UNWEIGHTED: lambda fx: 2.0 / fx,
    Estimand.W1: lambda fx: 2.0,
    Estimand.W2: lambda fx: 2.0 / fx,
    Estimand.W3: lambda fx: 1.0 / fx,
}


def normalization_check(ds: Dataset, weights: ObservationWeights, kernel: KernelSpec,
                        h: float, f_x_at_c: float | None = None) -> float:
    """Empirical analog of the normalization integral of w_1 on the treated side.

    Returns (1/n) sum_i T_i / pi_1(z_i) * K((x_i - c)/h) / h, the inverse
    weighted kernel mean of Y = 1, whose population value is 1. The side's
    mean-one rescaling is undone first so the weights are on the 1/pi scale.
    """
    above = ds.above
    if not above.any():
        return 0.0
    if f_x_at_c is None:
        from .density import f_x_at_cutoff
        f_x_at_c = f_x_at_cutoff(ds, kernel, h)
    if not f_x_at_c > 0:
        return 0.0
    k = eval_kernel(kernel, (ds.x[above] - ds.cutoff) / h)
    inv_pi = _ABSOLUTE_FACTOR[weights.estimand](f_x_at_c) * weights.scale_note["treated"] \
        * weights.treated_weights
    return float(np.sum(inv_pi * k) / (ds.n * h))
