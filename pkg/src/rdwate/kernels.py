"""Compact-support kernels and their one-sided moment constants."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _accel


class KernelSpec(enum.Enum):
    UNIFORM = "uniform"
    TRIANGULAR = "triangular"
    EPANECHNIKOV = "epanechnikov"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def parse(cls, value: "str | KernelSpec") -> "KernelSpec":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown kernel {value!r}; choose one of {names}") from None


_CODES = {
    KernelSpec.UNIFORM: _accel.UNIFORM,
    KernelSpec.TRIANGULAR: _accel.TRIANGULAR,
    KernelSpec.EPANECHNIKOV: _accel.EPANECHNIKOV,
}

DEFAULT_KERNEL = KernelSpec.TRIANGULAR


class DegenerateMomentsError(ValueError):
    pass


@dataclass(frozen=True)
class KernelMoments:
    """One-sided moments of K and K**2 over u > 0.

    ``kappa[q]`` is the integral of K(u) u**q and ``kappa2[q]`` the integral of
    K(u)**2 u**q, for q = 0, 1, 2. ``cv`` is the boundary variance constant of
    the local linear intercept.
    """

    kappa: tuple[float, float, float]
    kappa2: tuple[float, float, float]
    cv: float


def eval_kernel(spec: KernelSpec, u):
    """K(u); scalar in, scalar out, array in, array out."""
    out = _accel.kernel_np(u, spec.code)
    return float(out) if np.ndim(out) == 0 else out


# Exact one-sided moments. Uniform: K = 1/2. Triangular: K = 1 - u.
# Epanechnikov: K = 3/4 (1 - u^2). Integrals over [0, 1].
_EXACT = {
    KernelSpec.UNIFORM: (
        (Fraction(1, 2), Fraction(1, 4), Fraction(1, 6)),
        (Fraction(1, 4), Fraction(1, 8), Fraction(1, 12)),
    ),
    KernelSpec.TRIANGULAR: (
        (Fraction(1, 2), Fraction(1, 6), Fraction(1, 12)),
        (Fraction(1, 3), Fraction(1, 12), Fraction(1, 30)),
    ),
    KernelSpec.EPANECHNIKOV: (
        (Fraction(1, 2), Fraction(3, 16), Fraction(1, 10)),
        (Fraction(3, 10), Fraction(3, 32), Fraction(3, 70)),
    ),
}


def _cv(kappa, kappa2):
    k0, k1, k2 = kappa
    k20, k21, k22 = kappa2
    den = k2 / 2 - k1 * k1
    if den <= 0:
        raise DegenerateMomentsError(f"kappa_2/2 - kappa_1^2 = {float(den)} is not positive")
    return (k2 * k2 * k20 + k1 * k1 * k22 - 2 * k1 * k2 * k21) / (den * den)


def cv_constant(m: KernelMoments) -> float:
    """Variance constant of the boundary local linear intercept.

    Raises DegenerateMomentsError when kappa_2 / 2 <= kappa_1 ** 2.
    """
    return float(_cv(m.kappa, m.kappa2))


@lru_cache(maxsize=None)
def kernel_moments(spec: KernelSpec) -> KernelMoments:
    kappa, kappa2 = _EXACT[spec]
    # exact rational arithmetic, rounded once
    cv = _cv(kappa, kappa2)
    return KernelMoments(
        kappa=tuple(float(v) for v in kappa),
        kappa2=tuple(float(v) for v in kappa2),
        cv=float(cv),
    )
