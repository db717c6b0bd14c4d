"""The observed RD sample."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    pass


MIN_OBS = 10


@dataclass(frozen=True)
class Dataset:
    """Outcome, running variable, covariates and treatment for one RD sample.

    ``z`` is stored as an (n, p) array, p >= 0. ``t`` defaults to the sharp
    assignment 1(x > cutoff); observations exactly at the cutoff are controls.
    Tiny samples are allowed here so density estimators can be checked by
    hand; estimation and CSV loading call ``require_min_obs``.
    """

    y: np.ndarray
    x: np.ndarray
    cutoff: float = 0.0
    z: np.ndarray | None = None
    t: np.ndarray | None = None
    fuzzy: bool = False
    covariate_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64).ravel()
        x = np.asarray(self.x, dtype=np.float64).ravel()
        if y.shape != x.shape:
            raise DataError(f"y has {y.size} rows but x has {x.size}")
        n = y.size
        if n == 0:
            raise DataError("dataset has no observations")
        if self.z is None:
            z = np.empty((n, 0))
        else:
            z = np.asarray(self.z, dtype=np.float64)
            if z.ndim == 1:
                z = z[:, None]
            if z.shape[0] != n:
                raise DataError(f"z has {z.shape[0]} rows, expected {n}")
        for name, arr in (("y", y), ("x", x), ("z", z)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contains missing or non-finite values")
        sharp_t = (x > self.cutoff).astype(np.float64)
        if self.t is None:
            if self.fuzzy:
                raise DataError("fuzzy design needs an observed treatment column")
            t = sharp_t
        else:
            t = np.asarray(self.t, dtype=np.float64).ravel()
            if t.shape != x.shape:
                raise DataError(f"t has {t.size} rows, expected {n}")
            if not np.all((t == 0) | (t == 1)):
                raise DataError("t must be 0/1")
            if not self.fuzzy:
                bad = np.flatnonzero(t != sharp_t)
                if bad.size:
                    raise DataError(
                        f"row {bad[0]}: t={t[bad[0]]:g} contradicts sharp assignment "
                        f"1(x > {self.cutoff:g}) at x={x[bad[0]]:g}"
                    )
        names = tuple(self.covariate_names) or tuple(f"z{k + 1}" for k in range(z.shape[1]))
        if len(names) != z.shape[1]:
            raise DataError("covariate_names does not match the number of covariate columns")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "cutoff", float(self.cutoff))
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.z.shape[1]

    @property
    def above(self) -> np.ndarray:
        """Mask of the treated side of the cutoff, x > c."""
        return self.x > self.cutoff

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            y=self.y[idx], x=self.x[idx], cutoff=self.cutoff, z=self.z[idx],
            t=self.t[idx], fuzzy=self.fuzzy, covariate_names=self.covariate_names,
        )

    def with_outcome(self, y: np.ndarray) -> "Dataset":
        return Dataset(
            y=y, x=self.x, cutoff=self.cutoff, z=self.z, t=self.t,
            fuzzy=self.fuzzy, covariate_names=self.covariate_names,
        )


def require_min_obs(ds: Dataset) -> None:
    if ds.n < MIN_OBS:
        raise DataError(f"need at least {MIN_OBS} observations, got {ds.n}")
