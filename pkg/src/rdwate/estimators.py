"""Weighted local linear fits and the sharp / fuzzy effect estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bandwidth import BandwidthSet
from .data import Dataset, require_min_obs
from .density import DensityEstimates, fit_densities
from .kernels import KernelSpec, eval_kernel
from .weights import Estimand, ObservationWeights, WeightScheme, build_weights

MIN_SUPPORT = 3
WEAK_FIRST_STAGE = 0.05


class EstimationError(ValueError):
    pass


class InsufficientSupportError(EstimationError):
    pass


class SingularDesignError(EstimationError):
    pass


class WeakFirstStageError(EstimationError):
    pass


@dataclass(frozen=True)
class SideFit:
    alpha: float
    beta: float
    n_effective: int


def wll_side_fit(x: np.ndarray, y: np.ndarray, invweights, kernel: KernelSpec,
                 h: float, cutoff: float) -> SideFit:
    """Closed-form minimizer of sum w_i (y_i - a - (x_i - c) b)^2 K((x_i - c)/h).

    ``invweights=None`` means unit weights. The 2x2 normal equations are solved
    after centering at the weighted mean of x - c.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = x - cutoff
    k = eval_kernel(kernel, d / h)
    k = np.atleast_1d(k)
    eff = k > 0
    n_eff = int(eff.sum())
    if n_eff < MIN_SUPPORT:
        raise InsufficientSupportError(
            f"only {n_eff} observations inside the bandwidth h={h:g}; need {MIN_SUPPORT}")
    d, y, k = d[eff], y[eff], k[eff]
    w = k if invweights is None else np.asarray(invweights, dtype=np.float64)[eff] * k
    if np.ptp(d) == 0:
        raise SingularDesignError("all observations inside the bandwidth share one x value")
    sw = w.sum()
    dbar = (w * d).sum() / sw
    ybar = (w * y).sum() / sw
    dc = d - dbar
    sxx = (w * dc * dc).sum()
    if not sxx > 0:
        raise SingularDesignError("weighted design has no spread in x")
    beta = (w * dc * (y - ybar)).sum() / sxx
    alpha = ybar - beta * dbar
    return SideFit(float(alpha), float(beta), n_eff)


@dataclass
class EstimateResult:
    tau_hat: float
    side_fits: dict
    se: float
    ci: tuple[float, float]
    bandwidths: BandwidthSet
    estimand: str
    kernel: str
    fuzzy: bool = False
    first_stage: float | None = None
    inference: str = "none"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        fits = {k: {"alpha": f.alpha, "beta": f.beta, "n_effective": f.n_effective}
                for k, f in self.side_fits.items()}
        out = {
            "tau_hat": self.tau_hat,
            "se": self.se,
            "ci": list(self.ci),
            "side_fits": fits,
            "bandwidths": {"h": self.bandwidths.h, "h1": self.bandwidths.h1,
                           "h2": self.bandwidths.h2},
            "estimand": self.estimand,
            "kernel": self.kernel,
            "fuzzy": self.fuzzy,
            "first_stage": self.first_stage,
            "inference": self.inference,
        }
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class PointFit:
    """Everything one pass of the pipeline produces, before inference."""

    tau: float
    treated: SideFit
    control: SideFit
    weights: ObservationWeights
    densities: DensityEstimates | None
    kernel: KernelSpec = KernelSpec.TRIANGULAR


def fit_sides(ds: Dataset, w: ObservationWeights, kernel: KernelSpec, h: float,
              y: np.ndarray | None = None) -> tuple[SideFit, SideFit]:
    y = ds.y if y is None else y
    above = ds.above
    treated = wll_side_fit(ds.x[above], y[above], w.treated_weights, kernel, h, ds.cutoff)
    control = wll_side_fit(ds.x[~above], y[~above], w.control_weights, kernel, h, ds.cutoff)
    return treated, control


def point_fit(ds: Dataset, scheme: WeightScheme, kernel: KernelSpec, bw: BandwidthSet,
              y: np.ndarray | None = None) -> PointFit:
    """Densities, weights and both side fits for one dataset."""
    require_min_obs(ds)
    dens = None
    if scheme.estimand is not Estimand.UNWEIGHTED:
        dens = fit_densities(ds, kernel, bw.h1, bw.h2, scheme.pretreatment)
    w = build_weights(ds, scheme, dens)
    treated, control = fit_sides(ds, w, kernel, bw.h, y)
    return PointFit(treated.alpha - control.alpha, treated, control, w, dens, kernel)


def local_linear_rd(ds: Dataset, kernel: KernelSpec, h: float) -> float:
    """The standard (covariate-free) local linear RD jump estimate."""
    above = ds.above
    t = wll_side_fit(ds.x[above], ds.y[above], None, kernel, h, ds.cutoff)
    c = wll_side_fit(ds.x[~above], ds.y[~above], None, kernel, h, ds.cutoff)
    return t.alpha - c.alpha


def _attach_inference(result: EstimateResult, ds: Dataset, scheme, kernel, bw, inference, pf):
    if inference is None:
        return result
    from .inference import run_inference

    se, ci, label = run_inference(ds, scheme, kernel, bw, inference, result.tau_hat, pf,
                                  fuzzy=result.fuzzy)
    result.se, result.ci, result.inference = se, ci, label
    return result


def estimate_sharp(ds: Dataset, scheme: WeightScheme, kernel: KernelSpec, bw: BandwidthSet,
                   inference=None) -> EstimateResult:
    """Weighted local linear estimate of the sharp-design effect.

    With ``inference=None`` only the point estimate is computed and ``se``/``ci``
    are NaN. Pass an ``InferenceConfig`` for bootstrap or plug-in errors.
    """
    if ds.fuzzy:
        raise EstimationError("dataset is marked fuzzy; use estimate_fuzzy")
    pf = point_fit(ds, scheme, kernel, bw)
    result = EstimateResult(
        tau_hat=pf.tau,
        side_fits={"treated": pf.treated, "control": pf.control},
        se=float("nan"),
        ci=(float("nan"), float("nan")),
        bandwidths=bw,
        estimand=scheme.estimand.value,
        kernel=kernel.value,
    )
    return _attach_inference(result, ds, scheme, kernel, bw, inference, pf)


def fuzzy_point(ds: Dataset, scheme: WeightScheme, kernel: KernelSpec, bw: BandwidthSet,
                threshold: float = WEAK_FIRST_STAGE) -> tuple[float, PointFit, float]:
    """Ratio of the weighted jump in Y to the weighted jump in T.

    Densities and weights are shared between numerator and denominator; only
    the outcome changes.
    """
    num = point_fit(ds, scheme, kernel, bw)
    dt, dc = fit_sides(ds, num.weights, kernel, bw.h, ds.t)
    den = dt.alpha - dc.alpha
    if abs(den) < threshold:
        raise WeakFirstStageError(
            f"first-stage jump {den:.4g} is below {threshold:g}; complier share at the cutoff is too small")
    return num.tau / den, num, den


def estimate_fuzzy(ds: Dataset, scheme: WeightScheme, kernel: KernelSpec, bw: BandwidthSet,
                   inference=None, threshold: float = WEAK_FIRST_STAGE) -> EstimateResult:
    """Fuzzy-design ratio estimator.

    W2 weights target compliers distributed like the locally untreated, W3 the
    locally randomized compliers, W1 the whole population (needs conditional
    independence). Independence, monotonicity and exclusion are assumed, not
    tested. Inference is bootstrap only.
    """
    if scheme.estimand is Estimand.UNWEIGHTED:
        raise EstimationError("fuzzy estimation needs a weighted estimand (w1, w2 or w3)")
    tau, pf, den = fuzzy_point(ds, scheme, kernel, bw, threshold)
    result = EstimateResult(
        tau_hat=tau,
        side_fits={"treated": pf.treated, "control": pf.control},
        se=float("nan"),
        ci=(float("nan"), float("nan")),
        bandwidths=bw,
        estimand=scheme.estimand.value,
        kernel=kernel.value,
        fuzzy=True,
        first_stage=den,
    )
    if inference is not None and getattr(inference, "method", None) is not None \
            and inference.method.value != "bootstrap":
        raise EstimationError("fuzzy designs support bootstrap inference only")
    return _attach_inference(result, ds, scheme, kernel, bw, inference, pf)
