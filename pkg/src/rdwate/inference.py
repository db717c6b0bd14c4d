"""Bootstrap and plug-in standard errors, normal-approximation intervals."""

from __future__ import annotations

import enum
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .bandwidth import BandwidthSet, couple_bandwidths, select_bandwidth_cv
from .data import DataError, Dataset
from .density import DensityError, DensityEstimates
from .estimators import (EstimationError, PointFit, fuzzy_point, point_fit, wll_side_fit)
from .kernels import KernelMoments, KernelSpec, eval_kernel, kernel_moments
from .weights import Estimand, WeightError, WeightScheme

log = logging.getLogger(__name__)

MAX_FAILED_FRACTION = 0.10
DEFAULT_BINS = 10

# what a single replicate is allowed to fail with
_REPLICATE_ERRORS = (EstimationError, DensityError, WeightError, DataError)


class InferenceError(ValueError):
    pass


class Method(enum.Enum):
    BOOTSTRAP = "bootstrap"
    PLUGIN = "plugin"


@dataclass(frozen=True)
class InferenceConfig:
    method: Method = Method.BOOTSTRAP
    B: int = 500
    seed: int = 0
    level: float = 0.95
    threads: int = 1
    recompute_bandwidth: bool = False
    bins: int = DEFAULT_BINS

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not 0 < self.level < 1:
            raise InferenceError(f"level must be in (0, 1), got {self.level}")
        if self.method is Method.BOOTSTRAP and self.B < 50:
            raise InferenceError(f"bootstrap needs B >= 50, got {self.B}")
        if self.threads < 1:
            raise InferenceError("threads must be >= 1")


def z_value(level: float) -> float:
    return NormalDist().inv_cdf(0.5 + level / 2)


def normal_ci(tau: float, se: float, level: float) -> tuple[float, float]:
    q = z_value(level) * se
    return (tau - q, tau + q)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for replicate ``index``.

    The stream is fixed by (seed, index) alone through numpy's SeedSequence
    spawn keys, so results do not depend on which worker runs which replicate.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                                        spawn_key=(int(index),)))


def parallel_map(fn, items, threads: int):
    """Ordered map, on a thread pool when ``threads > 1``."""
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def bootstrap_replicates(ds: Dataset, statistic, inf: InferenceConfig) -> np.ndarray:
    """Pairs-bootstrap replicates of ``statistic(ds_b)``; failed replicates are NaN."""

    def one(b):
        idx = replicate_rng(inf.seed, b).integers(0, ds.n, ds.n)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return float(statistic(ds.take(idx)))
        except _REPLICATE_ERRORS:
            return float("nan")

    return np.array(parallel_map(one, range(inf.B), inf.threads))


def _summarize(reps: np.ndarray, B: int) -> float:
    ok = reps[np.isfinite(reps)]
    failed = B - ok.size
    if failed > MAX_FAILED_FRACTION * B:
        raise InferenceError(f"{failed} of {B} bootstrap replicates failed")
    if ok.size < 2:
        raise InferenceError("fewer than two usable bootstrap replicates")
    return float(np.std(ok, ddof=1))


def bootstrap_se(ds: Dataset, scheme: WeightScheme, kernel: KernelSpec, bw: BandwidthSet,
                 inf: InferenceConfig, tau_hat: float | None = None, fuzzy: bool = False,
                 grid=None) -> tuple[float, tuple[float, float]]:
    """Pairs bootstrap of the whole pipeline; returns (se, normal CI).

    Bandwidths stay frozen unless ``inf.recompute_bandwidth`` is set, in which
    case every replicate reruns cross-validation.
    """

    def statistic(rep: Dataset) -> float:
        b = bw
        if inf.recompute_bandwidth:
            h = select_bandwidth_cv(rep, kernel, grid)
            b = couple_bandwidths(h, scheme.pretreatment, rep.x.std(ddof=1))
        if fuzzy:
            return fuzzy_point(rep, scheme, kernel, b)[0]
        return point_fit(rep, scheme, kernel, b).tau

    if tau_hat is None:
        tau_hat = statistic(ds)
    se = _summarize(bootstrap_replicates(ds, statistic, inf), inf.B)
    return se, normal_ci(tau_hat, se, inf.level)


# ---------------------------------------------------------------------------
# plug-in variance
# ---------------------------------------------------------------------------


def _bin_edges(z: np.ndarray, bins: int) -> np.ndarray:
    # sample quantiles without interpolation: unchanged when the sample is duplicated
    edges = np.quantile(z, np.linspace(0, 1, bins + 1), method="inverted_cdf")
    return np.unique(edges)


def _bin_of(z: np.ndarray, edges: np.ndarray) -> np.ndarray:
    inner = edges[1:-1]
    return np.searchsorted(inner, z, side="right")


def _binned_side(ds: Dataset, treated: bool, kernel: KernelSpec, h: float, edges: np.ndarray):
    """Per-bin intercepts at the cutoff and kernel-weighted residual variance, one side."""
    mask = ds.above if treated else ~ds.above
    x, y, z = ds.x[mask], ds.y[mask], ds.z[mask, 0]
    which = _bin_of(z, edges)
    nb = edges.size - 1
    intercepts = np.empty(nb)
    rss = 0.0
    ksum = 0.0
    for b in range(nb):
        sel = which == b
        try:
            fit = wll_side_fit(x[sel], y[sel], None, kernel, h, ds.cutoff)
        except EstimationError as exc:
            raise InferenceError(
                f"covariate bin {b} on the {'treated' if treated else 'control'} side lacks "
                f"support for the residual-at-cutoff estimate: {exc}") from None
        intercepts[b] = fit.alpha
        k = eval_kernel(kernel, (x[sel] - ds.cutoff) / h)
        r = y[sel] - fit.alpha - fit.beta * (x[sel] - ds.cutoff)
        rss += float(np.sum(k * r * r))
        ksum += float(np.sum(k))
    return intercepts, rss / ksum


def _supported_edges(ds: Dataset, kernel: KernelSpec, h: float, bins: int) -> np.ndarray:
    """Quantile bin edges, halving the bin count until every bin fits on both sides."""
    while True:
        edges = _bin_edges(ds.z[:, 0], bins)
        try:
            for treated in (True, False):
                _binned_side(ds, treated, kernel, h, edges)
            return edges
        except InferenceError:
            if bins == 1:
                raise
            log.info("plug-in: %d covariate bins lack support, retrying with %d", bins, bins // 2)
            bins //= 2


def _side_residual_variance(ds: Dataset, treated: bool, kernel: KernelSpec, h: float, fit) -> float:
    mask = ds.above if treated else ~ds.above
    d = ds.x[mask] - ds.cutoff
    k = eval_kernel(kernel, d / h)
    r = ds.y[mask] - fit.alpha - fit.beta * d
    return float(np.sum(k * r * r) / np.sum(k))


def plugin_variance(ds: Dataset, fits: PointFit, dens: DensityEstimates | None,
                    m: KernelMoments, bw: BandwidthSet, pretreatment: bool,
                    estimand: Estimand = Estimand.W1, bins: int = DEFAULT_BINS,
                    clip_epsilon: float = 1e-3) -> float:
    """Plug-in standard error of the effect estimate.

    General covariates: var = C_v (w_1 + w_0) / (n h^2), where w_t is the
    sample mean over all observations of f_Z(z_i) / f_{X,Z(t)}(c, z_i) times
    d_t(z_i)^2, and d_t(z) = m_t(c, z) - alpha_t comes from one-sided local
    linear fits inside quantile bins of Z.

    Pre-treatment covariates: var(alpha_t) = C_v sigma_t^2 I / (n h) with
    I the sample mean of f_Z(z_i) / f_{X,Z}(c, z_i).

    Unweighted: the usual C_v sigma_t^2 / (n h f_X(c)) per side.
    """
    n, h, cv = ds.n, bw.h, m.cv
    treated_fit, control_fit = fits.treated, fits.control
    if estimand is Estimand.UNWEIGHTED:
        from .density import f_x_at_cutoff

        fx = dens.f_x_at_c if dens is not None else f_x_at_cutoff(ds, fits.kernel, bw.h2)
        s1 = _side_residual_variance(ds, True, fits.kernel, h, treated_fit)
        s0 = _side_residual_variance(ds, False, fits.kernel, h, control_fit)
        return math.sqrt(cv * (s1 + s0) / (n * h * fx))
    if estimand is not Estimand.W1:
        raise InferenceError("plug-in variance is derived for the w1 estimand only; use the bootstrap")
    if dens is None:
        raise InferenceError("plug-in variance needs fitted densities")
    if ds.p != 1:
        raise InferenceError("plug-in variance supports a single covariate; use the bootstrap")

    kernel = fits.kernel
    edges = _supported_edges(ds, kernel, h, bins)
    fz = dens.f_z(ds.z)

    def ratio(f):
        vals = np.asarray(f(ds.z), dtype=float)
        return fz / np.maximum(vals, clip_epsilon * vals.max())

    if pretreatment:
        I = float(np.mean(ratio(dens.f_xz_at_c)))
        total = 0.0
        for treated in (True, False):
            _, s2 = _binned_side(ds, treated, kernel, h, edges)
            total += cv * s2 * I / (n * h)
        return math.sqrt(total)

    which = _bin_of(ds.z[:, 0], edges)
    total = 0.0
    for treated, fit, f in ((True, treated_fit, dens.f_xz1_at_c), (False, control_fit, dens.f_xz0_at_c)):
        intercepts, _ = _binned_side(ds, treated, kernel, h, edges)
        d = intercepts[which] - fit.alpha
        total += float(np.mean(ratio(f) * d * d))
    return math.sqrt(cv * total / (n * h * h))


def coverage_indicator(ci, truth: float) -> int:
    lo, hi = ci
    return int(lo <= truth <= hi)


def run_inference(ds, scheme: WeightScheme, kernel: KernelSpec, bw: BandwidthSet,
                  inf: InferenceConfig, tau_hat: float, pf: PointFit, fuzzy: bool = False,
                  grid=None):
    if inf.method is Method.BOOTSTRAP:
        se, ci = bootstrap_se(ds, scheme, kernel, bw, inf, tau_hat, fuzzy, grid)
        return se, ci, f"bootstrap(B={inf.B})"
    if fuzzy:
        raise InferenceError("fuzzy designs support bootstrap inference only")
    se = plugin_variance(ds, pf, pf.densities, kernel_moments(kernel), bw,
                         scheme.pretreatment, scheme.estimand, inf.bins, scheme.clip_epsilon)
    return se, normal_ci(tau_hat, se, inf.level), "plugin"
