"""Seeded data-generating processes and the Monte Carlo runner.

Setting 1 has a covariate that is independent of the running variable, so
the classic and reweighted estimands coincide (true effect 1). Setting 2
shifts the covariate by ``gamma`` above the cutoff; the direct effect is 2
while the classic RD estimand becomes 2 + gamma.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .bandwidth import BandwidthSet, couple_bandwidths, default_grid, select_bandwidth_cv
from .data import DataError, Dataset
from .density import DensityError
from .estimators import EstimationError, estimate_sharp, point_fit
from .inference import (InferenceConfig, InferenceError, Method, coverage_indicator,
                        parallel_map, replicate_rng)
from .kernels import DEFAULT_KERNEL, KernelSpec
from .weights import Estimand, WeightError, WeightScheme

_FAILURES = (EstimationError, DensityError, WeightError, DataError, InferenceError)
MAX_FAILED_FRACTION = 0.10


class Setting(enum.IntEnum):
    S1 = 1
    S2 = 2


TRUE_EFFECT = {Setting.S1: 1.0, Setting.S2: 2.0}

ESTIMATORS = {
    "rd": Estimand.UNWEIGHTED,
    "wll": Estimand.W1,
    "w2": Estimand.W2,
    "w3": Estimand.W3,
}


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_setting1(n: int, beta: float, seed) -> Dataset:
    """y(t) = 1 + t + x + beta z + e with x, z, e iid N(0, 1); cutoff 0."""
    rng = _rng(seed)
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    e = rng.standard_normal(n)
    t = (x > 0).astype(float)
    y = 1.0 + t + x + beta * z + e
    return Dataset(y=y, x=x, cutoff=0.0, z=z)


def generate_setting2(n: int, gamma: float, seed) -> Dataset:
    """Covariate jumps by ``gamma`` at the cutoff; y(1) = 3 + x + z + e1, y(0) = 1 + x + z + e0."""
    rng = _rng(seed)
    x = rng.standard_normal(n)
    zstar = rng.standard_normal(n)
    e1 = rng.standard_normal(n)
    e0 = rng.standard_normal(n)
    t = x > 0
    z = gamma * t + zstar
    y = np.where(t, 3.0 + x + z + e1, 1.0 + x + z + e0)
    return Dataset(y=y, x=x, cutoff=0.0, z=z)


def generate(setting: Setting, n: int, param: float, seed) -> Dataset:
    if Setting(setting) is Setting.S1:
        return generate_setting1(n, param, seed)
    return generate_setting2(n, param, seed)


@dataclass(frozen=True)
class McConfig:
    setting: int = 1
    n: int = 2000
    param: float = 0.0
    reps: int = 200
    seed: int = 0
    estimators: tuple[str, ...] = ("rd", "wll")
    bandwidth: float | str = "cv"
    kernel: str = DEFAULT_KERNEL.value
    inference: str = "bootstrap"
    B: int = 200
    level: float = 0.95
    pretreatment: bool = False
    clip_epsilon: float = 1e-3
    h1: float | None = None
    h2: float | None = None
    threads: int = 1

    def __post_init__(self):
        Setting(self.setting)
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.n < 100:
            raise ValueError("n must be >= 100")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise ValueError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}")
        object.__setattr__(self, "estimators", tuple(self.estimators))
        KernelSpec.parse(self.kernel)
        Method(self.inference) if self.inference != "none" else None

    @property
    def truth(self) -> float:
        return TRUE_EFFECT[Setting(self.setting)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["estimators"] = list(self.estimators)
        # worker count never changes results, and echoing it would break byte-identity
        del d["threads"]
        return d


@dataclass
class EstimatorSummary:
    bias: float
    variance: float
    mse: float
    coverage: float
    ci_length: float
    failures: int
    mean_estimate: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class McReport:
    config: McConfig
    truth: float
    bandwidths: BandwidthSet
    summaries: dict[str, EstimatorSummary]
    estimates: dict[str, list[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": "mc_report",
            "config": self.config.to_dict(),
            "truth": self.truth,
            "bandwidths": {"h": self.bandwidths.h, "h1": self.bandwidths.h1, "h2": self.bandwidths.h2},
            "summaries": {k: v.to_dict() for k, v in self.summaries.items()},
            "estimates": self.estimates,
        }


def replicate_seed(seed: int, index: int) -> int:
    """64-bit seed for replicate ``index``, mixed through SeedSequence."""
    return int(replicate_rng(seed, index).integers(0, 2**63 - 1))


def _bandwidths(cfg: McConfig, ds: Dataset, kernel: KernelSpec, h: float | None = None) -> BandwidthSet:
    if h is None:
        if cfg.bandwidth == "cv":
            h = select_bandwidth_cv(ds, kernel, default_grid(ds))
        else:
            h = float(cfg.bandwidth)
    return couple_bandwidths(h, cfg.pretreatment, ds.x.std(ddof=1), cfg.h1, cfg.h2)


def summarize(estimates: np.ndarray, truth: float, covered: np.ndarray | None = None,
              lengths: np.ndarray | None = None) -> EstimatorSummary:
    """Bias, variance (1/R normalization) and MSE over the successful replicates."""
    ok = np.isfinite(estimates)
    est = estimates[ok]
    r = est.size
    if r == 0:
        nan = float("nan")
        return EstimatorSummary(nan, nan, nan, nan, nan, int(estimates.size), nan)
    mean = math.fsum(est) / r
    bias = mean - truth
    variance = math.fsum((e - mean) ** 2 for e in est) / r
    mse = variance + bias * bias
    coverage = float("nan")
    ci_length = float("nan")
    if covered is not None:
        coverage = math.fsum(covered[ok]) / r
        ci_length = math.fsum(lengths[ok]) / r
    return EstimatorSummary(bias, variance, mse, coverage, ci_length,
                            int(estimates.size - r), mean)


def run_monte_carlo(cfg: McConfig, keep_estimates: bool = False) -> McReport:
    """Replicate datasets, estimate with every configured estimator, aggregate.

    Under the ``"cv"`` bandwidth policy the bandwidth is chosen by
    cross-validation on the first replicate and then held fixed.
    """
    kernel = KernelSpec.parse(cfg.kernel)
    seeds = [replicate_seed(cfg.seed, r) for r in range(cfg.reps)]
    first = generate(cfg.setting, cfg.n, cfg.param, seeds[0])
    bw = _bandwidths(cfg, first, kernel)
    schemes = {name: WeightScheme(ESTIMATORS[name], cfg.clip_epsilon, cfg.pretreatment)
               for name in cfg.estimators}
    with_ci = cfg.inference != "none"

    def one(r):
        ds = generate(cfg.setting, cfg.n, cfg.param, seeds[r])
        inf = None
        if with_ci:
            inf = InferenceConfig(Method(cfg.inference), B=cfg.B, seed=seeds[r], level=cfg.level)
        out = {}
        for name, scheme in schemes.items():
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    res = estimate_sharp(ds, scheme, kernel, bw, inf)
                out[name] = (res.tau_hat, res.ci)
            except _FAILURES:
                out[name] = (float("nan"), (float("nan"), float("nan")))
        return out

    rows = parallel_map(one, range(cfg.reps), cfg.threads)
    truth = cfg.truth
    summaries, estimates = {}, {}
    for name in cfg.estimators:
        est = np.array([row[name][0] for row in rows])
        failed = int(np.sum(~np.isfinite(est)))
        if failed > MAX_FAILED_FRACTION * cfg.reps:
            raise EstimationError(f"{name}: {failed} of {cfg.reps} replicates failed")
        covered = lengths = None
        if with_ci:
            cis = [row[name][1] for row in rows]
            covered = np.array([coverage_indicator(ci, truth) for ci in cis], dtype=float)
            lengths = np.array([ci[1] - ci[0] for ci in cis])
        summaries[name] = summarize(est, truth, covered, lengths)
        if keep_estimates:
            estimates[name] = [float(v) for v in est]
    return McReport(cfg, truth, bw, summaries, estimates)


def bandwidth_sweep(cfg: McConfig, grid) -> list[dict]:
    """Monte Carlo MSE of the classic and reweighted estimators at each shared h."""
    kernel = KernelSpec.parse(cfg.kernel)
    grid = [float(h) for h in grid]
    seeds = [replicate_seed(cfg.seed, r) for r in range(cfg.reps)]
    rd_scheme = WeightScheme(Estimand.UNWEIGHTED, cfg.clip_epsilon, cfg.pretreatment)
    wll_scheme = WeightScheme(Estimand.W1, cfg.clip_epsilon, cfg.pretreatment)

    def one(r):
        ds = generate(cfg.setting, cfg.n, cfg.param, seeds[r])
        out = []
        for h in grid:
            bw = _bandwidths(cfg, ds, kernel, h)
            pair = []
            for scheme in (rd_scheme, wll_scheme):
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        pair.append(point_fit(ds, scheme, kernel, bw).tau)
                except _FAILURES:
                    pair.append(float("nan"))
            out.append(pair)
        return out

    per_rep = np.array(parallel_map(one, range(cfg.reps), cfg.threads))  # reps x grid x 2
    rows = []
    for g, h in enumerate(grid):
        rd = summarize(per_rep[:, g, 0], cfg.truth)
        wll = summarize(per_rep[:, g, 1], cfg.truth)
        rows.append({"h": h, "mse_rd": rd.mse, "mse_wll": wll.mse,
                     "bias_rd": rd.bias, "bias_wll": wll.bias,
                     "failures_rd": rd.failures, "failures_wll": wll.failures})
    return rows
