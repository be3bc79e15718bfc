"""Replicated coverage experiments against their limiting laws.

A run sweeps sample sizes, draws M independent clouds per size from
per-replication derived seeds (so replications are exchangeable and can
execute in any order or in parallel), computes certified threshold
brackets, pushes both bracket ends through the centering transform, and
compares the empirical law of the transformed statistic with the
theoretical limit.  Both the lo- and hi-based statistics are always
reported; consumers decide how to read the pair.

The convergence in these laws is log-log slow, so nothing here asserts
closeness at a fixed size; summaries expose KS distances and quantiles
and leave directional checks to the caller.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import geometry as geo
from .coverage import ThresholdEstimate, coverage_threshold, interior_threshold
from .geometry import ManifoldSpec, Metric, RegionKind, RegionSpec
from .grids import build_grid, estimate_node_count
from .limits import (LimitLaw, Regime, SllnMode, boundary_centering,
                     boundary_law_cdf, interior_centering, interior_law_cdf,
                     strong_law_limit, unit_ball_volume)
from .sampling import DensitySpec, poisson_sample, uniform_sample

MAX_SIZE = 200_000
COARSE_NODE_BUDGET = 1_200_000

# target image of one covering radius under the centering transform
ZETA_IMAGE = 0.05
# target relative error of the SLLN ratio due to the bracket width
SLLN_REL_IMAGE = 0.005
# depth of the candidate window for the coarse grid, in transform units
COARSE_WINDOW = 2.5


class ConfigError(ValueError):
    pass


class ConfigRefused(RuntimeError):
    """The requested comparison is degenerate and is refused, not faked."""


class RunMode(str, Enum):
    WEAK_BOUNDARY = "weak_boundary"
    WEAK_INTERIOR = "weak_interior"
    SLLN_TRACE = "slln_trace"


class Sampler(str, Enum):
    BINOMIAL = "binomial"
    POISSON = "poisson"


@dataclass(frozen=True)
class KSchedule:
    """Multiplicity schedule k(n).

    constant: k(n) = k.  beta_log: k(n) = max(1, ceil(beta log n)), so
    k/log n -> beta.  power: k(n) = ceil(n^p) with p < 1, the
    super-logarithmic regime (beta is None there, never a float infinity).
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("constant", "beta_log", "power"):
            raise ConfigError(f"unknown k schedule kind {self.kind!r}")
        if self.kind == "constant" and (self.value < 1 or int(self.value) != self.value):
            raise ConfigError("constant schedule needs integer k >= 1")
        if self.kind == "beta_log" and self.value <= 0:
            raise ConfigError("beta_log schedule needs beta > 0")
        if self.kind == "power" and not (0.0 < self.value < 1.0):
            raise ConfigError("power schedule needs 0 < p < 1")

    @property
    def beta(self) -> float | None:
        if self.kind == "constant":
            return 0.0
        if self.kind == "beta_log":
            return float(self.value)
        return None

    def k_of(self, n: float) -> int:
        if self.kind == "constant":
            return int(self.value)
        if self.kind == "beta_log":
            return max(1, math.ceil(self.value * math.log(n)))
        return math.ceil(n ** self.value)

    def to_json(self) -> dict:
        key = "k" if self.kind == "constant" else ("beta" if self.kind == "beta_log" else "p")
        return {"kind": self.kind, key: self.value}

    @staticmethod
    def from_json(obj: dict) -> "KSchedule":
        kind = obj["kind"]
        value = obj.get("k", obj.get("beta", obj.get("p")))
        if value is None:
            raise ConfigError(f"k schedule {obj} is missing its parameter")
        return KSchedule(kind, float(value))


def constant_k(k: int) -> KSchedule:
    return KSchedule("constant", k)


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ManifoldSpec
    region: RegionSpec
    mode: RunMode
    sizes: tuple
    schedule: KSchedule
    replications: int
    metric: Metric = Metric.GEODESIC
    sampler: Sampler = Sampler.BINOMIAL
    grid_h: float | None = None
    base_seed: int = 0
    density: DensitySpec = field(default_factory=DensitySpec.uniform)

    def __post_init__(self):
        if not self.sizes:
            raise ConfigError("need at least one size")
        for s in self.sizes:
            if s < 16:
                raise ConfigError(f"sizes must be >= 16 (loglog guard), got {s}")
            if s > MAX_SIZE:
                raise ConfigError(f"size {s} exceeds the desk-scale cap {MAX_SIZE}")
        if self.replications < 1:
            raise ConfigError("need replications >= 1")
        if self.grid_h is not None and self.grid_h <= 0:
            raise ConfigError("grid_h must be > 0 when given")
        if self.mode is RunMode.SLLN_TRACE:
            if list(self.sizes) != sorted(set(self.sizes)):
                raise ConfigError("slln_trace sizes must be strictly increasing")
        elif self.schedule.kind != "constant":
            raise ConfigError("weak modes need a constant k schedule")

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "region": self.region.to_json(),
            "mode": self.mode.value,
            "metric": self.metric.value,
            "sampler": self.sampler.value,
            "sizes": list(self.sizes),
            "k": self.schedule.to_json(),
            "replications": self.replications,
            "grid_h": self.grid_h,
            "base_seed": self.base_seed,
            "density": {"kind": self.density.kind},
        }

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        dens_kind = obj.get("density", {"kind": "uniform"}).get("kind", "uniform")
        if dens_kind != "uniform":
            raise ConfigError("JSON configs support the uniform density only; "
                              "custom densities go through the Python API")
        return ExperimentConfig(
            spec=ManifoldSpec.from_json(obj["spec"]),
            region=RegionSpec.from_json(obj.get("region", {"kind": "all"})),
            mode=RunMode(obj["mode"]),
            metric=Metric(obj.get("metric", "geodesic")),
            sampler=Sampler(obj.get("sampler", "binomial")),
            sizes=tuple(obj["sizes"]),
            schedule=KSchedule.from_json(obj["k"]),
            replications=int(obj["replications"]),
            grid_h=obj.get("grid_h"),
            base_seed=int(obj.get("base_seed", 0)),
        )


@dataclass(frozen=True)
class ReplicationRow:
    size: float
    rep: int
    k: int
    metric: str
    lo: float
    hi: float
    h: float
    stat_lo: float
    stat_hi: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    law: dict
    rows: list
    summary: dict
    wall_clock: float = 0.0

    def write_rows_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["size", "rep", "k", "metric", "lo", "hi", "h",
                        "stat_lo", "stat_hi"])
            for r in self.rows:
                w.writerow([_num(r.size), r.rep, r.k, r.metric, repr(r.lo),
                            repr(r.hi), repr(r.h), repr(r.stat_lo),
                            repr(r.stat_hi)])

    def summary_json(self) -> str:
        doc = {"config": self.config.to_json(), "law": self.law,
               "summary": self.summary}
        return json.dumps(doc, indent=2, sort_keys=True)

    def write_summary_json(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.summary_json())
            fh.write("\n")

    def write_meta_json(self, path: str) -> None:
        # timing lives outside the deterministic result files
        with open(path, "w") as fh:
            json.dump({"wall_clock_seconds": self.wall_clock}, fh, indent=2)
            fh.write("\n")


def _num(x):
    xi = int(x)
    return xi if xi == x else repr(float(x))


def ks_distance(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov sup distance against a CDF callable."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    if n == 0:
        raise ConfigError("ks_distance needs a nonempty sample")
    f = np.asarray(cdf(xs), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


# ---------------------------------------------------------------------------
# grid planning


def _predicted_radius(spec: ManifoldSpec, d: int, f0: float, f1: float | None,
                      size: float, k_n: int, beta: float | None) -> float:
    """Strong-law prediction of the threshold scale at this size."""
    theta = unit_ball_volume(d)
    lim = strong_law_limit(d, beta, f0, f1, SllnMode.BOUNDARY)
    scale = k_n if beta is None else math.log(size)
    return (lim * scale / (size * theta)) ** (1.0 / d)


def _plan_resolution(spec: ManifoldSpec, region: RegionSpec, mode: RunMode,
                     size: float, k_n: int, beta: float | None, f0: float,
                     f1: float | None) -> tuple[float, float]:
    """(coarse h, refinement target h) for one size of a run."""
    d = spec.d
    theta = unit_ball_volume(d)
    r_bar = _predicted_radius(spec, d, f0, f1, size, k_n, beta)
    deriv_boundary = 0.5 * size * theta * f0 * d * max(r_bar, 1e-12) ** (d - 1)
    if mode is RunMode.WEAK_BOUNDARY:
        h_target = ZETA_IMAGE / deriv_boundary
    elif mode is RunMode.WEAK_INTERIOR:
        h_target = ZETA_IMAGE / (2.0 * deriv_boundary)
    else:
        h_target = SLLN_REL_IMAGE * r_bar
    diam = geo.intrinsic_diameter(spec)
    h_target = min(max(h_target, 1e-7), diam / 8.0)
    h_coarse = COARSE_WINDOW / deriv_boundary
    h_coarse = min(max(h_coarse, h_target), diam / 8.0)
    while estimate_node_count(spec, region, h_coarse) > COARSE_NODE_BUDGET:
        h_coarse *= 1.3
    return h_coarse, h_target


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("COVLAB_THREADS", "1")))
    except ValueError:
        return 1


def _map_reps(fn, tasks):
    n_workers = _threads()
    if n_workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=n_workers) as ex:
        return list(ex.map(fn, tasks))


def _draw_cloud(config: ExperimentConfig, size: float, size_idx: int, rep: int):
    seed = np.random.SeedSequence(entropy=config.base_seed,
                                  spawn_key=(size_idx, rep))
    if config.sampler is Sampler.POISSON:
        return poisson_sample(config.spec, config.density, float(size), seed)
    return uniform_sample(config.spec, int(size), seed)


def _density_floors(config: ExperimentConfig) -> tuple[float, float | None]:
    """(f0, f1) for the configured density over B; f1=None off the boundary."""
    _, sv_b = geo.region_measures(config.spec, config.region)
    if config.density.kind == "uniform":
        f0 = 1.0 / geo.volume(config.spec)
        f1 = f0 if sv_b > 0.0 else None
        return f0, f1
    if config.density.f0 is None:
        raise ConfigError("custom densities need an explicit f0")
    f1 = config.density.f1 if sv_b > 0.0 else None
    if sv_b > 0.0 and f1 is None:
        raise ConfigError("custom densities need an explicit f1 when B "
                          "touches the boundary")
    return config.density.f0, f1


def _summarize_weak(rows: list, sizes, cdf) -> dict:
    out = {}
    for size in sizes:
        stats_lo = np.array([r.stat_lo for r in rows if r.size == size])
        stats_hi = np.array([r.stat_hi for r in rows if r.size == size])
        order = np.argsort(stats_lo, kind="stable")
        qs = [0.05, 0.25, 0.5, 0.75, 0.95]
        out[str(_num(size))] = {
            "replications": int(len(stats_lo)),
            "ks_lo": ks_distance(stats_lo, cdf),
            "ks_hi": ks_distance(stats_hi, cdf),
            "ecdf_nodes": [float(v) for v in stats_lo[order]],
            "cdf_values": [float(v) for v in np.asarray(cdf(stats_lo[order]))],
            "quantiles_lo": {str(q): float(np.quantile(stats_lo, q)) for q in qs},
            "quantiles_hi": {str(q): float(np.quantile(stats_hi, q)) for q in qs},
        }
    return out


def run_weak_boundary(config: ExperimentConfig) -> ExperimentResult:
    """Weak-limit experiment for the full-region coverage threshold.

    Refuses configurations whose limit law is degenerate (target region
    carrying no boundary mass while (d, k) != (2, 1)).
    """
    t0 = time.monotonic()
    if config.mode is not RunMode.WEAK_BOUNDARY:
        raise ConfigError(f"config mode is {config.mode}, expected weak_boundary")
    if config.density.kind != "uniform":
        raise ConfigError("the boundary weak limit holds for the uniform density")
    spec, region = config.spec, config.region
    d, k = spec.d, int(config.schedule.value)
    f0 = 1.0 / geo.volume(spec)
    v_b, sv_b = geo.region_measures(spec, region)
    if sv_b == 0.0 and not (d == 2 and k == 1):
        raise ConfigRefused(
            f"with d={d}, k={k} and a region carrying no boundary mass the "
            "limit law is degenerate (identically 1); use the interior mode")
    law = LimitLaw(regime=Regime.WEAK_BOUNDARY, d=d, k=k, f0=f0, volume=v_b,
                   boundary_area=sv_b)
    rows: list[ReplicationRow] = []
    for si, size in enumerate(config.sizes):
        if config.grid_h is not None:
            h_coarse, h_target = config.grid_h, None
        else:
            h_coarse, h_target = _plan_resolution(spec, region, config.mode,
                                                  size, k, 0.0, f0,
                                                  f0 if sv_b > 0 else None)
        grid = build_grid(spec, region, h_coarse)

        def one(rep: int, _size=size, _si=si, _grid=grid, _ht=h_target):
            cloud = _draw_cloud(config, _size, _si, rep)
            est = coverage_threshold(cloud, _grid, k, config.metric,
                                     refine_to=_ht)
            return _row_weak(_size, rep, k, config.metric, est,
                             boundary_centering, d, f0)

        rows.extend(_map_reps(one, list(range(config.replications))))
    summary = _summarize_weak(rows, config.sizes,
                              lambda z: boundary_law_cdf(law, z))
    return ExperimentResult(config, law.to_json(), rows, summary,
                            wall_clock=time.monotonic() - t0)


def _row_weak(size, rep, k, metric, est: ThresholdEstimate, transform,
              d: int, f0: float) -> ReplicationRow:
    stat_lo = float(transform(est.lo, float(size), d, k, f0))
    stat_hi = float(transform(est.hi, float(size), d, k, f0))
    return ReplicationRow(size=size, rep=rep, k=k, metric=metric.value,
                          lo=est.lo, hi=est.hi, h=est.h,
                          stat_lo=stat_lo, stat_hi=stat_hi)


def run_weak_interior(config: ExperimentConfig) -> ExperimentResult:
    """Weak-limit experiment for the interior coverage threshold.

    For the full region the interior threshold (bisection over the deep
    set) is used; for an interior-body region the plain threshold already
    avoids the boundary and is used directly.
    """
    t0 = time.monotonic()
    if config.mode is not RunMode.WEAK_INTERIOR:
        raise ConfigError(f"config mode is {config.mode}, expected weak_interior")
    if config.density.kind != "uniform":
        raise ConfigError("the interior weak limit holds for the uniform density")
    spec, region = config.spec, config.region
    d, k = spec.d, int(config.schedule.value)
    f0 = 1.0 / geo.volume(spec)
    v_b, _ = geo.region_measures(spec, region)
    law = LimitLaw(regime=Regime.WEAK_INTERIOR, d=d, k=k, f0=f0, volume=v_b)
    boundaryless = geo.boundary_measure(spec) == 0.0
    use_plain = region.kind is RegionKind.INTERIOR_BODY or boundaryless
    rows: list[ReplicationRow] = []
    for si, size in enumerate(config.sizes):
        if config.grid_h is not None:
            h_coarse, h_target = config.grid_h, None
        else:
            h_coarse, h_target = _plan_resolution(spec, region, config.mode,
                                                  size, k, 0.0, f0, None)
        if not use_plain:
            # bisection needs the fine field everywhere: no local refinement
            h_coarse = max(h_target,
                           _budgeted_h(spec, region, h_target))
        grid = build_grid(spec, region, h_coarse)

        def one(rep: int, _size=size, _si=si, _grid=grid, _ht=h_target):
            cloud = _draw_cloud(config, _size, _si, rep)
            if use_plain:
                est = coverage_threshold(cloud, _grid, k, config.metric,
                                         refine_to=_ht)
            else:
                est = interior_threshold(cloud, spec, region, k, config.metric,
                                         grid=_grid, tol=_grid.h,
                                         refine_to=_ht)
            return _row_weak(_size, rep, k, config.metric, est,
                             interior_centering, d, f0)

        rows.extend(_map_reps(one, list(range(config.replications))))
    summary = _summarize_weak(rows, config.sizes,
                              lambda b: interior_law_cdf(law, b))
    return ExperimentResult(config, law.to_json(), rows, summary,
                            wall_clock=time.monotonic() - t0)


def _budgeted_h(spec, region, h_target: float) -> float:
    h = h_target
    while estimate_node_count(spec, region, h) > COARSE_NODE_BUDGET:
        h *= 1.3
    return h


def run_slln_trace(config: ExperimentConfig) -> ExperimentResult:
    """Strong-law trace: the scaled threshold ratio across a size schedule.

    Emits per-replication ratios n theta_d lo^d / denom where denom is
    k(n) in the super-logarithmic regime and log n otherwise, plus the
    almost-sure limit they should drift toward.
    """
    t0 = time.monotonic()
    if config.mode is not RunMode.SLLN_TRACE:
        raise ConfigError(f"config mode is {config.mode}, expected slln_trace")
    spec, region = config.spec, config.region
    d = spec.d
    theta = unit_ball_volume(d)
    f0, f1 = _density_floors(config)
    beta = config.schedule.beta
    reference = strong_law_limit(d, beta, f0, f1, SllnMode.BOUNDARY)
    v_b, sv_b = geo.region_measures(spec, region)
    law = LimitLaw(regime=Regime.SLLN, d=d, k=max(1, config.schedule.k_of(config.sizes[0])),
                   f0=f0, volume=v_b, boundary_area=sv_b, f1=f1, beta=beta)
    rows: list[ReplicationRow] = []
    for si, size in enumerate(config.sizes):
        k_n = config.schedule.k_of(size)
        if k_n >= size:
            raise ConfigError(f"k({size})={k_n} is not o(n); shrink the schedule")
        denom = float(k_n) if beta is None else math.log(size)
        if config.grid_h is not None:
            h_coarse, h_target = config.grid_h, None
        else:
            h_coarse, h_target = _plan_resolution(spec, region, config.mode,
                                                  size, k_n, beta, f0, f1)
        grid = build_grid(spec, region, h_coarse)

        def one(rep: int, _size=size, _si=si, _grid=grid, _ht=h_target,
                _k=k_n, _denom=denom):
            cloud = _draw_cloud(config, _size, _si, rep)
            est = coverage_threshold(cloud, _grid, _k, config.metric,
                                     refine_to=_ht)
            ratio_lo = float(_size) * theta * est.lo ** d / _denom
            ratio_hi = float(_size) * theta * est.hi ** d / _denom
            return ReplicationRow(size=_size, rep=rep, k=_k,
                                  metric=config.metric.value, lo=est.lo,
                                  hi=est.hi, h=est.h, stat_lo=ratio_lo,
                                  stat_hi=ratio_hi)

        rows.extend(_map_reps(one, list(range(config.replications))))
    summary: dict = {"reference": reference, "beta": "infinity" if beta is None else beta,
                     "per_size": {}}
    for size in config.sizes:
        ratios = np.array([r.stat_lo for r in rows if r.size == size])
        ratios_hi = np.array([r.stat_hi for r in rows if r.size == size])
        summary["per_size"][str(_num(size))] = {
            "k": config.schedule.k_of(size),
            "median_lo": float(np.median(ratios)),
            "median_hi": float(np.median(ratios_hi)),
            "iqr_lo": [float(np.quantile(ratios, 0.25)),
                       float(np.quantile(ratios, 0.75))],
            "abs_gap_to_reference": float(abs(np.median(ratios) - reference)),
        }
    return ExperimentResult(config, law.to_json(), rows, summary,
                            wall_clock=time.monotonic() - t0)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    if config.mode is RunMode.WEAK_BOUNDARY:
        return run_weak_boundary(config)
    if config.mode is RunMode.WEAK_INTERIOR:
        return run_weak_interior(config)
    return run_slln_trace(config)
