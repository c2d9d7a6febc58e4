"""Monte Carlo checks of the Poisson-Dirichlet limits of factorisation spectra.

Samples are generated in fixed shards of ``SHARD_SIZE``; shard ``i`` draws
from random stream ``i + 1`` of the configured seed, and shard summaries
are merged in shard order. The worker count only changes how shards are
scheduled, never what they compute, so reports are identical for any
``workers``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import ndtr

from . import arith
from .errors import InfeasibleError, ParameterError, UsageError
from .intensity import (IntervalFamily, MomentAccumulator, pd_box_integral, row_count_products,
                        theta_bound)
from .pdcore import check_theta, dickman_rho, sample_pd_batch
from .report import CdfPoint, ExperimentReport
from .rng import generator
from .semigroups import parse_semigroup, sample_norms, spectra_of_norms

log = logging.getLogger(__name__)

SHARD_SIZE = 10_000
REFERENCE_DRAWS = 10**6
REFERENCE_SEED = 20_240_601
REFERENCE_MOMENTS = 8
PROBE_DRAWS = 10**6
PROBE_STREAM = 2**40
MIN_ACCEPTANCE = 1e-6
KINDS = ("billingsley", "conditioned", "erdos-kac", "intensity")


def default_grid(step: float = 0.05) -> np.ndarray:
    m = int(round(1.0 / step))
    return np.round(np.arange(1, m) * step, 12)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    semigroup: str = "integers"
    n: int = 10**7
    samples: int = 10**5
    topk: int = 2
    intervals: IntervalFamily | None = None
    mode: str = "big-omega"
    tau: float | None = None
    theta: float | None = None
    seed: int = 0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    grid_step: float = 0.05

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown experiment kind {self.kind!r}")
        if self.samples < 1:
            raise ParameterError("samples must be at least 1")
        if self.topk < 1:
            raise ParameterError("topk must be at least 1")
        if self.kind != "intensity" and self.n < 3:
            raise ParameterError("n must be at least 3")
        if self.tau is not None and not self.tau > 0:
            raise ParameterError("tau must be positive")
        if self.mode not in arith.MODES:
            raise UsageError(f"mode must be one of {arith.MODES}")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")
        if not 0 < self.grid_step < 1:
            raise ParameterError("grid_step must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    def echo(self) -> dict:
        """Configuration as recorded in reports; ``workers`` is left out on purpose."""
        return {"kind": self.kind, "semigroup": self.semigroup, "n": self.n,
                "samples": self.samples, "topk": self.topk,
                "intervals": None if self.intervals is None else str(self.intervals),
                "mode": self.mode, "tau": self.tau, "theta": self.theta, "seed": self.seed,
                "grid_step": self.grid_step}


@dataclass(frozen=True)
class KsResult:
    statistic: float
    sample_count: int


def ks_statistic(empirical_cdf, reference_cdf, sample_count: int = 0) -> KsResult:
    """Largest absolute gap between two CDFs tabulated on one grid."""
    e = np.asarray(empirical_cdf, dtype=float)
    r = np.asarray(reference_cdf, dtype=float)
    if e.shape != r.shape or e.ndim != 1:
        raise UsageError("CDFs must be tabulated on the same grid")
    for name, c in (("empirical", e), ("reference", r)):
        if np.any((c < 0) | (c > 1)) or np.any(np.diff(c) < 0):
            raise UsageError(f"{name} CDF must be non-decreasing with values in [0, 1]")
    stat = float(np.max(np.abs(e - r))) if e.size else 0.0
    return KsResult(stat, int(sample_count))


# --- PD references ------------------------------------------------------------

@lru_cache(maxsize=8)
def _reference_sample(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Sorted L_1 of the pinned reference draws and the means of L_1..L_8."""
    rows = sample_pd_batch(theta, REFERENCE_DRAWS, generator(REFERENCE_SEED, 0),
                           keep=REFERENCE_MOMENTS)
    return np.sort(rows[:, 0]), rows.mean(axis=0)


def reference_means(theta: float) -> np.ndarray:
    """Monte Carlo E[L_i], i = 1..8, for PD(theta) from the pinned reference draws."""
    return _reference_sample(check_theta(theta))[1]


def reference_mean_std_error(theta: float) -> float:
    l1 = _reference_sample(check_theta(theta))[0]
    return float(l1.std(ddof=1) / math.sqrt(len(l1)))


def _cache_dir() -> Path:
    return Path(os.environ.get("PDFACTORS_CACHE", Path.home() / ".cache" / "pdfactors"))


def _step_of(grid: np.ndarray) -> float | None:
    if len(grid) < 1:
        return None
    step = float(grid[0])
    expected = np.round(np.arange(1, len(grid) + 1) * step, 12)
    return step if np.allclose(grid, expected, rtol=0, atol=1e-12) else None


def _read_cache(path: Path, header: str, grid: np.ndarray) -> np.ndarray | None:
    try:
        lines = path.read_text().splitlines()
    except OSError:
        return None
    if len(lines) < 3 or lines[0] != "theta,draws,grid_step,seed" or lines[1] != header:
        return None
    rows = [line.split(",") for line in lines[3:]]
    xs = np.array([float(r[0]) for r in rows])
    if xs.shape != grid.shape or not np.allclose(xs, grid, rtol=0, atol=1e-12):
        return None
    return np.array([float(r[1]) for r in rows])


def _write_cache(path: Path, header: str, grid: np.ndarray, cdf: np.ndarray) -> None:
    body = ["theta,draws,grid_step,seed", header, "x,cdf"]
    body += [f"{x!r},{c!r}" for x, c in zip(grid.tolist(), cdf.tolist())]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(body) + "\n")
    except OSError as exc:
        log.warning("could not write reference cache %s: %s", path, exc)


def reference_l1_cdf(theta: float, x_grid) -> np.ndarray:
    """P(L_1 <= x) for PD(theta).

    theta = 1 uses rho(1/x) with Dickman's rho. Other theta use the pinned
    Monte Carlo reference; grids with a uniform step are cached on disk.
    """
    theta = check_theta(theta)
    grid = np.asarray(x_grid, dtype=float)
    if np.any((grid <= 0) | (grid > 1)):
        raise UsageError("reference CDF grid must lie in (0, 1]")
    if theta == 1.0:
        return np.asarray(dickman_rho(1.0 / grid), dtype=float)
    step = _step_of(grid)
    if step is not None:
        header = f"{theta!r},{REFERENCE_DRAWS},{step!r},{REFERENCE_SEED}"
        path = _cache_dir() / f"l1cdf_theta{theta!r}_draws{REFERENCE_DRAWS}_step{step!r}_seed{REFERENCE_SEED}.csv"
        cached = _read_cache(path, header, grid)
        if cached is not None:
            return cached
    l1 = _reference_sample(theta)[0]
    cdf = np.searchsorted(l1, grid, side="right") / len(l1)
    if step is not None:
        _write_cache(path, header, grid, cdf)
    return cdf


# --- sharding -------------------------------------------------------------------

def _shard_plan(samples: int) -> list[tuple[int, int]]:
    return [(i, min(SHARD_SIZE, samples - i * SHARD_SIZE))
            for i in range(math.ceil(samples / SHARD_SIZE))]


def _run_shards(fn: Callable, samples: int, seed: int, workers: int) -> list:
    plan = _shard_plan(samples)
    call = lambda item: fn(item[1], generator(seed, item[0] + 1))  # noqa: E731
    if workers <= 1 or len(plan) == 1:
        return [call(item) for item in plan]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(call, plan))


@dataclass
class SpectrumSummary:
    """Mergeable per-shard statistics of ranked spectra."""

    cdf_counts: np.ndarray
    coords: list[MomentAccumulator]
    intensity: MomentAccumulator
    max_total: float = 0.0
    violations: int = 0
    draws: int = 0

    @classmethod
    def of(cls, rows, totals, grid, topk, family, draws=0) -> "SpectrumSummary":
        l1 = rows[:, 0]
        counts = np.searchsorted(np.sort(l1), grid, side="right").astype(np.int64)
        coords = [MomentAccumulator.of(rows[:, i]) for i in range(topk)]
        inten = (MomentAccumulator.of(row_count_products(rows, family)) if family
                 else MomentAccumulator())
        return cls(counts, coords, inten, float(totals.max(initial=0.0)),
                   int(np.count_nonzero(totals > 1.0)), draws or len(rows))

    def merge(self, other: "SpectrumSummary") -> "SpectrumSummary":
        return SpectrumSummary(self.cdf_counts + other.cdf_counts,
                               [a.merge(b) for a, b in zip(self.coords, other.coords)],
                               self.intensity.merge(other.intensity),
                               max(self.max_total, other.max_total),
                               self.violations + other.violations, self.draws + other.draws)


def _merge(parts):
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    return out


def _spectrum_report(report: ExperimentReport, summary: SpectrumSummary, theta: float,
                     grid: np.ndarray, family: IntervalFamily | None, topk: int) -> None:
    count = summary.coords[0].count
    emp = summary.cdf_counts / count
    ref = reference_l1_cdf(theta, grid)
    report.cdf_grid = [CdfPoint(float(x), float(e), float(r)) for x, e, r in zip(grid, emp, ref)]
    report.add("ks_l1_cdf", ks_statistic(emp, ref, count).statistic)
    means = reference_means(theta)
    for i, acc in enumerate(summary.coords):
        ref_mean = means[i] if i < len(means) else None
        report.add(f"mean_l{i + 1}", acc.mean, ref_mean, acc.std_error)
    if family is not None:
        inten = summary.intensity
        report.add("intensity", inten.mean, pd_box_integral(theta, family), inten.std_error)
        if family.sum_b_lt_1:
            bound = theta_bound(family, theta, 1.0 - theta, 0.0, "log")
            report.add("intensity_vs_bound_log", inten.mean, bound, inten.std_error)
        else:
            report.warnings.append(f"intervals {family} violate b_1 + ... + b_k < 1; "
                                   "the lower bound is not reported")
    report.add("max_total", summary.max_total)
    report.add("total_violations", summary.violations, 0)
    if summary.violations:
        report.warnings.append(f"{summary.violations} spectra have total > 1")


# --- experiments ------------------------------------------------------------------

def run_billingsley(config: ExperimentConfig) -> ExperimentReport:
    spec = parse_semigroup(config.semigroup)
    grid = default_grid(config.grid_step)
    family = config.intervals
    width = max(64, config.topk)

    def shard(size, rng):
        norms = sample_norms(spec, config.n, size, rng)
        rows, totals = spectra_of_norms(spec, norms, config.n, width=width)
        return SpectrumSummary.of(rows, totals, grid, config.topk, family)

    summary = _merge(_run_shards(shard, config.samples, config.seed, config.workers))
    report = ExperimentReport("billingsley", config.echo())
    report.add("theta", spec.theta)
    _spectrum_report(report, summary, spec.theta, grid, family, config.topk)
    return report


def target_count(n: int, tau: float) -> int:
    """g(n) = max(1, round(tau log log n))."""
    return max(1, round(tau * math.log(math.log(n))))


def _omega_of(ms, n, mode):
    big, small = arith.omega_values(ms, n)
    return big if mode == "big-omega" else small


def run_conditioned(config: ExperimentConfig) -> ExperimentReport:
    if parse_semigroup(config.semigroup).name != "integers":
        raise UsageError("conditioned ensembles are defined for the ordinary integers only")
    if config.tau is None:
        raise ParameterError("conditioned experiments need tau")
    n, tau, mode = config.n, config.tau, config.mode
    g = target_count(n, tau)
    if g > math.log2(n):
        raise InfeasibleError(f"no m <= {n} has {g} prime factors (g(n) exceeds log2 n)")
    theta = min(tau, 2.0) if mode == "big-omega" else tau
    report = ExperimentReport("conditioned", config.echo())
    if mode == "big-omega" and tau == 2.0:
        report.warnings.append("tau = 2 lies outside the range of the limit law; comparing with PD(2)")

    probe = generator(config.seed, PROBE_STREAM).integers(1, n + 1, PROBE_DRAWS, dtype=np.int64)
    rate = float(np.mean(_omega_of(probe, n, mode) == g))
    if rate < MIN_ACCEPTANCE:
        raise InfeasibleError(f"acceptance rate {rate:.3g} for {mode} = {g} at n = {n} is "
                              f"below {MIN_ACCEPTANCE:g} over {PROBE_DRAWS} probe draws")
    grid = default_grid(config.grid_step)
    family = config.intervals

    def shard(size, rng):
        batch = min(max(int(1.25 * size / rate) + 64, 1024), 4 * PROBE_DRAWS)
        accepted, draws = [], 0
        have = 0
        while have < size:
            ms = rng.integers(1, n + 1, batch, dtype=np.int64)
            where = np.flatnonzero(_omega_of(ms, n, mode) == g)
            take = ms[where[: size - have]]
            # draws are counted up to the last accepted sample that is kept
            draws += int(where[len(take) - 1]) + 1 if len(take) < len(where) else batch
            accepted.append(take)
            have += len(take)
        norms = np.concatenate(accepted)
        rows, totals = arith.factor_rows(norms, n, distinct=(mode == "small-omega"),
                                         width=max(64, config.topk))
        return SpectrumSummary.of(rows, totals, grid, config.topk, family, draws)

    summary = _merge(_run_shards(shard, config.samples, config.seed, config.workers))
    report.add("g", g)
    report.add("theta", theta)
    report.add("acceptance_rate", summary.coords[0].count / summary.draws)
    report.add("probe_acceptance_rate", rate)
    _spectrum_report(report, summary, theta, grid, family, config.topk)
    l1 = summary.coords[0]
    report.add("mean_l1_vs_pd1", l1.mean, reference_means(1.0)[0], l1.std_error)
    return report


def run_erdos_kac(config: ExperimentConfig) -> ExperimentReport:
    if parse_semigroup(config.semigroup).name != "integers":
        raise UsageError("the Erdos-Kac check is defined for the ordinary integers only")
    n = config.n
    ll = math.log(math.log(n))

    def shard(size, rng):
        ms = rng.integers(1, n + 1, size, dtype=np.int64)
        big, small = arith.omega_values(ms, n)
        return np.bincount(big, minlength=64), np.bincount(small, minlength=64)

    parts = _run_shards(shard, config.samples, config.seed, config.workers)
    big_hist = sum(p[0] for p in parts)
    small_hist = sum(p[1] for p in parts)
    report = ExperimentReport("erdos-kac", config.echo())
    for label, hist in (("big_omega", big_hist), ("small_omega", small_hist)):
        count = int(hist.sum())
        j = np.arange(len(hist))
        z = (j - ll) / math.sqrt(ll)
        mean = float(np.dot(hist, j) / count)
        var = float(np.dot(hist, (j - mean) ** 2) / (count - 1)) if count > 1 else 0.0
        mean_z = (mean - ll) / math.sqrt(ll)
        report.add(f"mean_z_{label}", mean_z, 0.0, math.sqrt(var / ll / count))
        report.add(f"var_{label}", var, ll)
        cum = np.cumsum(hist) / count
        median = int(np.searchsorted(cum, 0.5))
        report.add(f"median_{label}", median)
        # sup over the jumps of the empirical step CDF against the normal CDF
        present = hist > 0
        phi = ndtr(z[present])
        after = cum[present]
        before = after - hist[present] / count
        report.add(f"ks_normal_{label}", float(np.max(np.maximum(np.abs(after - phi),
                                                                   np.abs(before - phi)))))
    report.warnings.append("log log n is small at desk scale; the normal comparison is "
                           "reported, not gated")
    return report


def run_intensity(config: ExperimentConfig) -> ExperimentReport:
    """Multi-intensity of PD(theta) samples over one interval family."""
    theta = check_theta(1.0 if config.theta is None else config.theta)
    family = config.intervals
    if family is None:
        raise UsageError("the intensity experiment needs intervals")
    family.require_hypothesis()
    keep = max(64, int(math.ceil(1.0 / min(a for a, _ in family.intervals))) + 1)

    def shard(size, rng):
        rows = sample_pd_batch(theta, size, rng, keep=keep)
        return MomentAccumulator.of(row_count_products(rows, family))

    acc = _merge(_run_shards(shard, config.samples, config.seed, config.workers))
    report = ExperimentReport("intensity", config.echo())
    predicted = pd_box_integral(theta, family)
    report.add("intensity", acc.mean, predicted, acc.std_error)
    z = (acc.mean - predicted) / acc.std_error if acc.std_error > 0 else 0.0
    report.add("z_score", z)
    report.add("pp_intensity", acc.mean, theta ** len(family) *
               math.prod(math.log(b / a) for a, b in family.intervals), acc.std_error)
    report.add("bound_log", acc.mean, theta_bound(family, theta, 1.0 - theta, 0.0, "log"),
               acc.std_error)
    report.add("bound_ratio", acc.mean, theta_bound(family, theta, 1.0 - theta, 0.0, "ratio"),
               acc.std_error)
    return report


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    runner = {"billingsley": run_billingsley, "conditioned": run_conditioned,
              "erdos-kac": run_erdos_kac, "intensity": run_intensity}[config.kind]
    return runner(config)


# --- divisor-tuple audit -----------------------------------------------------------

def multiformula_audit(numbers, n: int, family: IntervalFamily) -> list[tuple[int, int, int]]:
    """(N, product of distinct-prime interval counts, divisor-tuple count) per N.

    The tuple count enumerates primes q_i with log q_i / log n in I_i and
    counts the k-tuples whose product divides N; it never looks at the
    factorisation of N.
    """
    log_n = math.log(n)
    primes = arith.sieve_primes(n)
    scaled = np.log(primes) / log_n
    pools = [primes[(scaled >= a) & (scaled <= b)].tolist() for a, b in family.intervals]
    out = []
    for N in numbers:
        N = int(N)
        spec = arith.scaled_spectrum(n, N, "small-omega")
        lhs = math.prod(sum(m for v, m in spec.entries if a <= v <= b)
                        for a, b in family.intervals)
        rhs = _count_dividing_tuples(N, pools)
        out.append((N, lhs, rhs))
    return out


def _count_dividing_tuples(N: int, pools: list[list[int]]) -> int:
    total = 0

    def walk(i, prod):
        nonlocal total
        if i == len(pools):
            total += 1
            return
        for q in pools[i]:
            if N % (prod * q) == 0:
                walk(i + 1, prod * q)

    walk(0, 1)
    return total
