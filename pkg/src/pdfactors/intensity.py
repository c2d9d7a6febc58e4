"""Interval families, multi-intensity estimation and the analytic comparisons.

For a random multiset A in (0, 1] and disjoint closed intervals I_1..I_k the
multi-intensity is E prod_i |A n I_i| (counts with multiplicity). The
Poisson-Dirichlet PD(theta) has multi-intensity density

    theta^k (1 - t)^(theta - 1) / (x_1 ... x_k)   for t = x_1 + ... + x_k < 1

and zero for t > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, HypothesisError, UsageError
from .pdcore import WeightedMultiset, check_theta, sample_pd_batch
from .rng import generator

GAUSS_NODES = 32


@dataclass(frozen=True)
class IntervalFamily:
    """Pairwise disjoint closed intervals [a_i, b_i] in (0, 1], in the given order."""

    intervals: tuple[tuple[float, float], ...]
    sum_b_lt_1: bool = field(init=False)

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise DomainError("an interval family needs at least one interval")
        for a, b in ivs:
            if not (0.0 < a < b <= 1.0):
                raise DomainError(f"interval [{a}, {b}] must satisfy 0 < a < b <= 1")
        ordered = sorted(ivs)
        for (a1, b1), (a2, b2) in zip(ordered, ordered[1:]):
            if not b1 < a2:
                raise DomainError(f"intervals [{a1}, {b1}] and [{a2}, {b2}] are not disjoint")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "sum_b_lt_1", sum(b for _, b in ivs) < 1.0)

    @classmethod
    def parse(cls, text: str) -> "IntervalFamily":
        """Parse ``"a:b,a:b,..."``."""
        pairs = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            try:
                a, b = chunk.split(":")
                pairs.append((float(a), float(b)))
            except ValueError:
                raise UsageError(f"cannot parse interval {chunk!r}; expected a:b") from None
        return cls(tuple(pairs))

    def __len__(self) -> int:
        return len(self.intervals)

    def __str__(self) -> str:
        return ",".join(f"{a:g}:{b:g}" for a, b in self.intervals)

    @property
    def lower_sum(self) -> float:
        return math.fsum(a for a, _ in self.intervals)

    @property
    def upper_sum(self) -> float:
        return math.fsum(b for _, b in self.intervals)

    def require_hypothesis(self) -> None:
        if not self.sum_b_lt_1:
            raise HypothesisError(f"intervals {self} violate b_1 + ... + b_k < 1 "
                                  f"(sum is {self.upper_sum:g})")


class ScaledFactorMultiset(WeightedMultiset):
    """Multiset of scaled log factors; values lie in (0, 1]."""

    def __post_init__(self):
        super().__post_init__()
        for value, _ in self.entries:
            if value > 1.0:
                raise DomainError(f"scaled factor {value} exceeds 1")


@dataclass(frozen=True)
class IntensityEstimate:
    intervals: IntervalFamily
    sample_count: int
    mean_product: float
    std_error: float


def _check_interval(interval) -> tuple[float, float]:
    a, b = (float(x) for x in interval)
    if not 0.0 < a <= b <= 1.0:
        raise DomainError(f"interval [{a}, {b}] must satisfy 0 < a <= b <= 1")
    return a, b


def count_in_interval(a: WeightedMultiset, interval) -> int:
    lo, hi = _check_interval(interval)
    return sum(m for v, m in a.entries if lo <= v <= hi)


def count_product(a: WeightedMultiset, family: IntervalFamily) -> int:
    return math.prod(count_in_interval(a, iv) for iv in family.intervals)


class MomentAccumulator:
    """Count, sum and sum of squares; merges associatively."""

    __slots__ = ("count", "total", "total_sq")

    def __init__(self, count: int = 0, total: float = 0.0, total_sq: float = 0.0):
        self.count = count
        self.total = total
        self.total_sq = total_sq

    @classmethod
    def of(cls, values) -> "MomentAccumulator":
        v = np.asarray(values, dtype=float)
        return cls(int(v.size), float(v.sum()), float(np.dot(v, v)))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        return MomentAccumulator(self.count + other.count, self.total + other.total,
                                 self.total_sq + other.total_sq)

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else math.nan

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return 0.0
        var = (self.total_sq - self.total**2 / self.count) / (self.count - 1)
        return math.sqrt(max(var, 0.0) / self.count)


def empirical_multi_intensity(samples: Iterable[WeightedMultiset],
                              family: IntervalFamily) -> IntensityEstimate:
    products = [count_product(s, family) for s in samples]
    if not products:
        raise UsageError("empirical_multi_intensity needs at least one sample")
    acc = MomentAccumulator.of(products)
    return IntensityEstimate(family, acc.count, acc.mean, acc.std_error)


def row_count_products(rows: np.ndarray, family: IntervalFamily) -> np.ndarray:
    """Per-row prod_i |A n I_i| for zero-padded arrays of multiset elements.

    Each row lists the elements of one multiset with repetition; zeros are
    padding and never fall in an interval since a_i > 0.
    """
    rows = np.asarray(rows)
    out = np.ones(len(rows), dtype=np.int64)
    for a, b in family.intervals:
        out *= ((rows >= a) & (rows <= b)).sum(axis=1)
    return out


def estimate_from_rows(rows: np.ndarray, family: IntervalFamily) -> IntensityEstimate:
    acc = MomentAccumulator.of(row_count_products(rows, family))
    if acc.count == 0:
        raise UsageError("empirical_multi_intensity needs at least one sample")
    return IntensityEstimate(family, acc.count, acc.mean, acc.std_error)


def _interval_terms(family: IntervalFamily, form: str) -> float:
    if form == "log":
        return math.prod(math.log(b / a) for a, b in family.intervals)
    if form == "ratio":
        return math.prod((b - a) / b for a, b in family.intervals)
    raise UsageError(f"form must be 'ratio' or 'log', got {form!r}")


def theta1_bound(family: IntervalFamily, form: str = "log") -> float:
    family.require_hypothesis()
    return _interval_terms(family, form)


def theta_bound(family: IntervalFamily, theta: float, alpha: float, beta: float,
                form: str = "log") -> float:
    """theta^k / ((1 - sum a)^alpha (1 - sum b)^beta) times the per-interval product."""
    theta = check_theta(theta)
    if abs(alpha + beta - (1.0 - theta)) > 1e-12:
        raise HypothesisError(f"alpha + beta must equal 1 - theta "
                              f"({alpha} + {beta} != {1.0 - theta})")
    family.require_hypothesis()
    k = len(family)
    scale = theta**k / ((1.0 - family.lower_sum) ** alpha * (1.0 - family.upper_sum) ** beta)
    return scale * _interval_terms(family, form)


def _check_points(xs: Sequence[float]) -> list[float]:
    xs = [float(x) for x in xs]
    if not xs:
        raise DomainError("need at least one coordinate")
    if any(not 0.0 < x <= 1.0 for x in xs):
        raise DomainError("coordinates must lie in (0, 1]")
    if len(set(xs)) != len(xs):
        raise DomainError("multi-intensity densities are defined only off the diagonals")
    return xs


def pp_multi_intensity_density(theta: float, xs: Sequence[float]) -> float:
    theta = check_theta(theta)
    xs = _check_points(xs)
    return theta ** len(xs) / math.prod(xs)


def pd_multi_intensity_density(theta: float, xs: Sequence[float]) -> float:
    theta = check_theta(theta)
    xs = _check_points(xs)
    t = math.fsum(xs)
    if t == 1.0:
        raise DomainError("the PD multi-intensity density is undefined at t = 1")
    if t > 1.0:
        return 0.0
    return theta ** len(xs) * (1.0 - t) ** (theta - 1.0) / math.prod(xs)


def pd_box_integral(theta: float, family: IntervalFamily, nodes: int = GAUSS_NODES) -> float:
    """Integral of the PD(theta) multi-intensity density over the box prod_i I_i.

    Tensor-product Gauss-Legendre; points with t >= 1 contribute zero.
    """
    theta = check_theta(theta)
    x, w = np.polynomial.legendre.leggauss(nodes)
    axes, weights = [], []
    for a, b in family.intervals:
        axes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    grids = np.meshgrid(*axes, indexing="ij")
    wgrid = np.prod(np.meshgrid(*weights, indexing="ij"), axis=0)
    t = np.sum(grids, axis=0)
    prod = np.prod(grids, axis=0)
    inside = t < 1.0
    dens = np.zeros_like(t)
    dens[inside] = theta ** len(axes) * (1.0 - t[inside]) ** (theta - 1.0) / prod[inside]
    return float(np.sum(dens * wgrid))


@dataclass(frozen=True)
class CharacterizationRow:
    intervals: IntervalFamily
    empirical: float
    predicted: float
    std_error: float

    @property
    def z_score(self) -> float:
        diff = self.empirical - self.predicted
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_error


SpectrumSource = Callable[[int, np.random.Generator], np.ndarray]


def pd_source(theta: float, keep: int = 64) -> SpectrumSource:
    """Spectrum source drawing PD(theta) samples as zero-padded ranked rows."""
    return lambda count, rng: sample_pd_batch(theta, count, rng, keep=keep)


def characterization_check(sampler: SpectrumSource | None, theta: float,
                           boxes: Sequence[IntervalFamily], samples: int,
                           seed: int = 0) -> list[CharacterizationRow]:
    """Compare empirical multi-intensities with the PD(theta) density integrals.

    One batch of ``samples`` spectra is drawn from ``sampler`` (PD(theta) when
    None) and scored against every box. The forward comparison needs no
    b_1 + ... + b_k < 1: the density is integrable on any box, and t = 1 is a
    null set. Boxes lying entirely in t > 1 predict 0.
    """
    theta = check_theta(theta)
    if samples < 1:
        raise UsageError("samples must be at least 1")
    sampler = sampler or pd_source(theta)
    rows = sampler(samples, generator(seed, 0))
    out = []
    for box in boxes:
        est = estimate_from_rows(rows, box)
        out.append(CharacterizationRow(box, est.mean_product, pd_box_integral(theta, box),
                                       est.std_error))
    return out


CSV_COLUMNS = ("k", "intervals", "samples", "mean", "stderr", "bound_log", "bound_ratio")


def estimate_csv_row(est: IntensityEstimate, theta: float = 1.0,
                     alpha: float | None = None, beta: float = 0.0) -> dict:
    """One CSV row; bounds use alpha = 1 - theta, beta = 0 unless given, blank if Σb >= 1."""
    from .report import fmt

    alpha = 1.0 - theta - beta if alpha is None else alpha
    row = {"k": len(est.intervals), "intervals": str(est.intervals),
           "samples": est.sample_count, "mean": fmt(est.mean_product),
           "stderr": fmt(est.std_error), "bound_log": "", "bound_ratio": ""}
    if est.intervals.sum_b_lt_1:
        row["bound_log"] = fmt(theta_bound(est.intervals, theta, alpha, beta, "log"))
        row["bound_ratio"] = fmt(theta_bound(est.intervals, theta, alpha, beta, "ratio"))
    return row
