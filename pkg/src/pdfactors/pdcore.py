"""GEM and Poisson-Dirichlet samplers, densities, ranking and size-biased picks.

Stick breaking: with U_i uniform on (0, 1) and V_i = U_i ** (1/theta),

    G_1 = 1 - V_1,   G_j = V_1 ... V_{j-1} (1 - V_j).

Ranking the G_j gives the Poisson-Dirichlet PD(theta) arrivals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParameterError
from .rng import generator, open_uniform

EULER_GAMMA = 0.57721566490153286061
DEFAULT_TAIL_EPSILON = 1e-12
DICKMAN_U_MAX = 64


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not (math.isfinite(theta) and theta > 0):
        raise ParameterError(f"theta must be a positive finite real, got {theta}")
    return theta


def _check_k(k: int) -> int:
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    return int(k)


@dataclass(frozen=True)
class GemSequence:
    """First ``k`` stick-breaking pieces.

    ``log_residual`` is log(V_1 ... V_k), so the exact sum of the pieces is
    ``1 - exp(log_residual)``; it stays meaningful after the float sum of
    ``values`` has rounded to 1.
    """

    theta: float
    values: tuple[float, ...]
    log_residual: float

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RankedSpectrum:
    """Non-increasing values in [0, 1] with implicit zero padding."""

    values: tuple[float, ...]
    total: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.total is None:
            object.__setattr__(self, "total", math.fsum(self.values))

    def __getitem__(self, i: int) -> float:
        # zero padding: L_i = 0 past the last arrival
        return self.values[i] if i < len(self.values) else 0.0

    def __len__(self) -> int:
        return len(self.values)

    def top(self, k: int) -> tuple[float, ...]:
        return tuple(self[i] for i in range(k))


@dataclass(frozen=True)
class WeightedMultiset:
    """Positive values with integer multiplicities; values are distinct."""

    entries: tuple[tuple[float, int], ...]

    def __post_init__(self):
        seen = set()
        for value, mult in self.entries:
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"multiset values must be positive and finite, got {value}")
            if int(mult) != mult or mult < 1:
                raise DomainError(f"multiplicities must be positive integers, got {mult}")
            if value in seen:
                raise DomainError(f"duplicate value {value}; merge multiplicities instead")
            seen.add(value)

    @classmethod
    def from_values(cls, values: Iterable[float]):
        counts: dict[float, int] = {}
        for v in values:
            counts[float(v)] = counts.get(float(v), 0) + 1
        return cls(tuple(sorted(counts.items(), reverse=True)))

    @property
    def total(self) -> float:
        return math.fsum(v * m for v, m in self.entries)

    @property
    def size(self) -> int:
        return sum(m for _, m in self.entries)

    def expanded(self) -> list[float]:
        return [v for v, m in self.entries for _ in range(m)]


def sample_gem(theta: float, k: int, seed: int = 0, stream: int = 0) -> GemSequence:
    theta = check_theta(theta)
    k = _check_k(k)
    u = open_uniform(generator(seed, stream), k)
    log_v = np.log(u) / theta
    cum = np.cumsum(log_v)
    before = np.concatenate(([0.0], cum[:-1]))
    # G_j = V_1..V_{j-1} (1 - V_j), with 1 - V_j via expm1 to keep small pieces exact
    values = np.exp(before) * -np.expm1(log_v)
    return GemSequence(theta, tuple(float(x) for x in values), float(cum[-1]))


def gem_density(theta: float, xs: Sequence[float]) -> float:
    """Joint density of (G_1, ..., G_k); zero off the open set U."""
    theta = check_theta(theta)
    xs = [float(x) for x in xs]
    if not xs:
        raise DomainError("gem_density needs at least one coordinate")
    if any(not (0.0 < x < 1.0) for x in xs) or len(set(xs)) != len(xs):
        return 0.0
    partial = np.cumsum(xs)
    if partial[-1] >= 1.0:
        return 0.0
    k = len(xs)
    denom = math.prod(1.0 - s for s in partial[:-1])
    return theta**k * (1.0 - partial[-1]) ** (theta - 1.0) / denom


def gem_density_array(theta: float, points: np.ndarray) -> np.ndarray:
    """Vectorised :func:`gem_density` over rows of ``points`` (shape ``(m, k)``)."""
    theta = check_theta(theta)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[1]
    partial = np.cumsum(pts, axis=1)
    inside = np.all((pts > 0) & (pts < 1), axis=1) & (partial[:, -1] < 1)
    if k > 1:
        s = np.sort(pts, axis=1)
        inside &= np.all(np.diff(s, axis=1) != 0, axis=1)
    out = np.zeros(len(pts))
    p = partial[inside]
    denom = np.prod(1.0 - p[:, :-1], axis=1) if k > 1 else 1.0
    out[inside] = theta**k * (1.0 - p[:, -1]) ** (theta - 1.0) / denom
    return out


def rank(values: Iterable[float]) -> RankedSpectrum:
    vals = [float(v) for v in values]
    if any(v < 0 or math.isnan(v) for v in vals):
        raise DomainError("rank requires non-negative entries")
    kept = sorted((v for v in vals if v > 0), reverse=True)
    return RankedSpectrum(tuple(kept), math.fsum(vals))


def _stick_break_rows(theta: float, rows: int, rng: np.random.Generator,
                      tail_epsilon: float, chunk: int = 64) -> np.ndarray:
    """Stick-breaking pieces per row until each row's residual < tail_epsilon.

    Returns an array of shape ``(rows, m)``; entries after a row's stopping
    index are zero.
    """
    log_eps = math.log(tail_epsilon)
    pieces = []
    carry = np.zeros(rows)
    done = np.zeros(rows, dtype=bool)
    while not done.all():
        log_v = np.log(open_uniform(rng, (rows, chunk))) / theta
        cum = carry[:, None] + np.cumsum(log_v, axis=1)
        before = np.concatenate((carry[:, None], cum[:, :-1]), axis=1)
        g = np.exp(before) * -np.expm1(log_v)
        # a piece is kept if the residual before it was still >= epsilon
        g[(before < log_eps) | done[:, None]] = 0.0
        pieces.append(g)
        carry = cum[:, -1]
        done |= carry < log_eps
    return np.concatenate(pieces, axis=1)


def sample_pd_batch(theta: float, count: int, rng: np.random.Generator, keep: int = 64,
                    tail_epsilon: float = DEFAULT_TAIL_EPSILON,
                    block: int = 20000) -> np.ndarray:
    """``count`` PD(theta) samples as rows of the top-``keep`` ranked arrivals."""
    theta = check_theta(theta)
    if not 0 < tail_epsilon < 1:
        raise ParameterError(f"tail_epsilon must lie in (0, 1), got {tail_epsilon}")
    out = np.zeros((count, keep))
    for start in range(0, count, block):
        rows = min(block, count - start)
        g = _stick_break_rows(theta, rows, rng, tail_epsilon)
        width = min(keep, g.shape[1])
        top = -np.partition(-g, width - 1, axis=1)[:, :width] if width < g.shape[1] else g
        out[start:start + rows, :width] = -np.sort(-top, axis=1)
    return out


def sample_pd(theta: float, k: int, tail_epsilon: float = DEFAULT_TAIL_EPSILON,
              seed: int = 0, stream: int = 0) -> RankedSpectrum:
    """Top ``k`` arrivals of a PD(theta) sample by truncated stick breaking.

    Pieces are generated until the unbroken residual V_1...V_m drops below
    ``tail_epsilon``. The returned prefix is exactly the true top ``k``
    whenever the ``k``-th returned value is at least ``tail_epsilon``: no
    unsampled piece can exceed the residual.
    """
    theta = check_theta(theta)
    k = _check_k(k)
    if not 0 < tail_epsilon < 1:
        raise ParameterError(f"tail_epsilon must lie in (0, 1), got {tail_epsilon}")
    g = _stick_break_rows(theta, 1, generator(seed, stream), tail_epsilon)[0]
    ranked = rank(g)
    return RankedSpectrum(ranked.values[:k])


def size_biased_permutation(a: WeightedMultiset, k: int, seed: int = 0,
                            stream: int = 0) -> tuple[float, ...]:
    """First ``k`` picks of a size-biased permutation, zero-padded past |A|."""
    k = _check_k(k)
    rng = generator(seed, stream)
    values = [v for v, _ in a.entries]
    remaining = [m for _, m in a.entries]
    picks = []
    for _ in range(min(k, a.size)):
        weights = np.array([v * m for v, m in zip(values, remaining)])
        cum = np.cumsum(weights)
        j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        j = min(j, len(values) - 1)
        while remaining[j] == 0:  # guard against a zero-weight landing at the edge
            j -= 1
        picks.append(values[j])
        remaining[j] -= 1
    return tuple(picks) + (0.0,) * (k - len(picks))


def size_biased_first(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """First size-biased pick from each row of non-negative values."""
    rows = np.asarray(rows, dtype=float)
    cum = np.cumsum(rows, axis=1)
    target = rng.random(len(rows)) * cum[:, -1]
    idx = (cum <= target[:, None]).sum(axis=1)
    idx = np.minimum(idx, rows.shape[1] - 1)
    return rows[np.arange(len(rows)), idx]


# --- Dickman's function -----------------------------------------------------

_DICKMAN_STEPS = 1024  # nodes per unit interval at the coarse step


def _dickman_trapezoid(steps_per_unit: int, u_max: int) -> np.ndarray:
    """rho on a uniform grid of [0, u_max] from u rho'(u) = -rho(u - 1), trapezoid rule."""
    m = steps_per_unit
    h = 1.0 / m
    rho = np.empty(u_max * m + 1)
    rho[: m + 1] = 1.0
    for k in range(1, u_max):
        t = k + h * np.arange(m + 1)
        f = rho[(k - 1) * m: k * m + 1] / t
        increments = 0.5 * h * (f[:-1] + f[1:])
        rho[k * m + 1: (k + 1) * m + 1] = rho[k * m] - np.cumsum(increments)
    return rho


@lru_cache(maxsize=1)
def _dickman_grid() -> np.ndarray:
    coarse = _dickman_trapezoid(_DICKMAN_STEPS, DICKMAN_U_MAX)
    fine = _dickman_trapezoid(2 * _DICKMAN_STEPS, DICKMAN_U_MAX)
    # trapezoid error expands in even powers of h; one Richardson step leaves O(h^4)
    return (4.0 * fine[::2] - coarse) / 3.0


def dickman_rho(u):
    """Dickman's function for ``0 <= u <= 64``; scalar in, float out; arrays map elementwise."""
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("dickman_rho requires u >= 0")
    if np.any(arr > DICKMAN_U_MAX):
        raise DomainError(f"dickman_rho is tabulated only for u <= {DICKMAN_U_MAX}")
    flat = arr.ravel()
    out = np.ones_like(flat)
    big = flat > 1.0
    if big.any():
        out[big] = _dickman_interp(flat[big])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def _dickman_interp(u: np.ndarray) -> np.ndarray:
    grid = _dickman_grid()
    m = _DICKMAN_STEPS
    k = np.minimum(np.floor(u).astype(np.int64), DICKMAN_U_MAX - 1)
    pos = (u - k) * m
    # six-point Lagrange stencil kept inside [k, k+1], where rho is smooth
    i0 = np.clip(np.floor(pos).astype(np.int64) - 2, 0, m - 5)
    nodes = i0[:, None] + np.arange(6)[None, :]
    vals = grid[k[:, None] * m + nodes]
    x = pos[:, None] - nodes
    result = np.zeros(len(u))
    for j in range(6):
        w = np.ones(len(u))
        for i in range(6):
            if i != j:
                w *= x[:, i] / (j - i)
        result += w * vals[:, j]
    return result


def pd_total_sum_density(theta: float, t: float) -> float:
    """Density of the total T of a Poisson(theta dx/x) process, on (0, 1] only."""
    theta = check_theta(theta)
    t = float(t)
    if not 0.0 < t <= 1.0:
        raise DomainError(f"the closed form holds only for t in (0, 1], got {t}")
    return math.exp(-EULER_GAMMA * theta) * t ** (theta - 1.0) / math.gamma(theta)
