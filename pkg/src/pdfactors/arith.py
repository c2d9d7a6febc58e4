"""Primes, factorisation, prime-factor counts and Selberg-Delange main terms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt

import numpy as np
from scipy.special import exp1

from . import _kernels as K
from .errors import CapacityError, DomainError, ParameterError, UsageError
from .intensity import ScaledFactorMultiset
from .pdcore import check_theta

SPF_LIMIT_CAP = 2**31 - 1
DIRECT_SPF_LIMIT = 2 * 10**7  # bulk factoring switches to trial division above this
TRIAL_DIVISION_LIMIT = 1000
MAX_FACTOR_N = 2**64 - 1
MODES = ("big-omega", "small-omega")


def sieve_primes(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (empty when limit < 2)."""
    limit = int(limit)
    if limit < 2:
        return np.empty(0, np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for p in range(3, isqrt(limit) + 1, 2):
        if is_p[p]:
            is_p[p * p::2 * p] = False
    return np.flatnonzero(is_p).astype(np.int64)


@dataclass(frozen=True, eq=False)
class SpfTable:
    limit: int
    table: np.ndarray

    def smallest_prime_factor(self, m: int) -> int:
        if not 2 <= m <= self.limit:
            raise DomainError(f"{m} is outside the table range [2, {self.limit}]")
        return int(self.table[m])


_spf_cache: dict[str, SpfTable] = {}


def spf_table(limit: int) -> SpfTable:
    """Smallest-prime-factor table; reuses a cached larger table when one exists."""
    limit = int(limit)
    if limit > SPF_LIMIT_CAP:
        raise CapacityError(f"SPF tables are capped at {SPF_LIMIT_CAP}, requested {limit}")
    cached = _spf_cache.get("spf")
    if cached is not None and cached.limit >= limit:
        return cached
    table = SpfTable(max(limit, 2), K.spf_sieve(max(limit, 2)))
    _spf_cache["spf"] = table
    return table


@lru_cache(maxsize=4)
def _trial_primes(limit: int) -> np.ndarray:
    return sieve_primes(limit)


# --- single-number factorisation ---------------------------------------------

_SMALL_PRIMES = [int(p) for p in sieve_primes(TRIAL_DIVISION_LIMIT)]
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _brent(n: int) -> int:
    """A non-trivial factor of the odd composite n (Brent's cycle finding)."""
    for c in range(1, 200):
        y, r, q, g = 2, 1, 1, 1
        m = 128
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if g != n:
            return g
    raise RuntimeError(f"rho failed to split {n}")


def _split_into(n: int, out: dict[int, int]) -> None:
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    d = _brent(n)
    _split_into(d, out)
    _split_into(n // d, out)


@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def big_omega(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def small_omega(self) -> int:
        return len(self.factors)

    def value(self) -> int:
        return math.prod(p**e for p, e in self.factors)


def factor(n: int) -> Factorization:
    """Complete factorisation of 1 <= n < 2**64.

    Trial division by the primes below 1000, then Miller-Rabin on the
    cofactor and Brent's rho to split whatever composite part remains.
    """
    if int(n) != n or not 1 <= n <= MAX_FACTOR_N:
        raise DomainError(f"factor expects an integer in [1, 2**64), got {n}")
    n = int(n)
    found: dict[int, int] = {}
    m = n
    for p in _SMALL_PRIMES:
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            found[p] = e
    if m > 1:
        _split_into(m, found)
    return Factorization(n, tuple(sorted(found.items())))


def big_omega(n: int) -> int:
    return factor(n).big_omega


def small_omega(n: int) -> int:
    return factor(n).small_omega


# --- sums and spectra ----------------------------------------------------------

def mertens_sum(x: float) -> float:
    """Sum of 1/p over primes p <= x."""
    if x < 2:
        raise DomainError(f"mertens_sum needs x >= 2, got {x}")
    primes = sieve_primes(int(x))
    return math.fsum(1.0 / primes.astype(np.float64))


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def scaled_spectrum(n: int, N: int, mode: str = "big-omega") -> ScaledFactorMultiset:
    """Multiset of log p / log n over the prime factors p of N."""
    _check_mode(mode)
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if not 1 <= N <= n:
        raise DomainError(f"N must satisfy 1 <= N <= n, got N={N}, n={n}")
    log_n = math.log(n)
    f = factor(N)
    if mode == "big-omega":
        entries = tuple((math.log(p) / log_n, e) for p, e in f.factors)
    else:
        entries = tuple((math.log(p) / log_n, 1) for p, _ in f.factors)
    return ScaledFactorMultiset(entries)


def factor_rows(norms: np.ndarray, n: int, kind: int = K.INTEGERS, distinct: bool = False,
                width: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Ranked scaled spectra of many norms <= n at once.

    Returns ``(rows, totals)``; ``rows[i]`` holds the scaled log prime-norms of
    ``norms[i]`` in non-increasing order, zero padded to ``width``.
    """
    norms = np.ascontiguousarray(norms, dtype=np.int64)
    if n <= DIRECT_SPF_LIMIT:
        spf, primes, use_spf = spf_table(n).table, np.empty(0, np.int64), True
    else:
        spf, primes, use_spf = np.zeros(1, np.int32), _trial_primes(isqrt(n) + 1), False
    return K.spectra_rows(norms, spf, primes, use_spf, math.log(n), kind, distinct, width)


def omega_values(ms: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Big and small omega of every entry of ``ms`` (all <= n)."""
    ms = np.ascontiguousarray(ms, dtype=np.int64)
    if n <= DIRECT_SPF_LIMIT:
        return K.omega_batch(ms, spf_table(n).table, np.empty(0, np.int64), True)
    return K.omega_batch(ms, np.zeros(1, np.int32), _trial_primes(isqrt(n) + 1), False)


# --- counts nu_j ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CountTable:
    """counts[j] = #{1 <= m <= x : Omega(m) = j} (or omega); m = 1 sits at j = 0."""

    x: int
    mode: str
    counts: np.ndarray

    def __getitem__(self, j: int) -> int:
        return int(self.counts[j]) if 0 <= j < len(self.counts) else 0


@lru_cache(maxsize=8)
def count_table(x: int, mode: str = "big-omega") -> CountTable:
    _check_mode(mode)
    if x < 1:
        raise DomainError(f"x must be at least 1, got {x}")
    big, small = K.omega_tables(spf_table(max(int(x), 2)).table, int(x))
    values = big if mode == "big-omega" else small
    return CountTable(int(x), mode, np.bincount(values[1:]).astype(np.int64))


def nu_count(x: int, j: int, mode: str = "big-omega") -> int:
    if j < 0:
        raise DomainError(f"j must be non-negative, got {j}")
    return count_table(int(x), mode)[j]


# --- Euler products -------------------------------------------------------------

def _tail_inverse_square(limit: int) -> float:
    # sum_{p > P} p^-2 ~ int_P^inf dt / (t^2 log t) = E1(log P)
    return float(exp1(math.log(limit)))


@lru_cache(maxsize=4)
def _float_primes(limit: int) -> np.ndarray:
    return sieve_primes(limit).astype(np.float64)


def kappa(z: float, prime_limit: int = 10**6) -> float:
    """(1/Gamma(z+1)) prod_p (1 - z/p)^-1 (1 - 1/p)^z for 0 <= z < 2."""
    z = float(z)
    if not 0.0 <= z < 2.0:
        raise DomainError(f"kappa is evaluated on [0, 2); z = {z} is at or past the pole at 2")
    p = _float_primes(prime_limit)
    log_prod = math.fsum(-np.log1p(-z / p) + z * np.log1p(-1.0 / p))
    # first-order terms cancel; the tail is (z^2 - z)/2 * sum_{p>P} p^-2
    log_prod += 0.5 * (z * z - z) * _tail_inverse_square(prime_limit)
    return math.exp(log_prod) / math.gamma(z + 1.0)


def lambda_fn(z: float, prime_limit: int = 10**6) -> float:
    """(1/Gamma(z+1)) prod_p (1 + z/(p-1)) (1 - 1/p)^z for z >= 0."""
    z = float(z)
    if not (z >= 0.0 and math.isfinite(z)):
        raise DomainError(f"lambda_fn needs z >= 0, got {z}")
    p = _float_primes(prime_limit)
    log_prod = math.fsum(np.log1p(z / (p - 1.0)) + z * np.log1p(-1.0 / p))
    log_prod -= 0.5 * (z * z - z) * _tail_inverse_square(prime_limit)
    return math.exp(log_prod) / math.gamma(z + 1.0)


def selberg_constant_C(prime_limit: int = 10**7) -> float:
    """(1/4) prod_{2 < p <= prime_limit} (1 + 1/(p(p-2)))."""
    p = sieve_primes(prime_limit).astype(np.float64)
    p = p[p > 2]
    return 0.25 * math.exp(math.fsum(np.log1p(1.0 / (p * (p - 2.0)))))


SELBERG_MODES = ("big-omega-small-j", "big-omega-large-j", "small-omega")


def selberg_approx(x: float, j: int, mode: str, delta: float = 0.0,
                   bound: float = 4.0) -> float:
    """Main term of the Selberg-Delange count, without the error factor.

    ``delta`` and ``bound`` are the window parameters: the small-j formula
    needs j <= (2 - delta) log log x, the large-j one needs
    (2 + delta) < j / log log x < bound, and the distinct-prime formula
    needs j <= bound * log log x.
    """
    if mode not in SELBERG_MODES:
        raise UsageError(f"mode must be one of {SELBERG_MODES}, got {mode!r}")
    if x < 3:
        raise DomainError(f"the formulas hold for x >= 3, got x={x}")
    if int(j) != j or j < 1:
        raise DomainError(f"j must be a positive integer, got {j}")
    log_x = math.log(x)
    ll = math.log(log_x)
    if mode == "big-omega-large-j":
        ratio = j / ll
        if not (2.0 + delta < ratio < bound):
            raise DomainError(f"large-j formula needs {2 + delta:g} < j/log log x < {bound:g}; "
                              f"j/log log x = {ratio:.4g}")
        return selberg_constant_C() * x * log_x / 2.0**j
    if mode == "big-omega-small-j" and j > (2.0 - delta) * ll:
        raise DomainError(f"small-j formula needs j <= (2 - {delta:g}) log log x "
                          f"= {(2 - delta) * ll:.4g}; j = {j}")
    if mode == "small-omega" and j > bound * ll:
        raise DomainError(f"distinct-prime formula needs j <= {bound:g} log log x "
                          f"= {bound * ll:.4g}; j = {j}")
    special = kappa if mode == "big-omega-small-j" else lambda_fn
    poisson = math.exp((j - 1) * math.log(ll) - math.lgamma(j))
    return x / log_x * poisson * special((j - 1) / ll)


def theta_prime(theta: float) -> float:
    theta = check_theta(theta)
    return 1.0 - theta * (1.0 - math.log(theta))


def stirling_ratio(x: float, theta: float, rounded: bool = True) -> float:
    """Ratio of (x/log x)(log log x)^k / k! to x / ((log x)^theta' sqrt(2 pi theta log log x)).

    ``k`` is round(theta log log x) when ``rounded``, else the real theta log
    log x with k! read as Gamma(k + 1).
    """
    theta = check_theta(theta)
    if x <= math.e:
        raise ParameterError(f"x must exceed e, got {x}")
    log_x = math.log(x)
    ll = math.log(log_x)
    k = round(theta * ll) if rounded else theta * ll
    log_lhs = math.log(x) - math.log(log_x) + k * math.log(ll) - math.lgamma(k + 1.0)
    log_rhs = (math.log(x) - theta_prime(theta) * math.log(log_x)
               - 0.5 * math.log(2 * math.pi * theta * ll))
    return math.exp(log_lhs - log_rhs)
