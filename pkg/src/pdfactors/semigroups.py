"""Normed arithmetic semigroups with integer norms.

A semigroup is presented by two weight functions on the positive integers:
``element_weight(m)`` counts the elements of norm exactly m and
``prime_weight(m)`` counts its primes of norm exactly m. Five instances are
provided:

=================  =====  ======================================================
name               theta  primes (norm: how many)
=================  =====  ======================================================
integers           1      p: 1
two-squares        1/2    2: 1, p = 1 mod 4: 1, p^2 for p = 3 mod 4: 1
gaussian-ideals    1      2: 1, p = 1 mod 4: 2, p^2 for p = 3 mod 4: 1
doubled-primes     2      p: 2 (two disjoint copies of the rational primes)
ap-primes          |R|/phi(q)   p with p mod q in R: 1
=================  =====  ======================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .arith import factor, sieve_primes, spf_table
from .errors import CapacityError, DomainError, UsageError
from .intensity import ScaledFactorMultiset
from .rng import generator

MAX_TABLE_N = 10**8
NAMES = ("integers", "two-squares", "gaussian-ideals", "doubled-primes", "ap-primes")
_KIND = {"integers": K.INTEGERS, "two-squares": K.TWO_SQUARES,
         "gaussian-ideals": K.GAUSSIAN, "doubled-primes": K.DOUBLED,
         "ap-primes": K.AP_PRIMES}


@dataclass(frozen=True)
class SemigroupSpec:
    name: str
    theta: float
    modulus: int = 1
    residues: tuple[int, ...] = ()

    @property
    def kind(self) -> int:
        return _KIND[self.name]

    @property
    def label(self) -> str:
        if self.name == "ap-primes":
            return f"ap-primes:q={self.modulus},r={'|'.join(map(str, self.residues))}"
        return self.name

    def _allowed(self) -> np.ndarray:
        mask = np.zeros(self.modulus, dtype=np.bool_)
        mask[list(self.residues)] = True
        return mask

    def _prime_power_weight(self, p: int, e: int) -> int:
        if self.name == "integers":
            return 1
        if self.name == "two-squares":
            return 0 if (p % 4 == 3 and e % 2) else 1
        if self.name == "gaussian-ideals":
            if p == 2:
                return 1
            return e + 1 if p % 4 == 1 else int(e % 2 == 0)
        if self.name == "doubled-primes":
            return e + 1
        return int(p % self.modulus in self.residues)

    def element_weight(self, m: int) -> int:
        if m < 1:
            return 0
        return math.prod(self._prime_power_weight(p, e) for p, e in factor(m).factors)

    def prime_weight(self, m: int) -> int:
        if m < 2:
            return 0
        f = factor(m).factors
        if len(f) != 1:
            return 0
        (p, e), = f
        if e == 1:
            if self.name in ("integers",):
                return 1
            if self.name in ("two-squares", "gaussian-ideals"):
                if p == 2:
                    return 1
                if p % 4 == 1:
                    return 1 if self.name == "two-squares" else 2
                return 0
            if self.name == "doubled-primes":
                return 2
            return int(p % self.modulus in self.residues)
        if e == 2 and p % 4 == 3 and self.name in ("two-squares", "gaussian-ideals"):
            return 1
        return 0

    def element_weights(self, x: int) -> np.ndarray:
        """``w[m]`` for 0 <= m <= x (``w[0] = 0``)."""
        x = int(x)
        if x > MAX_TABLE_N:
            raise CapacityError(f"weight tables are capped at n <= {MAX_TABLE_N}, requested {x}")
        if self.name == "integers":
            w = np.ones(x + 1, np.int32)
            w[0] = 0
            return w
        table = spf_table(max(x, 2)).table
        allowed = self._allowed() if self.name == "ap-primes" else np.ones(1, np.bool_)
        return K.multiplicative_weights(table, x, self.kind, self.modulus, allowed)

    def prime_norms(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        """Sorted distinct prime norms <= x and the number of primes at each."""
        p = sieve_primes(int(x))
        if self.name == "integers":
            return p, np.ones_like(p)
        if self.name == "doubled-primes":
            return p, np.full_like(p, 2)
        if self.name == "ap-primes":
            keep = np.isin(p % self.modulus, self.residues)
            return p[keep], np.ones(int(keep.sum()), np.int64)
        inert = p[p % 4 == 3]
        inert_sq = inert[inert <= math.isqrt(int(x))] ** 2
        split = p[p % 4 != 3]
        per_split = np.where(split == 2, 1, 1 if self.name == "two-squares" else 2)
        norms = np.concatenate((split, inert_sq))
        counts = np.concatenate((per_split, np.ones_like(inert_sq)))
        order = np.argsort(norms, kind="stable")
        return norms[order], counts[order]


def _phi(q: int) -> int:
    return math.prod((p - 1) * p ** (e - 1) for p, e in factor(q).factors)


def make_semigroup(name: str, q: int | None = None,
                   residues: tuple[int, ...] | None = None) -> SemigroupSpec:
    if name not in NAMES:
        raise UsageError(f"unknown semigroup {name!r}; choose from {', '.join(NAMES)}")
    if name == "integers":
        return SemigroupSpec(name, 1.0)
    if name == "two-squares":
        return SemigroupSpec(name, 0.5)
    if name == "gaussian-ideals":
        return SemigroupSpec(name, 1.0)
    if name == "doubled-primes":
        return SemigroupSpec(name, 2.0)
    if q is None or not residues:
        raise UsageError("ap-primes needs a modulus q and a non-empty residue set")
    q = int(q)
    if q < 2:
        raise UsageError(f"modulus must be at least 2, got {q}")
    res = tuple(sorted({int(r) % q for r in residues}))
    bad = [r for r in res if math.gcd(r, q) != 1]
    if bad:
        raise UsageError(f"residues {bad} are not coprime to {q}")
    theta = float(Fraction(len(res), _phi(q)))
    return SemigroupSpec(name, theta, q, res)


def parse_semigroup(text: str) -> SemigroupSpec:
    """Parse ``integers``, ``two-squares``, ..., ``ap-primes:q=Q,r=R1|R2|...``."""
    name, _, params = text.strip().partition(":")
    if name != "ap-primes":
        if params:
            raise UsageError(f"semigroup {name!r} takes no parameters")
        return make_semigroup(name)
    fields = {}
    for part in params.split(","):
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    try:
        q = int(fields["q"])
        residues = tuple(int(r) for r in fields["r"].split("|"))
    except (KeyError, ValueError):
        raise UsageError(f"cannot parse {text!r}; expected ap-primes:q=Q,r=R1|R2|...") from None
    return make_semigroup(name, q, residues)


@lru_cache(maxsize=4)
def cumulative_weights(spec: SemigroupSpec, n: int) -> np.ndarray:
    """``c[m] = nu_S(m)`` for 0 <= m <= n, as int64 prefix sums."""
    return np.cumsum(spec.element_weights(n), dtype=np.int64)


def nu_count_semigroup(spec: SemigroupSpec, x: float) -> int:
    x = int(x)
    if x < 1:
        raise DomainError(f"x must be at least 1, got {x}")
    if spec.name == "integers":
        return x
    return int(cumulative_weights(spec, x)[-1])


def pi_count_semigroup(spec: SemigroupSpec, x: float) -> int:
    x = int(x)
    if x < 1:
        raise DomainError(f"x must be at least 1, got {x}")
    _, counts = spec.prime_norms(x)
    return int(counts.sum())


def semigroup_mertens(spec: SemigroupSpec, x: float) -> tuple[float, float]:
    """Sum of 1/|p| over semigroup primes of norm <= x, and sum - theta log log x."""
    if x < 3:
        raise DomainError(f"x must be at least 3, got {x}")
    norms, counts = spec.prime_norms(int(x))
    total = math.fsum(counts / norms.astype(np.float64))
    return total, total - spec.theta * math.log(math.log(x))


@dataclass(frozen=True)
class SemigroupElement:
    """An element given by its norm and prime factors.

    ``factors`` lists ``(prime_norm, copy, multiplicity)``; ``copy`` tells
    apart distinct primes sharing one norm (the two copies of p in the
    doubled primes, the conjugate ideals over p = 1 mod 4).
    """

    spec: SemigroupSpec
    norm: int
    factors: tuple[tuple[int, int, int], ...]

    @property
    def prime_norms(self) -> tuple[tuple[int, int], ...]:
        merged: dict[int, int] = {}
        for q, _, e in self.factors:
            merged[q] = merged.get(q, 0) + e
        return tuple(sorted(merged.items()))


def _check_n(spec: SemigroupSpec, n: int) -> int:
    n = int(n)
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if spec.name != "integers" and n > MAX_TABLE_N:
        raise CapacityError(f"sampling {spec.name} needs a weight table; n <= {MAX_TABLE_N}")
    return n


def sample_norms(spec: SemigroupSpec, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Norms of ``count`` elements drawn uniformly from those of norm <= n."""
    n = _check_n(spec, n)
    if spec.name == "integers":
        return rng.integers(1, n + 1, size=count, dtype=np.int64)
    cum = cumulative_weights(spec, n)
    r = rng.integers(0, cum[-1], size=count, dtype=np.int64)
    return np.searchsorted(cum, r, side="right").astype(np.int64)


def _split_prime_power(spec: SemigroupSpec, p: int, e: int, rng) -> list[tuple[int, int, int]]:
    if spec.name in ("two-squares", "gaussian-ideals") and p % 4 == 3:
        return [(p * p, 0, e // 2)]
    if spec.name == "doubled-primes" or (spec.name == "gaussian-ideals" and p % 4 == 1):
        first = int(rng.integers(0, e + 1))
        return [(p, c, k) for c, k in ((0, first), (1, e - first)) if k]
    return [(p, 0, e)]


def sample_uniform_element(spec: SemigroupSpec, n: int, seed: int = 0,
                           stream: int = 0) -> SemigroupElement:
    rng = generator(seed, stream)
    norm = int(sample_norms(spec, n, 1, rng)[0])
    return element_of_norm(spec, norm, rng)


def element_of_norm(spec: SemigroupSpec, norm: int, rng: np.random.Generator) -> SemigroupElement:
    """One of the ``element_weight(norm)`` elements of this norm, uniformly."""
    if spec.element_weight(norm) == 0:
        raise DomainError(f"{spec.label} has no element of norm {norm}")
    parts = []
    for p, e in factor(norm).factors:
        parts.extend(_split_prime_power(spec, p, e, rng))
    return SemigroupElement(spec, norm, tuple(parts))


def element_spectrum(element: SemigroupElement, n: int) -> ScaledFactorMultiset:
    if not element.norm <= n or n < 2:
        raise DomainError(f"element norm {element.norm} exceeds n = {n}")
    log_n = math.log(n)
    return ScaledFactorMultiset(tuple((math.log(q) / log_n, e) for q, e in element.prime_norms))


def spectra_of_norms(spec: SemigroupSpec, norms: np.ndarray, n: int, distinct: bool = False,
                     width: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Ranked spectra for a batch of norms.

    The copy labels of equal-norm primes do not affect the multiset of prime
    norms, so no split is drawn here.
    """
    from .arith import factor_rows

    return factor_rows(norms, n, spec.kind, distinct, width)
