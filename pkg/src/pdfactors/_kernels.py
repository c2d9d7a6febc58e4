"""Compiled inner loops: sieves, bulk factoring, multiplicative weight tables."""

import numpy as np
from numba import njit

# semigroup kinds understood by the kernels
INTEGERS, TWO_SQUARES, GAUSSIAN, DOUBLED, AP_PRIMES = 0, 1, 2, 3, 4


@njit(cache=True, nogil=True)
def spf_sieve(limit):
    """Linear sieve: smallest prime factor of every m <= limit (spf[0] = spf[1] = 0)."""
    spf = np.zeros(limit + 1, np.int32)
    primes = np.empty(int(1.3 * limit / np.log(limit)) + 64, np.int32)
    count = 0
    for m in range(2, limit + 1):
        if spf[m] == 0:
            spf[m] = m
            primes[count] = m
            count += 1
        sm = spf[m]
        for j in range(count):
            p = primes[j]
            if p > sm or p * m > limit:
                break
            spf[p * m] = p
    return spf


@njit(cache=True, nogil=True)
def omega_tables(spf, x):
    """Big and small omega of every m <= x."""
    big = np.zeros(x + 1, np.int8)
    small = np.zeros(x + 1, np.int8)
    for m in range(2, x + 1):
        p = spf[m]
        r = m // p
        big[m] = big[r] + 1
        small[m] = small[r] + (1 if r % p != 0 else 0)
    return big, small


@njit(cache=True, nogil=True)
def _prime_power_weight(p, e, kind, modulus, allowed):
    if kind == INTEGERS:
        return 1
    if kind == TWO_SQUARES:
        return 0 if (p % 4 == 3 and e % 2 == 1) else 1
    if kind == GAUSSIAN:
        if p == 2:
            return 1
        if p % 4 == 1:
            return e + 1
        return 1 if e % 2 == 0 else 0
    if kind == DOUBLED:
        return e + 1
    return 1 if allowed[p % modulus] else 0


@njit(cache=True, nogil=True)
def multiplicative_weights(spf, x, kind, modulus, allowed):
    """Number of semigroup elements of each norm m <= x (w[0] = 0)."""
    w = np.zeros(x + 1, np.int32)
    expo = np.zeros(x + 1, np.int8)
    base = np.zeros(x + 1, np.int32)  # m with the full power of spf(m) removed
    if x >= 1:
        w[1] = 1
    for m in range(2, x + 1):
        p = spf[m]
        r = m // p
        if r % p == 0:
            expo[m] = expo[r] + 1
            base[m] = base[r]
        else:
            expo[m] = 1
            base[m] = r
        w[m] = w[base[m]] * _prime_power_weight(p, expo[m], kind, modulus, allowed)
    return w


@njit(cache=True, nogil=True)
def _factor_into(m, spf, primes, use_spf, ps, es):
    """Write the prime factorisation of m into ps/es; returns the number of distinct primes."""
    c = 0
    if use_spf:
        while m > 1:
            p = spf[m]
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            ps[c] = p
            es[c] = e
            c += 1
        return c
    for i in range(len(primes)):
        p = primes[i]
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            ps[c] = p
            es[c] = e
            c += 1
    if m > 1:
        ps[c] = m
        es[c] = 1
        c += 1
    return c


@njit(cache=True, nogil=True)
def spectra_rows(norms, spf, primes, use_spf, logn, kind, distinct, width):
    """Scaled log prime-norms of each element, one ranked zero-padded row per norm.

    For two-squares and Gaussian ideals a rational prime p = 3 mod 4 enters
    as the single semigroup prime of norm p^2. ``totals[i]`` is computed as
    log(prod)/log(n) from the integer product of the emitted prime norms, so
    it never exceeds 1 for norms <= n.
    """
    out = np.zeros((len(norms), width))
    totals = np.zeros(len(norms))
    ps = np.zeros(64, np.int64)
    es = np.zeros(64, np.int64)
    for i in range(len(norms)):
        c = _factor_into(norms[i], spf, primes, use_spf, ps, es)
        pos = 0
        prod = 1
        for j in range(c):
            p = ps[j]
            e = es[j]
            q = p
            if (kind == TWO_SQUARES or kind == GAUSSIAN) and p % 4 == 3:
                q = p * p
                e //= 2
            if distinct:
                e = 1
            val = np.log(q) / logn
            for _ in range(e):
                out[i, pos] = val
                pos += 1
                prod *= q
        totals[i] = np.log(prod) / logn
        row = np.sort(out[i, :pos])[::-1]
        out[i, :pos] = row
    return out, totals


@njit(cache=True, nogil=True)
def omega_batch(ms, spf, primes, use_spf):
    big = np.zeros(len(ms), np.int64)
    small = np.zeros(len(ms), np.int64)
    ps = np.zeros(64, np.int64)
    es = np.zeros(64, np.int64)
    for i in range(len(ms)):
        c = _factor_into(ms[i], spf, primes, use_spf, ps, es)
        small[i] = c
        s = 0
        for j in range(c):
            s += es[j]
        big[i] = s
    return big, small
