"""
Arithmetic-function substrate.

Segmented sieve of Eratosthenes, smallest-prime-factor tables,
factorization, Moebius function, divisor enumeration and divisor-power sums.
All integer results are exact Python integers.
"""

import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Tuple

import numpy as np

from src import config
from src.errors import CapacityError, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Factorization:
    """
    Prime factorization of a positive integer.

    Attributes:
        n: The factored integer
        factors: Ordered (prime, exponent) pairs, primes strictly increasing
    """
    n: int
    factors: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        product = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1 or not _is_prime_value(p):
                raise DomainError(f"Malformed factorization of {self.n}: {self.factors}")
            product *= p ** e
            last = p
        if product != self.n:
            raise DomainError(f"Factors {self.factors} do not multiply to {self.n}")

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.factors)

    @property
    def primes(self) -> List[int]:
        return [p for p, _ in self.factors]

    @property
    def num_divisors(self) -> int:
        return math.prod(e + 1 for _, e in self.factors)

    @property
    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)


def _check_ceiling(value: int, what: str = "limit"):
    if value > config.SIEVE_CEILING:
        raise CapacityError(
            f"{what} {value:,} exceeds the configured ceiling {config.SIEVE_CEILING:,}"
        )


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p : limit + 1 : p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@lru_cache(maxsize=16)
def prime_array(limit: int, segment_size: Optional[int] = None) -> np.ndarray:
    """
    Segmented sieve returning a read-only int64 array of the primes <= limit.

    Memory stays O(sqrt(limit) + segment_size) apart from the output itself.
    """
    if limit < 2:
        return np.array([], dtype=np.int64)
    _check_ceiling(limit)
    segment = segment_size or config.SEGMENT_SIZE

    base = _simple_sieve(math.isqrt(limit))
    chunks = []
    low = 2
    while low <= limit:
        high = min(low + segment, limit + 1)  # exclusive
        mask = np.ones(high - low, dtype=bool)
        for p in base:
            p = int(p)
            p2 = p * p
            if p2 >= high:
                break
            start = max(p2, ((low + p - 1) // p) * p)
            mask[start - low :: p] = False
        chunks.append(np.flatnonzero(mask) + low)
        low = high

    primes = np.concatenate(chunks).astype(np.int64)
    primes.flags.writeable = False
    logger.debug(f"Sieved {len(primes):,} primes up to {limit:,}")
    return primes


def sieve_primes(limit: int) -> List[int]:
    """
    All primes in [2, limit], ascending.

    Args:
        limit: Inclusive upper bound; below 2 gives an empty list

    Returns:
        List of primes as Python integers
    """
    if limit < 2:
        return []
    return prime_array(int(limit)).tolist()


def _build_spf(limit: int) -> np.ndarray:
    dtype = np.int32 if limit < 2**31 else np.int64
    spf = np.zeros(limit + 1, dtype=dtype)
    for p in prime_array(math.isqrt(limit)):
        p = int(p)
        view = spf[p * p :: p]
        view[view == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[0] = 0
    spf[1] = 1
    spf.flags.writeable = False
    return spf


_spf_lock = threading.Lock()
_spf_table = _build_spf(1 << 16)


def smallest_prime_factors(limit: int) -> np.ndarray:
    """
    Smallest-prime-factor table covering at least 0..limit.

    The shared table only ever grows; every returned array is immutable.
    """
    global _spf_table
    _check_ceiling(limit)
    with _spf_lock:
        if len(_spf_table) <= limit:
            size = max(limit, 2 * (len(_spf_table) - 1))
            size = min(size, config.SIEVE_CEILING)
            logger.info(f"Building smallest-prime-factor table to {size:,}")
            _spf_table = _build_spf(size)
        return _spf_table


def factorize(n: int) -> Factorization:
    """
    Factor n using the smallest-prime-factor table when it covers n,
    trial division by sieved primes otherwise.
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"Cannot factor {n}: need a positive integer")
    _check_ceiling(n, "n")
    if n == 1:
        return Factorization(1, ())

    factors = []
    spf = _spf_table
    m = n
    if m < len(spf):
        while m > 1:
            p = int(spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            factors.append((p, e))
    else:
        for p in prime_array(math.isqrt(n)):
            p = int(p)
            if p * p > m:
                break
            if m % p == 0:
                e = 0
                while m % p == 0:
                    m //= p
                    e += 1
                factors.append((p, e))
        if m > 1:
            factors.append((m, 1))
    return Factorization(n, tuple(factors))


def _is_prime_value(n: int) -> bool:
    if n < 2:
        return False
    if n < len(_spf_table):
        return int(_spf_table[n]) == n
    _check_ceiling(n, "n")
    return bool(np.all(n % prime_array(math.isqrt(n))))


def is_prime(n: int) -> bool:
    return _is_prime_value(int(n))


def moebius(n: int) -> int:
    fac = factorize(n)
    if not fac.is_squarefree:
        return 0
    return -1 if len(fac.factors) % 2 else 1


def divisors(n: int) -> List[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p ** i for d in divs for i in range(e + 1)]
    return sorted(divs)


def sigma(k: int, n: int) -> int:
    """Exact divisor-power sum: sum of d**k over the divisors d of n."""
    if not 0 <= k <= 16:
        raise DomainError(f"sigma supports 0 <= k <= 16, got {k}")
    total = 1
    for p, e in factorize(n):
        total *= sum(p ** (k * i) for i in range(e + 1))
    return total


def moebius_table(limit: int) -> np.ndarray:
    """int8 array with mu[n] for n = 0..limit (mu[0] = 0)."""
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in prime_array(limit):
        p = int(p)
        mu[::p] *= -1
        if p * p <= limit:
            mu[:: p * p] = 0
    return mu


def sigma_table(k: int, limit: int) -> np.ndarray:
    """Object array of exact sigma_k(n) for n = 0..limit (entry 0 is 0)."""
    if not 0 <= k <= 16:
        raise DomainError(f"sigma supports 0 <= k <= 16, got {k}")
    table = np.zeros(limit + 1, dtype=object)
    for d in range(1, limit + 1):
        table[d::d] += d ** k
    return table
