"""
q-exponents of generalized modular functions with empty divisor.

For f = Prod (1 - q^n)^{c(n)} whose logarithmic derivative is the weight-2
newform g = sum b(n) q^n we have b(n) = -sum_{d|n} d c(d). The exponents are
stored as the exact integers m(n) = n c(n) = -sum_{d|n} mu(n/d) b(d).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, NamedTuple, Optional, Tuple

import numba as nb
import numpy as np

from src.errors import DomainError, InsufficientDataError, UnsupportedFormError, UsageError
from src.tools.eigenforms import CoefficientTable, FormSpec, SignedValue
from src.tools.numtheory import factorize, is_prime, moebius_table, prime_array
from src.tools.qseries import normalize_coefficients

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExponentTable:
    """
    Exact exponents of one generalized modular function.

    Attributes:
        form: The weight-2 newform g = f'/(2 pi i f)
        limit: Highest index stored
        m: Read-only array with m[n] = n * c(n), m[0] = 0
    """
    form: FormSpec
    limit: int
    m: np.ndarray

    def __post_init__(self):
        if len(self.m) != self.limit + 1:
            raise UsageError(f"Exponent table has {len(self.m) - 1} entries, expected {self.limit}")
        if self.m.flags.writeable:
            object.__setattr__(self, "m", normalize_coefficients(self.m))

    def m_value(self, n: int) -> int:
        if not 1 <= n <= self.limit:
            raise InsufficientDataError(f"m({n}) is outside the exponent table (limit {self.limit:,})")
        return int(self.m[n])

    def c_value(self, n: int) -> Fraction:
        return Fraction(self.m_value(n), n)

    def with_exponent(self, n: int, value: int) -> "ExponentTable":
        """Copy with m(n) overwritten (used for fault injection)."""
        arr = self.m.astype(object)
        arr[n] = int(value)
        return ExponentTable(self.form, self.limit, arr)


class RoundTrip(NamedTuple):
    ok: bool
    first_failure: Optional[int]


def _check_weight_two(form: FormSpec):
    if form.weight != 2 or not factorize(form.level).is_squarefree:
        raise UnsupportedFormError(
            f"{form.id} (weight {form.weight}, level {form.level}) is not a weight-2 "
            f"newform of squarefree level"
        )


def exponents_from_coefficients(table: CoefficientTable) -> ExponentTable:
    """Invert b(n) = -sum_{d|n} m(d) by Moebius inversion, exactly."""
    _check_weight_two(table.form)
    if table.a(1) != 1:
        raise UsageError(f"{table.form.id} table is not normalized: b(1) = {table.a(1)}")
    L = table.limit
    b = table.coeffs
    mu = moebius_table(L)
    m = np.zeros(L + 1, dtype=b.dtype)
    for k in np.flatnonzero(mu):
        k = int(k)
        if mu[k] > 0:
            m[k::k] -= b[1 : L // k + 1]
        else:
            m[k::k] += b[1 : L // k + 1]

    if int(m[1]) != -1:
        raise UsageError(f"m(1) = {int(m[1])}, expected -1")
    primes = prime_array(L)
    off = np.flatnonzero(m[primes] != 1 - b[primes])
    if len(off):
        p = int(primes[off[0]])
        raise UsageError(f"m({p}) = {int(m[p])}, expected 1 - b({p}) = {1 - int(b[p])}")
    logger.info(f"Inverted {L:,} exponents for {table.form.id}")
    return ExponentTable(table.form, L, m)


@nb.njit(nogil=True, cache=False)
def _divisor_sums(m, limit):
    recon = np.zeros(limit + 1, dtype=np.int64)
    for d in range(1, limit + 1):
        md = m[d]
        if md != 0:
            for k in range(d, limit + 1, d):
                recon[k] -= md
    return recon


def roundtrip_check(exp: ExponentTable, source: CoefficientTable) -> RoundTrip:
    """Check b(n) = -sum_{d|n} m(d) for every n <= exp.limit, exactly."""
    if exp.form.id != source.form.id:
        raise UsageError(f"Exponents of {exp.form.id} cannot be checked against {source.form.id}")
    if exp.limit > source.limit:
        raise UsageError(f"Exponent limit {exp.limit:,} exceeds source limit {source.limit:,}")
    L = exp.limit
    if exp.m.dtype == np.int64:
        recon = _divisor_sums(exp.m, L)
    else:
        recon = np.zeros(L + 1, dtype=object)
        for d in range(1, L + 1):
            recon[d::d] -= exp.m[d]
    bad = np.flatnonzero(recon[1:] != source.coeffs[1 : L + 1])
    if len(bad):
        first = int(bad[0]) + 1
        logger.warning(f"{exp.form.id}: exponent round trip fails first at n = {first}")
        return RoundTrip(False, first)
    return RoundTrip(True, None)


def cprime(exp: ExponentTable, p: int) -> SignedValue:
    """c'(p) = sqrt(p) c(p) = (1 - b(p)) / sqrt(p), sign from the exact m(p)."""
    if p > exp.limit:
        raise InsufficientDataError(f"c'({p}) needs the exponent table to {p:,}")
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    mp = exp.m_value(p)
    return SignedValue(mp / math.sqrt(p), (mp > 0) - (mp < 0))


def cprime_table(exp: ExponentTable, upper: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    c'(p) for every prime p <= upper.

    Returns:
        (primes, values, signs) as int64, float64 and int8 arrays
    """
    if upper > exp.limit:
        raise InsufficientDataError(f"c'(p) up to {upper:,} needs the exponent table to {upper:,}")
    primes = np.asarray(prime_array(upper), dtype=np.int64)
    mp = np.array([int(v) for v in exp.m[primes]], dtype=np.int64)
    values = mp / np.sqrt(primes.astype(np.float64))
    signs = np.sign(mp).astype(np.int8)
    return primes, values, signs


def cprime_bound_violations(exp: ExponentTable, bound: float = 3.0) -> List[int]:
    primes, values, _ = cprime_table(exp, exp.limit)
    return primes[np.abs(values) > bound].tolist()


def cprime_identity_violations(exp: ExponentTable, source: CoefficientTable,
                               rel_tol: float = 1e-12) -> List[int]:
    """
    Primes where the sign of c'(p) differs from sign(1 - b(p)) or where
    c'(p) sqrt(p) + b(p) = 1 fails beyond rel_tol.
    """
    primes, values, signs = cprime_table(exp, min(exp.limit, source.limit))
    bad = []
    for p, v, s in zip(primes.tolist(), values.tolist(), signs.tolist()):
        bp = source.a(p)
        exact = 1 - bp
        if s != (exact > 0) - (exact < 0):
            bad.append(p)
        elif abs(v * math.sqrt(p) + bp - 1) > rel_tol * max(1, abs(bp), abs(exact)):
            bad.append(p)
    return bad


def c_value(exp: ExponentTable, n: int) -> Fraction:
    """Exact c(n) = m(n) / n."""
    return exp.c_value(n)


def sign_consistency(exp: ExponentTable) -> List[int]:
    """Primes whose c(p) = m(p)/p and c'(p) disagree in sign; always empty for a valid table."""
    bad = []
    for p in prime_array(exp.limit).tolist():
        c = exp.c_value(p)
        if ((c > 0) - (c < 0)) != cprime(exp, p).sign:
            bad.append(p)
    return bad


def cprime_from_coefficients(table: CoefficientTable, upper: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """c'(p) for p <= upper straight from b(p), using m(p) = 1 - b(p)."""
    _check_weight_two(table.form)
    if upper > table.limit:
        raise InsufficientDataError(f"c'(p) up to {upper:,} needs b(p) to {upper:,}, have {table.limit:,}")
    primes = np.asarray(prime_array(upper), dtype=np.int64)
    mp = 1 - np.array([int(v) for v in table.coeffs[primes]], dtype=np.int64)
    values = mp / np.sqrt(primes.astype(np.float64))
    return primes, values, np.sign(mp).astype(np.int8)
