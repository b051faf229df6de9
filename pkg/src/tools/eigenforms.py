"""
Catalog of normalized Hecke eigenforms and their exact Fourier coefficients.

Level-1 forms are built as Delta times products of Eisenstein series
(dim S_k = 1 for k in 12, 16, 18, 20, 22, 26); the weight-2 newforms of
squarefree level are eta quotients. Coefficients at prime powers follow the
Hecke recurrence, so a(n^j) never requires expanding to n^j terms.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numba as nb
import numpy as np
from tqdm import tqdm

from src import config
from src.errors import CapacityError, DomainError, InsufficientDataError, UnsupportedFormError, UsageError
from src.tools.numtheory import factorize, is_prime, prime_array, smallest_prime_factors
from src.tools.qseries import EtaQuotient, eisenstein, eta_quotient_expand, mul_dense, normalize_coefficients

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FormSpec:
    """
    Identity and construction recipe of a cataloged eigenform.

    Attributes:
        id: Catalog key
        weight: Even weight k
        level: Squarefree level N
        eta: Eta quotient providing the cusp-form factor
        eisenstein: Eisenstein weights multiplied onto the eta quotient
    """
    id: str
    weight: int
    level: int
    eta: EtaQuotient
    eisenstein: Tuple[int, ...] = ()

    @property
    def is_level_one(self) -> bool:
        return self.level == 1

    @property
    def recipe(self) -> str:
        parts = [self.eta.label] + [f"E{k}" for k in self.eisenstein]
        return " * ".join(parts)

    def divides_level(self, p: int) -> bool:
        return self.level % p == 0


_DELTA = EtaQuotient(((1, 24),))

CATALOG: Dict[str, FormSpec] = {
    "delta": FormSpec("delta", 12, 1, _DELTA),
    "e16": FormSpec("e16", 16, 1, _DELTA, (4,)),
    "e18": FormSpec("e18", 18, 1, _DELTA, (6,)),
    "e20": FormSpec("e20", 20, 1, _DELTA, (4, 4)),
    "e22": FormSpec("e22", 22, 1, _DELTA, (4, 6)),
    "e26": FormSpec("e26", 26, 1, _DELTA, (4, 4, 6)),
    "n11": FormSpec("n11", 2, 11, EtaQuotient(((1, 2), (11, 2)))),
    "n14": FormSpec("n14", 2, 14, EtaQuotient(((1, 1), (2, 1), (7, 1), (14, 1)))),
    "n15": FormSpec("n15", 2, 15, EtaQuotient(((1, 1), (3, 1), (5, 1), (15, 1)))),
}

LEVEL_ONE_FORMS = [key for key, spec in CATALOG.items() if spec.is_level_one]
WEIGHT_TWO_FORMS = [key for key, spec in CATALOG.items() if spec.weight == 2]


def get_form(form: Union[str, FormSpec]) -> FormSpec:
    if isinstance(form, FormSpec):
        return form
    try:
        return CATALOG[form]
    except KeyError:
        raise UnsupportedFormError(
            f"Unknown form '{form}'. Choose one of: {', '.join(CATALOG)}"
        ) from None


def capacity_for(form: FormSpec) -> int:
    return config.LEVEL1_CAPACITY if form.is_level_one else config.WEIGHT2_CAPACITY


class SignedValue(NamedTuple):
    value: float
    sign: int


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


def normalized(a: int, q: int, weight: int) -> float:
    """a / q^((k-1)/2) as a float, exact integer division before the final sqrt."""
    if a == 0:
        return 0.0
    half = (weight - 1) // 2
    return (a / q ** half) / math.sqrt(q)


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """
    Exact coefficients a(1)..a(limit) of one cataloged form.

    Attributes:
        form: The eigenform
        limit: Highest index stored
        coeffs: Read-only array with coeffs[n] = a(n), coeffs[0] = 0
    """
    form: FormSpec
    limit: int
    coeffs: np.ndarray
    _prime_powers: Dict[int, List[int]] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if len(self.coeffs) != self.limit + 1:
            raise UsageError(
                f"Table for {self.form.id} has {len(self.coeffs) - 1} entries, expected {self.limit}"
            )
        if self.coeffs.flags.writeable:
            object.__setattr__(self, "coeffs", normalize_coefficients(self.coeffs))

    def a(self, n: int) -> int:
        if not 1 <= n <= self.limit:
            raise InsufficientDataError(
                f"a({n}) is outside the {self.form.id} table (limit {self.limit:,})"
            )
        return int(self.coeffs[n])

    def lambda_value(self, n: int) -> float:
        return normalized(self.a(n), n, self.form.weight)

    def replace_coefficient(self, n: int, value: int) -> "CoefficientTable":
        """Copy of the table with a(n) overwritten (used for fault injection)."""
        arr = self.coeffs.astype(object)
        arr[n] = int(value)
        return CoefficientTable(self.form, self.limit, arr)


def generate_coefficients(form: Union[str, FormSpec], limit: int,
                          cache_dir: Optional[str] = None,
                          strategy: str = "auto") -> CoefficientTable:
    """
    Exact a(n), n <= limit, for a cataloged form.

    Args:
        form: Catalog id or FormSpec
        limit: Highest coefficient index (>= 2)
        cache_dir: Coefficient cache directory, consulted and filled when given
        strategy: Multiplication strategy for the eta quotient

    Returns:
        Immutable CoefficientTable
    """
    spec = get_form(form)
    if limit < 2:
        raise UsageError(f"limit must be >= 2, got {limit}")
    if limit > capacity_for(spec):
        raise CapacityError(
            f"limit {limit:,} exceeds the capacity {capacity_for(spec):,} for {spec.id}"
        )

    cache = None
    if cache_dir:
        from src.tools.cache import CoefficientCache
        cache = CoefficientCache(cache_dir)
        cached = cache.load(spec, limit)
        if cached is not None:
            return cached

    series = eta_quotient_expand(spec.eta, limit, strategy=strategy)
    for k in spec.eisenstein:
        series = mul_dense(series, eisenstein(k, limit))
    coeffs = np.array(series.coeffs, dtype=series.coeffs.dtype)
    coeffs[0] = 0
    table = CoefficientTable(spec, limit, coeffs)
    if table.a(1) != 1:
        raise UsageError(f"Recipe for {spec.id} is not normalized: a(1) = {table.a(1)}")

    if cache is not None:
        cache.store(table)
    return table


def hecke_prime_power(table: CoefficientTable, p: int, r: int) -> int:
    """
    Exact a(p^r) from a(p) alone.

    p not dividing N: a(p^{r+1}) = a(p) a(p^r) - p^{k-1} a(p^{r-1});
    p dividing the squarefree level: a(p^r) = a(p)^r.
    """
    if r < 0:
        raise DomainError(f"Exponent must be >= 0, got {r}")
    if p > table.limit:
        raise InsufficientDataError(
            f"a({p}) is needed but the {table.form.id} table stops at {table.limit:,}"
        )
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if r == 0:
        return 1

    powers = table._prime_powers.get(p) or [1, table.a(p)]
    if len(powers) <= r:
        # published lists are never mutated; extend a copy and swap it in
        powers = list(powers)
        ap = powers[1]
        if table.form.divides_level(p):
            powers.extend(ap ** i for i in range(len(powers), r + 1))
        else:
            pk = p ** (table.form.weight - 1)
            while len(powers) <= r:
                powers.append(ap * powers[-1] - pk * powers[-2])
        table._prime_powers[p] = powers
    return powers[r]


def lambda_power(table: CoefficientTable, n: int, j: int) -> SignedValue:
    """
    lambda(n^j) computed multiplicatively over the prime factorization of n.

    The sign is the product of the exact signs of a(p^{ej}); the float value
    is for display and summation only.
    """
    if j not in (1, 2, 3, 4):
        raise DomainError(f"Power j must be in 1..4, got {j}")
    value, sign = 1.0, 1
    for p, e in factorize(n):
        apr = hecke_prime_power(table, p, e * j)
        sign *= _sign(apr)
        value *= normalized(apr, p ** (e * j), table.form.weight)
    return SignedValue(value, sign)


def prime_power_factors(table: CoefficientTable, j: int, upper: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    lambda(q^j) and its exact sign at every prime power q = p^e <= upper,
    indexed by q; other entries are 0.
    """
    pp_values = np.zeros(upper + 1, dtype=np.float64)
    pp_signs = np.zeros(upper + 1, dtype=np.int8)
    weight = table.form.weight
    for p in tqdm(prime_array(upper).tolist(), desc=f"a(p^{j}e)", disable=not config.SHOW_PROGRESS):
        q, e = p, 1
        while q <= upper:
            apr = hecke_prime_power(table, p, e * j)
            pp_values[q] = normalized(apr, q ** j, weight)
            pp_signs[q] = _sign(apr)
            q *= p
            e += 1
    return pp_values, pp_signs


@nb.njit(nogil=True, cache=False)
def _multiplicative_sweep(spf, pp_values, pp_signs, upper):
    # n = q * m with q the full power of spf(n) dividing n, gcd(q, m) = 1
    values = np.zeros(upper + 1, dtype=np.float64)
    signs = np.zeros(upper + 1, dtype=np.int8)
    values[1] = 1.0
    signs[1] = 1
    for n in range(2, upper + 1):
        p = spf[n]
        m = n
        q = 1
        while m % p == 0:
            m //= p
            q *= p
        values[n] = values[m] * pp_values[q]
        signs[n] = signs[m] * pp_signs[q]
    return values, signs


def lambda_power_table(table: CoefficientTable, j: int, upper: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    lambda(n^j) and its exact sign for n = 0..upper (entry 0 unused).

    Returns:
        (values, signs) as float64 and int8 arrays
    """
    if j not in (1, 2, 3, 4):
        raise DomainError(f"Power j must be in 1..4, got {j}")
    if upper > table.limit:
        raise InsufficientDataError(
            f"lambda(n^{j}) up to n = {upper:,} needs a(p) for p <= {upper:,}; "
            f"{table.form.id} table stops at {table.limit:,}"
        )
    if upper < 1:
        return np.zeros(upper + 1, dtype=np.float64), np.zeros(upper + 1, dtype=np.int8)
    spf = smallest_prime_factors(upper)
    pp_values, pp_signs = prime_power_factors(table, j, upper)
    values, signs = _multiplicative_sweep(spf, pp_values, pp_signs, upper)

    zeros = np.flatnonzero(signs[1:] == 0) + 1
    if len(zeros):
        logger.warning(
            f"{table.form.id}: lambda(n^{j}) vanishes at {len(zeros)} n <= {upper:,} "
            f"(first: {zeros[:5].tolist()})"
        )
    return values, signs


@dataclass
class MultiplicativityReport:
    form: str
    bound: int
    coprime_violations: List[Tuple[int, int]] = field(default_factory=list)
    recurrence_violations: List[Tuple[int, int]] = field(default_factory=list)
    normalized: bool = True

    @property
    def violations(self) -> List[Tuple[int, int]]:
        return self.coprime_violations + self.recurrence_violations

    @property
    def ok(self) -> bool:
        return self.normalized and not self.violations


def verify_multiplicativity(table: CoefficientTable, bound: int) -> MultiplicativityReport:
    """
    Check a(mn) = a(m)a(n) for coprime 2 <= m < n <= bound and the prime-power
    recurrence against every stored a(p^r), r >= 2. Never raises on a
    mathematical failure.
    """
    if bound * bound > table.limit:
        raise InsufficientDataError(
            f"bound {bound} needs a table to {bound * bound:,}, have {table.limit:,}"
        )
    report = MultiplicativityReport(form=table.form.id, bound=bound)
    report.normalized = table.a(1) == 1
    coeffs = [int(v) for v in table.coeffs[: bound * bound + 1]]

    for m in range(2, bound + 1):
        am = coeffs[m]
        for n in range(m + 1, bound + 1):
            if math.gcd(m, n) == 1 and coeffs[m * n] != am * coeffs[n]:
                report.coprime_violations.append((m, n))

    for p in prime_array(math.isqrt(table.limit)):
        p = int(p)
        r, q = 2, p * p
        while q <= table.limit:
            if hecke_prime_power(table, p, r) != table.a(q):
                report.recurrence_violations.append((p, r))
            r += 1
            q *= p

    if report.violations:
        logger.warning(
            f"{table.form.id}: {len(report.violations)} multiplicativity violations, "
            f"first {report.violations[0]}"
        )
    return report


def deligne_violations(table: CoefficientTable, slack: float = 1e-9) -> List[int]:
    """Primes p not dividing N, p <= limit, with |lambda(p)| > 2 + slack."""
    bad = []
    for p in prime_array(table.limit):
        p = int(p)
        if not table.form.divides_level(p) and abs(table.lambda_value(p)) > 2 + slack:
            bad.append(p)
    return bad


def ramified_violations(table: CoefficientTable) -> List[int]:
    """Primes p dividing N with a(p) not in {-1, +1}."""
    return [
        p for p, _ in factorize(table.form.level)
        if p <= table.limit and table.a(p) not in (-1, 1)
    ]
