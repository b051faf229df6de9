"""
Exact truncated q-series.

IntSeries holds coefficients of q^0..q^trunc as exact integers: a read-only
int64 array while every entry is provably small, an object array of Python
ints otherwise. Conversions are automatic, overflow never wraps silently.

Two multiplication strategies are provided:
  - mul_dense_sparse: dense accumulator times a sparse series (the Euler
    product has ~2*sqrt(2T/3) nonzero terms), vectorized with numpy
  - mul_dense: Kronecker substitution, packing both series into one big
    integer and multiplying with gmpy2
"""

import logging
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import gmpy2
import numpy as np
from tqdm import tqdm

from src import config
from src.errors import UnsupportedFormError, UnsupportedQuotientError, UsageError
from src.tools.numtheory import sigma_table

logger = logging.getLogger(__name__)

# int64 fast path is only used while every intermediate stays below this
INT64_SAFE = 1 << 62


def _max_abs(values: np.ndarray) -> int:
    if len(values) == 0:
        return 0
    if values.dtype == object:
        return max(abs(int(v)) for v in values)
    return int(np.max(np.abs(values)))


def normalize_coefficients(values) -> np.ndarray:
    """Return a read-only coefficient array, int64 when every entry fits."""
    arr = np.asarray(values)
    if arr.dtype != object and not np.issubdtype(arr.dtype, np.integer):
        raise UsageError(f"IntSeries coefficients must be integers, got dtype {arr.dtype}")
    if arr.dtype == object or arr.dtype != np.int64:
        arr = np.array([int(v) for v in arr], dtype=object)
        if _max_abs(arr) < INT64_SAFE:
            arr = arr.astype(np.int64)
    else:
        arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class IntSeries:
    """
    Truncated power series with exact integer coefficients.

    Attributes:
        coeffs: Coefficients of q^0..q^trunc
    """
    coeffs: np.ndarray

    def __post_init__(self):
        arr = normalize_coefficients(self.coeffs)
        if arr.ndim != 1 or len(arr) < 2:
            raise UsageError("IntSeries needs coefficients for q^0..q^trunc with trunc >= 1")
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_list(cls, values: Sequence[int], trunc: Optional[int] = None) -> "IntSeries":
        values = [int(v) for v in values]
        if trunc is not None:
            values = (values + [0] * (trunc + 1))[: trunc + 1]
        return cls(np.array(values, dtype=object))

    @classmethod
    def one(cls, trunc: int) -> "IntSeries":
        coeffs = np.zeros(trunc + 1, dtype=np.int64)
        coeffs[0] = 1
        return cls(coeffs)

    @property
    def trunc(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_small(self) -> bool:
        return self.coeffs.dtype == np.int64

    def coefficient(self, n: int) -> int:
        if not 0 <= n <= self.trunc:
            raise UsageError(f"Index {n} outside 0..{self.trunc}")
        return int(self.coeffs[n])

    def __getitem__(self, n: int) -> int:
        return self.coefficient(n)

    def __len__(self) -> int:
        return len(self.coeffs)

    def tolist(self):
        return [int(v) for v in self.coeffs]

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coeffs != 0)

    def max_abs(self) -> int:
        return _max_abs(self.coeffs)

    def _check_same_trunc(self, other: "IntSeries"):
        if not isinstance(other, IntSeries):
            raise UsageError(f"Expected IntSeries, got {type(other).__name__}")
        if other.trunc != self.trunc:
            raise UsageError(f"Truncation mismatch: {self.trunc} vs {other.trunc}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntSeries) or other.trunc != self.trunc:
            return False
        return self.tolist() == other.tolist()

    def __hash__(self):
        return hash(tuple(self.tolist()))

    def _combine(self, other: "IntSeries", sign: int) -> "IntSeries":
        self._check_same_trunc(other)
        if self.is_small and other.is_small and self.max_abs() + other.max_abs() < INT64_SAFE:
            return IntSeries(self.coeffs + sign * other.coeffs)
        a = self.coeffs.astype(object)
        b = other.coeffs.astype(object)
        return IntSeries(a + b if sign > 0 else a - b)

    def __add__(self, other: "IntSeries") -> "IntSeries":
        return self._combine(other, 1)

    def __sub__(self, other: "IntSeries") -> "IntSeries":
        return self._combine(other, -1)

    def __neg__(self) -> "IntSeries":
        return IntSeries(-self.coeffs)

    def __mul__(self, other) -> "IntSeries":
        if isinstance(other, IntSeries):
            return mul_dense(self, other)
        if isinstance(other, (int, np.integer)):
            other = int(other)
            if self.is_small and self.max_abs() * abs(other) < INT64_SAFE:
                return IntSeries(self.coeffs * other)
            return IntSeries(self.coeffs.astype(object) * other)
        return NotImplemented

    __rmul__ = __mul__

    def shift(self, k: int) -> "IntSeries":
        """Multiply by q^k, keeping the truncation."""
        if k < 0:
            raise UsageError("Negative shifts would need Laurent series")
        out = np.zeros(self.trunc + 1, dtype=self.coeffs.dtype)
        if k <= self.trunc:
            out[k:] = self.coeffs[: self.trunc + 1 - k]
        return IntSeries(out)

    def __repr__(self):
        head = ", ".join(str(v) for v in self.tolist()[:6])
        return f"IntSeries(trunc={self.trunc}, coeffs=[{head}{', ...' if self.trunc > 5 else ''}])"


def euler_product_sparse(trunc: int) -> IntSeries:
    """
    Prod_{n>=1} (1 - q^n) to q^trunc via the pentagonal number theorem:
    nonzero only at k(3k-1)/2 and k(3k+1)/2, with sign (-1)^k.
    """
    if trunc < 1:
        raise UsageError("trunc must be >= 1")
    coeffs = np.zeros(trunc + 1, dtype=np.int64)
    coeffs[0] = 1
    k = 1
    while k * (3 * k - 1) // 2 <= trunc:
        sign = -1 if k % 2 else 1
        coeffs[k * (3 * k - 1) // 2] = sign
        g2 = k * (3 * k + 1) // 2
        if g2 <= trunc:
            coeffs[g2] = sign
        k += 1
    return IntSeries(coeffs)


def mul_dense_sparse(a: IntSeries, s: IntSeries, scale: int = 1,
                     support: Optional[Iterable[int]] = None) -> IntSeries:
    """
    Return a(q) * s(q^scale), truncated at a.trunc.

    Args:
        a: Dense accumulator
        s: Sparse factor with the same truncation as a
        scale: Multiplier m >= 1 applied to the exponent of s
        support: Nonzero indices of s, computed when omitted

    Returns:
        Product series; cost is trunc x |support of s within trunc/scale|
    """
    a._check_same_trunc(s)
    if scale < 1:
        raise UsageError(f"scale must be >= 1, got {scale}")
    T = a.trunc
    idx = s.support() if support is None else np.asarray(list(support), dtype=np.int64)
    idx = [int(k) for k in idx if int(k) * scale <= T]
    weights = [s.coefficient(k) for k in idx]

    small = a.is_small and all(abs(w) < INT64_SAFE for w in weights)
    if small and a.max_abs() * sum(abs(w) for w in weights) < INT64_SAFE:
        src = a.coeffs
        out = np.zeros(T + 1, dtype=np.int64)
    else:
        src = a.coeffs.astype(object)
        out = np.zeros(T + 1, dtype=object)

    for k, w in zip(idx, weights):
        shift = k * scale
        target = out[shift:]
        body = src[: T + 1 - shift]
        if w == 1:
            target += body
        elif w == -1:
            target -= body
        else:
            target += w * body
    return IntSeries(out)


def _field_offset(count: int, nbytes: int) -> int:
    field = b"\x00" * (nbytes - 1) + b"\x80"
    return int.from_bytes(field * count, "little")


def _pack(coeffs: np.ndarray, nbytes: int) -> int:
    half = 1 << (8 * nbytes - 1)
    data = b"".join((int(c) + half).to_bytes(nbytes, "little") for c in coeffs)
    return int.from_bytes(data, "little") - _field_offset(len(coeffs), nbytes)


def _unpack(value: int, nbytes: int, fields: int, keep: int) -> list:
    half = 1 << (8 * nbytes - 1)
    data = (value + _field_offset(fields, nbytes)).to_bytes(fields * nbytes, "little")
    return [
        int.from_bytes(data[i * nbytes : (i + 1) * nbytes], "little") - half
        for i in range(keep)
    ]


def mul_dense(a: IntSeries, b: IntSeries) -> IntSeries:
    """Exact truncated product by Kronecker substitution."""
    a._check_same_trunc(b)
    T = a.trunc
    amax, bmax = a.max_abs(), b.max_abs()
    if amax == 0 or bmax == 0:
        return IntSeries(np.zeros(T + 1, dtype=np.int64))
    bound = (T + 1) * amax * bmax
    nbytes = (bound.bit_length() + 2 + 7) // 8
    product = gmpy2.mpz(_pack(a.coeffs, nbytes)) * gmpy2.mpz(_pack(b.coeffs, nbytes))
    return IntSeries(np.array(_unpack(int(product), nbytes, 2 * T + 1, T + 1), dtype=object))


def power(a: IntSeries, r: int) -> IntSeries:
    if r < 0:
        raise UsageError("Negative powers are not supported")
    result = IntSeries.one(a.trunc)
    base = a
    while r:
        if r & 1:
            result = mul_dense(result, base)
        r >>= 1
        if r:
            base = mul_dense(base, base)
    return result


def stretch(s: IntSeries, m: int) -> IntSeries:
    """s(q^m) truncated at s.trunc."""
    out = np.zeros(s.trunc + 1, dtype=s.coeffs.dtype)
    n = s.trunc // m
    out[: m * n + 1 : m] = s.coeffs[: n + 1]
    return IntSeries(out)


@dataclass(frozen=True)
class EtaQuotient:
    """
    Finite product of eta(m z)^r.

    Attributes:
        factors: (multiplier m, exponent r) pairs
    """
    factors: Tuple[Tuple[int, int], ...]

    @property
    def exponent_sum(self) -> int:
        return sum(m * r for m, r in self.factors)

    @property
    def leading_power(self) -> int:
        return self.exponent_sum // 24

    @property
    def weight(self) -> int:
        return sum(r for _, r in self.factors) // 2

    def validate(self):
        if not self.factors:
            raise UnsupportedQuotientError("Empty eta quotient")
        for m, r in self.factors:
            if m < 1:
                raise UnsupportedQuotientError(f"Multiplier must be >= 1, got {m}")
            if r < 0:
                raise UnsupportedQuotientError(
                    f"Negative exponent eta({m}z)^{r} is not supported"
                )
        if self.exponent_sum % 24:
            raise UnsupportedQuotientError(
                f"sum m*r = {self.exponent_sum} is not divisible by 24 for {self.label}"
            )

    @property
    def label(self) -> str:
        parts = []
        for m, r in self.factors:
            arg = "z" if m == 1 else f"{m}z"
            parts.append(f"eta({arg})" + (f"^{r}" if r != 1 else ""))
        return " ".join(parts)


def _sparse_bound(eq: EtaQuotient, trunc: int) -> int:
    bound = 1
    for m, r in eq.factors:
        terms = int(np.count_nonzero(euler_product_sparse(max(trunc // m, 1)).coeffs))
        bound *= terms ** r
        if bound >= INT64_SAFE:
            break
    return bound


def eta_quotient_expand(eq: EtaQuotient, trunc: int, strategy: str = "auto") -> IntSeries:
    """
    Expand q^leading_power * Prod (1 - q^{mn})^r to q^trunc.

    Args:
        eq: Eta quotient with positive exponents and 24 | sum(m*r)
        trunc: Highest power of q to keep
        strategy: 'sparse' (repeated dense x sparse products),
                  'kronecker' (binary powering by packed big-integer products)
                  or 'auto' (sparse while the int64 bound holds)

    Returns:
        Series with coefficient 1 at index leading_power and 0 below it
    """
    eq.validate()
    lead = eq.leading_power
    if trunc < max(lead, 1):
        raise UsageError(f"trunc {trunc} is below the leading power {lead}")
    inner = trunc - lead
    started = time.perf_counter()

    if inner == 0:
        body = np.ones(1, dtype=np.int64)
    else:
        if strategy == "auto":
            strategy = "sparse" if _sparse_bound(eq, inner) < INT64_SAFE else "kronecker"
        euler = euler_product_sparse(inner)
        acc = IntSeries.one(inner)
        if strategy == "sparse":
            steps = [(m, 1) for m, r in eq.factors for _ in range(r)]
            for m, _ in tqdm(steps, desc="eta factors", disable=not config.SHOW_PROGRESS):
                acc = mul_dense_sparse(acc, euler, scale=m)
        elif strategy == "kronecker":
            for m, r in eq.factors:
                acc = mul_dense(acc, power(stretch(euler, m), r))
        else:
            raise UsageError(f"Unknown multiplication strategy '{strategy}'")
        body = acc.coeffs

    coeffs = np.zeros(trunc + 1, dtype=body.dtype)
    coeffs[lead:] = body
    logger.info(
        f"Expanded {eq.label} to q^{trunc:,} ({strategy}) in {time.perf_counter() - started:.2f}s"
    )
    return IntSeries(coeffs)


def eisenstein(k: int, trunc: int) -> IntSeries:
    """E4 = 1 + 240 sum sigma_3(n) q^n, E6 = 1 - 504 sum sigma_5(n) q^n."""
    factors = {4: (240, 3), 6: (-504, 5)}
    if k not in factors:
        raise UnsupportedFormError(f"Eisenstein series only for k in (4, 6), got {k}")
    scale, power_k = factors[k]
    coeffs = sigma_table(power_k, trunc) * scale
    coeffs[0] = 1
    return IntSeries(coeffs)
