"""
Sign-change experiments on lambda(n^j) and on c'(p).

Counting uses exact signs only. Moment and prime sums are float64 and are
accumulated with math.fsum in ascending index order, so every number here
is reproducible regardless of how windows are scheduled.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import DomainError, InsufficientDataError, UnsupportedFormError, UsageError
from src.tools.eigenforms import CoefficientTable, lambda_power_table, normalized
from src.tools.gmf import ExponentTable, cprime_from_coefficients, cprime_table
from src.tools.numtheory import prime_array

logger = logging.getLogger(__name__)

DELTAS: Dict[int, Fraction] = {2: Fraction(2, 11), 3: Fraction(1, 9), 4: Fraction(2, 27)}
BETAS: Dict[int, Fraction] = {2: Fraction(1, 2), 3: Fraction(3, 4), 4: Fraction(7, 9)}

WINDOW_MODES = ("dyadic", "power", "subexp")


@dataclass(frozen=True)
class TheoremConstants:
    """
    Exponents attached to lambda(n^j).

    Attributes:
        j: Power, 2..4
        delta: Sign-change exponent of the lower bound
        beta: Exponent of the first-moment bound
        epsilon: Reporting parameter for the window exponent
    """
    j: int
    delta: Fraction
    beta: Fraction
    epsilon: float = 0.0

    def __post_init__(self):
        if DELTAS.get(self.j) != self.delta or BETAS.get(self.j) != self.beta:
            raise DomainError(f"No cataloged constants (j={self.j}, delta={self.delta}, beta={self.beta})")
        if not 1 - self.delta > self.beta:
            raise DomainError(f"1 - delta must exceed beta for j={self.j}")

    @classmethod
    def for_power(cls, j: int, epsilon: float = 0.0) -> "TheoremConstants":
        if j not in DELTAS:
            raise DomainError(f"Theorem constants exist for j in 2..4, got {j}")
        return cls(j, DELTAS[j], BETAS[j], epsilon)

    @property
    def window_exponent(self) -> float:
        return float(1 - self.delta) + 2 * self.epsilon


@dataclass(frozen=True, eq=False)
class SignSeries:
    """
    Exact signs over an increasing index set.

    Attributes:
        domain: "all" (every n) or "primes"
        indices: Strictly increasing int64 indices
        signs: int8 signs in {-1, 0, 1}, taken from exact integers
        values: float64 values aligned with indices
        upper: The series holds every index of its domain up to here
        label: Human readable description
    """
    domain: str
    indices: np.ndarray
    signs: np.ndarray
    values: np.ndarray
    upper: int
    label: str = ""

    def __post_init__(self):
        if self.domain not in ("all", "primes"):
            raise UsageError(f"Unknown index domain '{self.domain}'")
        if not len(self.indices) == len(self.signs) == len(self.values):
            raise UsageError("indices, signs and values must have equal length")
        if len(self.indices) > 1 and not np.all(np.diff(self.indices) > 0):
            raise UsageError("indices must be strictly increasing")
        if not np.isin(self.signs, (-1, 0, 1)).all():
            raise UsageError("signs must lie in {-1, 0, 1}")

    @classmethod
    def from_signs(cls, indices: Sequence[int], signs: Sequence[int],
                   values: Optional[Sequence[float]] = None,
                   domain: str = "all", upper: Optional[int] = None,
                   label: str = "") -> "SignSeries":
        idx = np.asarray(indices, dtype=np.int64)
        sg = np.asarray(signs, dtype=np.int8)
        vals = np.asarray(values if values is not None else sg, dtype=np.float64)
        top = int(upper) if upper is not None else (int(idx[-1]) if len(idx) else 0)
        return cls(domain, idx, sg, vals, top, label)

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class SignChangeReport:
    x: float
    h: float
    count: int
    positions: Tuple[Tuple[int, int], ...]
    zeros_seen: int

    @property
    def first_pair(self) -> Optional[Tuple[int, int]]:
        return self.positions[0] if self.positions else None

    @property
    def last_pair(self) -> Optional[Tuple[int, int]]:
        return self.positions[-1] if self.positions else None


def lambda_power_series(table: CoefficientTable, j: int, upper: int) -> SignSeries:
    values, signs = lambda_power_table(table, j, upper)
    if table.form.weight == 2:
        logger.info(f"lambda(n^{j}) for {table.form.id} lies outside the level-1 sign-change theorem")
    return SignSeries("all", np.arange(1, upper + 1, dtype=np.int64), signs[1:], values[1:],
                      upper, f"{table.form.id} lambda(n^{j})")


def cprime_series(exp: ExponentTable, upper: int) -> SignSeries:
    primes, values, signs = cprime_table(exp, upper)
    return SignSeries("primes", primes, signs, values, upper, f"{exp.form.id} c'(p)")


def _window_bounds(series: SignSeries, x: float, h: float) -> Tuple[int, int]:
    if x < 0 or h < 0:
        raise DomainError(f"Window (x, x+h] needs x >= 0 and h >= 0, got x={x}, h={h}")
    end = math.floor(x + h)
    if end > series.upper:
        raise InsufficientDataError(
            f"Window ({x:g}, {x + h:g}] exceeds the {series.label or 'series'} coverage {series.upper:,}"
        )
    lo = int(np.searchsorted(series.indices, x, side="right"))
    hi = int(np.searchsorted(series.indices, end, side="right"))
    return lo, hi


def count_sign_changes(series: SignSeries, x: float, h: float) -> SignChangeReport:
    """
    Count opposite signs between consecutive nonzero entries with both
    indices in (x, x + h]. Zeros are skipped.
    """
    lo, hi = _window_bounds(series, x, h)
    window = series.signs[lo:hi]
    idx = series.indices[lo:hi]
    nonzero = window != 0
    signs, positions = window[nonzero], idx[nonzero]
    flips = np.flatnonzero(signs[1:] != signs[:-1])
    pairs = tuple((int(positions[i]), int(positions[i + 1])) for i in flips)
    return SignChangeReport(x, h, len(pairs), pairs, int(len(window) - nonzero.sum()))


def first_sign_change(series: SignSeries) -> Optional[int]:
    """Smallest index whose sign is opposite to the first nonzero sign."""
    nonzero = np.flatnonzero(series.signs)
    if not len(nonzero):
        return None
    first = series.signs[nonzero[0]]
    opposite = np.flatnonzero(series.signs == -first)
    return int(series.indices[opposite[0]]) if len(opposite) else None


def window_length(x: float, mode: str = "dyadic", a: Optional[float] = None) -> float:
    """
    h(x) for the window (x, x + h].

    dyadic: h = x
    power: h = x^a
    subexp: h = x / exp(a sqrt(log x)), a defaults to 1
    """
    if mode == "dyadic":
        return float(x)
    if mode == "power":
        if a is None:
            raise UsageError("window mode 'power' needs an exponent")
        return float(x) ** a
    if mode == "subexp":
        if x <= 1:
            raise DomainError(f"window mode 'subexp' needs x > 1, got {x}")
        return x / math.exp((1.0 if a is None else a) * math.sqrt(math.log(x)))
    raise UsageError(f"Unknown window mode '{mode}'. Choose one of: {', '.join(WINDOW_MODES)}")


def window_sign_change_scan(series: SignSeries, x0: float, windows: int,
                            mode: str = "dyadic", a: Optional[float] = None,
                            threads: int = 1) -> List[SignChangeReport]:
    """
    One report per window (x, x + h(x)], x = x0 * 2^t for t < windows.

    Reports come back in window order whatever the thread count.
    """
    if windows < 1:
        raise UsageError(f"windows must be >= 1, got {windows}")
    if x0 <= 0:
        raise UsageError(f"x0 must be positive, got {x0}")
    grid = [(x0 * 2 ** t, window_length(x0 * 2 ** t, mode, a)) for t in range(windows)]
    last_x, last_h = grid[-1]
    if math.floor(last_x + last_h) > series.upper:
        raise InsufficientDataError(
            f"Scan to {last_x + last_h:,.0f} exceeds the {series.label or 'series'} coverage {series.upper:,}"
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(lambda xh: count_sign_changes(series, *xh), grid))
    else:
        reports = [count_sign_changes(series, x, h) for x, h in grid]

    for r in reports:
        logger.debug(f"{series.label}: ({r.x:g}, {r.x + r.h:g}] count={r.count} zeros={r.zeros_seen}")
        if r.count == 0:
            logger.warning(f"{series.label}: no sign change in ({r.x:g}, {r.x + r.h:g}]")
    return reports


def dyadic_sign_change_scan(series: SignSeries, x0: float, windows: int,
                            threads: int = 1) -> List[SignChangeReport]:
    return window_sign_change_scan(series, x0, windows, "dyadic", None, threads)


@dataclass(frozen=True)
class MomentSums:
    x: float
    first: float
    second: float
    b_hat: float


@dataclass(frozen=True)
class IntervalMoments:
    x: float
    h: float
    first: float
    second: float
    # h * b_hat and (x + h)^beta; None when j has no cataloged constants
    second_scale: Optional[float] = None
    first_scale: Optional[float] = None


def power_moment_sums(table: CoefficientTable, j: int, x: float) -> MomentSums:
    """Sum of lambda(n^j) and lambda^2(n^j) over n <= x, with b_hat = second / x."""
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    end = math.floor(x)
    values, _ = lambda_power_table(table, j, end)
    first = math.fsum(values[1:])
    second = math.fsum(values[1:] ** 2)
    return MomentSums(x, first, second, second / x)


def interval_moments(table: CoefficientTable, j: int, x: float, h: float,
                     epsilon: float = 0.0) -> IntervalMoments:
    """
    First and second moments of lambda(n^j) over x < n <= x + h, with the
    reference scales they are compared against.
    """
    if x < 0 or h < 0:
        raise DomainError(f"Window (x, x+h] needs x >= 0 and h >= 0, got x={x}, h={h}")
    end = math.floor(x + h)
    start = math.floor(x) + 1
    values, _ = lambda_power_table(table, j, max(end, 1))
    window = values[start : end + 1] if end >= start else values[:0]
    first = math.fsum(window)
    second = math.fsum(window ** 2)

    second_scale = first_scale = None
    if j in DELTAS and end >= 1:
        constants = TheoremConstants.for_power(j, epsilon)
        b_hat = math.fsum(values[1 : end + 1] ** 2) / end
        second_scale = h * b_hat
        first_scale = (x + h) ** float(constants.beta)
    return IntervalMoments(x, h, first, second, second_scale, first_scale)


@dataclass(frozen=True)
class PrimeSumReport:
    """
    Weighted prime sums over p <= x. The c' fields are only filled for
    weight-2 newforms.
    """
    form: str
    x: float
    S1: float
    S2: float
    C2: Optional[float] = None
    C1_log: Optional[float] = None
    C2_log: Optional[float] = None
    log_over_p: float = 0.0

    @property
    def S1_over_x(self) -> float:
        return self.S1 / self.x

    @property
    def S2_over_x(self) -> float:
        return self.S2 / self.x

    @property
    def C2_logx_over_x(self) -> Optional[float]:
        if self.C2 is None:
            return None
        return self.C2 * math.log(self.x) / self.x


def _prime_lambdas(table: CoefficientTable, end: int) -> Tuple[np.ndarray, np.ndarray]:
    if end > table.limit:
        raise InsufficientDataError(
            f"Prime sums to {end:,} need a({end:,}); {table.form.id} table stops at {table.limit:,}"
        )
    primes = np.asarray(prime_array(end), dtype=np.int64)
    weight = table.form.weight
    lam = np.array([normalized(int(table.coeffs[p]), int(p), weight) for p in primes], dtype=np.float64)
    return primes, lam


def _cprime_values(table: CoefficientTable, end: int, exp: Optional[ExponentTable]) -> np.ndarray:
    if exp is not None:
        return cprime_table(exp, end)[1]
    return cprime_from_coefficients(table, end)[1]


def prime_sums(table: CoefficientTable, x: float, exp: Optional[ExponentTable] = None) -> PrimeSumReport:
    """
    S1 = sum lambda(p) log p, S2 = sum lambda^2(p) log p and, for weight-2
    forms, C2 = sum c'(p)^2 together with the log-weighted c' sums.
    """
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    end = math.floor(x)
    primes, lam = _prime_lambdas(table, end)
    logs = np.log(primes.astype(np.float64))

    report = dict(
        form=table.form.id, x=x,
        S1=math.fsum(lam * logs),
        S2=math.fsum(lam ** 2 * logs),
        log_over_p=math.fsum(logs / primes),
    )
    if table.form.weight == 2:
        cp = _cprime_values(table, end, exp)
        report.update(
            C2=math.fsum(cp ** 2),
            C1_log=math.fsum(cp * logs),
            C2_log=math.fsum(cp ** 2 * logs),
        )
    return PrimeSumReport(**report)


@dataclass(frozen=True)
class IntervalPrimeSums:
    x: float
    h: float
    first: float
    second: float
    ratio: Optional[float]
    reference: float


def interval_prime_sums(exp: ExponentTable, x: float, h: float) -> IntervalPrimeSums:
    """
    Sum c'(p) and c'(p)^2 over x < p <= x + h, the ratio |first| / second and
    the scale h / log x the second sum is compared against.
    """
    if x <= 1 or h < 0:
        raise DomainError(f"Need x > 1 and h >= 0, got x={x}, h={h}")
    end = math.floor(x + h)
    primes, values, _ = cprime_table(exp, end)
    window = values[primes > x]
    first = math.fsum(window)
    second = math.fsum(window ** 2)
    ratio = abs(first) / second if second else None
    return IntervalPrimeSums(x, h, first, second, ratio, h / math.log(x))


def abel_consistency(table: CoefficientTable, x: float) -> float:
    """
    Relative gap between sum_{p<=x} c'(p)^2 and its reconstruction
    T(x)/log x + integral_2^x T(t)/(t log^2 t) dt, T(t) = sum_{p<=t} c'(p)^2 log p.

    T is constant between consecutive primes, so on [p_i, p_{i+1}) the
    integral is T_i (1/log p_i - 1/log p_{i+1}).
    """
    if table.form.weight != 2:
        raise UnsupportedFormError(f"abel_consistency needs a weight-2 newform, got {table.form.id}")
    if x < 3:
        raise DomainError(f"x must be >= 3, got {x}")
    end = math.floor(x)
    primes, values, _ = cprime_from_coefficients(table, end)
    terms = values ** 2
    logs = np.log(primes.astype(np.float64))
    partial = np.cumsum(terms * logs)

    inv_logs = 1.0 / logs
    upper_inv = np.append(inv_logs[1:], 1.0 / math.log(x))
    reconstructed = math.fsum(np.append(partial * (inv_logs - upper_inv), partial[-1] / math.log(x)))
    direct = math.fsum(terms)
    gap = abs(direct - reconstructed)
    return gap / direct if direct else gap


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    points: Tuple[Tuple[float, float], ...]
    rejected: Tuple[Tuple[float, float], ...] = field(default=())


def _loglog_fit(xs: np.ndarray, ys: np.ndarray) -> Tuple[float, float, float]:
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = float(np.max(np.abs(ys - (slope * xs + intercept))))
    return float(slope), float(intercept), residual


def fit_exponent(points: Sequence[Tuple[float, float]]) -> ExponentFit:
    """
    Least-squares slope of log(count) against log(x).

    Points with count <= 0 are rejected; fewer than two usable points is an
    error.
    """
    usable = tuple((float(x), float(c)) for x, c in points if c > 0 and x > 0)
    rejected = tuple((float(x), float(c)) for x, c in points if not (c > 0 and x > 0))
    if rejected:
        logger.warning(f"fit_exponent: rejected {len(rejected)} points with zero count")
    if len(usable) < 2:
        raise InsufficientDataError(f"Need at least 2 points with count >= 1, have {len(usable)}")
    xs = np.log([x for x, _ in usable])
    ys = np.log([c for _, c in usable])
    slope, intercept, residual = _loglog_fit(xs, ys)
    return ExponentFit(slope, intercept, residual, usable, rejected)


@dataclass(frozen=True)
class DecayFit:
    A: float
    C: float
    residual: float


def fit_decay_constant(points: Sequence[Tuple[float, float]]) -> DecayFit:
    """Fit ratio ~ C exp(-A sqrt(log x)). Reported only."""
    usable = [(x, abs(r)) for x, r in points if r and x > 1]
    if len(usable) < 2:
        raise InsufficientDataError(f"Need at least 2 points with nonzero ratio, have {len(usable)}")
    xs = np.sqrt(np.log([x for x, _ in usable]))
    ys = np.log([r for _, r in usable])
    slope, intercept, residual = _loglog_fit(xs, ys)
    return DecayFit(-slope, math.exp(intercept), residual)
