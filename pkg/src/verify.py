"""
Invariant suite behind `signlab verify`.

Each suite is a list of named checks; a check returns (passed, detail) and
never raises on a mathematical failure.
"""

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.errors import SignLabError, UsageError
from src.tools.eigenforms import (
    CATALOG, LEVEL_ONE_FORMS, WEIGHT_TWO_FORMS, CoefficientTable,
    deligne_violations, generate_coefficients, lambda_power, ramified_violations,
    verify_multiplicativity,
)
from src.tools.gmf import (
    cprime_bound_violations, cprime_identity_violations, exponents_from_coefficients,
    roundtrip_check, sign_consistency,
)
from src.tools.numtheory import divisors, factorize, moebius, moebius_table, sieve_primes, sigma
from src.tools.qseries import (
    EtaQuotient, IntSeries, euler_product_sparse, eta_quotient_expand,
)
from src.tools.signlab import (
    SignSeries, abel_consistency, count_sign_changes, dyadic_sign_change_scan,
    lambda_power_series, prime_sums,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerifyLimits:
    level_one: int = 10_000
    weight_two: int = 100_000
    coprime_bound: int = 100
    gmf: int = 10_000


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    suites: Dict[str, List[CheckResult]] = field(default_factory=dict)

    @property
    def pass_count(self) -> int:
        return sum(c.passed for checks in self.suites.values() for c in checks)

    @property
    def fail_count(self) -> int:
        return sum(not c.passed for checks in self.suites.values() for c in checks)

    @property
    def ok(self) -> bool:
        return self.fail_count == 0

    def to_dict(self) -> dict:
        return {
            "suite": [
                {"name": f"{suite}.{c.name}", "pass": c.passed, "detail": c.detail}
                for suite, checks in self.suites.items() for c in checks
            ],
            "pass_count": self.pass_count,
            "fail_count": self.fail_count,
        }


def _brute_euler(trunc: int) -> List[int]:
    coeffs = [1] + [0] * trunc
    for n in range(1, trunc + 1):
        for i in range(trunc, n - 1, -1):
            coeffs[i] -= coeffs[i - n]
    return coeffs


class Verifier:
    def __init__(self, cache_dir: Optional[str] = None, limits: VerifyLimits = VerifyLimits(),
                 seed: int = 20240101):
        self.cache_dir = cache_dir
        self.limits = limits
        self.seed = seed
        self._tables: Dict[str, CoefficientTable] = {}

    def table(self, form: str) -> CoefficientTable:
        if form not in self._tables:
            limit = self.limits.level_one if CATALOG[form].is_level_one else self.limits.weight_two
            self._tables[form] = generate_coefficients(form, limit, cache_dir=self.cache_dir)
        return self._tables[form]

    # numtheory

    def moebius_sum(self):
        n = 10_000
        mu = moebius_table(n).astype(np.int64)
        acc = np.zeros(n + 1, dtype=np.int64)
        for d in range(1, n + 1):
            if mu[d]:
                acc[d::d] += mu[d]
        bad = [k for k in range(1, n + 1) if acc[k] != (1 if k == 1 else 0)]
        return not bad, f"first failing n: {bad[0]}" if bad else f"n <= {n}"

    def multiplicative_functions(self):
        bad = []
        for m in range(1, 301):
            for n in range(m + 1, 301):
                if math.gcd(m, n) != 1:
                    continue
                if moebius(m * n) != moebius(m) * moebius(n) or sigma(3, m * n) != sigma(3, m) * sigma(3, n):
                    bad.append((m, n))
        return not bad, f"violations: {bad[:5]}" if bad else "coprime m, n <= 300"

    def sieve_vs_trial_division(self):
        n = 20_000
        primes = set(sieve_primes(n))
        bad = [k for k in range(2, n + 1)
               if (k in primes) != all(k % d for d in range(2, math.isqrt(k) + 1))]
        return not bad, f"disagreements: {bad[:5]}" if bad else f"n <= {n}"

    def divisor_counts(self):
        bad = [n for n in range(1, 5001) if len(divisors(n)) != factorize(n).num_divisors]
        return not bad, f"first failing n: {bad[0]}" if bad else "n <= 5000"

    # qseries

    def euler_product(self):
        bad = [t for t in (1, 7, 12, 50, 200) if euler_product_sparse(t).tolist() != _brute_euler(t)]
        return not bad, f"failing truncations: {bad}" if bad else "T in {1, 7, 12, 50, 200}"

    def strategy_independence(self):
        eq = EtaQuotient(((1, 24),))
        sparse = eta_quotient_expand(eq, 2000, strategy="sparse")
        kron = eta_quotient_expand(eq, 2000, strategy="kronecker")
        return sparse == kron, "eta^24 to 2000, sparse vs kronecker"

    def commutativity(self):
        rng = random.Random(self.seed)
        for _ in range(20):
            t = rng.randint(1, 64)
            a, b, c = (IntSeries.from_list([rng.randint(-9, 9) for _ in range(t + 1)]) for _ in range(3))
            if a * b != b * a or (a * b) * c != a * (b * c):
                return False, f"failed at trunc {t}"
        return True, "20 random series, trunc <= 64"

    def normalized_quotients(self):
        bad = []
        for spec in CATALOG.values():
            s = eta_quotient_expand(spec.eta, 20)
            if s.coefficient(spec.eta.leading_power) != 1:
                bad.append(spec.id)
        return not bad, f"not normalized: {bad}" if bad else "all cataloged quotients"

    # eigenforms

    def multiplicativity(self, form: str):
        table = self.table(form)
        bound = min(self.limits.coprime_bound, math.isqrt(table.limit))
        report = verify_multiplicativity(table, bound)
        if report.ok:
            return True, f"limit {table.limit:,}, bound {bound}"
        return False, f"normalized={report.normalized}, violations {report.violations[:5]}"

    def deligne(self, form: str):
        bad = deligne_violations(self.table(form))
        return not bad, f"primes: {bad[:5]}" if bad else f"|lambda(p)| <= 2 to {self.table(form).limit:,}"

    def ramified(self, form: str):
        bad = ramified_violations(self.table(form))
        return not bad, f"primes: {bad}" if bad else "|a(p)| = 1 for p | N"

    def lambda_signs(self):
        table = self.table("delta")
        bad = []
        for j in (1, 2, 3, 4):
            for n in range(1, 200):
                v = lambda_power(table, n, j)
                if abs(v.value) > 1e-12 and (v.value > 0) - (v.value < 0) != v.sign:
                    bad.append((n, j))
        return not bad, f"mismatches: {bad[:5]}" if bad else "delta, n < 200, j <= 4"

    # gmf

    def gmf_roundtrip(self, form: str):
        source = self.table(form)
        if source.limit > self.limits.gmf:
            source = CoefficientTable(source.form, self.limits.gmf, source.coeffs[: self.limits.gmf + 1])
        exp = exponents_from_coefficients(source)
        rt = roundtrip_check(exp, source)
        if not rt.ok:
            return False, f"first failing n = {rt.first_failure}"
        bound = cprime_bound_violations(exp)
        identity = cprime_identity_violations(exp, source)
        signs = sign_consistency(exp)
        if bound or identity or signs:
            return False, f"|c'| > 3: {bound[:5]}, identity: {identity[:5]}, sign: {signs[:5]}"
        return True, f"m(1) = {exp.m_value(1)}, limit {exp.limit:,}"

    # signlab

    def counting_invariances(self):
        rng = np.random.default_rng(self.seed)
        signs = rng.integers(-1, 2, size=500)
        values = rng.normal(size=500) * np.where(signs == 0, 0, 1)
        idx = np.arange(1, 501)
        base = SignSeries.from_signs(idx, signs, values)
        scaled = SignSeries.from_signs(idx, signs, values * 3.5)
        flipped = SignSeries.from_signs(idx, -signs, -values)
        a, b, c = 0, 250, 500
        whole = count_sign_changes(base, a, c - a)
        if whole != count_sign_changes(scaled, a, c - a):
            return False, "positive scaling changed the count"
        if whole.count != count_sign_changes(flipped, a, c - a).count:
            return False, "global flip changed the count"
        nz = np.flatnonzero(signs)
        left, right = signs[nz[nz < b]], signs[nz[nz >= b]]
        join = int(len(left) > 0 and len(right) > 0 and left[-1] != right[0])
        split = count_sign_changes(base, a, b - a).count + count_sign_changes(base, b, c - b).count + join
        if whole.count != split:
            return False, f"split {split} != whole {whole.count}"
        nonzero = int(np.count_nonzero(signs))
        if nonzero and whole.count > nonzero - 1:
            return False, "count exceeds nonzero entries - 1"
        return True, "scaling, flip, splitting and bound on 500 random signs"

    def abel(self):
        table = self.table("n11")
        xs = [x for x in (10**3, 10**4, 10**5) if x <= table.limit] or [table.limit]
        gaps = {x: abel_consistency(table, x) for x in xs}
        worst = max(gaps.values())
        return worst <= 1e-6, f"max gap {worst:.3g} over x in {xs}"

    def dyadic_positivity(self):
        table = self.table("delta")
        top = 1
        while top * 4 <= table.limit:
            top *= 2
        windows = int(math.log2(top)) - 3
        series = lambda_power_series(table, 2, top * 2)
        reports = dyadic_sign_change_scan(series, 16, windows)
        empty = [r.x for r in reports if r.count == 0]
        return not empty, f"empty windows at {empty}" if empty else f"{windows} windows from x = 16"

    def prime_density(self, form: str):
        table = self.table(form)
        x = min(10**5, table.limit)
        ratio = prime_sums(table, x).S2_over_x
        if not 0.5 <= ratio <= 1.5:
            return False, f"S2/x = {ratio:.4f} at x = {x:,}"
        if table.limit < 10**6:
            return True, f"S2/x = {ratio:.4f} at x = {x:,}; gap trend needs a table to 10^6"
        near, far = (abs(prime_sums(table, t).S2_over_x - 1) for t in (10**4, 10**6))
        if far >= near:
            return False, f"|S2/x - 1| = {far:.4g} at 10^6, not below {near:.4g} at 10^4"
        return True, f"S2/x = {ratio:.4f} at x = {x:,}; gap {near:.4g} -> {far:.4g}"

    def suites(self) -> Dict[str, List[Tuple[str, Callable[[], Tuple[bool, str]]]]]:
        eig = [(f"multiplicativity[{f}]", lambda f=f: self.multiplicativity(f)) for f in CATALOG]
        eig += [(f"deligne[{f}]", lambda f=f: self.deligne(f)) for f in CATALOG]
        eig += [(f"ramified[{f}]", lambda f=f: self.ramified(f)) for f in WEIGHT_TWO_FORMS]
        eig.append(("lambda_signs", self.lambda_signs))
        return {
            "numtheory": [
                ("moebius_sum", self.moebius_sum),
                ("multiplicative_functions", self.multiplicative_functions),
                ("sieve_vs_trial_division", self.sieve_vs_trial_division),
                ("divisor_counts", self.divisor_counts),
            ],
            "qseries": [
                ("euler_product", self.euler_product),
                ("strategy_independence", self.strategy_independence),
                ("commutativity", self.commutativity),
                ("normalized_quotients", self.normalized_quotients),
            ],
            "eigenforms": eig,
            "gmf": [(f"roundtrip[{f}]", lambda f=f: self.gmf_roundtrip(f)) for f in WEIGHT_TWO_FORMS],
            "signlab": [
                ("counting_invariances", self.counting_invariances),
                ("abel_consistency", self.abel),
                ("dyadic_positivity", self.dyadic_positivity),
            ] + [(f"prime_density[{f}]", lambda f=f: self.prime_density(f)) for f in CATALOG],
        }

    def run(self, only: Optional[List[str]] = None) -> VerifyReport:
        available = self.suites()
        names = only or list(available)
        unknown = [n for n in names if n not in available]
        if unknown:
            raise UsageError(f"Unknown suite(s) {unknown}. Choose from: {', '.join(available)}")

        report = VerifyReport()
        for suite in names:
            results = []
            for name, check in available[suite]:
                try:
                    passed, detail = check()
                except SignLabError as e:
                    passed, detail = False, f"{type(e).__name__}: {e}"
                if not passed:
                    logger.warning(f"{suite}.{name} failed: {detail}")
                results.append(CheckResult(name, bool(passed), detail))
            report.suites[suite] = results
            logger.info(f"Suite {suite}: {sum(r.passed for r in results)}/{len(results)} passed")
        return report
