"""Composite checks that tie the exact oracle to the closed-form bounds.

Each check returns plain records; hard inequalities (those claimed for every
n) are reported with a boolean verdict so the caller can decide the exit
status.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator

from kbv.bounds import (
    BoundParams,
    le_bound,
    lemma_bonf_bound,
    lemma_high_bound,
    lemma_many_bound,
    theorem1_bound,
    truncation_remainder_bound,
)
from kbv.exact import (
    MultiplicityVector,
    exact_tv,
    inclusion_exclusion_levels,
    joint_v_law,
    partitioned_tv,
)
from kbv.laws import LawSpec, certify_ht
from kbv.primes import GammaSet, gamma_beta
from kbv.reports import TvReport


def multiplicity_vectors(primes: tuple[int, ...], max_total: int) -> Iterator[MultiplicityVector]:
    """Every m in N^D, D a subset of ``primes``, with |m| <= max_total, in a fixed order."""

    def rec(i: int, budget: int, acc: list):
        if i == len(primes):
            yield MultiplicityVector(tuple(acc))
            return
        yield from rec(i + 1, budget, acc)
        for e in range(1, budget + 1):
            acc.append((primes[i], e))
            yield from rec(i + 1, budget - e, acc)
            acc.pop()

    yield from rec(0, max_total, [])


@dataclass
class SandwichScan:
    checks: int
    violations: int
    geo_violations: int
    vectors: int
    examples: list

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.geo_violations == 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def bonferroni_scan(law: LawSpec, gamma: GammaSet, max_total: int = 6) -> SandwichScan:
    """Check both truncated inclusion-exclusion sandwiches for every (D, m) with
    |m| <= max_total and every odd truncation level up to |Gamma|."""
    joint = joint_v_law(law, gamma)
    k = len(gamma)
    odd_levels = list(range(1, k + 1, 2))
    P = gamma.product
    # the geometric level sums do not depend on m beyond the factor 1/p_D^m
    geo_levels = [(-1) ** r * sum(P // math.prod(I) for I in combinations(gamma.primes, r)) for r in range(k + 1)]
    geo_exact = math.prod(p - 1 for p in gamma.primes)  # P * prod(1 - 1/p)
    checks = violations = geo_violations = vectors = 0
    examples = []
    for m in multiplicity_vectors(gamma.primes, max_total):
        vectors += 1
        event_w = joint.weights.get(m.p_D_m, 0)
        if m.p_D_m > law.n:
            law_levels = [0] * (k + 1)
        else:
            law_levels, _ = inclusion_exclusion_levels(law, gamma, m)
        for g in odd_levels:
            checks += 1
            lower = sum(law_levels[: g + 1])
            upper = sum(law_levels[: g + 2])
            if not lower <= event_w <= upper:
                violations += 1
                if len(examples) < 5:
                    examples.append({"m": str(m), "gamma": g, "lower": lower, "event": event_w, "upper": upper})
            glo = sum(geo_levels[: g + 1])
            ghi = sum(geo_levels[: g + 2])
            if not glo <= geo_exact <= ghi:
                geo_violations += 1
    return SandwichScan(checks, violations, geo_violations, vectors, examples)


def partition_report(law: LawSpec, params: BoundParams, *, jobs: int = 1) -> TvReport:
    """Exact three-region split against the regime lemmas.

    The many-divisor and high-multiplicity lemmas are stated for every n and
    are hard checks whenever the law satisfies the divisor hypothesis with
    the given (t, kappa); the remainder lemma only holds for large n and is
    reported as a soft check.
    """
    gamma = params.gamma
    joint = joint_v_law(law, gamma, jobs=jobs)
    rho = gamma.rho
    bounds: dict = {}
    verdicts: dict = {}
    cert = certify_ht(law, params.t, params.kappa)
    verdicts["hypothesis_holds"] = cert.holds
    if rho is None or rho <= 1:
        part = partitioned_tv(law, gamma, math.inf, math.inf, joint=joint)
        return TvReport(law.n, law.describe(), gamma.describe(), part.tv, part.many, part.high, part.small,
                        None, None, bounds, {**verdicts, "note": "rho undefined or <= 1; lemmas not evaluated"})
    alpha, beta = params.alpha, params.beta
    part = partitioned_tv(law, gamma, alpha, beta, joint=joint)
    many_b = lemma_many_bound(params.delta, params.epsilon, params.kappa, rho)
    high_b = lemma_high_bound(params.delta, params.epsilon, params.kappa, rho).value
    bounds["many"] = many_b
    bounds["high"] = high_b
    verdicts["many_ok"] = le_bound(part.many, many_b)
    verdicts["high_ok"] = le_bound(part.high, high_b)
    verdicts["additive"] = part.many + part.high + part.small == 2 * exact_tv(law, gamma, joint=joint)
    bonf = lemma_bonf_bound(params)
    bounds["bonf"] = bonf.value
    verdicts["bonf_soft_ok"] = le_bound(part.small, bonf.value)
    if bonf.gamma_n is not None:
        trunc = truncation_remainder_bound(bonf.gamma_n, params)
        bounds["truncation_as_displayed"] = trunc.as_displayed
        bounds["truncation_as_derived"] = trunc.as_derived
        verdicts["truncation_soft_ok"] = le_bound(part.small, trunc.as_derived)
        verdicts["truncation_case"] = trunc.case
    else:
        verdicts["truncation_case"] = "degenerate (alpha < 1)"
    return TvReport(law.n, law.describe(), gamma.describe(), part.tv, part.many, part.high, part.small,
                    alpha, beta, bounds, verdicts)


def hard_failures(report: TvReport) -> list[str]:
    """Names of violated hard inequalities (only meaningful when the hypothesis holds)."""
    v = report.verdicts
    out = []
    if v.get("additive") is False:
        out.append("additive")
    if v.get("hypothesis_holds"):
        for key in ("many_ok", "high_ok"):
            if v.get(key) is False:
                out.append(key)
    return out


def loglog_squared(n: int) -> float:
    return math.log(math.log(n)) ** 2


@dataclass
class CrossoverRow:
    n: int
    gamma: str
    gamma_size: int
    rho: float | None
    tv: Fraction
    bound: float | None
    c: float | None
    branch: str | None
    vacuous: bool | None
    cardinality_ok: bool | None
    accept: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def theorem1_row(law: LawSpec, gamma: GammaSet, *, t: float, kappa: float, epsilon: float,
                 delta: float | None = None, jobs: int = 1) -> CrossoverRow:
    """Exact TV next to the main bound; accepted when TV <= min(1, bound)."""
    tv = exact_tv(law, gamma, jobs=jobs)
    if gamma.rho is None:
        return CrossoverRow(law.n, gamma.describe(), len(gamma), None, tv, None, None, None, None, None, tv <= 1)
    params = BoundParams(t, kappa, epsilon, law.n, gamma, delta)
    b = theorem1_bound(params)
    accept = tv <= 1 and (b.value > 1 or le_bound(tv, b.value))
    return CrossoverRow(law.n, gamma.describe(), len(gamma), gamma.rho, tv, b.value, b.c, b.branch,
                        b.vacuous, b.cardinality_ok, accept)


def default_gamma(n: int) -> GammaSet:
    """Primes up to n**(1/(log log n)**2)."""
    return gamma_beta(n, loglog_squared(n))
