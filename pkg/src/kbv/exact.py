"""Brute-force oracle for the valuation vector versus independent geometrics.

For a prime set Gamma the valuation vector of k on Gamma is determined by the
Gamma-part of k (its largest divisor built from Gamma), so the joint law is
accumulated as integer weights keyed by that divisor ``d = p_D^m``.  The
geometric law gives the same vector the mass ``phi / (P * d)`` with
``P = prod p`` and ``phi = prod (p - 1)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

from kbv.config import LIMITS
from kbv.errors import PreconditionError, ResourceLimitError
from kbv.laws import LawSpec
from kbv.primes import GammaSet


@dataclass(frozen=True, order=True)
class MultiplicityVector:
    """Positive multiplicities on a finite set of primes, sorted by prime.

    Ordering is lexicographic on ``(prime, multiplicity)`` pairs, which fixes
    the iteration order of every report.
    """

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        items = tuple(sorted((int(p), int(e)) for p, e in self.entries))
        if any(e < 1 for _, e in items):
            raise PreconditionError(
                "multiplicities must be >= 1 (omit zeros)", module="exact", condition="m in N^D"
            )
        if len({p for p, _ in items}) != len(items):
            raise PreconditionError("repeated prime", module="exact", condition="distinct primes")
        object.__setattr__(self, "entries", items)

    @classmethod
    def of(cls, mapping: Mapping[int, int] | None = None, **_) -> "MultiplicityVector":
        mapping = mapping or {}
        return cls(tuple((p, e) for p, e in mapping.items() if e != 0))

    @classmethod
    def from_divisor(cls, d: int, primes: Iterable[int]) -> "MultiplicityVector":
        out = []
        for p in primes:
            e = 0
            while d % p == 0:
                d //= p
                e += 1
            if e:
                out.append((p, e))
        if d != 1:
            raise PreconditionError("divisor has a prime factor outside the set", module="exact",
                                    condition="supp(m) within Gamma")
        return cls(tuple(out))

    @property
    def support(self) -> frozenset:
        return frozenset(p for p, _ in self.entries)

    @property
    def size(self) -> int:
        """|m|, the total multiplicity."""
        return sum(e for _, e in self.entries)

    @property
    def p_D(self) -> int:
        return math.prod(p for p, _ in self.entries)

    @property
    def p_D_m(self) -> int:
        return math.prod(p**e for p, e in self.entries)

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def __str__(self) -> str:
        if not self.entries:
            return "()"
        return "(" + ", ".join(f"{p}^{e}" for p, e in self.entries) + ")"


EMPTY = MultiplicityVector()


@dataclass(frozen=True, eq=False)
class JointLaw:
    """Law of the valuation vector on ``gamma`` as integer weights over ``total``.

    ``weights`` maps the Gamma-part d of an integer to the total weight of the
    integers with that Gamma-part.
    """

    gamma: GammaSet
    weights: dict
    total: int

    @cached_property
    def masses(self) -> dict[MultiplicityVector, Fraction]:
        out = {
            MultiplicityVector.from_divisor(d, self.gamma.primes): Fraction(w, self.total)
            for d, w in self.weights.items()
            if w
        }
        return dict(sorted(out.items()))

    def mass(self, m: MultiplicityVector) -> Fraction:
        return Fraction(self.weights.get(m.p_D_m, 0), self.total)

    def support_divisors(self) -> list[int]:
        return sorted(d for d, w in self.weights.items() if w)


def _check_exact_limits(law: LawSpec, gamma: GammaSet, max_gamma: int | None, max_n: int | None) -> None:
    if gamma.n != law.n:
        raise PreconditionError(f"gamma.n={gamma.n} but law.n={law.n}", module="exact",
                                condition="gamma.n == law.n")
    max_gamma = LIMITS.max_gamma if max_gamma is None else max_gamma
    max_n = LIMITS.max_n if max_n is None else max_n
    if len(gamma) > max_gamma:
        raise ResourceLimitError(f"|Gamma|={len(gamma)} exceeds the exact-mode limit {max_gamma}",
                                 module="exact", condition="|Gamma| <= max_gamma")
    if law.n > max_n:
        raise ResourceLimitError(f"n={law.n} exceeds the dense-law limit {max_n}",
                                 module="exact", condition="n <= max_n")


def gamma_parts(lo: int, hi: int, primes: Iterable[int]) -> np.ndarray:
    """Gamma-part of every k in [lo, hi] (inclusive)."""
    out = np.ones(hi - lo + 1, dtype=np.int64)
    for p in primes:
        pe = p
        while pe <= hi:
            start = -(-lo // pe) * pe
            out[start - lo :: pe] *= p
            pe *= p
    return out


def _block_weights(args) -> dict[int, int]:
    lo, hi, primes, w = args
    parts = gamma_parts(lo, hi, primes)
    if w is None:
        keys, counts = np.unique(parts, return_counts=True)
        return {int(k): int(c) for k, c in zip(keys, counts)}
    order = np.argsort(parts, kind="stable")
    sorted_parts = parts[order]
    starts = np.flatnonzero(np.r_[True, sorted_parts[1:] != sorted_parts[:-1]])
    sums = np.add.reduceat(w[order], starts)
    return {int(sorted_parts[s]): int(v) for s, v in zip(starts, sums)}


def joint_v_law(law: LawSpec, gamma: GammaSet, *, jobs: int = 1, max_gamma: int | None = None,
                max_n: int | None = None) -> JointLaw:
    """Exact joint law of the valuations (v_p; p in Gamma) of J_n."""
    _check_exact_limits(law, gamma, max_gamma, max_n)
    n = law.n
    block = LIMITS.block_size
    tasks = []
    for lo in range(1, n + 1, block):
        hi = min(lo + block - 1, n)
        w = None if law.is_uniform else law.weights[lo - 1 : hi]
        tasks.append((lo, hi, gamma.primes, w))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_block_weights, tasks))
    else:
        parts = [_block_weights(t) for t in tasks]
    merged: dict[int, int] = {}
    for part in parts:  # in block order, so the merge is deterministic
        for d, v in part.items():
            merged[d] = merged.get(d, 0) + v
    return JointLaw(gamma, dict(sorted(merged.items())), law.total)


def _check_support(gamma: GammaSet, m: MultiplicityVector) -> None:
    if not m.support <= gamma._prime_set:
        raise PreconditionError("supp(m) must lie in Gamma", module="exact", condition="supp(m) within Gamma")


def geometric_mass(gamma: GammaSet, m: MultiplicityVector) -> Fraction:
    """P[g_p = m_p for p in supp(m), g_q = 0 otherwise] for independent geometrics."""
    _check_support(gamma, m)
    phi = math.prod(p - 1 for p in gamma.primes)
    return Fraction(phi, gamma.product * m.p_D_m)


def exact_tv(law: LawSpec, gamma: GammaSet, *, joint: JointLaw | None = None, jobs: int = 1,
             max_gamma: int | None = None, max_n: int | None = None) -> Fraction:
    """Exact total variation distance between the valuation vector and the geometric vector."""
    if joint is None:
        joint = joint_v_law(law, gamma, jobs=jobs, max_gamma=max_gamma, max_n=max_n)
    return _region_sums(joint, lambda d: 0, [Fraction(1)])[0] / 2


def _region_sums(joint: JointLaw, region_of, geo_region_mass: list[Fraction]) -> list[Fraction]:
    """Per region r: sum |P_v - P_g| over supp(v) in r, plus geometric mass of r outside supp(v).

    ``region_of`` maps a Gamma-part d to a region index; ``geo_region_mass``
    holds the total geometric mass of each region.
    """
    gamma = joint.gamma
    P = gamma.product
    phi = math.prod(p - 1 for p in gamma.primes)
    W = joint.total
    divisors = joint.support_divisors()
    L = math.lcm(*divisors) if divisors else 1
    k = len(geo_region_mass)
    diff = [0] * k
    geo_in = [0] * k
    scale_v = P * L
    for d in divisors:
        r = region_of(d)
        g = phi * W * (L // d)  # geometric mass times W*P*L
        diff[r] += abs(joint.weights[d] * scale_v - g)
        geo_in[r] += L // d
    den = W * P * L
    out = []
    for r in range(k):
        seen = Fraction(phi * geo_in[r], P * L)
        out.append(Fraction(diff[r], den) + geo_region_mass[r] - seen)
    return out


def _coprime_mask(values: np.ndarray, primes: Iterable[int]) -> np.ndarray:
    mask = np.ones(values.shape, dtype=bool)
    for p in primes:
        mask &= values % p != 0
    return mask


def event_prob_A(law: LawSpec, gamma: GammaSet, D: Iterable[int], m: MultiplicityVector) -> Fraction:
    """P[v_p = m_p for p in D and v_q = 0 for q in Gamma minus D], by direct enumeration."""
    D = frozenset(D)
    if D != m.support:
        raise PreconditionError("supp(m) must equal D", module="exact", condition="supp(m) == D")
    if not D <= gamma._prime_set:
        raise PreconditionError("D must lie in Gamma", module="exact", condition="D within Gamma")
    d = m.p_D_m
    if d > law.n:
        return Fraction(0)
    j = np.arange(1, law.n // d + 1, dtype=np.int64)
    ok = _coprime_mask(j, gamma.primes)
    if law.is_uniform:
        return Fraction(int(ok.sum()), law.total)
    w = law.weights[d - 1 :: d]
    return Fraction(int(w[ok].sum()), law.total)


def alternating_sum_tilde(gamma: GammaSet, m: MultiplicityVector) -> Fraction:
    """sum over I subset Gamma of (-1)^|I| / (p_D^m p_I), evaluated term by term."""
    P = gamma.product
    acc = 0
    for r in range(len(gamma) + 1):
        sign = -1 if r % 2 else 1
        for I in combinations(gamma.primes, r):
            acc += sign * (P // math.prod(I))
    return Fraction(acc, P * m.p_D_m)


def event_prob_A_tilde(gamma: GammaSet, D: Iterable[int], m: MultiplicityVector, *,
                       check: bool = True) -> Fraction:
    """P[g_p = m_p for p in D and g_q = 0 elsewhere on Gamma].

    With ``check`` the inclusion-exclusion form is evaluated too (|Gamma| <= 16)
    and must agree exactly.
    """
    D = frozenset(D)
    if D != m.support:
        raise PreconditionError("supp(m) must equal D", module="exact", condition="supp(m) == D")
    value = geometric_mass(gamma, m)
    if check and len(gamma) <= 16:
        other = alternating_sum_tilde(gamma, m)
        if other != value:
            raise AssertionError(f"closed form {value} != alternating sum {other}")
    return value


# ---------------------------------------------------------------------------
# three-way partition


@dataclass(frozen=True)
class PartitionedTv:
    """Sums of |P[A] - P[A~]| over {|D| >= alpha}, {|D| < alpha, |m| >= beta} and the rest.

    The three regions are disjoint, so ``many + high + small == 2 * tv``.
    """

    alpha: float
    beta: float
    many: Fraction
    high: Fraction
    small: Fraction
    tv: Fraction
    geo_many: Fraction
    geo_high: Fraction

    @property
    def total(self) -> Fraction:
        return self.many + self.high + self.small


def _ceil_threshold(x: float) -> int | None:
    """Smallest integer >= x, or None for x = inf."""
    if math.isinf(x):
        return None
    return max(0, math.ceil(x))


def _region_count_threshold(alpha: float, size: int) -> int:
    """ceil(alpha) capped at |Gamma| + 1, which no support size reaches."""
    A = _ceil_threshold(alpha)
    return size + 1 if A is None else min(A, size + 1)


def geometric_region_masses(gamma: GammaSet, alpha: float, beta: float) -> tuple[Fraction, Fraction, Fraction]:
    """Geometric masses of {|D| >= alpha}, {|D| < alpha, |m| >= beta}, {|D| < alpha, |m| < beta}.

    Dynamic programming over primes on (|D|, min(|m|, B)) with B = ceil(beta);
    the infinite tail in each coordinate is collapsed exactly via
    sum_{k >= K} p^-k (1 - 1/p) = p^-K.
    """
    A = _region_count_threshold(alpha, len(gamma))
    B = _ceil_threshold(beta)
    size = len(gamma) + 1
    if B is None:
        dist = [Fraction(0)] * size
        dist[0] = Fraction(1)
        for p in gamma.primes:
            hit = Fraction(1, p)
            new = [Fraction(0)] * size
            for j, v in enumerate(dist):
                if v:
                    new[j] += v * (1 - hit)
                    new[j + 1] += v * hit
            dist = new
        many = sum(dist[A:], Fraction(0))
        return many, Fraction(0), 1 - many
    # state[j][s]: s in 0..B, s == B absorbs |m| >= B
    state = [[Fraction(0)] * (B + 1) for _ in range(size)]
    state[0][min(0, B)] = Fraction(1)
    for p in gamma.primes:
        new = [[Fraction(0)] * (B + 1) for _ in range(size)]
        keep = Fraction(p - 1, p)
        for j in range(size - 1):
            row = state[j]
            for s, v in enumerate(row):
                if not v:
                    continue
                new[j][s] += v * keep
                if s >= B:
                    new[j + 1][B] += v * Fraction(1, p)
                    continue
                for k in range(1, B - s):
                    new[j + 1][s + k] += v * keep / p**k
                new[j + 1][B] += v * Fraction(1, p ** (B - s))
        state = new
    many = sum((sum(state[j], Fraction(0)) for j in range(min(A, size), size)), Fraction(0))
    high = sum((state[j][B] for j in range(min(A, size))), Fraction(0))
    return many, high, 1 - many - high


def partitioned_tv(law: LawSpec, gamma: GammaSet, alpha: float, beta: float, *,
                   joint: JointLaw | None = None, jobs: int = 1) -> PartitionedTv:
    """Split the total-variation sum into the many-divisor, high-multiplicity and remainder regions."""
    if alpha < 0 or beta < 0:
        raise PreconditionError("alpha, beta must be >= 0", module="exact", condition="alpha, beta >= 0")
    if joint is None:
        joint = joint_v_law(law, gamma, jobs=jobs)
    A = _region_count_threshold(alpha, len(gamma))
    B = _ceil_threshold(beta)
    primes = gamma.primes

    def region(d: int) -> int:
        m = MultiplicityVector.from_divisor(d, primes)
        if len(m.entries) >= A:
            return 0
        if B is not None and m.size >= B:
            return 1
        return 2

    geo = geometric_region_masses(gamma, alpha, beta)
    many, high, small = _region_sums(joint, region, list(geo))
    tv = (many + high + small) / 2
    return PartitionedTv(alpha, beta, many, high, small, tv, geo[0], geo[1])


# ---------------------------------------------------------------------------
# truncated inclusion-exclusion


@dataclass(frozen=True)
class BonferroniSandwich:
    gamma_trunc: int
    lower: Fraction
    upper: Fraction
    geo_lower: Fraction
    geo_upper: Fraction
    event: Fraction
    geo_event: Fraction

    @property
    def holds(self) -> bool:
        return self.lower <= self.event <= self.upper and self.geo_lower <= self.geo_event <= self.geo_upper


def inclusion_exclusion_levels(law: LawSpec, gamma: GammaSet, m: MultiplicityVector) -> tuple[list[int], list[int]]:
    """Level sums over |I| = r of (-1)^r P[p_D^m p_I | J] and (-1)^r / (p_D^m p_I).

    Returned as integers: the first list over ``law.total``, the second over
    ``p_D^m * prod(Gamma)``.
    """
    d = m.p_D_m
    P = gamma.product
    k = len(gamma)
    law_levels = [0] * (k + 1)
    geo_levels = [0] * (k + 1)
    for r in range(k + 1):
        sign = -1 if r % 2 else 1
        acc_law = acc_geo = 0
        for I in combinations(gamma.primes, r):
            pI = math.prod(I)
            acc_law += law.divisor_weight(d * pI)
            acc_geo += P // pI
        law_levels[r] = sign * acc_law
        geo_levels[r] = sign * acc_geo
    return law_levels, geo_levels


def bonferroni_partial_sums(law: LawSpec, gamma: GammaSet, D: Iterable[int], m: MultiplicityVector,
                            gamma_trunc: int, *, levels=None, event: Fraction | None = None) -> BonferroniSandwich:
    """Inclusion-exclusion truncated at |I| <= gamma_trunc (lower) and gamma_trunc + 1 (upper)."""
    D = frozenset(D)
    if D != m.support:
        raise PreconditionError("supp(m) must equal D", module="exact", condition="supp(m) == D")
    if gamma_trunc < 1 or gamma_trunc % 2 == 0 or gamma_trunc > len(gamma):
        raise PreconditionError(f"truncation {gamma_trunc} must be odd and in [1, |Gamma|]",
                                module="exact", condition="odd gamma, 1 <= gamma <= |Gamma|")
    law_levels, geo_levels = levels or inclusion_exclusion_levels(law, gamma, m)
    g = gamma_trunc
    W = law.total
    geo_den = m.p_D_m * gamma.product
    lower = Fraction(sum(law_levels[: g + 1]), W)
    upper = Fraction(sum(law_levels[: g + 2]), W)
    geo_lower = Fraction(sum(geo_levels[: g + 1]), geo_den)
    geo_upper = Fraction(sum(geo_levels[: g + 2]), geo_den)
    if event is None:
        event = event_prob_A(law, gamma, D, m)
    return BonferroniSandwich(g, lower, upper, geo_lower, geo_upper, event, geometric_mass(gamma, m))


def exact_tv_float(law: LawSpec, gamma: GammaSet, *, joint: JointLaw | None = None) -> float:
    """Floating counterpart of :func:`exact_tv` using compensated summation."""
    if joint is None:
        joint = joint_v_law(law, gamma)
    phi_over_P = math.prod(1 - 1 / p for p in gamma.primes)
    terms = []
    seen = []
    for d, w in joint.weights.items():
        g = phi_over_P / d
        terms.append(abs(w / joint.total - g))
        seen.append(g)
    return 0.5 * (math.fsum(terms) + 1.0 - math.fsum(seen))


def lower_bound_witness(n: int, p: int) -> tuple[int, Fraction]:
    """Smallest L with p**L > n and the geometric mass P[g_p >= L] = p**-L,
    which no valuation of an integer in [n] can reach."""
    L = 0
    while p**L <= n:
        L += 1
    return L, Fraction(1, p**L)
