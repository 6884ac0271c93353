"""Closed-form bound evaluators and their preconditions.

All evaluators work in double precision.  When a bound is compared with an
exact rational, use :func:`le_bound`, which first rounds the bound down by a
few ulps so that a pass is never an artifact of rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from kbv.errors import PreconditionError
from kbv.primes import GammaSet

LOG_1_5 = math.log(1.5)


def rounded_down(x: float, ulps: int = 4) -> float:
    for _ in range(ulps):
        x = math.nextafter(x, -math.inf)
    return x


def le_bound(lhs: Fraction, bound: float) -> bool:
    """Exact lhs <= bound after rounding the bound down."""
    if math.isinf(bound):
        return bound > 0
    return lhs <= Fraction(rounded_down(bound))


@dataclass(frozen=True)
class BoundParams:
    """Parameters shared by the main bound and the three regime lemmas.

    ``delta`` defaults to t/4 and must lie in (0, t/3).
    """

    t: float
    kappa: float
    epsilon: float
    n: int
    gamma: GammaSet
    delta: float | None = None

    def __post_init__(self):
        if self.t <= 0:
            raise PreconditionError("t must be positive", module="bounds", condition="t > 0")
        if self.kappa < 1:
            raise PreconditionError("kappa must be >= 1", module="bounds", condition="kappa >= 1")
        if self.epsilon <= 0:
            raise PreconditionError("epsilon must be positive", module="bounds", condition="epsilon > 0")
        if self.delta is None:
            object.__setattr__(self, "delta", self.t / 4)
        if not 0 < self.delta < self.t / 3:
            raise PreconditionError(f"delta={self.delta} outside (0, t/3)", module="bounds",
                                    condition="0 < delta < t/3")

    @property
    def rho(self) -> float | None:
        return self.gamma.rho

    @property
    def cardinality_ok(self) -> bool:
        """|Gamma| <= n ** (tau ** -(1 + eps)), tested as log|Gamma| * tau**(1+eps) <= log n."""
        size = len(self.gamma)
        if size <= 1:
            return True
        return math.log(size) * self.gamma.tau_float ** (1 + self.epsilon) <= math.log(self.n)

    @property
    def alpha(self) -> float:
        return alpha_threshold(self.delta, self._rho())

    @property
    def beta(self) -> float:
        return beta_threshold(self.delta, self.epsilon, self._rho())

    def _rho(self) -> float:
        rho = self.rho
        if rho is None:
            raise PreconditionError("rho undefined for |Gamma| < 2", module="bounds", condition="|Gamma| >= 2")
        return rho


def alpha_threshold(delta: float, rho: float) -> float:
    return delta * rho


def beta_threshold(delta: float, epsilon: float, rho: float) -> float:
    return 2 * delta / ((1 + epsilon) * LOG_1_5) * rho * math.log(rho)


@dataclass(frozen=True)
class Theorem1Bound:
    value: float
    c: float
    branch: str  # "rho_log_rho" or "log_n"
    exponent_arg: float
    cardinality_ok: bool
    warnings: tuple[str, ...] = field(default=())

    @property
    def vacuous(self) -> bool:
        return self.value > 1


def theorem1_bound(params: BoundParams) -> Theorem1Bound:
    """(7 + 4 kappa) exp(-c min(rho log rho, log n)), c = t min(1, eps) / (12 (1 + eps))."""
    rho = params._rho()
    c = params.t * min(1.0, params.epsilon) / (12 * (1 + params.epsilon))
    a = rho * math.log(rho)
    b = math.log(params.n)
    branch = "rho_log_rho" if a <= b else "log_n"
    arg = min(a, b)
    warnings = []
    ok = params.cardinality_ok
    if not ok:
        warnings.append("cardinality condition |Gamma| <= n^(tau^-(1+eps)) fails")
    if params.gamma.small_gamma_warning:
        warnings.append("|Gamma| < e^2")
    value = (7 + 4 * params.kappa) * math.exp(-c * arg)
    return Theorem1Bound(value, c, branch, arg, ok, tuple(warnings))


def _need_rho(rho: float) -> None:
    if rho is None or rho <= 1:
        raise PreconditionError(f"rho={rho} must exceed 1", module="bounds", condition="rho > 1")


def lemma_many_bound(delta: float, epsilon: float, kappa: float, rho: float) -> float:
    """Bound on the sum over prime sets D with |D| >= delta * rho."""
    if delta <= 0:
        raise PreconditionError("delta must be positive", module="bounds", condition="delta > 0")
    _need_rho(rho)
    expo = -(delta * epsilon / (1 + epsilon)) * rho * math.log(rho) + delta * (1 - math.log(delta)) * rho
    return (2 + kappa) * math.exp(expo)


class HighBound(NamedTuple):
    value: float
    alpha: float
    beta: float


def lemma_high_bound(delta: float, epsilon: float, kappa: float, rho: float) -> HighBound:
    """Bound on the sum over |D| <= alpha with total multiplicity |m| >= beta."""
    if delta <= 0:
        raise PreconditionError("delta must be positive", module="bounds", condition="delta > 0")
    _need_rho(rho)
    expo = (-(delta / (1 + epsilon)) * rho * math.log(rho)
            + 5 * LOG_1_5 * delta * rho + math.log(delta * rho))
    return HighBound((2 + kappa) * math.exp(expo), alpha_threshold(delta, rho),
                     beta_threshold(delta, epsilon, rho))


def largest_odd_at_most(x: float) -> int | None:
    """Largest odd integer <= x, or None when x < 1."""
    if x < 1:
        return None
    k = math.floor(x)
    return k if k % 2 else k - 1


class BonfBound(NamedTuple):
    value: float
    c: float
    gamma_n: int | None


def lemma_bonf_bound(params: BoundParams) -> BonfBound:
    """(3 + 2 kappa) exp(-c min(log n, rho log rho)), c = min(t - 3 delta, delta eps / (2 (1 + eps)))."""
    rho = params._rho()
    t, d, eps = params.t, params.delta, params.epsilon
    if d >= t / 3:
        raise PreconditionError("delta must be below t/3", module="bounds", condition="delta < t/3")
    c = min(t - 3 * d, d * eps / (2 * (1 + eps)))
    arg = min(math.log(params.n), rho * math.log(rho)) if rho > 1 else math.log(params.n)
    return BonfBound((3 + 2 * params.kappa) * math.exp(-c * arg), c, largest_odd_at_most(params.alpha))


@dataclass(frozen=True)
class TruncationBound:
    """Right-hand side of the truncated-Bonferroni estimate for the remainder region.

    ``as_displayed`` divides the counting term by n, ``as_derived`` by n**t.
    """

    gamma_trunc: int
    first: float
    case: str  # "sqrt_le_alpha" or "else"
    count_displayed: float
    count_derived: float

    @property
    def as_displayed(self) -> float:
        return self.first + self.count_displayed

    @property
    def as_derived(self) -> float:
        return self.first + self.count_derived


def truncation_remainder_bound(gamma_trunc: int, params: BoundParams) -> TruncationBound:
    if gamma_trunc < 1 or gamma_trunc % 2 == 0:
        raise PreconditionError("truncation level must be a positive odd integer", module="bounds",
                                condition="gamma odd, >= 1")
    g = gamma_trunc
    tau = params.gamma.tau_float
    alpha = params.alpha
    beta = params.beta
    size = len(params.gamma)
    first = 3 / math.sqrt(g) * (math.e * tau / g) ** g * alpha * (2 * math.e) ** (2 * tau)
    if math.sqrt(beta * size) <= alpha:
        case = "sqrt_le_alpha"
        tail = alpha * math.exp(2 * alpha)
    else:
        case = "else"
        tail = alpha * (math.e**2 * beta * size / alpha**2) ** alpha
    lead = 2 * (1 + params.kappa) * float(size) ** (g + 1)
    return TruncationBound(g, first, case, lead / params.n * tail, lead / params.n**params.t * tail)


def rough_bound(n: float, gamma_size: int, C: float) -> float:
    """C * 4**|Gamma| * log(n) / n."""
    if C <= 0:
        raise PreconditionError("C must be positive", module="bounds", condition="C > 0")
    return C * 4.0**gamma_size * math.log(n) / n


def chernoff_poisson_tail(lam: float, x: float) -> float:
    """(e lam / x)**x, an upper bound for sum_{k >= x} lam**k / k!."""
    if not 0 < lam < x:
        raise PreconditionError(f"need 0 < lambda < x, got lambda={lam}, x={x}", module="bounds",
                                condition="0 < lambda < x")
    return (math.e * lam / x) ** x


def poisson_tail_interval(lam, x: float, rel: Fraction = Fraction(1, 10**40)) -> tuple[Fraction, Fraction]:
    """Rigorous enclosure of sum_{k >= ceil(x)} lam**k / k! for rational lam > 0.

    Terms are summed exactly until the geometric remainder estimate
    term * (1 / (1 - lam / (k + 1))) falls below ``rel`` times the partial sum.
    """
    lam = Fraction(lam)
    if lam <= 0:
        raise PreconditionError("lambda must be positive", module="bounds", condition="lambda > 0")
    k = max(0, math.ceil(x))
    term = lam**k / math.factorial(k)
    acc = Fraction(0)
    while True:
        acc += term
        k += 1
        term = term * lam / k
        if k + 1 > lam:
            ratio = lam / (k + 1)
            rest = term / (1 - ratio)
            if rest <= rel * acc:
                return acc, acc + rest


def exact_poisson_tail(lam, x: float) -> float:
    lo, hi = poisson_tail_interval(lam, x)
    return float((lo + hi) / 2)
