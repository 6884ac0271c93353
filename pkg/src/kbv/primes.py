"""Prime generation, p-adic valuations and prime-window sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from kbv.config import LIMITS
from kbv.errors import PreconditionError, ResourceLimitError

E_SQUARED = math.e**2


def _small_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    mark = np.ones(limit + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mark[p]:
            mark[p * p :: p] = False
    return np.flatnonzero(mark).astype(np.int64)


@lru_cache(maxsize=8)
def _primes_array(limit: int, segment: int) -> np.ndarray:
    root = math.isqrt(limit)
    base = _small_sieve(root)
    if limit <= max(segment, root):
        out = _small_sieve(limit)
        out.setflags(write=False)
        return out
    chunks = [base]
    lo = root + 1
    while lo <= limit:
        hi = min(lo + segment, limit + 1)  # exclusive
        mark = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            mark[start - lo :: p] = False
        chunks.append(np.flatnonzero(mark).astype(np.int64) + lo)
        lo = hi
    out = np.concatenate(chunks)
    out.setflags(write=False)
    return out


def primes_array(limit: int, max_limit: int | None = None) -> np.ndarray:
    """Read-only int64 array of the primes <= ``limit`` (segmented sieve)."""
    max_limit = LIMITS.max_sieve if max_limit is None else max_limit
    if limit > max_limit:
        raise ResourceLimitError(
            f"sieve limit {limit} exceeds the configured budget {max_limit}",
            module="primes",
            condition="limit <= max_sieve",
        )
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    return _primes_array(int(limit), LIMITS.block_size)


def sieve_primes(limit: int, max_limit: int | None = None) -> list[int]:
    """All primes <= limit in ascending order; ``[]`` for limit < 2."""
    if limit < 0:
        raise PreconditionError("limit must be nonnegative", module="primes", condition="limit >= 0")
    return primes_array(limit, max_limit).tolist()


def is_prime(k: int) -> bool:
    if k < 2:
        return False
    if k < 4:
        return True
    if k % 2 == 0:
        return False
    for d in range(3, math.isqrt(k) + 1, 2):
        if k % d == 0:
            return False
    return True


def valuation(k: int, p: int) -> int:
    """Largest e with p**e dividing k."""
    if k < 1:
        raise PreconditionError("valuation needs k >= 1", module="primes", condition="k >= 1")
    e = 0
    while k % p == 0:
        k //= p
        e += 1
    return e


@dataclass(frozen=True)
class GammaSet:
    """A finite set of primes used as the coordinates of the valuation vector.

    The window constructors only produce primes <= n; an explicit list may
    contain larger primes, whose valuations on [n] are identically zero.

    ``tau`` is the exact sum of reciprocals; ``rho = log n / log |Gamma|``
    is ``None`` when fewer than two primes are present.
    """

    n: int
    primes: tuple[int, ...]

    def __post_init__(self):
        ps = tuple(int(p) for p in self.primes)
        object.__setattr__(self, "primes", ps)
        if self.n < 1:
            raise PreconditionError("n must be positive", module="primes", condition="n >= 1")
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise PreconditionError(
                "primes must be strictly increasing", module="primes", condition="sorted, no duplicates"
            )

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def __contains__(self, p) -> bool:
        return p in self._prime_set

    @cached_property
    def _prime_set(self) -> frozenset:
        return frozenset(self.primes)

    @cached_property
    def tau(self) -> Fraction:
        # product-tree style sum keeps the intermediate denominators balanced
        terms = [Fraction(1, p) for p in self.primes]
        while len(terms) > 1:
            terms = [sum(terms[i : i + 2], Fraction(0)) for i in range(0, len(terms), 2)]
        return terms[0] if terms else Fraction(0)

    @cached_property
    def tau_float(self) -> float:
        return math.fsum(1.0 / p for p in self.primes)

    @property
    def rho(self) -> float | None:
        if len(self.primes) < 2:
            return None
        return math.log(self.n) / math.log(len(self.primes))

    @property
    def product(self) -> int:
        return math.prod(self.primes)

    @property
    def small_gamma_warning(self) -> bool:
        """True when |Gamma| < e**2, below the size some lemma arguments assume."""
        return len(self.primes) < E_SQUARED

    def describe(self) -> str:
        if not self.primes:
            return "{}"
        if len(self.primes) <= 8:
            return "{" + ",".join(map(str, self.primes)) + "}"
        return f"{{{self.primes[0]},...,{self.primes[-1]}}} ({len(self.primes)} primes)"

    def to_dict(self) -> dict:
        tau = self.tau
        return {
            "n": self.n,
            "primes": list(self.primes),
            "tau": f"{tau.numerator}/{tau.denominator}",
            "rho": self.rho,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GammaSet":
        return cls(int(data["n"]), tuple(data["primes"]))


def gamma_from_primes(n: int, primes: Iterable[int]) -> GammaSet:
    ps = sorted(set(int(p) for p in primes))
    bad = [p for p in ps if not is_prime(p)]
    if bad:
        raise PreconditionError(f"not prime: {bad}", module="primes", condition="every element is prime")
    return GammaSet(n, tuple(ps))


def gamma_window(n: int, lo: float, hi: float) -> GammaSet:
    """Primes p with lo <= p <= hi (and p <= n)."""
    if not (2 <= lo <= hi <= n):
        raise PreconditionError(
            f"window [{lo}, {hi}] invalid for n={n}", module="primes", condition="2 <= lo <= hi <= n"
        )
    ps = primes_array(int(math.floor(hi)))
    ps = ps[ps >= math.ceil(lo)]
    return GammaSet(n, tuple(ps.tolist()))


def gamma_first_k(n: int, k: int) -> GammaSet:
    """The first k primes; they must all be <= n."""
    limit = 16
    while True:
        ps = primes_array(limit)
        if len(ps) >= k:
            return GammaSet(n, tuple(ps[:k].tolist()))
        limit *= 2


def gamma_beta(n: int, beta: float) -> GammaSet:
    """Primes up to n**(1/beta)."""
    if beta <= 0:
        raise PreconditionError("beta must be positive", module="primes", condition="beta > 0")
    hi = n ** (1.0 / beta)
    # guard against pow rounding just below an integer
    top = int(math.floor(hi + 1e-12))
    ps = primes_array(min(top, n))
    return GammaSet(n, tuple(ps.tolist()))


def mertens_gap(n: int) -> float:
    """sum_{p <= n} 1/p - log log n."""
    if n < 3:
        raise PreconditionError("n must be >= 3", module="primes", condition="log log n > 0 needs n >= 3")
    ps = primes_array(n)
    return math.fsum((1.0 / ps.astype(np.float64)).tolist()) - math.log(math.log(n))


def gamma_part(k: int, primes: Sequence[int]) -> int:
    """Largest divisor of k composed only of the given primes."""
    d = 1
    for p in primes:
        while k % p == 0:
            k //= p
            d *= p
    return d
