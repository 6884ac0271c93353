"""Exact laws of the random integer on [n] and divisor-probability certificates.

A law is stored as nonnegative integer weights ``w_k`` (k = 1..n) with total
``W``; the mass at k is ``w_k / W`` exactly.  The uniform law keeps no array.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

import gmpy2
import numpy as np

from kbv.config import LIMITS
from kbv.errors import NormalizationError, ParameterError, PreconditionError, ResourceLimitError

KINDS = ("uniform", "pareto", "density", "custom")

# Fixed-point scale for Pareto weights k**(-s) with irrational values.
PARETO_SCALE_BITS = 128
_MPFR_PRECISION = 256
_INT64_SAFE = 1 << 62
_CACHE_CAP = 1 << 18


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def _pack(values: Sequence[int]) -> np.ndarray:
    """Integer weights as int64 when sums cannot overflow, else Python ints."""
    n = len(values)
    top = max(values) if n else 0
    if top * max(n, 1) < _INT64_SAFE:
        return np.asarray(values, dtype=np.int64)
    return np.asarray(values, dtype=object)


@dataclass(frozen=True, eq=False)
class LawSpec:
    """Probability law of J_n on [n] with exact rational masses ``w_k / total``.

    ``mass_error`` bounds how far any event probability of this (exact)
    surrogate may sit from the nominal law; it is nonzero only for Pareto
    laws whose masses are irrational.
    """

    n: int
    kind: str
    params: tuple = ()
    weights: np.ndarray | None = None
    total: int = 0
    mass_error: Fraction = Fraction(0)
    note: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.weights is None and self.total == 0:
            object.__setattr__(self, "total", self.n)

    @property
    def is_uniform(self) -> bool:
        return self.weights is None

    def weight(self, k: int) -> int:
        if not 1 <= k <= self.n:
            return 0
        return 1 if self.weights is None else int(self.weights[k - 1])

    def pmf(self, k: int) -> Fraction:
        return Fraction(self.weight(k), self.total)

    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(self.n, dtype=np.int64)
        return self.weights

    def masses(self) -> list[Fraction]:
        return [self.pmf(k) for k in range(1, self.n + 1)]

    def divisor_weight(self, a: int) -> int:
        """Total weight of the multiples of a in [n]."""
        if a > self.n:
            return 0
        if self.weights is None:
            return self.n // a
        hit = self._cache.get(a)
        if hit is None:
            hit = int(self.weights[a - 1 :: a].sum())
            if len(self._cache) < _CACHE_CAP:
                self._cache[a] = hit
        return hit

    def describe(self) -> str:
        if not self.params:
            return f"{self.kind}(n={self.n})"
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.kind}(n={self.n}, {inner})"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kind": self.kind,
            "params": {k: str(v) for k, v in self.params},
            "note": self.note,
        }


def _check_n(n: int, max_n: int | None) -> None:
    if n < 1:
        raise PreconditionError("n must be positive", module="laws", condition="n >= 1")
    max_n = LIMITS.max_n if max_n is None else max_n
    if n > max_n:
        raise ResourceLimitError(
            f"n={n} exceeds the dense-law limit {max_n}", module="laws", condition="n <= max_n"
        )


def _pareto_weights(n: int, s: Fraction) -> tuple[np.ndarray, Fraction]:
    if s == 0:
        return np.ones(n, dtype=np.int64), Fraction(0)
    scale = 1 << PARETO_SCALE_BITS
    with gmpy2.context(precision=_MPFR_PRECISION):
        minus_s = -gmpy2.mpfr(s.numerator) / s.denominator
        vals = [int(gmpy2.floor(gmpy2.mpfr(k) ** minus_s * scale)) for k in range(1, n + 1)]
    total = sum(vals)
    # each scaled weight is within 2 of its true value, so any event moves by at most 4n/(W - 2n)
    err = Fraction(4 * n, total - 2 * n)
    return np.asarray(vals, dtype=object), err


def _integer_weights(values: Sequence) -> tuple[list[int], int]:
    fracs = [_as_fraction(v) for v in values]
    if any(f < 0 for f in fracs):
        raise ParameterError("masses must be nonnegative", module="laws", condition="all masses >= 0")
    den = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
    ints = [f.numerator * (den // f.denominator) for f in fracs]
    return ints, sum(ints)


def make_law(kind: str, n: int, *, s=None, upsilon: Callable[[int], object] | Sequence | None = None,
             masses: Mapping[int, object] | Sequence | None = None, max_n: int | None = None) -> LawSpec:
    """Build an exactly normalized law on [n].

    kind: ``uniform``; ``pareto`` (mass proportional to k**-s, s in [0, 1));
    ``density`` (mass proportional to upsilon(k)); ``custom`` (explicit
    masses keyed by k, renormalized if they do not sum to one).
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown law kind {kind!r}", module="laws", condition=f"kind in {KINDS}")
    _check_n(n, max_n)
    if kind == "uniform":
        return LawSpec(n, "uniform")
    if kind == "pareto":
        if s is None:
            raise ParameterError("pareto needs s", module="laws", condition="s in [0, 1)")
        s = _as_fraction(s)
        if not 0 <= s < 1:
            raise ParameterError(f"s={s} outside [0, 1)", module="laws", condition="s in [0, 1)")
        w, err = _pareto_weights(n, s)
        return LawSpec(n, "pareto", (("s", s),), w, int(w.sum()), err)
    if kind == "density":
        if upsilon is None:
            raise ParameterError("density needs upsilon", module="laws", condition="upsilon given")
        values = [upsilon(k) for k in range(1, n + 1)] if callable(upsilon) else list(upsilon)
        if len(values) != n:
            raise ParameterError("upsilon must give n values", module="laws", condition="len == n")
        ints, total = _integer_weights(values)
        if total == 0:
            raise NormalizationError("upsilon vanishes on [n]", module="laws", condition="sum upsilon(k) > 0")
        label = getattr(upsilon, "label", None) or getattr(upsilon, "__name__", "values")
        return LawSpec(n, "density", (("upsilon", label),), _pack(ints), total)
    # custom
    if masses is None:
        raise ParameterError("custom law needs masses", module="laws", condition="masses given")
    if isinstance(masses, Mapping):
        bad = [k for k in masses if not 1 <= int(k) <= n]
        if bad:
            raise ParameterError(f"support outside [1, {n}]: {bad[:5]}", module="laws",
                                 condition="support in [n]")
        values = [masses.get(k, 0) for k in range(1, n + 1)]
    else:
        values = list(masses)
        if len(values) != n:
            raise ParameterError("mass sequence must have length n", module="laws", condition="len == n")
    ints, total = _integer_weights(values)
    if total == 0:
        raise NormalizationError("all masses are zero", module="laws", condition="total mass > 0")
    raw = sum((_as_fraction(v) for v in values), Fraction(0))
    note = "" if raw == 1 else f"masses renormalized (raw total {raw})"
    return LawSpec(n, "custom", (), _pack(ints), total, note=note)


def point_mass(n: int, k: int) -> LawSpec:
    return make_law("custom", n, masses={k: 1})


def load_custom_csv(path: str | Path, n: int | None = None) -> LawSpec:
    """Read ``k,numerator,denominator`` lines (``#`` comments and a header allowed)."""
    entries: dict[int, Fraction] = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                k, num, den = (int(x) for x in row[:3])
            except ValueError:
                if not entries:
                    continue  # header line
                raise ParameterError(f"bad CSV row {row}", module="laws", condition="k,numerator,denominator")
            entries[k] = entries.get(k, Fraction(0)) + Fraction(num, den)
    if not entries:
        raise NormalizationError("empty custom law", module="laws", condition="at least one mass")
    n = max(entries) if n is None else n
    return make_law("custom", n, masses=entries)


def divisor_probability(law: LawSpec, a: int) -> Fraction:
    """P[a | J_n]."""
    if a < 1:
        raise PreconditionError("a must be positive", module="laws", condition="a >= 1")
    return Fraction(law.divisor_weight(a), law.total)


def _pow_le(x: Fraction, n: int, t: Fraction, bound: Fraction) -> bool:
    """Exact test of x * n**t <= bound for rational t = p/q."""
    p, q = t.numerator, t.denominator
    return (x ** q) * Fraction(n) ** p <= bound ** q


def _scaled_le(x: Fraction, n: int, t: float, bound: Fraction) -> bool:
    tf = Fraction(t)
    if tf.denominator <= 64 and tf.numerator <= 4096:
        return _pow_le(x, n, tf, bound)
    # fallback: float compare with a relative safety margin against passing wrongly
    return float(x) * n**t * (1 + 1e-12) <= float(bound)


@dataclass(frozen=True)
class HtCertificate:
    """Outcome of scanning |P[a|J]-1/a| and a*P[a|J] over all relevant a.

    ``max_dev`` includes the supremum over a > n (attained at a = n + 1).
    ``required_kappa`` is the smallest kappa >= 1 that makes both bounds hold.
    """

    n: int
    t: float
    kappa: float
    max_dev: Fraction
    max_ratio: Fraction
    argmax_dev: int
    required_kappa: float
    holds: bool
    robust: bool
    mass_error: Fraction = Fraction(0)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "kappa": self.kappa,
            "max_dev": f"{self.max_dev.numerator}/{self.max_dev.denominator}",
            "max_dev_decimal": float(self.max_dev),
            "max_ratio": f"{self.max_ratio.numerator}/{self.max_ratio.denominator}",
            "max_ratio_decimal": float(self.max_ratio),
            "argmax_dev": self.argmax_dev,
            "required_kappa": self.required_kappa,
            "holds": self.holds,
            "holds_within_interval_error": self.robust,
            "mass_error": float(self.mass_error),
            "note": self.note,
        }


def _uniform_scan(n: int) -> tuple[Fraction, int, Fraction]:
    a = np.arange(1, n + 1, dtype=np.int64)
    r = n % a
    approx = r / a
    top = approx.max()
    best, best_a = Fraction(0), 1
    for cand in np.flatnonzero(approx >= top * (1 - 1e-9)):
        c = int(cand) + 1
        val = Fraction(int(r[cand]), c * n)
        if val > best:
            best, best_a = val, c
    # a * floor(n/a) <= n with equality at a = 1
    return best, best_a, Fraction(1)


def _generic_scan(law: LawSpec) -> tuple[Fraction, int, Fraction]:
    n, W = law.n, law.total
    w = law.weights
    best_num, best_den, best_a = 0, 1, 1
    ratio_num = 0
    for a in range(1, n + 1):
        s_a = int(w[a - 1 :: a].sum())
        num = abs(a * s_a - W)
        den = a
        if num * best_den > best_num * den:
            best_num, best_den, best_a = num, den, a
        if a * s_a > ratio_num:
            ratio_num = a * s_a
    return Fraction(best_num, best_den * W), best_a, Fraction(ratio_num, W)


def certify_ht(law: LawSpec, t: float, kappa: float | None = None) -> HtCertificate:
    """Check |P[a|J]-1/a| <= kappa/n**t and P[a|J] <= (1+kappa)/a for every a >= 1.

    With ``kappa=None`` the tightest admissible kappa is used.
    """
    if t <= 0:
        raise PreconditionError("t must be positive", module="laws", condition="t > 0")
    n = law.n
    if law.is_uniform:
        max_dev, arg, max_ratio = _uniform_scan(n)
    else:
        max_dev, arg, max_ratio = _generic_scan(law)
    tail = Fraction(1, n + 1)  # P[a|J] = 0 for a > n
    if tail > max_dev:
        max_dev, arg = tail, n + 1
    required = max(1.0, float(max_dev) * n**t, float(max_ratio) - 1.0)
    if kappa is None:
        kappa = required
    if kappa < 1:
        raise ParameterError("kappa must be >= 1", module="laws", condition="kappa >= 1")
    kap = Fraction(kappa)
    holds = _scaled_le(max_dev, n, t, kap) and max_ratio <= 1 + kap
    err = law.mass_error
    robust = holds
    if err:
        robust = _scaled_le(max_dev + err, n, t, kap) and max_ratio + n * err <= 1 + kap
    return HtCertificate(n, t, float(kappa), max_dev, max_ratio, arg, required, holds, robust, err, law.note)


def tv_to_uniform(law: LawSpec) -> Fraction:
    """Total variation distance between the law and the uniform law on [n]."""
    if law.is_uniform:
        return Fraction(0)
    n, W = law.n, law.total
    w = law.weights
    if w.dtype == object or 2 * n * W >= _INT64_SAFE:
        acc = sum(abs(n * int(x) - W) for x in w)
    else:
        acc = int(np.abs(w * n - W).sum())
    return Fraction(acc, 2 * n * W)
