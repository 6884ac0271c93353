"""Applications: distinct-prime-factor counts against a Gaussian, and Poisson
approximation of the small-prime indicator process."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy.special import ndtr, ndtri

from kbv.config import LIMITS
from kbv.errors import KbvError, PreconditionError, ResourceLimitError
from kbv.exact import exact_tv
from kbv.laws import HtCertificate, LawSpec, certify_ht, make_law
from kbv.primes import GammaSet, primes_array

SQRT_2_OVER_PI = math.sqrt(2 / math.pi)


class CertificationError(KbvError):
    def __init__(self, certificate: HtCertificate):
        super().__init__(
            f"law fails the divisor hypothesis at n={certificate.n} "
            f"(needs kappa={certificate.required_kappa:.4g} > {certificate.kappa})",
            module="apps",
            condition="law satisfies the divisor-probability hypothesis",
        )
        self.certificate = certificate


# ---------------------------------------------------------------------------
# omega


@dataclass(frozen=True)
class OmegaDistribution:
    """Exact law of the number of distinct prime factors (optionally within a window)."""

    n: int
    law: str
    masses: dict
    window: tuple[int, int] | None = None

    @property
    def mean(self) -> Fraction:
        return sum((j * q for j, q in self.masses.items()), Fraction(0))

    @property
    def variance(self) -> Fraction:
        mu = self.mean
        return sum(((j - mu) ** 2 * q for j, q in self.masses.items()), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "law": self.law,
            "window": list(self.window) if self.window else None,
            "masses": {str(j): f"{q.numerator}/{q.denominator}" for j, q in self.masses.items()},
            "mean": float(self.mean),
            "variance": float(self.variance),
        }


def _omega_block(args) -> np.ndarray:
    lo, hi, primes = args
    out = np.zeros(hi - lo + 1, dtype=np.uint8)
    for p in primes:
        p = int(p)
        if p > hi:
            break
        start = -(-lo // p) * p
        out[start - lo :: p] += 1
    return out


def omega_values(n: int, window: tuple[int, int] | None = None, *, jobs: int = 1) -> np.ndarray:
    """omega(k) (or its windowed count) for k = 1..n, sieved block by block."""
    lo_p, hi_p = window if window else (2, n)
    ps = primes_array(min(hi_p, n))
    ps = ps[ps >= lo_p]
    block = LIMITS.block_size
    tasks = [(lo, min(lo + block - 1, n), ps) for lo in range(1, n + 1, block)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_omega_block, tasks))
    else:
        chunks = [_omega_block(t) for t in tasks]
    return np.concatenate(chunks)


def omega_distribution(law: LawSpec, window: tuple[int, int] | None = None, *, jobs: int = 1,
                       max_n: int | None = None) -> OmegaDistribution:
    max_n = LIMITS.max_n if max_n is None else max_n
    if law.n > max_n:
        raise ResourceLimitError(f"n={law.n} exceeds {max_n}", module="apps", condition="n <= max_n")
    omega = omega_values(law.n, window, jobs=jobs)
    if law.is_uniform:
        counts = np.bincount(omega)
        raw = {j: int(c) for j, c in enumerate(counts) if c}
    else:
        w = law.weights
        raw = {}
        for j in np.unique(omega):
            raw[int(j)] = int(w[omega == j].sum())
    masses = {j: Fraction(v, law.total) for j, v in sorted(raw.items()) if v}
    return OmegaDistribution(law.n, law.describe(), masses, tuple(window) if window else None)


# ---------------------------------------------------------------------------
# Wasserstein-1 to a Gaussian


def _psi(z: float) -> float:
    """Antiderivative of the standard normal CDF: z * Phi(z) + phi(z)."""
    return z * float(ndtr(z)) + math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def _abs_gap_integral(c: float, a: float, b: float) -> float:
    """Integral of |c - Phi(z)| over [a, b]."""
    if b <= a:
        return 0.0
    if c <= 0.0:
        return _psi(b) - _psi(a)
    if c >= 1.0:
        return (b - a) - (_psi(b) - _psi(a))
    zs = float(ndtri(c))
    if zs <= a:
        return (_psi(b) - _psi(a)) - c * (b - a)
    if zs >= b:
        return c * (b - a) - (_psi(b) - _psi(a))
    left = c * (zs - a) - (_psi(zs) - _psi(a))
    right = (_psi(b) - _psi(zs)) - c * (b - zs)
    return left + right


def w1_to_standard_normal(points: Sequence[float], probs: Sequence[float]) -> float:
    """W1 between a finitely supported law and N(0, 1), via the CDF-difference integral."""
    order = np.argsort(np.asarray(points, dtype=float), kind="stable")
    z = [float(points[i]) for i in order]
    q = [float(probs[i]) for i in order]
    if not z:
        raise PreconditionError("empty distribution", module="apps", condition="nonempty support")
    total = _psi(z[0])  # (-inf, z0): F = 0
    cum = 0.0
    for i in range(len(z) - 1):
        cum += q[i]
        total += _abs_gap_integral(min(cum, 1.0), z[i], z[i + 1])
    total += _psi(-z[-1])  # (z_last, inf): F = 1
    return total


def wasserstein_to_gaussian(dist: OmegaDistribution | dict, mu: float, sigma: float,
                            standardize: bool = False) -> float:
    """W1 between the law of X and N(mu, sigma**2); with ``standardize`` the
    distance between (X - mu) / sigma and N(0, 1) instead."""
    if sigma <= 0:
        raise PreconditionError("sigma must be positive", module="apps", condition="sigma > 0")
    masses = dist.masses if isinstance(dist, OmegaDistribution) else dist
    pts = [(float(x) - mu) / sigma for x in masses]
    w = w1_to_standard_normal(pts, [float(v) for v in masses.values()])
    return w if standardize else sigma * w


@dataclass(frozen=True)
class ErdosKacRow:
    n: int
    loglog: float
    w1: float
    reference_rate: float | None
    ratio: float | None
    pre_asymptotic: bool
    required_kappa: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


ERDOS_KAC_COLUMNS = ("n", "loglog", "w1", "reference_rate", "ratio", "pre_asymptotic", "required_kappa")


def erdos_kac_experiment(kind: str, n_grid: Sequence[int], *, s=None, t: float = 1.0, kappa: float = 1.0,
                         jobs: int = 1) -> list[ErdosKacRow]:
    """W1 of (omega(J_n) - log log n) / sqrt(log log n) to N(0, 1) along an n grid.

    Each law is certified first; a failing certificate aborts the run.
    """
    rows = []
    for n in n_grid:
        law = make_law(kind, n, s=s)
        cert = certify_ht(law, t, kappa)
        if not cert.holds:
            raise CertificationError(cert)
        dist = omega_distribution(law, jobs=jobs)
        ll = math.log(math.log(n)) if n >= 3 else float("nan")
        pre = not (ll > 1)  # log log log n <= 0 below n = e^e
        if ll > 0:
            w1 = wasserstein_to_gaussian(dist, ll, math.sqrt(ll), standardize=True)
        else:
            w1 = float("inf")
        rate = ratio = None
        if not pre:
            rate = math.log(ll) / math.sqrt(ll)
            ratio = w1 / rate
        rows.append(ErdosKacRow(n, ll, w1, rate, ratio, pre, cert.required_kappa))
    return rows


# ---------------------------------------------------------------------------
# Poisson approximation


@dataclass(frozen=True)
class IndicatorProcessSpec:
    """Atoms at t_p = log(log p / log a_n) with intensity 1/p, for primes in the window."""

    a_n: float
    gamma: GammaSet
    truncated: bool = False

    def __post_init__(self):
        if self.a_n < 2:
            raise PreconditionError("a_n must be >= 2", module="apps", condition="a_n >= 2")
        if any(p < self.a_n for p in self.gamma.primes):
            raise PreconditionError("atoms below a_n", module="apps", condition="p >= a_n")

    @property
    def positions(self) -> tuple[float, ...]:
        la = math.log(self.a_n)
        return tuple(math.log(math.log(p) / la) for p in self.gamma.primes)

    @property
    def intensities(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(1, p) for p in self.gamma.primes)

    def atoms_up_to(self, t: float) -> list[int]:
        return [p for p, x in zip(self.gamma.primes, self.positions) if x <= t + 1e-15]


def indicator_process(a_n: float, *, n: int | None = None, t_max: float = 1.0,
                      max_atoms: int | None = None) -> IndicatorProcessSpec:
    """Primes in [a_n, a_n ** e**t_max] (capped at n), optionally cut to the first ``max_atoms``."""
    hi = a_n ** math.exp(t_max)
    if n is None:
        n = int(math.floor(hi))
    top = int(math.floor(min(hi, n)))
    ps = primes_array(top)
    ps = ps[ps >= math.ceil(a_n)].tolist()
    truncated = False
    if max_atoms is not None and len(ps) > max_atoms:
        ps, truncated = ps[:max_atoms], True
    return IndicatorProcessSpec(a_n, GammaSet(n, tuple(ps)), truncated)


def poisson_binomial_pmf(probs: Sequence[Fraction]) -> list[Fraction]:
    """Exact pmf of a sum of independent Bernoulli(q_i)."""
    pmf = [Fraction(1)]
    for q in probs:
        nxt = [Fraction(0)] * (len(pmf) + 1)
        for k, v in enumerate(pmf):
            nxt[k] += v * (1 - q)
            nxt[k + 1] += v * q
        pmf = nxt
    return pmf


def tv_poisson_binomial_vs_poisson(probs: Sequence[Fraction], digits: int = 60) -> mpmath.mpf:
    """TV between sum of Bernoulli(q_i) and Poisson(sum q_i), to ``digits`` significant digits.

    The Bernoulli sum is supported on 0..K, so the Poisson mass above K enters
    as one exact complement term.
    """
    pmf = poisson_binomial_pmf(probs)
    lam = sum(probs, Fraction(0))
    with mpmath.workdps(digits):
        lam_mp = mpmath.mpf(lam.numerator) / lam.denominator
        base = mpmath.exp(-lam_mp)
        acc = mpmath.mpf(0)
        seen = mpmath.mpf(0)
        term = base
        for k, v in enumerate(pmf):
            if k:
                term = term * lam_mp / k
            acc += abs(mpmath.mpf(v.numerator) / v.denominator - term)
            seen += term
        return (acc + (1 - seen)) / 2


@dataclass(frozen=True)
class PoissonMarginal:
    t: float
    atoms: tuple[int, ...]
    tv: float
    tv_text: str
    lecam: Fraction
    two_over_an: float
    tv_le_lecam: bool
    lecam_le_two_over_an: bool

    @property
    def holds(self) -> bool:
        return self.tv_le_lecam and self.lecam_le_two_over_an

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "atoms": list(self.atoms),
            "tv": self.tv,
            "tv_60_digits": self.tv_text,
            "lecam": f"{self.lecam.numerator}/{self.lecam.denominator}",
            "lecam_decimal": float(self.lecam),
            "two_over_an": self.two_over_an,
            "tv_le_lecam": self.tv_le_lecam,
            "lecam_le_two_over_an": self.lecam_le_two_over_an,
        }


def poisson_marginal_tv(spec: IndicatorProcessSpec, t: float = 1.0, *, max_atoms: int | None = None) -> PoissonMarginal:
    """TV between the Bernoulli count up to time t and the matching Poisson variable,
    with the sum of squared intensities and 2/a_n alongside."""
    max_atoms = LIMITS.max_gamma if max_atoms is None else max_atoms
    atoms = spec.atoms_up_to(t)
    if len(atoms) > max_atoms:
        raise ResourceLimitError(f"{len(atoms)} atoms exceed the exact-mode limit {max_atoms}",
                                 module="apps", condition="window size <= max_gamma")
    probs = [Fraction(1, p) for p in atoms]
    tv = tv_poisson_binomial_vs_poisson(probs)
    lecam = sum((q * q for q in probs), Fraction(0))
    a = Fraction(spec.a_n)
    with mpmath.workdps(60):
        tv_ok = tv <= mpmath.mpf(lecam.numerator) / lecam.denominator
        text = mpmath.nstr(tv, 50)
    return PoissonMarginal(t, tuple(atoms), float(tv), text, lecam, float(2 / a), bool(tv_ok), lecam <= 2 / a)


def bernoulli_poisson_tv(q: float) -> float:
    """TV(Bernoulli(q), Poisson(q)) = q (1 - e^-q)."""
    return q * -math.expm1(-q)


@dataclass(frozen=True)
class ProcessBound:
    a_n: float
    n: int
    gamma: GammaSet
    truncated: bool
    tv_v_g: Fraction
    two_over_an: float
    coordinatewise: float

    @property
    def total(self) -> float:
        return float(self.tv_v_g) + self.two_over_an

    def to_dict(self) -> dict:
        return {
            "a_n": self.a_n,
            "n": self.n,
            "gamma": self.gamma.describe(),
            "gamma_primes": list(self.gamma.primes),
            "window_truncated": self.truncated,
            "tv_v_g": f"{self.tv_v_g.numerator}/{self.tv_v_g.denominator}",
            "tv_v_g_decimal": float(self.tv_v_g),
            "two_over_an": self.two_over_an,
            "coordinatewise_indicator_tv": self.coordinatewise,
            "total_bound": self.total,
        }


def poisson_process_bound(spec: IndicatorProcessSpec, law: LawSpec, *, max_gamma: int | None = None,
                          jobs: int = 1) -> ProcessBound:
    """d_TV(v, g) on the window plus 2/a_n, reported with the per-atom Bernoulli/Poisson sum."""
    max_gamma = LIMITS.max_gamma if max_gamma is None else max_gamma
    primes = [p for p in spec.gamma.primes if p <= law.n]
    truncated = spec.truncated or len(primes) > max_gamma
    primes = primes[:max_gamma]
    gamma = GammaSet(law.n, tuple(primes))
    tv = exact_tv(law, gamma, jobs=jobs, max_gamma=max_gamma)
    coord = math.fsum(bernoulli_poisson_tv(1 / p) for p in primes)
    return ProcessBound(spec.a_n, law.n, gamma, truncated, tv, 2 / spec.a_n, coord)
