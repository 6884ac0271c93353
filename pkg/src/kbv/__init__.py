"""Exact-arithmetic laboratory for prime multiplicities of random integers.

Compares the joint law of the p-adic valuations of a random integer on a
finite prime set against independent geometric variables, evaluates the
closed-form bounds on their total variation distance, and runs the
Erdős–Kac and Poisson-approximation experiments built on top of them.
"""

__version__ = "0.1.0"

from kbv.errors import (
    KbvError,
    NormalizationError,
    ParameterError,
    PreconditionError,
    ResourceLimitError,
)
from kbv.primes import GammaSet, gamma_window, mertens_gap, sieve_primes, valuation
from kbv.laws import HtCertificate, LawSpec, certify_ht, divisor_probability, make_law, tv_to_uniform
from kbv.exact import (
    JointLaw,
    MultiplicityVector,
    bonferroni_partial_sums,
    event_prob_A,
    event_prob_A_tilde,
    exact_tv,
    geometric_mass,
    joint_v_law,
    partitioned_tv,
)

__all__ = [
    "__version__",
    "KbvError",
    "NormalizationError",
    "ParameterError",
    "PreconditionError",
    "ResourceLimitError",
    "GammaSet",
    "gamma_window",
    "mertens_gap",
    "sieve_primes",
    "valuation",
    "HtCertificate",
    "LawSpec",
    "certify_ht",
    "divisor_probability",
    "make_law",
    "tv_to_uniform",
    "JointLaw",
    "MultiplicityVector",
    "bonferroni_partial_sums",
    "event_prob_A",
    "event_prob_A_tilde",
    "exact_tv",
    "geometric_mass",
    "joint_v_law",
    "partitioned_tv",
]
