"""Resource limits shared by the exact-mode routines.

The CLI overrides these per run (``--max-gamma``, ``--max-n``); library
callers may pass explicit values to the functions that consult them.
"""

from dataclasses import dataclass


@dataclass
class Limits:
    max_gamma: int = 16
    max_n: int = 10_000_000
    max_sieve: int = 200_000_000
    block_size: int = 1 << 22


LIMITS = Limits()
