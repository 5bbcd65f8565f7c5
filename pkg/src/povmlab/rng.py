"""Counter-based random streams for reproducible Monte-Carlo sampling.

All randomness in the package flows through Philox (a counter-based
generator), keyed by a single 64-bit seed. Independent streams are derived
by jumping the counter, so stream ``k`` is a pure function of
``(seed, k)`` — results do not depend on evaluation order, which keeps
parallel shot evaluation deterministic.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

from .errors import ValidationError

_U64_MAX = 2**64 - 1


def _check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)):
        raise ValidationError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) <= _U64_MAX:
        raise ValidationError(f"seed must fit in 64 bits, got {seed}")
    return int(seed)


def stream(seed: int, index: int = 0) -> Generator:
    """Generator for the ``index``-th independent stream of ``seed``."""
    if index < 0:
        raise ValidationError(f"stream index must be nonnegative, got {index}")
    return Generator(Philox(key=_check_seed(seed)).jumped(index))


def uniforms(seed: int, n: int, index: int = 0) -> np.ndarray:
    """``n`` doubles in [0, 1) from stream ``index``, one per counter word.

    Uniform ``i`` is a fixed function of ``(seed, index, i)``: the raw
    64-bit Philox keystream word shifted to the 53-bit mantissa range.
    """
    if n < 0:
        raise ValidationError(f"n must be nonnegative, got {n}")
    raw = Philox(key=_check_seed(seed)).jumped(index).random_raw(n)
    return (raw >> np.uint64(11)) * 2.0**-53
