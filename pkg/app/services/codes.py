"""
Deterministic binary latent codes computed from sample and batch indices
"""
from functools import lru_cache
from typing import List

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from app.models.codes import MAX_BITS, CodeLayout, SubvectorSpec, is_odd_prime
from app.utils.exceptions import (
    BatchOutOfCapacityError,
    IndexOutOfCapacityError,
    InvalidRangeError,
    InvalidSpecError,
)


def make_spec(m: int, p: int) -> SubvectorSpec:
    """Build a SubvectorSpec, reporting bad values as InvalidSpecError"""
    try:
        return SubvectorSpec(m=m, p=p)
    except PydanticValidationError as e:
        raise InvalidSpecError(
            message=f"Invalid subvector spec m={m} p={p}",
            detail=str(e.errors()[0]["msg"]),
        )


def make_layout(index_bits: int, primes: List[int], prefix_bits: int, prefix_prime: int) -> CodeLayout:
    """Build a uniform CodeLayout, reporting bad values as InvalidSpecError"""
    try:
        return CodeLayout.uniform(index_bits, list(primes), prefix_bits, prefix_prime)
    except PydanticValidationError as e:
        raise InvalidSpecError(
            message="Invalid code layout",
            detail="; ".join(err["msg"] for err in e.errors()),
        )


@lru_cache(maxsize=None)
def exponent(m: int, p: int) -> int:
    """
    Largest e with p**e < 2**m, i.e. floor(m ln 2 / ln p) for odd prime p

    Args:
        m: Bit width, 1..63
        p: Odd prime

    Returns:
        The exponent e; p**e lies strictly between 2**m / p and 2**m

    Raises:
        InvalidSpecError: If m or p is out of range
    """
    if not (1 <= m <= MAX_BITS) or not is_odd_prime(p):
        raise InvalidSpecError(message=f"Invalid subvector spec m={m} p={p}")
    bound = 1 << m
    e, power = 0, 1
    while power * p < bound:
        power *= p
        e += 1
    return e


@lru_cache(maxsize=None)
def multiplier(m: int, p: int) -> int:
    return pow(p, exponent(m, p))


def subvector_code(i: int, spec: SubvectorSpec) -> int:
    """
    The m least significant bits of i * p**e

    Raises:
        IndexOutOfCapacityError: If i is outside 1..2**m
    """
    if not 1 <= i <= spec.capacity:
        raise IndexOutOfCapacityError(message=f"Index {i} outside 1..{spec.capacity} for m={spec.m}")
    return (i * multiplier(spec.m, spec.p)) % spec.capacity


def word_bits(word: int, m: int) -> np.ndarray:
    """Bits of an m-bit word, most significant first, as 0/1 int8"""
    return np.array([(word >> (m - 1 - k)) & 1 for k in range(m)], dtype=np.int8)


def index_code(i: int, layout: CodeLayout) -> np.ndarray:
    """
    Concatenated index subvectors for sample i as 0/1 bits

    Raises:
        IndexOutOfCapacityError: If i is outside 1..layout.capacity
    """
    if not 1 <= i <= layout.capacity:
        raise IndexOutOfCapacityError(message=f"Index {i} outside 1..{layout.capacity}")
    if not layout.index_subvectors:
        return np.zeros(0, dtype=np.int8)
    return np.concatenate([word_bits(subvector_code(i, s), s.m) for s in layout.index_subvectors])


def full_code(batch: int, i: int, layout: CodeLayout) -> np.ndarray:
    """
    Batch prefix followed by the index code, mapped from {0,1} to {-1,+1}

    Returns:
        float64 vector of length layout.length

    Raises:
        BatchOutOfCapacityError: If batch is outside 1..2**prefix_m
        IndexOutOfCapacityError: If i is outside 1..layout.capacity
    """
    prefix = layout.prefix_subvector
    if not 1 <= batch <= prefix.capacity:
        raise BatchOutOfCapacityError(message=f"Batch {batch} outside 1..{prefix.capacity}")
    bits = np.concatenate([word_bits(subvector_code(batch, prefix), prefix.m), index_code(i, layout)])
    return 2.0 * bits.astype(np.float64) - 1.0


def codebook(batch: int, first: int, last: int, layout: CodeLayout) -> np.ndarray:
    """
    Codes for indices first..last inclusive, one row per index

    Raises:
        InvalidRangeError: If first > last or first < 1
    """
    if first < 1 or first > last:
        raise InvalidRangeError(message=f"Invalid index range {first}..{last}")
    if last > layout.capacity:
        raise IndexOutOfCapacityError(message=f"Index {last} outside 1..{layout.capacity}")
    return np.stack([full_code(batch, i, layout) for i in range(first, last + 1)])


def format_code(code: np.ndarray) -> str:
    return "".join("+" if v > 0 else "-" for v in code)


def hamming(a: int, b: int) -> int:
    return bin(a ^ b).count("1")
