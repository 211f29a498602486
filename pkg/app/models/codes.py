from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

MAX_BITS = 63


def is_odd_prime(p: int) -> bool:
    if p < 3 or p % 2 == 0:
        return False
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


class SubvectorSpec(BaseModel):
    """One code segment: ``m`` least significant bits of ``i * p**e``."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=1, le=MAX_BITS)
    p: int

    @field_validator("p")
    @classmethod
    def _odd_prime(cls, p: int) -> int:
        if not is_odd_prime(p):
            raise ValueError(f"p={p} must be an odd prime")
        return p

    @property
    def capacity(self) -> int:
        return 1 << self.m


class CodeLayout(BaseModel):
    """Batch prefix followed by the index subvectors, most significant bit first."""

    model_config = ConfigDict(frozen=True)

    index_subvectors: List[SubvectorSpec] = Field(default_factory=list)
    prefix_subvector: SubvectorSpec

    @model_validator(mode="after")
    def _distinct_primes(self) -> "CodeLayout":
        primes = [s.p for s in self.index_subvectors]
        if len(set(primes)) != len(primes):
            raise ValueError(f"index subvector primes must be pairwise distinct, got {primes}")
        return self

    @property
    def index_bits(self) -> int:
        return sum(s.m for s in self.index_subvectors)

    @property
    def length(self) -> int:
        """Total code length n."""
        return self.prefix_subvector.m + self.index_bits

    @property
    def capacity(self) -> int:
        if not self.index_subvectors:
            return 1 << MAX_BITS
        return 1 << min(s.m for s in self.index_subvectors)

    @property
    def batch_capacity(self) -> int:
        return self.prefix_subvector.capacity

    @classmethod
    def uniform(cls, index_bits: int, primes: List[int], prefix_bits: int, prefix_prime: int) -> "CodeLayout":
        return cls(
            index_subvectors=[SubvectorSpec(m=index_bits, p=p) for p in primes],
            prefix_subvector=SubvectorSpec(m=prefix_bits, p=prefix_prime),
        )


DEFAULT_LAYOUT = CodeLayout.uniform(index_bits=16, primes=[3, 5, 7, 11], prefix_bits=8, prefix_prime=3)
