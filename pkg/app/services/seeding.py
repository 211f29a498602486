"""
Per-component random streams derived from one master seed

Each stream is seeded with master XOR a fixed tag, so adding a component
never shifts the draws of another.
"""
from enum import IntEnum

import numpy as np

MASK64 = (1 << 64) - 1


class Stream(IntEnum):
    SCENARIO = 0x5C3A_0001
    AE_INIT = 0x5C3A_0002
    AE_TRAIN = 0x5C3A_0003
    CLF_INIT = 0x5C3A_0004
    CLF_TRAIN = 0x5C3A_0005
    REPLAY = 0x5C3A_0006
    BASELINE = 0x5C3A_0007


def stream_seed(master: int, stream: Stream) -> int:
    return (int(master) ^ int(stream)) & MASK64


def rng_for(master: int, stream: Stream) -> np.random.Generator:
    return np.random.default_rng(stream_seed(master, stream))
