"""
Greedy one-to-one assignment of encoder latents to a batch codebook
"""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from app.utils.exceptions import EmptyPoolError, ShapeMismatchError, SizeMismatchError

DEFAULT_STABLE_WINDOW = 3


@dataclass(frozen=True)
class Assignment:
    """codes[pos] is the codebook row given to the sample at batch position pos."""

    codes: np.ndarray
    distances_sq: np.ndarray

    @property
    def total_loss(self) -> float:
        return float(self.distances_sq.sum())

    def same_map(self, other: "Assignment") -> bool:
        return np.array_equal(self.codes, other.codes)


def shuffle_order(count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform permutation of 0..count-1 from the run's generator"""
    return rng.permutation(count)


def nearest_tiebreak(z: np.ndarray, codebook: np.ndarray, available: Optional[np.ndarray] = None) -> int:
    """
    Index of the closest available code; ties go to the lowest index

    Raises:
        EmptyPoolError: If no code is available
    """
    distances = np.sum((codebook - z) ** 2, axis=1)
    if available is not None:
        distances = np.where(available, distances, np.inf)
    if distances.size == 0 or not np.isfinite(distances).any():
        raise EmptyPoolError(message="No available code left in the pool")
    return int(np.argmin(distances))


def greedy_assign(latents: np.ndarray, codebook: np.ndarray, order: Sequence[int]) -> Assignment:
    """
    Visit samples in order; each takes its nearest code not yet taken

    Args:
        latents: Encoder outputs, one row per sample
        codebook: Batch codes, one row per code, same count as latents
        order: Permutation of sample positions

    Returns:
        Assignment with the code row and squared distance per sample position

    Raises:
        SizeMismatchError: If latents and codebook differ in count
        ShapeMismatchError: If latent and code widths differ
    """
    latents = np.atleast_2d(np.asarray(latents, dtype=np.float64))
    codebook = np.atleast_2d(np.asarray(codebook, dtype=np.float64))
    if latents.shape[0] != codebook.shape[0]:
        raise SizeMismatchError(message=f"{latents.shape[0]} latents for {codebook.shape[0]} codes")
    if latents.shape[1] != codebook.shape[1]:
        raise ShapeMismatchError(message=f"Latent width {latents.shape[1]} != code width {codebook.shape[1]}")
    order = np.asarray(order)
    if sorted(order.tolist()) != list(range(latents.shape[0])):
        raise SizeMismatchError(message="Visiting order is not a permutation of the samples")

    available = np.ones(codebook.shape[0], dtype=bool)
    codes = np.full(latents.shape[0], -1, dtype=np.int64)
    distances = np.zeros(latents.shape[0])
    for pos in order:
        k = nearest_tiebreak(latents[pos], codebook, available)
        available[k] = False
        codes[pos] = k
        distances[pos] = float(np.sum((latents[pos] - codebook[k]) ** 2))
    return Assignment(codes=codes, distances_sq=distances)


def is_stable(history: Sequence[Assignment], window: int = DEFAULT_STABLE_WINDOW) -> bool:
    """True iff the last `window` assignments are identical maps"""
    if window < 1 or len(history) < window:
        return False
    recent = history[-window:]
    return all(recent[0].same_map(a) for a in recent[1:])


def write_assignment(path: Path, assignment: Assignment, first_index: int) -> None:
    """Persist as CSV rows global_index,code_index,distance_sq"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["global_index", "code_index", "distance_sq"])
        for pos, (code, dist) in enumerate(zip(assignment.codes, assignment.distances_sq)):
            writer.writerow([first_index + pos, int(code), repr(float(dist))])


def read_assignment(path: Path) -> Assignment:
    with Path(path).open(newline="") as f:
        rows = list(csv.DictReader(f))
    rows.sort(key=lambda r: int(r["global_index"]))
    return Assignment(
        codes=np.array([int(r["code_index"]) for r in rows], dtype=np.int64),
        distances_sq=np.array([float(r["distance_sq"]) for r in rows]),
    )
