"""
Class-incremental scenario construction
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.models.scenario import Scenario, ScenarioBatch
from app.services.datasets import Dataset
from app.utils.exceptions import InvalidScenarioError


def build_scenario(
    dataset: Dataset,
    class_groups: Sequence[Sequence[int]],
    per_class_cap: Optional[int],
    seed: int,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Scenario, List[Dataset]]:
    """
    Split a dataset into class-disjoint batches, one class group per batch

    Each class is subsampled to `per_class_cap` without replacement and the
    batch is shuffled; global indices run chronologically batch by batch.

    Args:
        dataset: Training set
        class_groups: Classes of each batch, in presentation order
        per_class_cap: Samples kept per class, or None for all of them
        seed: Seed recorded in the scenario (and used when rng is None)
        rng: Generator for the subsampling

    Returns:
        Tuple of (scenario description, materialized batches)

    Raises:
        InvalidScenarioError: If groups overlap or a class has too few samples
    """
    flat = [c for group in class_groups for c in group]
    if not class_groups or any(len(g) == 0 for g in class_groups) or len(set(flat)) != len(flat):
        raise InvalidScenarioError(message=f"Class groups must be non-empty and pairwise disjoint: {class_groups}")
    rng = rng or np.random.default_rng(seed)

    scenario = Scenario(seed=seed)
    batches: List[Dataset] = []
    next_index = 1
    for group in class_groups:
        picks = []
        for c in group:
            available = np.flatnonzero(dataset.labels == c)
            if per_class_cap is None:
                picks.append(available)
                continue
            if len(available) < per_class_cap:
                raise InvalidScenarioError(
                    message=f"Class {c} has {len(available)} samples, fewer than the cap {per_class_cap}"
                )
            picks.append(np.sort(rng.choice(available, size=per_class_cap, replace=False)))
        chosen = np.concatenate(picks)
        if len(chosen) == 0:
            raise InvalidScenarioError(message=f"No samples for classes {list(group)}")
        chosen = chosen[rng.permutation(len(chosen))]
        batches.append(dataset.subset(chosen))
        scenario.batches.append(
            ScenarioBatch(classes=sorted(group), per_class_cap=per_class_cap, size=len(chosen), first_index=next_index)
        )
        next_index += len(chosen)
    return scenario, batches


def group_name(classes: Sequence[int]) -> str:
    """Column suffix for a class group, e.g. [0, 1] -> 'c01'"""
    return "c" + "".join(str(c) for c in classes)
