from typing import List, Optional

from pydantic import BaseModel, Field


class ScenarioBatch(BaseModel):
    classes: List[int]
    per_class_cap: Optional[int] = None
    size: int = Field(..., ge=1)
    first_index: int = Field(..., ge=1)


class Scenario(BaseModel):
    seed: int
    image_shape: List[int] = Field(default_factory=list)
    batches: List[ScenarioBatch] = Field(default_factory=list)

    @property
    def classes(self) -> List[int]:
        return sorted(c for b in self.batches for c in b.classes)
