from typing import Dict, List

from pydantic import BaseModel, Field

from app.models.metrics import ComponentSizes


class CodeEntry(BaseModel):
    index: int
    code: str


class CodesResponse(BaseModel):
    batch: int
    length: int
    codes: List[CodeEntry] = Field(default_factory=list)


class MetricsResponse(BaseModel):
    run: str
    rows: List[Dict[str, str]] = Field(default_factory=list)


class MemoryResponse(BaseModel):
    run: str
    batches: List[ComponentSizes] = Field(default_factory=list)
    decoder_constant: bool
    generative_bytes: int
