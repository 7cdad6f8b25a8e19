import math
from typing import List

from pydantic import BaseModel, ConfigDict, model_validator
from typing_extensions import Self


class WeightEntry(BaseModel):
    """
    One named parameter array of a weights file.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    shape: List[int]
    data: List[float]

    @model_validator(mode="after")
    def _check_size(self) -> Self:
        expected = math.prod(self.shape) if self.shape else 1
        if len(self.data) != expected:
            raise ValueError(f"{self.name}: {len(self.data)} values for shape {self.shape}")
        if not all(math.isfinite(v) for v in self.data):
            raise ValueError(f"{self.name}: non-finite value")
        return self


class WeightsFile(BaseModel):
    """Response-style envelope around every parameter array."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    weights: List[WeightEntry]
