from collections import Counter
from typing import Optional

import numpy as np

PROJ = "proj"
ATTN = "attn"


class FlopCounter:
    """
    Multiply-add counter, bucketed by tag.

    Linear maps are counted under "proj", attention score and mixing
    products under "attn".
    """

    def __init__(self):
        self.counts: Counter = Counter()

    def add(self, tag: str, multiply_adds: int) -> None:
        if multiply_adds < 0:
            raise ValueError("multiply-add counts cannot be negative")
        self.counts[tag] += int(multiply_adds)

    def __getitem__(self, tag: str) -> int:
        return self.counts[tag]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __repr__(self) -> str:
        return f"FlopCounter({dict(self.counts)})"


def matmul(a: np.ndarray, b: np.ndarray, counter: Optional[FlopCounter] = None, tag: str = PROJ) -> np.ndarray:
    """Counted matrix product over the last two axes."""
    out = a @ b
    if counter is not None:
        batch = int(np.prod(a.shape[:-2])) if a.ndim > 2 else 1
        counter.add(tag, batch * a.shape[-2] * a.shape[-1] * b.shape[-1])
    return out
