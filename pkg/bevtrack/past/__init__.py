"""
Past reasoning: cross-frame and cross-object query refinement, then box refinement.
"""
from .reasoning import (
    FlopComparison,
    RefinementOutput,
    cross_frame_refine,
    cross_object_refine,
    flop_compare,
    refine_track,
)

__all__ = [
    'FlopComparison', 'RefinementOutput', 'cross_frame_refine', 'cross_object_refine',
    'flop_compare', 'refine_track',
]
