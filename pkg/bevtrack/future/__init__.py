"""
Future reasoning: motion forecasting, query propagation and track extension.
"""
from .extension import extension_step, propagate, propagate_track, shift_forecast
from .motion import (
    MotionEmbedding,
    MotionInputs,
    constant_velocity_forecast,
    motion_backward,
    motion_forward,
    motion_inputs,
    predict_motion,
)

__all__ = [
    'MotionEmbedding', 'MotionInputs', 'constant_velocity_forecast', 'extension_step',
    'motion_backward', 'motion_forward', 'motion_inputs', 'predict_motion', 'propagate',
    'propagate_track', 'shift_forecast',
]
