"""
Tracking-by-detection baselines and the velocity-propagation variant.
"""
from .association import associate, greedy, hungarian
from .kalman import KalmanTrack, kalman_predict, kalman_update
from .tbd import run_tbd
from .velocity import run_velocity_variant

__all__ = [
    'KalmanTrack', 'associate', 'greedy', 'hungarian', 'kalman_predict', 'kalman_update',
    'run_tbd', 'run_velocity_variant',
]
