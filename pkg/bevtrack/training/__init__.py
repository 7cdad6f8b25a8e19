"""
Toy optimization of the motion head and the refinement head.
"""
from .baseline import velocity_forecast_baseline
from .dataset import Dataset, RefineSample, TrainSample, build_dataset
from .trainer import TrainResult, motion_loss, train_motion_head, train_refine_head

__all__ = [
    'Dataset', 'RefineSample', 'TrainResult', 'TrainSample', 'build_dataset', 'motion_loss',
    'train_motion_head', 'train_refine_head', 'velocity_forecast_baseline',
]
