"""
Schemas shared by every tracker component.
"""
from .config import BaselineConfig, LossConfig, TrackerConfig, TrainConfig
from .geometry import Box3D, Query, TrajectoryForecast
from .records import DetectionRecord, ForecastRecord, FrameDetections, HandoffRecord, TrackRecord
from .report import ClassMetrics, MetricsReport, RunManifest, ThresholdRow
from .scenario import AgentSpec, CameraSector, OcclusionWindow, ScenarioConfig, SensorSpec
from .tracking import QueryQueue, Terminated, TrackerState, TrackState
from .weights import WeightEntry, WeightsFile

__all__ = [
    'AgentSpec', 'BaselineConfig', 'Box3D', 'CameraSector', 'ClassMetrics', 'DetectionRecord',
    'ForecastRecord', 'FrameDetections', 'HandoffRecord', 'LossConfig', 'MetricsReport',
    'OcclusionWindow', 'Query', 'QueryQueue', 'RunManifest', 'ScenarioConfig', 'SensorSpec',
    'Terminated', 'ThresholdRow', 'TrackRecord', 'TrackState', 'TrackerConfig', 'TrackerState',
    'TrainConfig', 'TrajectoryForecast', 'WeightEntry', 'WeightsFile',
]
