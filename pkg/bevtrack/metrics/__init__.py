"""
CLEAR-MOT, AMOTA/AMOTP and forecast displacement metrics.
"""
from .amota import AmotaResult, amota
from .clear_mot import MotTally, clear_mot
from .prediction import PredictionErrors, ade_fde, displacement_errors
from .report import build_report, concat_sequences, thresholds_csv

__all__ = [
    'AmotaResult', 'MotTally', 'PredictionErrors', 'ade_fde', 'amota', 'build_report',
    'clear_mot', 'concat_sequences', 'displacement_errors', 'thresholds_csv',
]
