"""
Query-propagation tracker: decoder stub and frame loop.
"""
from .decoder_stub import StubOutput, decode_stub
from .engine import SequenceResult, StepResult, run_sequence, step

__all__ = ['SequenceResult', 'StepResult', 'StubOutput', 'decode_stub', 'run_sequence', 'step']
