"""
Deterministic bird's-eye-view world: ground truth, noisy detections, hand-offs.
"""
from .suites import SUITES, scenario_suite
from .world import SimulationResult, agent_states, simulate

__all__ = ['SUITES', 'SimulationResult', 'agent_states', 'scenario_suite', 'simulate']
