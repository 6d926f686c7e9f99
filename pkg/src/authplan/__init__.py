"""Energy-optimal authentication planning for XOR network coding under pollution attacks."""

__version__ = "0.1.0"

from .analytics import (
    DEFAULT_CONSTANTS,
    EnergyBreakdown,
    EnergyConstants,
    NetworkStrategy,
    NodeStrategy,
    PropagationState,
    butterfly_throughput_closed_form,
    coding_relay_prob,
    energy,
    evaluate,
    forwarding_relay_prob,
    pollution_prob,
    propagate,
    throughput,
)
from .graph import AttackTopology, NetworkGraph, NodeRole, build_network, butterfly, make_attack, topological_order
from .optimizer import (
    Objective,
    OptimizationResult,
    SweepRow,
    enumerate_strategies,
    optimize_energy,
    optimize_energy_best_throughput,
    sweep,
)
from .simulator import SimulationConfig, SimulationResult, simulate, simulate_trial
