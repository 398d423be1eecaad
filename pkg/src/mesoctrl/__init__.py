"""Localized state-feedback synthesis and distributed circuit analysis.

Build a plant on a graph, synthesize dense (LQR) or locality-constrained
(disturbance-feedback / state-feedback) finite-horizon controllers, simulate
them centrally or as node-level circuits exchanging delayed messages, and
count the resulting forward and internal-feedback pathways.
"""

from .constraints import (LocalityRule, MaskCheck, SupportSpec, apply_mask,
                          check_mask, locality_support, rule_from_config,
                          support_of)
from .estimators import FirController, LqrController
from .lqr import ConvergenceError, LqrSolution, closed_loop_fir, lqr_cost, solve_dare
from .meso import (MemoryReport, MemoryUnderrunError, MesoReport, Message,
                   MessageLog, NodeCircuit, build_mesocircuit, census,
                   memory_report, simulate_distributed)
from .plant import (LinearSystem, RingSpec, SystemReport, Topology, build_ring,
                    distance_matrix, hop_distance, system_from_config,
                    validate_system)
from .simulate import (LocalizationReport, MemoryState, RealizationError,
                       SimulationError, Trajectory, localization_radius,
                       simulate_mdesign, simulate_sls, simulate_static)
from .spectral import (CAUSAL, STRICTLY_CAUSAL, CostSpec, FIRPair, convolve,
                       h2_cost_sq, impulse_columns)
from .synthesis import (MDESIGN, SLS, ColumnStatus, DegenerateProblemError,
                        StaticGainReport, SynthesisProblem, SynthesisResult,
                        feasibility_residual, normalized_cost, synthesize,
                        to_static_gain_check)

__version__ = "0.1.0"

__all__ = [
    "CAUSAL", "STRICTLY_CAUSAL", "MDESIGN", "SLS",
    "Topology", "LinearSystem", "RingSpec", "SystemReport",
    "build_ring", "hop_distance", "distance_matrix", "validate_system",
    "system_from_config",
    "FIRPair", "CostSpec", "h2_cost_sq", "convolve", "impulse_columns",
    "SupportSpec", "LocalityRule", "locality_support", "apply_mask",
    "check_mask", "support_of", "rule_from_config", "MaskCheck",
    "LqrSolution", "solve_dare", "closed_loop_fir", "lqr_cost",
    "ConvergenceError",
    "SynthesisProblem", "SynthesisResult", "ColumnStatus", "synthesize",
    "feasibility_residual", "normalized_cost", "to_static_gain_check",
    "StaticGainReport", "DegenerateProblemError",
    "Trajectory", "MemoryState", "simulate_static", "simulate_sls",
    "simulate_mdesign", "localization_radius", "LocalizationReport",
    "RealizationError", "SimulationError",
    "NodeCircuit", "MesoReport", "MemoryReport", "Message", "MessageLog",
    "build_mesocircuit", "simulate_distributed", "census", "memory_report",
    "MemoryUnderrunError",
    "LqrController", "FirController",
]
