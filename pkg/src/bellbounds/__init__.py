"""Classical and quantum bounds for bipartite Bell functionals."""
from .errors import BellBoundsError, BudgetExceeded, InfeasibleError, NumericalStall, ValidationError
from .model import (Behavior, BellFunctional, DeterministicLocalPoint, LocalDecomposition, QuantumModel, Scenario,
                    SignedStrategy, behavior_from_local, behavior_from_quantum, chsh_functional,
                    chsh_tsirelson_behavior, chsh_tsirelson_model, mix_detector_noise, pad_behavior,
                    pad_functional, pair, pr_box, validate)
from .local import (SolveReport, check_equivalence, classical_bound, enumerate_deterministic, epsilon_norm,
                    nu_of_behavior, pi_robustness)
from .quantum import (SeesawConfig, dimension_witness_report, optimize_povm_input, optimize_state, seesaw,
                      upper_bound_monitor, violation_report)
from .construction import ConstructionParams, build_bell_functional, construct, pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
