"""Learning the coefficients of low-intersection Hamiltonians from simulated dynamics."""
from .pauli import PauliString, commutes, conjugate, support
from .hamiltonian import (ClusterColoring, LowIntersectionHamiltonian, QubitColoring,
                          build_cluster_graph_and_color, build_clusters, build_qubit_graph_and_color,
                          diagonal_part, validate)
from .reshape import (TrotterEnsemble, TwirlDistribution, build_trotter_ensemble,
                      effective_hamiltonian, sample_pauli, trotter_step_schedule)
from .sim import (ExperimentLedger, ExperimentPlan, NoiseModel, SimulatedDevice, apply_pauli_layer,
                  evolve_exact, measure_cluster, qdrift_evolve, trotter_evolve)
from .rpe import PhaseEstimate, estimate_phase, median_amplify
from .learner import (CoefficientEstimate, Learner, LearnerConfig, SpectrumTable, SPTree,
                      accumulate_spectrum, build_prep_pair, build_spt, estimate_edge_difference,
                      learn_all, recover_coefficients)
from .instances import generate_instance

__version__ = "0.1.0"
