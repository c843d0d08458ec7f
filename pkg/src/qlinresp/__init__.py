"""Classically exact simulator of phase-estimation linear response.

Builds Hubbard lattice sectors, prepares the perturbed state through the
heralded ancilla rotation, reconstructs the response function from the
exact phase-estimation outcome distribution (Fejer-kernel smearing of
the spectral weights), quantifies sampling error, and measures momentum
occupations on the collapsed final states.
"""

from .errors import QlrError
from .kernels import active_backend
from .model import (FockBasis, HubbardParams, LatticeGeometry,
                    SparseOperator, build_basis, build_density_excitation,
                    build_hamiltonian, build_momentum_number, momentum,
                    total_number_operator)
from .spectral import (SpectralBounds, SpectralData, ground_state,
                       scale_hamiltonian, spectral_bounds, spectral_weights)
from .prep import (LcuDecomposition, PreparedState, exact_excited_state,
                   extrapolate_to_zero_gamma, gamma_bound,
                   lcu_success_probability, operator_norm, prepare_gamma,
                   repeat_until_success)
from .response import (PEADistribution, PhysicalResponse, ResourceEstimate,
                       SampleHistogram, fejer_kernel, hoeffding_n, max_error,
                       pea_distribution, resource_estimate, rescale, sample,
                       statevector_pea_oracle)
from .finalstate import (CollapsedState, MeasurementRecord, collapse,
                         conditional_n2, evolve_final_state,
                         hadamard_test_n1, hadamard_test_n2)

__version__ = "0.1.0"

__all__ = [
    "QlrError", "active_backend",
    "FockBasis", "HubbardParams", "LatticeGeometry", "SparseOperator",
    "build_basis", "build_density_excitation", "build_hamiltonian",
    "build_momentum_number", "momentum", "total_number_operator",
    "SpectralBounds", "SpectralData", "ground_state", "scale_hamiltonian",
    "spectral_bounds", "spectral_weights",
    "LcuDecomposition", "PreparedState", "exact_excited_state",
    "extrapolate_to_zero_gamma", "gamma_bound", "lcu_success_probability",
    "operator_norm", "prepare_gamma", "repeat_until_success",
    "PEADistribution", "PhysicalResponse", "ResourceEstimate",
    "SampleHistogram", "fejer_kernel", "hoeffding_n", "max_error",
    "pea_distribution", "resource_estimate", "rescale", "sample",
    "statevector_pea_oracle",
    "CollapsedState", "MeasurementRecord", "collapse", "conditional_n2",
    "evolve_final_state", "hadamard_test_n1", "hadamard_test_n2",
    "__version__",
]
