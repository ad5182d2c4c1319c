"""Cosine/sine phase distributions of a single optical mode.

Three independent routes to the same distributions, cross-validated against
each other: directly from a known quantum state (exact and coarse-grained),
and by averaging a sampling kernel over simulated balanced-homodyne records.
"""

__version__ = "0.1.0"

from .errors import (
    BiasWarning,
    DomainMismatch,
    EmptyDataset,
    EpsilonNonpositive,
    GridTooNarrow,
    IncompatibleTruncation,
    KernelMissing,
    NumericalInstability,
    OutsideAllowedRegion,
    QuadratureNotConverged,
    SGPhaseError,
    TableMismatch,
    TruncationTooSmall,
    UnsupportedS,
)
from .fock import (
    DensityMatrix,
    FockState,
    QuadratureGrid,
    make_coherent,
    make_fock,
    make_squeezed_vacuum,
    make_vacuum,
    quadrature_distribution,
    quadrature_wavefunction,
)
from .homodyne import (
    DatasetHeader,
    HomodyneDataset,
    generate_dataset,
    read_dataset,
    sample_quadrature,
    write_dataset,
)
from .kernel import (
    KernelEvaluator,
    KernelSpec,
    KernelTable,
    build_kernel_table,
    kernel_cosine,
    kernel_sine,
    kernel_value,
    load_kernel_table,
    save_kernel_table,
)
from .patterns import (
    PatternTable,
    build_pattern_table,
    get_pattern_table,
    load_pattern_table,
    pattern_integral,
    pattern_product,
    pattern_wkb,
    save_pattern_table,
)
from .phase import (
    CoarseGrainedState,
    PhaseDistribution,
    build_c_psi_operator,
    build_exponential_operator,
    coarse_grained_state,
    coarse_phase_distribution,
    coarse_state_norm,
    exact_phase_distribution,
    phase_state_coefficients,
)
from .sampling import (
    EstimateResult,
    density_matrix_from_distributions,
    estimate_distribution,
    plugin_distribution,
    reconstruct_density_element,
    reconstruct_density_matrix,
)

__all__ = [name for name in dir() if not name.startswith("_")]
