"""Quench dynamics of two-species fermion mixtures in a 1D double well."""

from .errors import (
    AnalysisError,
    ConfigurationError,
    FermiwellError,
    NumericalError,
    ResonanceError,
    SamplingError,
    UndefinedInputError,
)
from .fockspace import (
    CIState,
    DeterminantBasis,
    SchmidtSpectrum,
    apply_hamiltonian,
    determinant_basis,
    enumerate_determinants,
    load_ci_state,
    product_ground_state,
    save_ci_state,
    schmidt_decompose,
)
from .grid import GridSpec, TrapParams, build_grid, one_body_hamiltonian, potential_at
from .observables import (
    CorrelationMap,
    ObservableSeries,
    OneBodyRDM,
    breathing_frequency,
    count_filaments,
    density_deviation,
    filament_positions,
    g1_map,
    g2_map,
    mean_square_position,
    one_body_rdm,
    overlap_lambda,
)
from .singleshot import (
    ShotAverage,
    ShotConfig,
    ShotImage,
    annihilate_at,
    average_shots,
    sample_shot,
)
from .solvers import (
    HFState,
    PropagationConfig,
    energy_expectation,
    ground_state_ci,
    hf_energy,
    hf_ground,
    hf_propagate,
    load_hf_state,
    propagate_ci,
    save_hf_state,
)
from .spbasis import OrbitalBasis, coupling_from_3d, orbitals_to_csv, solve_one_body

__version__ = "0.1.0"
