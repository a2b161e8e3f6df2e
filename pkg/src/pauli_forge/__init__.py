"""Pure-state reconstruction from eigenvalue distributions.

Iterates the imposition map to enumerate Pauli partners, recovers maximal
sets of mutually unbiased bases, and maps basins of attraction of the
reconstruction dynamics.
"""

from .core import (
    Distribution,
    ObservableBasis,
    PhaseSeed,
    PureState,
    bures_distance,
    computational_basis,
    distributional_distance,
    fourier_basis,
    hellinger_distance,
    random_state,
    state_from_seed,
    tensor_fourier_basis,
)
from .imposition import (
    ImpositionChain,
    ImpositionStep,
    IterationConfig,
    IterationResult,
    impose,
    impose_chain,
    is_fixed_point,
    is_partner,
    iterate,
)
from .partner_search import (
    BifurcationScan,
    GridStrategy,
    PartnerSet,
    RandomStrategy,
    ReconstructionProblem,
    count_partners,
    enumerate_partners,
    is_informationally_complete_heuristic,
    scan_bifurcations,
    synthesize_problem,
)
from .mub_pipeline import (
    MubSearchOptions,
    MubSet,
    find_mubs,
    find_mubs_prime_power,
    verify_mub_set,
)
from .basin_mapper import BasinGrid, export_basin_csv, export_basin_image, map_basins

__version__ = "0.1.0"
