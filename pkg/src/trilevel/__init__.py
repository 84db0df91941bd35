"""Ground-state phase structure of N three-level atoms in a single-mode cavity."""
from .errors import *  # noqa: F401,F403
from .model import (
    Configuration,
    ExcitationWeights,
    ModelParams,
    excitation_weights,
    load_params,
    resonant,
    validate,
)
from .quantum import (
    GroundStateResult,
    SearchOptions,
    SectorBasis,
    analytic_one_atom_xi,
    build_hamiltonian,
    commutant_check,
    enumerate_sector,
    global_ground,
    sector_ground,
)
from .semiclassical import (
    CouplingRange,
    MinimizeOptions,
    Order,
    Phase,
    SemiclassicalResult,
    SeparatrixCurve,
    VariationalPoint,
    classify_order,
    energy_surface,
    minimize,
    optimal_field_amplitude,
    separatrix,
)
from .scan import (
    Axis,
    ConvergenceTable,
    CrossoverSet,
    Engine,
    ScanSpec,
    convergence_study,
    extract_crossovers,
    run_scan,
)

__version__ = "0.1.0"
