"""Driven-dissipative spin memory: kinetic Monte Carlo of boson-mediated
spin dynamics with pattern retrieval, plus a thermal Hopfield baseline.

The package splits along the physics: `model` holds couplings, patterns and
energetics; `rates` the flip-rate kernel and its lookup tables; `kmc` the
rejection-free simulation and the exact tiny-system oracle; `ensemble` the
trajectory/disorder averaging; `hopfield` the classical reference model;
`config`/`output`/`cli` the reproducible run plumbing.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CouplingMatrix,
    ModelParams,
    UnreachableOverlap,
    extract_patterns,
    flip_cost,
    flip_costs,
    gauge_align,
    interaction_energy,
    mode_fields,
    overlap,
    overlaps,
    prepare_initial_configuration,
    random_configuration,
    sample_couplings,
)
from .rates import (  # noqa: F401
    KernelParams,
    NegativeRate,
    NonConvergedQuadrature,
    OutOfBounds,
    QuadratureConfig,
    RateTable,
    build_rate_table,
    build_tables,
    envelope_f,
    lookup_rate,
    nu_coefficient,
    phase_s,
    rate_direct,
)
from .kmc import (  # noqa: F401
    TrajectoryRecord,
    ZeroTotalRate,
    exact_generator,
    init_state,
    kmc_step,
    occupancy_distribution,
    run_trajectory,
    stationary_distribution,
)
from .ensemble import (  # noqa: F401
    EnsembleSpec,
    InitialCondition,
    NotConverged,
    StationarityWindow,
    SweepResult,
    disorder_sweep,
    random_overlap_floor,
    stationary_estimate,
    trajectory_ensemble,
)
from .hopfield import (  # noqa: F401
    HopfieldModel,
    ThermalChainConfig,
    glauber_sweep,
    hopfield_energy,
    overlap_zeta,
    run_chain,
    sample_noisy_patterns,
    temperature_sweep,
)
from .config import ConfigError, RunConfig, parse_config  # noqa: F401
from .output import read_csv, write_csv  # noqa: F401
