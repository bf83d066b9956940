"""antcover: pheromone-based grid coverage simulation and verification.

A deterministic simulator for the mark-ant-walk (MAW) coverage rule on
occupancy-grid domains, with runtime invariant monitors, worst-case bound
certificates, noise models, a random-walk baseline and a multi-robot
scheduler.
"""

from ._kernels import NUMBA_ENABLED
from .field import NoiseProfile, PheromoneField, init_field, mark_disk, min_over
from .geometry import (
    Cell,
    DistanceField,
    Domain,
    DomainError,
    Neighborhoods,
    Tessellation,
    build_neighborhoods,
    diameter,
    disk_cells,
    geodesic_dist_field,
    load_domain,
    load_domain_file,
    ring_cells,
    tessellate,
    tessellation_count,
)
from .harness import (
    BoundCertificate,
    ExperimentConfig,
    RunReport,
    RunResult,
    bound_certificate,
    gen_domain,
    gen_empty,
    gen_loops_domain,
    gen_maze,
    gen_rooms,
    gen_scatter,
    gen_star_domain,
    loglog_slope,
    monitor_potential,
    monitor_proximity,
    revisit_stats,
    run_experiment,
)
from .walkers import (
    DomainTooSmallError,
    Robot,
    SimState,
    StepOutcome,
    TieBreak,
    make_state,
    maw_step,
    multi_step,
    random_walk_step,
    tie_break,
)

__version__ = "0.1.0"
