"""Scheduling laboratory for mesh/pull peer-to-peer live streaming."""

from .graphs import (
    DegreeDistribution,
    GraphGenerationError,
    SwarmGraph,
    empirical_degree_distribution,
    generate_ba,
    generate_er,
    generate_ws,
    size_biased,
)
from .mean_field import (
    EDF,
    LDF,
    BufferTable,
    ConvergenceError,
    DegreeClass,
    MeanFieldBreakdownError,
    MeanFieldConfig,
    chunk_selection_edf,
    chunk_selection_ldf,
    integrate_full_rate_equation,
    solve_fixed_point,
    startup_latency,
)
from .continuum import (
    BufferRequirement,
    ShootingError,
    SingularDynamicsError,
    Trajectory,
    TwoDegreeSystem,
    exact_ldf_relation,
    exact_ldf_relation_finite,
    integrate_mixed,
    integrate_pure_ldf,
    integrate_two_class,
    ldf_buffer_requirement,
    mixed_approx_relation,
    mixed_approx_relation_simplified,
    stability_jacobian,
)
from .game import (
    InvalidCellError,
    PayoffTable,
    best_global,
    build_payoff_table,
    nash_equilibria,
)
from .state_space import (
    ReductionInstance,
    check_reduction_conditions,
    chi,
    count_contingency_bruteforce,
    enumerate_column_sums,
    omega_log_size,
)
from .stochastic import (
    SimConfig,
    SimMetrics,
    StrategyRule,
    SwarmState,
    assign_strategies,
    execute_contact,
)
from .fullstack import (
    FullStackConfig,
    FullStackMetrics,
    PeerClass,
    default_peer_classes,
    run_fullstack,
)
from .experiments import (
    ExperimentSpec,
    SpecValidationError,
    compare_backends,
    run_experiment,
)
from ._version import __version__
