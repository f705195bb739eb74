"""Epidemic dynamics on a mobile robot swarm.

The package has three layers. :mod:`sirswarm.ode` holds the deterministic
compartment model used as a reference. :mod:`sirswarm.world` runs the
stochastic agent simulation, with :mod:`sirswarm.safety` supplying the
optional distancing filter. On top sit :mod:`sirswarm.scoring`,
:mod:`sirswarm.scenario`, :mod:`sirswarm.cli` and :mod:`sirswarm.service`
for evaluation, file formats, command-line use and live sessions.
"""

from ._version import __version__
from .errors import (
    ConfigError,
    DegeneratePairError,
    EnsembleError,
    IntegrationError,
    PlacementError,
    QpFailureError,
    ScenarioError,
    SirSwarmError,
)
from .ode import (
    SirParams,
    SirState,
    SirTrajectory,
    alpha_from_recovery,
    analytic_peak,
    beta_from_contact,
    final_size,
    integrate_sir,
    sir_derivative,
)
from .safety import (
    BarrierSpec,
    QpProblem,
    QpSolution,
    assemble_qp,
    barrier_value,
    constraint_row,
    safe_velocities,
    solve_qp,
)
from .scenario import (
    ComparisonReport,
    ComparisonSettings,
    OdeSettings,
    Scenario,
    compare_ode_agents,
    config_digest,
    default_scenario,
    export_trajectory,
    import_trajectory,
    load_scenario,
    resolved_mapping,
)
from .scoring import (
    ScoreBreakdown,
    ScoreInputs,
    compute_score,
    control_effort,
    score_trajectory,
)
from .world import (
    Agent,
    EnsembleSummary,
    HealthState,
    SimConfig,
    SimFrame,
    SimTrajectory,
    World,
    apply_recovery,
    apply_transmission,
    detect_contacts,
    ensemble_run,
    init_world,
    nominal_control,
    run,
    step,
)
