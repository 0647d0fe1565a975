from .controller import (
    DesiredSystem, DiscreteFilter, L1Controller, L1Gains, L1State, NonMinimumPhaseM,
    NonProperFilter, NonSPDQ, SingularLambda, SingularPhi, UnstableFilter,
    adaptation_step, build_filter, build_gains, control_step, nominal_filter, predictor_step,
)
from .analysis import (
    MismatchedRuns, StabilityReport, Trajectory, reference_system_sim, simulate_sampled_l1,
    stability_check, sampling_gap,
)
