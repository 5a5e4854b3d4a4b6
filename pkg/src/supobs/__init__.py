"""supobs: supervisory multi-observer parameter and state estimation.

A bank of state observers is built on a sampled parameter grid; an
exponentially weighted output-error monitor selects one observer at each
instant, providing joint parameter and state estimates.  The grid can be
static, or dynamically recentered and contracted around the current
estimate (zoom-in resampling).  Shipped observer families: Luenberger
(linear plants) and circle-criterion (Lure-type plants, gains certified
by a matrix-inequality feasibility test), demonstrated on the Jansen-Rit
neural mass model.
"""

from .errors import SupobsError
from .linalg import (
    is_negative_semidefinite,
    solve_lyapunov,
    stabilizing_output_injection,
    sym_eig,
)
from .models import (
    BoundednessMonitor,
    JansenRitParams,
    LinearPlant,
    LurePlant,
    PlantModel,
    jansen_rit_plant,
    sigmoid,
)
from .observers import (
    Assumption2Certificate,
    CircleCriterionBank,
    CircleCriterionObserver,
    LuenbergerBank,
    LuenbergerObserver,
    bank_output_errors,
    circle_criterion_rhs,
    luenberger_rhs,
    verify_assumption2,
)
from .gains import (
    CCLmiData,
    CCSynthesisConfig,
    assemble_cc_lmi,
    design_luenberger,
    load_certificate,
    save_certificate,
    synthesize_cc_gains,
    verify_cc_gains,
)
from .ode import SimConfig, rk4_step, run
from .pe import classical_pe_gramian, fit_exponential_envelope, pe_report, windowed_energy
from .sampling import ParamBox, SampledParamSet, ZoomState, distance_to_set, grid_sample, zoom_update
from .supervisor import (
    SupervisorTrace,
    monitor_reset,
    monitor_rhs,
    run_dynamic,
    run_static,
    select,
)

__version__ = "0.1.0"
