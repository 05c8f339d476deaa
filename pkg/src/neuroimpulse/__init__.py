"""Impulsive control of dynamical systems by leaky integrate-and-fire units."""

from .bounds import (
    BoundReport,
    cor1_bound,
    cor4_bound,
    inter_event_bounds,
    min_inter_event_global,
    rectified_envelope,
    thm1_bound,
    thm2_bound,
    thm3_bound,
)
from .exceptions import (
    Diverged,
    DimensionTooLarge,
    Infeasible,
    NeuroImpulseError,
    NoEvent,
    NoEventsEver,
    NotHurwitz,
    NotLinear,
    NotSymmetric,
    SingularGram,
    SteeringFailed,
    StepTooCoarse,
    UnsupportedLeak,
    ZeroInitial,
)
from .hybridsim import EventRecord, HybridTrajectory, auxiliary, exact_sim_1d, simulate, stability_measure
from .linalg import box_norm, cube_norm, nnls, solve_lyapunov, spectral_norm, sym_eig
from .model import (
    DRIFTS,
    Connected,
    Independent,
    PlantSpec,
    RectifiedProjection,
    ValidationReport,
    axis_pair_controller,
    derive_linear_gain,
    is_sign_partitioned,
    steering_holds,
    validate,
)
from .network import MonitorReport, NullWeight, ZBounds, compute_null_weight, connected_bound, monitor_connected, z_bounds

__version__ = "0.1.0"
