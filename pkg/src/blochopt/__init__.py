"""Time-optimal control synthesis on the dissipative Bloch disk."""

from .errors import (
    AsymptoticTargetError,
    BlochOptError,
    ChatteringError,
    ConfigError,
    DegenerateModelError,
    EndpointMismatchError,
    InadmissibleSingularError,
    IntegrationError,
    ParameterError,
    SingularLocusError,
    StateDomainError,
    UnreachableTargetError,
)
from .model import (
    CASE_PARAMS,
    Bloch3State,
    BlochState,
    Control,
    ModelParams,
    accessibility_dimension,
    control_field,
    controlled_limit_point,
    delta_a,
    delta_b,
    drift_field,
    free_fixed_point,
    loci,
    purity_rate,
    rhs_3d,
)
from .words import Arc, ArcKind, ControlWord
from .flows import (
    DiscriminantClass,
    DiscriminantKind,
    Trajectory,
    bang_flow,
    discriminant,
    event_crossings,
    free_flow,
    propagate_word,
    rk_oracle,
    singular_control,
    singular_flow,
)

__version__ = "0.1.0"
