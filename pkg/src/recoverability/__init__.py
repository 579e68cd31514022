"""Petz-type recovery maps and numerical verification of recoverability bounds.

The package is organised in layers: ``numerics`` (dense Hermitian kernels),
``quantum`` (states, channels, samplers), ``entropy`` (information measures),
``recovery`` (recovery maps), ``verify`` (bound checks) and ``cli``.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    InvalidChannel,
    InvalidInstance,
    InvalidMeasurement,
    InvalidParameter,
    InvalidState,
    NotHermitian,
    NotPSD,
    NumericsError,
    ObjectiveError,
    RecoverabilityError,
    ShapeError,
    SupportError,
)
from .numerics import (  # noqa: E402
    CompositeLabels,
    herm_eig,
    kron,
    partial_trace,
    permute_systems,
    power_on_support,
    schatten_norm,
    support_projector,
)
from .quantum import (  # noqa: E402
    DensityOperator,
    Ensemble,
    PSDOperator,
    QuantumMap,
    RankOneMeasurement,
    StinespringIsometry,
    adjoint_map,
    apply_map,
    channel_from_kraus,
    choi,
    cq_state,
    dephasing_channel,
    identity_channel,
    measurement_channel,
    partial_trace_channel,
    random_channel,
    random_density,
    random_isometry,
    stinespring,
)
from .entropy import (  # noqa: E402
    RenyiParam,
    cmi,
    delta_tilde,
    fidelity,
    max_relative_entropy,
    rel_ent_difference,
    relative_entropy,
    renyi_cmi,
    von_neumann,
)
from .recovery import (  # noqa: E402
    RecoveryMap,
    cmi_recovery,
    eb_map,
    petz,
    pgm,
    rotated_petz,
    rotation,
    sequential_recovery,
)
from .verify import (  # noqa: E402
    CheckReport,
    Instance,
    TSearchConfig,
    build_instance,
    check_corollary,
    check_functoriality,
    check_limits,
    check_lower,
    check_sequential,
    check_upper,
    t_search,
)
