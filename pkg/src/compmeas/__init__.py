"""Complete (maximally refined) measurements of finite-dimensional POVMs."""

from .entanglement import (
    EbCertificate,
    certify_entanglement_breaking,
    is_ppt,
    is_product,
    negativity,
    random_entangled_state,
)
from .linalg import (
    BipartiteState,
    frobenius_distance,
    hermitian_eig,
    partial_trace,
    partial_transpose,
    tensor,
)
from .measurement import (
    Instrument,
    MeasurementModel,
    apply_instrument,
    apply_local_instrument,
    build_measurement_model,
    complete_measurement,
    instrument_channel,
    luders_instrument,
    model_induced_instrument,
    rank1_prepare_instrument,
    sequential,
)
from .povm import (
    Povm,
    RefinedPovm,
    SharpObservable,
    coarse_grain,
    effect_rank,
    is_informationally_complete,
    is_pvm,
    is_rank_one,
    maximally_refine,
    outcome_probabilities,
    validate_povm,
)

__version__ = "0.1.0"
