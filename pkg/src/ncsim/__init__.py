"""All-to-all dissemination over lossy broadcast networks with random linear network coding."""

from .bounds import binom, expected_stopping_bound, p_same_subspace_bound
from .coding import (
    CodedMessage,
    InformationPacket,
    SubspaceBuffer,
    buffer_init,
    decode,
    encode,
    insert,
    rank_oracle,
)
from .engine import SimConfig, TrialResult, run_experiment, run_trial_baseline, run_trial_nc
from .galois import FieldContext, get_field, gf_add, gf_inv, gf_mul
from .radio import (
    ChannelParams,
    ReceptionMatrix,
    build_reception_matrix,
    classify_connectivity,
    make_topology,
    reception_probability,
)

__version__ = "0.1.0"
