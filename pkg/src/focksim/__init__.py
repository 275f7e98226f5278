"""Sparse Fock-state simulation of linear-optical entanglement schemes.

Layers: states and circuits form the simulator core; measurement adds
conditioning, effective operators and state classification; schemes holds
the heralded generators and fusion measurements; adaptive the feed-forward
protocols; resources the loss and photon-cost accounting; verify the
acceptance suite backing both the tests and the command line.
"""

from .states import (
    DualRailPairing,
    InvalidOccupation,
    NotAQubitState,
    PureState,
    decode_dual_rail,
    encode_dual_rail,
    fidelity,
    inner,
    make_fock,
    reference_state,
    tensor,
    vacuum,
)
from .circuits import (
    Circuit,
    apply_elementwise,
    apply_matrix,
    compose,
    coupler_matrix,
    dft_matrix,
    hadamard_matrix,
    permanent,
    transition_amplitude,
)
from .measurement import (
    Classification,
    ConditionalOutcome,
    EffectiveOperator,
    backpropagate_effective_bra,
    classify_residual,
    condition_on,
    enumerate_outcomes,
    verify_completeness,
)
from .schemes import (
    SchemeReport,
    TargetCheck,
    bell_discrimination_rate,
    bsg_8_photon,
    bsg_boosted,
    bsg_h8_random,
    bsg_random_input,
    bsg_standard,
    bsg_with_distillation,
    distill_w42,
    dual_rail_bell_pair,
    ghz_generator,
    three_way_boosted_fusion_probability,
    type1_boosted,
    type1_unboosted,
    type2_boosted,
)
from .adaptive import (
    BleedSchedule,
    PrimateSymbol,
    bleed_closed_form,
    bleed_two_photons,
    equal_spread_closed_form,
    equal_spread_schedule,
    ghz_from_primates_with_retry,
    optimize_schedule,
    primate_fuse,
    primate_fuse_with_retry,
    primate_to_ghz,
    spatial_bleeding,
)
from .resources import (
    LossModel,
    MuxCostPlan,
    bleeding_loss,
    max_stages_under_budget,
    mux_cost_table,
    mux_photon_cost,
    optimize_primate_transmissivity,
)

__version__ = "0.1.0"
