"""qnklab: a workbench for three-pass no-key quantum protocols.

Simulates the general ancilla framework and the keyed superoperator
protocol, verifies the commutator identities the schemes rest on, and
evaluates trace-distance and diamond-norm security criteria at desk-scale
dimensions.
"""

from .channels import (
    Channel,
    apply,
    choi_matrix,
    choi_reshuffle,
    identity_channel,
    kraus_from_dilation,
    natural_rep,
    unitary_channel,
    unitary_natural,
)
from .commutators import (
    CommutatorReport,
    ResidualReport,
    additive_commutator,
    extend_sets,
    group_commutator,
    multiplicative_phase,
    verify_constant_commutator,
    verify_propositions,
    verify_theorem1,
)
from .families import (
    HADAMARD,
    T_GATE,
    IdentificationKey,
    KeyParams,
    OperatorFamily,
    build_keyed_set,
    build_scheme1_family,
    build_scheme2_family,
    derive_key_structures,
    haar_unitary,
    validate_family,
)
from .linalg import (
    DensityMatrix,
    partial_trace,
    spectral_decomposition,
    tensor,
    trace_distance,
    unvectorize,
    vectorize,
)
from .protocol import (
    AttackReport,
    SessionState,
    Transcript,
    recover_message,
    run_general_framework,
    run_keyed_session,
    run_mim_attack,
)
from .security import (
    CipherAverages,
    SecurityVerdict,
    check_indistinguishability,
    check_key_security,
    check_operator_security,
    cipher_average_operators,
    diamond_norm,
    unitary_pair_diamond_distance,
)

__version__ = "0.1.0"

__all__ = [
    "AttackReport",
    "Channel",
    "CipherAverages",
    "CommutatorReport",
    "DensityMatrix",
    "HADAMARD",
    "IdentificationKey",
    "KeyParams",
    "OperatorFamily",
    "ResidualReport",
    "SecurityVerdict",
    "SessionState",
    "T_GATE",
    "Transcript",
    "additive_commutator",
    "apply",
    "build_keyed_set",
    "build_scheme1_family",
    "build_scheme2_family",
    "check_indistinguishability",
    "check_key_security",
    "check_operator_security",
    "choi_matrix",
    "choi_reshuffle",
    "cipher_average_operators",
    "derive_key_structures",
    "diamond_norm",
    "extend_sets",
    "group_commutator",
    "haar_unitary",
    "identity_channel",
    "kraus_from_dilation",
    "multiplicative_phase",
    "natural_rep",
    "partial_trace",
    "recover_message",
    "run_general_framework",
    "run_keyed_session",
    "run_mim_attack",
    "spectral_decomposition",
    "tensor",
    "trace_distance",
    "unitary_channel",
    "unitary_natural",
    "unitary_pair_diamond_distance",
    "unvectorize",
    "validate_family",
    "vectorize",
    "verify_constant_commutator",
    "verify_propositions",
    "verify_theorem1",
]
