"""Three-pass session execution.

Two engines live here.  The general engine simulates the full tripartite
state (Alice ancilla, message, Bob ancilla) through four joint unitaries;
what travels on the wire at each pass is the reduced message state, which
is exactly what an eavesdropper sees.  The keyed engine works directly on
vectorized states with superoperator families, drawing the local indices
l1, l2 uniformly from the key-derived index set.

A man-in-the-middle harness replays both half-sessions with attacker
operators at selectable knowledge levels and reports how close the
attacker gets to the message and how visibly the final state deviates
from the keyed prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import unitary_natural
from .commutators import inverse
from .config import residual_tolerance
from .families import (
    IdentificationKey,
    OperatorFamily,
    build_keyed_set,
    build_scheme1_family,
    build_scheme2_family,
    haar_unitary,
    validate_family,
)
from .linalg import (
    DensityMatrix,
    as_matrix,
    dagger,
    is_unitary,
    partial_trace,
    tensor,
    trace_distance,
    unvectorize,
    vectorize,
)


@dataclass(frozen=True)
class SessionState:
    """Progress marker for one party: which protocol step the session has
    reached (strictly 0 to 4), the party's local index, and, in the general
    framework, which global subsystem the party retains."""

    role: str  # "Alice" | "Bob"
    step: int = 0
    local_index: int | None = None
    retained_subsystem: int | None = None
    key: IdentificationKey | None = None

    def advanced(self) -> "SessionState":
        if self.step >= 4:
            raise ValueError("session steps advance strictly 0 -> 4")
        return SessionState(self.role, self.step + 1, self.local_index, self.retained_subsystem, self.key)


@dataclass(frozen=True)
class Transcript:
    """Everything observable about one session: the three wire ciphers,
    the final state, the local indices, and reproducibility metadata.
    Raw key values never appear; only the key digest does."""

    scheme: int
    dim: int
    ciphers: tuple[DensityMatrix, DensityMatrix, DensityMatrix]
    final: DensityMatrix
    final_vec: np.ndarray
    operator_ids: tuple[str, ...]
    correctness_distance: float
    l1: int | None = None
    l2: int | None = None
    key_id: str | None = None
    seeds: dict | None = None

    def __post_init__(self):
        if len(self.ciphers) != 3:
            raise ValueError("a three-pass transcript carries exactly three ciphers")
        v = np.asarray(self.final_vec, dtype=complex).reshape(-1)
        v.flags.writeable = False
        object.__setattr__(self, "final_vec", v)

    @property
    def adversary_views(self) -> tuple[DensityMatrix, DensityMatrix, DensityMatrix]:
        """What the wire shows: the three transmitted cipher states."""
        return self.ciphers


def controlled_by_message(kernels, message_first: bool) -> np.ndarray:
    """Bitwise controlled unitary between a q-qubit message register and a
    q-qubit ancilla register: message qubit m controls ``kernels[m]`` on
    ancilla qubit m.  ``message_first`` picks the factor order
    (message x ancilla) vs (ancilla x message).
    """
    kernels = [as_matrix(k) for k in kernels]
    q = len(kernels)
    if any(k.shape != (2, 2) or not is_unitary(k) for k in kernels):
        raise ValueError("kernels must be 2x2 unitaries")
    dm = 2**q
    total = np.zeros((dm * dm, dm * dm), dtype=complex)
    for x in range(dm):
        bits = [(x >> (q - 1 - m)) & 1 for m in range(q)]
        block = np.eye(1, dtype=complex)
        for m in range(q):
            block = np.kron(block, kernels[m] if bits[m] else np.eye(2))
        proj = np.zeros((dm, dm), dtype=complex)
        proj[x, x] = 1.0
        total += np.kron(proj, block) if message_first else np.kron(block, proj)
    return total


def run_general_framework(
    u_a,
    u_b,
    u_a2,
    u_b2,
    message: DensityMatrix,
    rho_a: DensityMatrix | None = None,
    rho_b: DensityMatrix | None = None,
) -> Transcript:
    """Execute the four-step ancilla framework on the global state.

    ``u_a`` and ``u_a2`` act on (Alice ancilla x message), ``u_b`` and
    ``u_b2`` on (message x Bob ancilla).  Wire ciphers are the reduced
    message states at transmission time.  The returned
    ``correctness_distance`` is the trace distance between the final
    reduced message state and the input message.
    """
    u_a, u_b, u_a2, u_b2 = (as_matrix(u) for u in (u_a, u_b, u_a2, u_b2))
    dm = message.dim
    if u_a.shape != u_a2.shape or u_b.shape != u_b2.shape:
        raise ValueError("paired unitaries must share dimensions")
    if u_a.shape[0] % dm or u_b.shape[0] % dm:
        raise ValueError("unitary dims are not multiples of the message dim")
    da = u_a.shape[0] // dm
    db = u_b.shape[0] // dm
    for u in (u_a, u_b, u_a2, u_b2):
        if not is_unitary(u):
            raise ValueError("framework operators must be unitary")
    rho_a = DensityMatrix.pure(np.eye(da)[:, 0]) if rho_a is None else rho_a
    rho_b = DensityMatrix.pure(np.eye(db)[:, 0]) if rho_b is None else rho_b
    if rho_a.dim != da or rho_b.dim != db:
        raise ValueError("ancilla states do not match the unitary dimensions")

    dims = [da, dm, db]
    ident_a, ident_b = np.eye(da), np.eye(db)
    state = tensor(tensor(rho_a.matrix, message.matrix), rho_b.matrix)
    alice = SessionState("Alice", retained_subsystem=0)
    bob = SessionState("Bob", retained_subsystem=2)

    def evolve(s, u):
        return u @ s @ dagger(u)

    def wire(s) -> DensityMatrix:
        return DensityMatrix(partial_trace(s, dims, keep=[1]))

    state = evolve(state, tensor(u_a, ident_b))
    alice, bob = alice.advanced(), bob.advanced()
    cipher1 = wire(state)
    state = evolve(state, tensor(ident_a, u_b))
    alice, bob = alice.advanced(), bob.advanced()
    cipher2 = wire(state)
    state = evolve(state, tensor(u_a2, ident_b))
    alice, bob = alice.advanced(), bob.advanced()
    cipher3 = wire(state)
    state = evolve(state, tensor(ident_a, u_b2))
    alice, bob = alice.advanced(), bob.advanced()
    final = wire(state)
    assert alice.step == bob.step == 4

    return Transcript(
        scheme=0,
        dim=dm,
        ciphers=(cipher1, cipher2, cipher3),
        final=final,
        final_vec=vectorize(final),
        operator_ids=("U_A", "U_B", "U_A'", "U_B'"),
        correctness_distance=trace_distance(final, message),
    )


def _resolve_keyed_family(
    family: OperatorFamily,
    key: IdentificationKey | None,
    variant: str,
) -> OperatorFamily:
    if key is not None and family.variant == "base":
        return build_keyed_set(key, family, variant=variant)
    return family


def run_keyed_session(
    family: OperatorFamily,
    message: DensityMatrix,
    seed: int,
    key: IdentificationKey | None = None,
    variant: str = "plain",
) -> Transcript:
    """Run one superoperator session: A, B, A^-1, B^-1 on the vectorized
    message, with l1 and l2 drawn uniformly from the family's index set.

    A base family plus a key is keyed on the fly; a pre-keyed family runs
    as given.  The family invariants are re-checked defensively before the
    first pass.  ``correctness_distance`` compares the final state against
    the predicted N vec(message).
    """
    executed = _resolve_keyed_family(family, key, variant)
    if message.dim != executed.dim:
        raise ValueError("message dim does not match family dim")
    check = validate_family(executed)
    if not check.passed:
        raise RuntimeError(f"family invariant violated: {check.failures[0]}")

    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    l1 = int(rng.choice(executed.index_set))
    l2 = int(rng.choice(executed.index_set))
    alice = SessionState("Alice", local_index=l1, key=key)
    bob = SessionState("Bob", local_index=l2, key=key)

    a_op = executed.s_a[l1]
    b_op = executed.s_b[l2]
    v0 = vectorize(message)
    v1 = a_op @ v0
    alice, bob = alice.advanced(), bob.advanced()
    v2 = b_op @ v1
    alice, bob = alice.advanced(), bob.advanced()
    v3 = inverse(a_op) @ v2
    alice, bob = alice.advanced(), bob.advanced()
    v4 = inverse(b_op) @ v3
    alice, bob = alice.advanced(), bob.advanced()
    assert alice.step == bob.step == 4

    predicted = executed.n_matrix @ v0
    final = DensityMatrix(unvectorize(v4))
    return Transcript(
        scheme=executed.scheme,
        dim=executed.dim,
        ciphers=tuple(DensityMatrix(unvectorize(v)) for v in (v1, v2, v3)),
        final=final,
        final_vec=v4,
        operator_ids=(f"A[{l1}]", f"B[{l2}]", f"A[{l1}]^-1", f"B[{l2}]^-1"),
        correctness_distance=trace_distance(final, unvectorize(predicted)),
        l1=l1,
        l2=l2,
        key_id=executed.key_id,
        seeds={"session": seed, "family": executed.seed, "variant": executed.variant},
    )


def recover_message(
    transcript: Transcript,
    family: OperatorFamily,
    key: IdentificationKey | None = None,
    use_alternative: bool = False,
    seed: int = 0,
) -> DensityMatrix:
    """Undo the residual operator on the transcript's final state.

    Scheme 1 final states are already the message.  Scheme 2 applies the
    inverse of N; with ``use_alternative`` the inverse is realized as the
    reversed commutator A^-1 B^-1 A B at a fresh random l1', which must
    match the direct inversion up to a global phase.
    """
    if transcript.final_vec is None or transcript.final_vec.size == 0:
        raise ValueError("transcript has no final state")
    variant = (transcript.seeds or {}).get("variant", "plain")
    executed = _resolve_keyed_family(family, key, variant)
    if executed.dim != transcript.dim:
        raise ValueError("family dim does not match transcript dim")

    direct = inverse(executed.n_matrix) @ transcript.final_vec
    if not use_alternative:
        return DensityMatrix(unvectorize(direct))

    if transcript.l2 is None:
        raise ValueError("alternative recovery needs the transcript's l2")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 13]))
    l1_fresh = int(rng.choice(executed.index_set))
    a_op = executed.s_a[l1_fresh]
    b_op = executed.s_b[transcript.l2]
    n_inv = inverse(a_op) @ inverse(b_op) @ a_op @ b_op
    alt = n_inv @ transcript.final_vec
    tol = residual_tolerance()
    if trace_distance(unvectorize(alt), unvectorize(direct)) > tol:
        raise RuntimeError("alternative inversion disagrees with direct inversion")
    return DensityMatrix(unvectorize(alt))


@dataclass(frozen=True)
class AttackReport:
    """Aggregate outcome of a man-in-the-middle sweep."""

    knowledge: str
    sessions: int
    detection_threshold: float
    attacker_distances: tuple[float, ...]
    detection_statistics: tuple[float, ...]
    mean_attacker_distance: float | None
    mean_detection: float | None
    detected_fraction: float | None

    def to_json(self) -> dict:
        return {
            "knowledge": self.knowledge,
            "sessions": self.sessions,
            "detection_threshold": self.detection_threshold,
            "attacker_distances": list(self.attacker_distances),
            "detection_statistics": list(self.detection_statistics),
            "mean_attacker_distance": self.mean_attacker_distance,
            "mean_detection": self.mean_detection,
            "detected_fraction": self.detected_fraction,
        }


KNOWLEDGE_LEVELS = ("none", "scheme-shape", "full-family-no-key", "insider")


def _attacker_operators(
    knowledge: str,
    family: OperatorFamily,
    honest: OperatorFamily,
    key: IdentificationKey | None,
    variant: str,
    rng: np.random.Generator,
):
    """Return (eve_a, eve_b, eve_n) superoperators for one session."""
    dim = honest.dim
    if knowledge == "insider":
        l_a = int(rng.choice(honest.index_set))
        l_b = int(rng.choice(honest.index_set))
        return honest.s_a[l_a], honest.s_b[l_b], honest.n_matrix
    if knowledge == "full-family-no-key":
        params = key.params if key is not None else None
        if params is None:
            raise ValueError("full-family-no-key attack needs the public key params")
        guess = IdentificationKey.derive(
            int(rng.integers(0, params.key_space)), params, which_i=int(rng.integers(0, 4))
        )
        keyed = build_keyed_set(guess, family, variant=variant)
        l_a = int(rng.choice(keyed.index_set))
        l_b = int(rng.choice(keyed.index_set))
        return keyed.s_a[l_a], keyed.s_b[l_b], keyed.n_matrix
    if knowledge == "scheme-shape":
        if family.scheme == 2:
            own = build_scheme2_family(
                family.n_a, family.n_b, seed=int(rng.integers(0, 2**31)),
                base_a0=family.base_a0, base_b0=family.base_b0,
            )
        else:
            own = build_scheme1_family(
                family.n_a, family.n_b, family.dim, seed=int(rng.integers(0, 2**31))
            )
        l_a = int(rng.choice(own.index_set))
        l_b = int(rng.choice(own.index_set))
        return own.s_a[l_a], own.s_b[l_b], own.n_matrix
    if knowledge == "none":
        eve_a = unitary_natural(haar_unitary(dim, rng))
        eve_b = unitary_natural(haar_unitary(dim, rng))
        return eve_a, eve_b, np.eye(dim * dim, dtype=complex)
    raise ValueError(f"unknown knowledge level {knowledge!r}")


def run_mim_attack(
    family: OperatorFamily,
    sessions: int,
    seed: int,
    key: IdentificationKey | None = None,
    knowledge: str = "none",
    variant: str = "plain",
    detection_threshold: float = 0.05,
) -> AttackReport:
    """Interpose an attacker between the honest parties for a number of
    independent sessions.

    Per session the attacker first completes the three passes with Alice
    using a guessed B operator and applies a guessed N inverse to obtain a
    message estimate, then replays that estimate toward Bob with a guessed
    A operator.  Reported per session: the attacker's trace distance to
    the true message, and the detection statistic, Bob's distance between
    his recovered state and the true message (zero in an honest run).
    """
    honest = _resolve_keyed_family(family, key, variant)
    if sessions < 0:
        raise ValueError("sessions must be non-negative")
    if sessions == 0:
        return AttackReport(knowledge, 0, detection_threshold, (), (), None, None, None)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 17]))
    honest_n_inv = inverse(honest.n_matrix)
    attacker_distances = []
    detections = []
    for _ in range(sessions):
        message = DensityMatrix.random_pure(honest.dim, rng)
        v0 = vectorize(message)
        eve_a, eve_b, eve_n = _attacker_operators(knowledge, family, honest, key, variant, rng)

        # Alice <-> Eve: Eve answers pass 1 and unlocks after pass 3.
        l1 = int(rng.choice(honest.index_set))
        a_op = honest.s_a[l1]
        extracted = inverse(eve_b) @ inverse(a_op) @ eve_b @ a_op @ v0
        estimate = inverse(eve_n) @ extracted
        attacker_distances.append(trace_distance(unvectorize(estimate), message))

        # Eve <-> Bob: Eve forwards her estimate under her own A operator.
        l2 = int(rng.choice(honest.index_set))
        b_op = honest.s_b[l2]
        final = inverse(b_op) @ inverse(eve_a) @ b_op @ eve_a @ estimate
        recovered = honest_n_inv @ final
        detections.append(trace_distance(unvectorize(recovered), message))

    att = tuple(float(x) for x in attacker_distances)
    det = tuple(float(x) for x in detections)
    return AttackReport(
        knowledge=knowledge,
        sessions=sessions,
        detection_threshold=detection_threshold,
        attacker_distances=att,
        detection_statistics=det,
        mean_attacker_distance=float(np.mean(att)),
        mean_detection=float(np.mean(det)),
        detected_fraction=float(np.mean([d > detection_threshold for d in det])),
    )
