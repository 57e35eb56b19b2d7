"""Operator families for the two three-pass schemes.

Scheme 1 uses commuting unitary conjugations (same-axis single-qubit
rotations applied bitwise).  Scheme 2 uses the tensor-coset construction
on a three-factor message space: a fixed noncommuting base pair acts on
the first factor while each party's per-element freedom lives on a factor
the other party never touches, which forces one constant group commutator
across all cross pairs.

Key derivation is a seeded, deterministic stand-in: an identification key
(k, i) selects a similarity transform from a pseudorandom pool, a set of
usable local indices, and the product indices of the keyed variants.  It
makes the protocol reproducible; it claims no cryptographic strength.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from hashlib import blake2b

import numpy as np

from .channels import unitary_from_natural, unitary_natural
from .commutators import group_commutator, phase_aligned_distance
from .config import residual_tolerance
from .linalg import as_matrix, dagger, is_unitary

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
T_GATE = np.diag([1.0, np.exp(1j * np.pi / 4)]).astype(complex)

# domain separators for the keyed pseudorandom streams
_TAG_TRANSFORM_SET = 1
_TAG_TRANSFORM = 2
_TAG_LOCAL = 3
_TAG_PRODUCT = 4


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def rotation_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


@dataclass(frozen=True)
class KeyParams:
    """Public parameters of the key-derivation stand-in."""

    master_seed: int = 0
    key_space: int = 1 << 16
    transform_pool: int = 8
    transform_count: int = 4
    local_min: int = 2

    def __post_init__(self):
        if not (0 < self.transform_count <= self.transform_pool):
            raise ValueError("transform_count must be in 1..transform_pool")
        if self.key_space < 1 or self.local_min < 1:
            raise ValueError("key_space and local_min must be positive")


@dataclass(frozen=True)
class IdentificationKey:
    """Pre-shared identification key: the pair (k, i) plus derivation params."""

    k: int
    i: int
    params: KeyParams = KeyParams()

    def digest(self) -> str:
        """Short opaque identifier; safe to log, reveals nothing about (k, i)."""
        material = f"{self.params.master_seed}:{self.k}:{self.i}".encode()
        return blake2b(material, digest_size=6).hexdigest()

    @classmethod
    def derive(cls, k: int, params: KeyParams = KeyParams(), which_i: int = 0) -> "IdentificationKey":
        """Convenience constructor picking the ``which_i``-th allowed transform index."""
        allowed = transform_index_set(k, params)
        return cls(k, allowed[which_i % len(allowed)], params)


@dataclass(frozen=True)
class KeyStructures:
    """Everything derived from (k, i): the allowed transform indices I(k),
    the local index set L(k, i), the similarity transform, the product
    indices of the keyed variants, and the plain-conjugated commutator."""

    n_matrix: np.ndarray
    transform_indices: tuple[int, ...]
    local_indices: tuple[int, ...]
    transform: np.ndarray
    transform_unitary: np.ndarray
    product_a: tuple[int, ...]
    product_b: tuple[int, ...]


@dataclass(frozen=True)
class OperatorFamily:
    """The operator sets of one scheme instance.

    ``s_a`` and ``s_b`` hold superoperator (d**2 x d**2) matrices; the
    message-space unitaries they conjugate by are kept alongside.  ``n_matrix``
    is the constant group commutator, ``transform`` the similarity transform
    applied to every element (identity for freshly built families), and
    ``index_set`` the local indices the protocol may draw from.
    """

    scheme: int
    dim: int
    s_a: tuple[np.ndarray, ...]
    s_b: tuple[np.ndarray, ...]
    n_matrix: np.ndarray
    transform: np.ndarray
    index_set: tuple[int, ...]
    seed: int | None
    variant: str = "base"
    unitaries_a: tuple[np.ndarray, ...] = ()
    unitaries_b: tuple[np.ndarray, ...] = ()
    base_a0: np.ndarray | None = None
    base_b0: np.ndarray | None = None
    component_w: tuple[np.ndarray, ...] = ()
    component_v: tuple[np.ndarray, ...] = ()
    key_id: str | None = None

    def __post_init__(self):
        for name in ("s_a", "s_b", "unitaries_a", "unitaries_b", "component_w", "component_v"):
            object.__setattr__(self, name, tuple(_frozen(m) for m in getattr(self, name)))
        object.__setattr__(self, "n_matrix", _frozen(self.n_matrix))
        object.__setattr__(self, "transform", _frozen(self.transform))
        for name in ("base_a0", "base_b0"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value))
        object.__setattr__(self, "index_set", tuple(int(x) for x in self.index_set))
        if not self.index_set:
            raise ValueError("index_set must be nonempty")
        n = min(len(self.s_a), len(self.s_b))
        if any(l < 0 or l >= n for l in self.index_set):
            raise ValueError("index_set out of range for the operator sets")

    @property
    def n_a(self) -> int:
        return len(self.s_a)

    @property
    def n_b(self) -> int:
        return len(self.s_b)


@dataclass(frozen=True)
class FamilyValidation:
    passed: bool
    failures: tuple[str, ...]
    commutator_residual: float
    max_phase: float


def build_scheme1_family(
    n_a: int,
    n_b: int,
    dim: int,
    seed: int,
    angles_a=None,
    angles_b=None,
) -> OperatorFamily:
    """Commuting family: y-axis rotations applied to every qubit.

    Angles default to a seeded uniform draw; pass explicit ``angles_a`` /
    ``angles_b`` to pin them (lengths must match the set sizes).
    """
    if n_a < 1 or n_b < 1:
        raise ValueError("set sizes must be at least 1")
    qubits = int(round(np.log2(dim)))
    if 2**qubits != dim:
        raise ValueError(f"scheme 1 needs a power-of-two dim, got {dim}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    if angles_a is None:
        angles_a = rng.uniform(0.0, 2 * np.pi, size=n_a)
    if angles_b is None:
        angles_b = rng.uniform(0.0, 2 * np.pi, size=n_b)
    angles_a = [float(t) for t in angles_a]
    angles_b = [float(t) for t in angles_b]
    if len(angles_a) != n_a or len(angles_b) != n_b:
        raise ValueError("angle list lengths must match the set sizes")

    def bitwise(theta: float) -> np.ndarray:
        gate = rotation_y(theta)
        out = np.eye(1, dtype=complex)
        for _ in range(qubits):
            out = np.kron(out, gate)
        return out

    us_a = tuple(bitwise(t) for t in angles_a)
    us_b = tuple(bitwise(t) for t in angles_b)
    return OperatorFamily(
        scheme=1,
        dim=dim,
        s_a=tuple(unitary_natural(u) for u in us_a),
        s_b=tuple(unitary_natural(u) for u in us_b),
        n_matrix=np.eye(dim * dim, dtype=complex),
        transform=np.eye(dim * dim, dtype=complex),
        index_set=tuple(range(min(n_a, n_b))),
        seed=seed,
        unitaries_a=us_a,
        unitaries_b=us_b,
    )


def build_scheme2_family(
    n_a: int,
    n_b: int,
    seed: int,
    base_a0=HADAMARD,
    base_b0=T_GATE,
    sub_dims: tuple[int, int, int] = (2, 2, 2),
) -> OperatorFamily:
    """Constant-commutator family on a three-factor message space.

    Each A element is base_a0 on factor 1 tensored with a random unitary on
    factor 3; each B element is base_b0 on factor 1 tensored with a random
    unitary on factor 2.  All cross pairs share the group commutator
    (base_a0, base_b0) padded with identities.
    """
    if n_a < 1 or n_b < 1:
        raise ValueError("set sizes must be at least 1")
    base_a0 = as_matrix(base_a0)
    base_b0 = as_matrix(base_b0)
    d1, d2, d3 = sub_dims
    if base_a0.shape != (d1, d1) or base_b0.shape != (d1, d1):
        raise ValueError("base pair must act on the first tensor factor")
    if not is_unitary(base_a0) or not is_unitary(base_b0):
        raise ValueError("base pair must be unitary")
    dim = d1 * d2 * d3
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    ws = tuple(haar_unitary(d3, rng) for _ in range(n_a))
    vs = tuple(haar_unitary(d2, rng) for _ in range(n_b))
    us_a = tuple(np.kron(np.kron(base_a0, np.eye(d2)), w) for w in ws)
    us_b = tuple(np.kron(np.kron(base_b0, v), np.eye(d3)) for v in vs)
    n_msg = np.kron(group_commutator(base_a0, base_b0), np.eye(d2 * d3))
    return OperatorFamily(
        scheme=2,
        dim=dim,
        s_a=tuple(unitary_natural(u) for u in us_a),
        s_b=tuple(unitary_natural(u) for u in us_b),
        n_matrix=unitary_natural(n_msg),
        transform=np.eye(dim * dim, dtype=complex),
        index_set=tuple(range(min(n_a, n_b))),
        seed=seed,
        unitaries_a=us_a,
        unitaries_b=us_b,
        base_a0=base_a0,
        base_b0=base_b0,
        component_w=ws,
        component_v=vs,
    )


def _stream(params: KeyParams, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([params.master_seed, *tags]))


def transform_index_set(k: int, params: KeyParams) -> tuple[int, ...]:
    """I(k): the transform-pool indices the key k is allowed to use."""
    if not (0 <= k < params.key_space):
        raise ValueError(f"key {k} outside the configured key space")
    rng = _stream(params, _TAG_TRANSFORM_SET, k)
    picks = rng.choice(params.transform_pool, size=params.transform_count, replace=False)
    return tuple(sorted(int(x) for x in picks))


def transform_unitary(i: int, dim: int, params: KeyParams) -> np.ndarray:
    """The pool unitary W_i whose conjugation superoperator is T_i."""
    if not (0 <= i < params.transform_pool):
        raise ValueError(f"transform index {i} outside the pool")
    return haar_unitary(dim, _stream(params, _TAG_TRANSFORM, i, dim))


def derive_key_structures(
    k: int,
    i: int,
    family: OperatorFamily,
    params: KeyParams,
    product_arity: int = 2,
) -> KeyStructures:
    """Deterministically expand (k, i) into I(k), L(k, i), the transform T_i
    and the keyed product indices.  Identical inputs reproduce identical
    structures bit for bit.
    """
    allowed = transform_index_set(k, params)
    if i not in allowed:
        raise ValueError(f"transform index {i} not in I(k) = {allowed}")
    w = transform_unitary(i, family.dim, params)
    t = unitary_natural(w)

    n_local = min(family.n_a, family.n_b)
    rng_l = _stream(params, _TAG_LOCAL, k, i)
    lo = min(params.local_min, n_local)
    size = int(rng_l.integers(lo, n_local + 1))
    local = tuple(sorted(int(x) for x in rng_l.choice(n_local, size=size, replace=False)))

    rng_p = _stream(params, _TAG_PRODUCT, k)
    product_a = tuple(int(x) for x in rng_p.integers(0, family.n_a, size=product_arity))
    product_b = tuple(int(x) for x in rng_p.integers(0, family.n_b, size=product_arity))

    n_keyed = t @ family.n_matrix @ dagger(t)
    return KeyStructures(
        n_matrix=n_keyed,
        transform_indices=allowed,
        local_indices=local,
        transform=t,
        transform_unitary=w,
        product_a=product_a,
        product_b=product_b,
    )


_VARIANT_ARITY = {"plain": 0, "pair": 1, "triple": 2}

_VARIANT_ALIASES = {
    "plain": "plain",
    "pair": "pair",
    "pair-product": "pair",
    "triple": "triple",
    "triple-product": "triple",
    "n-product": "nprod",
    "nprod": "nprod",
}


def build_keyed_set(
    key: IdentificationKey,
    family: OperatorFamily,
    variant: str = "plain",
    n_product: int | None = None,
    product_indices: tuple[tuple[int, ...], tuple[int, ...]] | None = None,
) -> OperatorFamily:
    """Conjugate the family by T_i and append the key-indexed right products.

    plain   : elements T A_l T^-1,                N = T N0 T^-1
    pair    : elements T A_l A_k1 T^-1,           N = T (A_k1^2, B_k2^2) T^-1
    triple  : elements T A_l A_k1 A_k2 T^-1,      N = T (A_k2 A_k1 A_k2, ...) T^-1
    n-product: ``n_product`` right factors per side, with the general
    reduction rule fixing N.
    """
    if family.variant != "base":
        raise ValueError("keyed sets are built from base families")
    canon = _VARIANT_ALIASES.get(variant)
    if canon is None:
        raise ValueError(f"unknown variant {variant!r}")
    if canon == "nprod":
        if n_product is None or n_product < 1:
            raise ValueError("n-product variant needs n_product >= 1")
        arity = int(n_product)
    else:
        arity = _VARIANT_ARITY[canon]

    structures = derive_key_structures(key.k, key.i, family, key.params, product_arity=arity)
    if product_indices is not None:
        idx_a, idx_b = (tuple(int(x) for x in t) for t in product_indices)
        if len(idx_a) != arity or len(idx_b) != arity:
            raise ValueError(
                f"variant {canon!r} needs {arity} product indices per side, "
                f"got {len(idx_a)} and {len(idx_b)}"
            )
    else:
        idx_a, idx_b = structures.product_a, structures.product_b
    if any(x < 0 or x >= family.n_a for x in idx_a) or any(x < 0 or x >= family.n_b for x in idx_b):
        raise ValueError("product indices out of range")

    t = structures.transform
    t_inv = dagger(t)
    w = structures.transform_unitary
    w_inv = dagger(w)

    def chain(ops, indices):
        out = np.eye(ops[0].shape[0], dtype=complex)
        for ix in indices:
            out = out @ ops[ix]
        return out

    right_a = chain(family.s_a, idx_a) if arity else np.eye(family.dim**2, dtype=complex)
    right_b = chain(family.s_b, idx_b) if arity else np.eye(family.dim**2, dtype=complex)
    right_ua = chain(family.unitaries_a, idx_a) if arity else np.eye(family.dim, dtype=complex)
    right_ub = chain(family.unitaries_b, idx_b) if arity else np.eye(family.dim, dtype=complex)

    s_a = tuple(t @ (a @ right_a) @ t_inv for a in family.s_a)
    s_b = tuple(t @ (b @ right_b) @ t_inv for b in family.s_b)
    us_a = tuple(w @ (u @ right_ua) @ w_inv for u in family.unitaries_a)
    us_b = tuple(w @ (u @ right_ub) @ w_inv for u in family.unitaries_b)

    if arity == 0:
        n_keyed = t @ family.n_matrix @ t_inv
    else:
        lead_a = family.s_a[idx_a[-1]] @ right_a
        lead_b = family.s_b[idx_b[-1]] @ right_b
        n_keyed = t @ group_commutator(lead_a, lead_b) @ t_inv

    return replace(
        family,
        s_a=s_a,
        s_b=s_b,
        n_matrix=n_keyed,
        transform=t,
        index_set=structures.local_indices,
        variant=canon,
        unitaries_a=us_a,
        unitaries_b=us_b,
        component_w=(),
        component_v=(),
        key_id=key.digest(),
    )


def validate_family(family: OperatorFamily, tol: float | None = None) -> FamilyValidation:
    """Structural checks: every element is a unitary-conjugation
    superoperator, the transform has the same structure, and all cross
    pairs share the commutator N up to a recorded global phase.
    """
    tol = residual_tolerance() if tol is None else tol
    failures: list[str] = []

    for label, ops in (("S_A", family.s_a), ("S_B", family.s_b)):
        for idx, m in enumerate(ops):
            try:
                unitary_from_natural(m, tol)
            except ValueError as exc:
                failures.append(f"{label}[{idx}]: {exc}")
    try:
        unitary_from_natural(family.transform, tol)
    except ValueError as exc:
        failures.append(f"transform: {exc}")

    worst = 0.0
    max_phase = 0.0
    for a in family.s_a:
        for b in family.s_b:
            residual, phase = phase_aligned_distance(group_commutator(a, b), family.n_matrix)
            worst = max(worst, residual)
            max_phase = max(max_phase, abs(phase))
    if worst >= tol:
        failures.append(f"constant-commutator: max residual {worst:.3e} exceeds tolerance")

    return FamilyValidation(not failures, tuple(failures), worst, max_phase)
