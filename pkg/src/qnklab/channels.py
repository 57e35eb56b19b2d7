"""Trace-preserving quantum operations: Kraus form, the superoperator
acting on vectorized states, dilation extraction and Choi reshuffling.

With the row-major vectorization of :mod:`qnklab.linalg`, the matrix of a
channel with Kraus operators {E_i} acting on vec(rho) is

    sum_i kron(E_i, E_i.conj())

and the (unnormalized, trace d) Choi matrix is the reshuffle of that
matrix: ``sum_i vec(E_i) vec(E_i)†`` with the output factor first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import residual_tolerance
from .linalg import DensityMatrix, as_matrix, dagger, frobenius, is_unitary, partial_trace

KRAUS_PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class Channel:
    """A trace-preserving quantum operation in Kraus form.

    The superoperator matrix (``natural``) is computed once at construction
    and cached; Kraus operators are copied and frozen.
    """

    kraus: tuple[np.ndarray, ...]
    natural: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ops = tuple(as_matrix(e) for e in self.kraus)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(e.shape != (d, d) for e in ops):
            raise ValueError("all Kraus operators must be square with equal dims")
        tol = residual_tolerance()
        tp = sum(dagger(e) @ e for e in ops)
        if frobenius(tp - np.eye(d)) > tol * d:
            raise ValueError("Kraus set is not trace-preserving within tolerance")
        frozen = []
        for e in ops:
            e = e.copy()
            e.flags.writeable = False
            frozen.append(e)
        nat = sum(np.kron(e, e.conj()) for e in frozen)
        nat.flags.writeable = False
        object.__setattr__(self, "kraus", tuple(frozen))
        object.__setattr__(self, "natural", nat)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]


def identity_channel(dim: int) -> Channel:
    return Channel((np.eye(dim),))


def unitary_channel(u) -> Channel:
    u = as_matrix(u)
    if not is_unitary(u):
        raise ValueError("unitary_channel requires a unitary matrix")
    return Channel((u,))


def natural_rep(ch: Channel) -> np.ndarray:
    """The d**2 x d**2 matrix acting on vectorized density matrices."""
    return ch.natural


def unitary_natural(u) -> np.ndarray:
    """kron(U, U.conj()): the superoperator of conjugation by a unitary."""
    u = as_matrix(u)
    if not is_unitary(u):
        raise ValueError("unitary_natural requires a unitary matrix")
    return np.kron(u, u.conj())


def apply(ch: Channel, rho: DensityMatrix) -> DensityMatrix:
    """Kraus-sum application; the output is validated as a density matrix."""
    a = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    if a.shape[0] != ch.dim:
        raise ValueError(f"state dim {a.shape[0]} does not match channel dim {ch.dim}")
    out = sum(e @ a @ dagger(e) for e in ch.kraus)
    return DensityMatrix(out)


def compose(second: Channel, first: Channel) -> Channel:
    """The channel ``second after first``; Kraus products, matching map order."""
    if second.dim != first.dim:
        raise ValueError("cannot compose channels of different dims")
    return Channel(tuple(f @ e for f in second.kraus for e in first.kraus))


def kraus_from_dilation(u, ancilla_dim: int, prune_tol: float = KRAUS_PRUNE_TOL) -> Channel:
    """Extract the Kraus set of the channel obtained by acting with the
    unitary ``u`` on ancilla (initialized to |0>) tensor message, then
    tracing out the ancilla.

    The Kraus operators are the ancilla blocks ``<e_k| u |0>``; operators
    with spectral norm below ``prune_tol`` are dropped.
    """
    u = as_matrix(u)
    total = u.shape[0]
    if total % ancilla_dim != 0:
        raise ValueError(f"dim {total} not divisible by ancilla dim {ancilla_dim}")
    if not is_unitary(u):
        raise ValueError("dilation requires a unitary matrix")
    msg = total // ancilla_dim
    blocks = u.reshape(ancilla_dim, msg, ancilla_dim, msg)
    ops = [blocks[k, :, 0, :] for k in range(ancilla_dim)]
    kept = [e for e in ops if np.linalg.norm(e, 2) >= prune_tol]
    return Channel(tuple(kept))


def choi_reshuffle(natural) -> np.ndarray:
    """Index permutation between the superoperator matrix and the Choi
    matrix (output factor first); it is an involution.
    """
    m = as_matrix(natural)
    dsq = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise ValueError("reshuffle needs a square matrix")
    d = int(round(np.sqrt(dsq)))
    if d * d != dsq:
        raise ValueError(f"dimension {dsq} is not a perfect square")
    return m.reshape(d, d, d, d).swapaxes(1, 2).reshape(dsq, dsq)


def choi_matrix(ch: Channel) -> np.ndarray:
    return choi_reshuffle(ch.natural)


def check_choi(natural) -> tuple[float, float]:
    """Residuals (negativity, TP defect) of the Choi matrix of a superoperator.

    negativity = most negative eigenvalue of the Hermitized Choi (0 if PSD);
    TP defect  = Frobenius distance of the output-traced Choi from identity.
    """
    j = choi_reshuffle(natural)
    d = int(round(np.sqrt(j.shape[0])))
    herm = (j + dagger(j)) / 2
    negativity = float(max(0.0, -np.linalg.eigvalsh(herm).min()))
    tp_defect = frobenius(partial_trace(j, [d, d], keep=[1]) - np.eye(d))
    return negativity, tp_defect


def unitary_from_natural(natural, tol: float | None = None) -> np.ndarray:
    """Recover E from a matrix of the form kron(E, E.conj()) with E unitary.

    Works through the rank-one structure of the Choi matrix.  Raises
    ValueError when the input does not have that structure (rank > 1,
    non-PSD Choi, or non-unitary E).
    """
    tol = residual_tolerance() if tol is None else tol
    m = as_matrix(natural)
    j = choi_reshuffle(m)
    d = int(round(np.sqrt(j.shape[0])))
    herm = (j + dagger(j)) / 2
    if frobenius(herm - j) > tol * d:
        raise ValueError("Choi matrix is not Hermitian: not a unitary conjugation")
    vals, vecs = np.linalg.eigh(herm)
    if vals[:-1].size and np.max(np.abs(vals[:-1])) > tol * d:
        raise ValueError("Choi matrix has rank > 1: not a unitary conjugation")
    top = vals[-1]
    if abs(top - d) > tol * d:
        raise ValueError("Choi trace defect: map is not trace preserving")
    e = np.sqrt(top) * vecs[:, -1].reshape(d, d)
    if not is_unitary(e, tol):
        raise ValueError("extracted operator is not unitary")
    if frobenius(np.kron(e, e.conj()) - m) > tol * d * d:
        raise ValueError("matrix is not a unitary conjugation superoperator")
    return e
