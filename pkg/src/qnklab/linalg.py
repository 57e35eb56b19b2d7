"""Dense complex matrix algebra: tensor products, partial traces,
vectorization, spectral decompositions and state distances.

Vectorization convention
------------------------
Density matrices are flattened row-major (numpy's default C order), so

    vec(E @ rho @ E†) == kron(E, E.conj()) @ vec(rho)

holds exactly.  Every module in this package relies on that identity;
``tests/test_linalg.py`` pins the convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import residual_tolerance


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-D complex array and reject non-finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {a.ndim}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix contains NaN or Inf entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def tensor(a, b) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dims, keep) -> np.ndarray:
    """Trace out all subsystems except those listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; ``keep`` is a
    set of subsystem indices.  The reduced matrix preserves the original
    ordering of the kept subsystems, and its trace equals the input trace.
    """
    a = as_matrix(m)
    dims = [int(d) for d in dims]
    n = len(dims)
    total = int(np.prod(dims))
    if a.shape != (total, total):
        raise ValueError(f"matrix shape {a.shape} does not match dims {dims}")
    kept = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in kept):
        raise ValueError(f"keep indices {kept} out of range for {n} subsystems")

    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise ValueError("too many subsystems")
    row = letters[:n]
    col = "".join(letters[n + i] if i in kept else row[i] for i in range(n))
    out = "".join(row[i] for i in kept) + "".join(col[i] for i in kept)
    reduced = np.einsum(f"{row + col}->{out}", a.reshape(dims + dims))
    d_keep = int(np.prod([dims[i] for i in kept])) if kept else 1
    return reduced.reshape(d_keep, d_keep)


def vectorize(rho) -> np.ndarray:
    """Row-major flattening of a square matrix into a length-d**2 vector."""
    if isinstance(rho, DensityMatrix):
        rho = rho.matrix
    a = as_matrix(rho)
    if a.shape[0] != a.shape[1]:
        raise ValueError("only square matrices are vectorized")
    return a.reshape(-1)


def unvectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`; rejects non-square lengths."""
    a = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(a.size)))
    if d * d != a.size:
        raise ValueError(f"vector length {a.size} is not a perfect square")
    return a.reshape(d, d)


def frobenius(m) -> float:
    return float(np.linalg.norm(np.asarray(m)))


def trace_norm(m) -> float:
    """Sum of singular values."""
    return float(np.sum(scipy.linalg.svdvals(as_matrix(m))))


def is_hermitian(m, tol: float | None = None) -> bool:
    a = as_matrix(m)
    tol = residual_tolerance() if tol is None else tol
    return bool(np.max(np.abs(a - dagger(a))) <= tol)


def is_unitary(m, tol: float | None = None) -> bool:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    tol = residual_tolerance() if tol is None else tol
    return frobenius(a @ dagger(a) - np.eye(a.shape[0])) <= tol * a.shape[0]


def spectral_decomposition(u, tol: float | None = None):
    """Eigendecomposition of a normal matrix with orthonormal eigenvectors.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns,
    obtained from a complex Schur decomposition (exactly unitary basis even
    for degenerate spectra).  Raises ValueError on non-normal input.
    """
    a = as_matrix(u)
    tol = residual_tolerance() if tol is None else tol
    scale = max(1.0, frobenius(a))
    if frobenius(a @ dagger(a) - dagger(a) @ a) > tol * scale:
        raise ValueError("spectral_decomposition requires a normal matrix")
    t, z = scipy.linalg.schur(a, output="complex")
    eigvals = np.diag(t).copy()
    if frobenius((z * eigvals) @ dagger(z) - a) > tol * scale:
        raise ValueError("Schur-based decomposition failed to reconstruct input")
    return eigvals, z


@dataclass(frozen=True)
class DensityMatrix:
    """A validated d x d density matrix (Hermitian, unit trace, PSD).

    The wrapped array is copied and marked read-only; instances are safe to
    share.  Validation tolerances come from :func:`residual_tolerance`.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.matrix)
        if a.shape[0] != a.shape[1]:
            raise ValueError("density matrix must be square")
        tol = residual_tolerance()
        if np.max(np.abs(a - dagger(a))) > tol:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(a) - 1.0) > tol:
            raise ValueError("density matrix trace differs from 1")
        eigs = np.linalg.eigvalsh((a + dagger(a)) / 2)
        if eigs.min() < -tol:
            raise ValueError(f"density matrix has negative eigenvalue {eigs.min():.3e}")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Spectrum clipped to be non-negative."""
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)

    @classmethod
    def pure(cls, ket) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, rank: int | None = None) -> "DensityMatrix":
        """Random mixed state from a Ginibre factor of the given rank."""
        rank = dim if rank is None else rank
        g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
        rho = g @ dagger(g)
        return cls(rho / np.trace(rho).real)

    @classmethod
    def random_pure(cls, dim: int, rng: np.random.Generator) -> "DensityMatrix":
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return cls.pure(v)


def _density_array(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)


def trace_distance(rho, sigma) -> float:
    """D(rho, sigma) = half the trace norm of the difference, in [0, 1]."""
    a = _density_array(rho)
    b = _density_array(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(0.5 * trace_norm(a - b), 0.0, 1.0))
