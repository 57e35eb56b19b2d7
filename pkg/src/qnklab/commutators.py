"""Additive, scalar-phase and group commutators, plus the numeric
verification routines for the constant-commutator family identities and
the product-set extension.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .config import residual_tolerance
from .linalg import as_matrix, dagger, frobenius, is_unitary, spectral_decomposition

PHASE_ZERO_TOL = 1e-8

COND_LIMIT = 1e12


@dataclass(frozen=True)
class CommutatorReport:
    """Result of a scalar-phase commutation fit.

    ``value`` is the fitted phase in radians when the relation
    ``B @ A = exp(1j * value) * A @ B`` holds within ``residual``; it is
    None when no scalar relation exists at the requested tolerance.
    """

    kind: str
    value: float | None
    residual: float

    @property
    def has_scalar_relation(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class ResidualReport:
    kind: str
    indices_checked: int
    max_residual: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "indices_checked": self.indices_checked,
            "max_residual": self.max_residual,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class ConstantCommutatorResult:
    commutator: np.ndarray
    report: ResidualReport


@dataclass(frozen=True)
class Theorem1Report:
    status: str  # "pass" | "fail" | "precondition not met"
    phase: float | None
    eigenvalue_sum_a: complex | None
    eigenvalue_sum_b: complex | None


def inverse(m) -> np.ndarray:
    """Matrix inverse; adjoint when the input is unitary, LU solve otherwise."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("inverse needs a square matrix")
    if is_unitary(a):
        return dagger(a)
    if np.linalg.cond(a) > COND_LIMIT:
        raise ValueError("matrix is singular or too ill-conditioned to invert")
    return np.linalg.inv(a)


def additive_commutator(a, b) -> np.ndarray:
    """K = AB - BA."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError("additive commutator needs same-dim square matrices")
    return a @ b - b @ a


def group_commutator(a, b) -> np.ndarray:
    """(A, B) = B^-1 A^-1 B A."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError("group commutator needs same-dim square matrices")
    return inverse(b) @ inverse(a) @ b @ a


def strip_global_phase(m) -> np.ndarray:
    """Normalize the largest-magnitude entry to positive real."""
    a = as_matrix(m)
    idx = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    pivot = a[idx]
    if abs(pivot) < 1e-300:
        return a
    return a * (abs(pivot) / pivot)


def phase_aligned_distance(a, b) -> tuple[float, float]:
    """Residual and phase of the best fit ``a ~ exp(1j phase) b``.

    The pivot normalization of :func:`strip_global_phase` is unstable when
    several entries tie in magnitude, so comparisons align phases through
    the overlap angle(<b, a>) instead.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    overlap = complex(np.trace(dagger(b) @ a))
    phase = 0.0 if abs(overlap) < 1e-300 else float(np.angle(overlap))
    return frobenius(a - np.exp(1j * phase) * b), phase


def multiplicative_phase(a, b, tol: float | None = None) -> CommutatorReport:
    """Fit lambda in ``B A = exp(1j lambda) A B``.

    The phase is estimated from the largest-magnitude entry of AB; the fit
    is accepted when the Frobenius residual stays below the tolerance, else
    the report carries ``value=None`` (no scalar relation).
    """
    tol = residual_tolerance() if tol is None else tol
    a = as_matrix(a)
    b = as_matrix(b)
    inverse(a), inverse(b)  # singularity guard
    ba = b @ a
    ab = a @ b
    idx = np.unravel_index(np.argmax(np.abs(ab)), ab.shape)
    if abs(ab[idx]) < 1e-300:
        return CommutatorReport("multiplicative", None, float("inf"))
    lam = float(np.angle(ba[idx] / ab[idx]))
    if lam <= -np.pi + 1e-12:  # signed zero can flip angle(-1) to -pi
        lam = np.pi
    residual = frobenius(ba - np.exp(1j * lam) * ab)
    if residual < tol:
        return CommutatorReport("multiplicative", lam, residual)
    return CommutatorReport("multiplicative", None, residual)


def _phase_is_zero(lam: float, tol: float = PHASE_ZERO_TOL) -> bool:
    return min(abs(lam) % (2 * np.pi), 2 * np.pi - abs(lam) % (2 * np.pi)) < tol


def verify_theorem1(a, b) -> Theorem1Report:
    """Check that a nonzero scalar commutation phase forces traceless
    operators: with ``BA = exp(1j lambda) AB`` and lambda != 0, the
    eigenvalue sums of both unitaries must vanish.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if not is_unitary(a) or not is_unitary(b):
        raise ValueError("verify_theorem1 requires unitary inputs")
    fit = multiplicative_phase(a, b)
    if fit.value is None or _phase_is_zero(fit.value):
        return Theorem1Report("precondition not met", fit.value, None, None)
    sum_a = complex(np.sum(spectral_decomposition(a)[0]))
    sum_b = complex(np.sum(spectral_decomposition(b)[0]))
    ok = abs(sum_a) < PHASE_ZERO_TOL and abs(sum_b) < PHASE_ZERO_TOL
    return Theorem1Report("pass" if ok else "fail", fit.value, sum_a, sum_b)


def verify_constant_commutator(s_a, s_b, tol: float | None = None) -> ConstantCommutatorResult:
    """Check that (A_i, B_j) is one fixed matrix over all cross pairs.

    Returns the commutator of the first pair together with the maximum
    deviation across pairs; ``report.passed`` is False when the deviation
    reaches the tolerance.
    """
    tol = residual_tolerance() if tol is None else tol
    s_a = [as_matrix(m) for m in s_a]
    s_b = [as_matrix(m) for m in s_b]
    if not s_a or not s_b:
        raise ValueError("operator sets must be nonempty")
    n_ref = group_commutator(s_a[0], s_b[0])
    deviation = 0.0
    checked = 0
    for a in s_a:
        inv_a = inverse(a)
        for b in s_b:
            comm = inverse(b) @ inv_a @ b @ a
            deviation = max(deviation, frobenius(comm - n_ref))
            checked += 1
    report = ResidualReport("constant-commutator", checked, deviation, deviation < tol)
    return ConstantCommutatorResult(n_ref, report)


def _require_constant(s_a, s_b, tol: float | None):
    result = verify_constant_commutator(s_a, s_b, tol)
    if not result.report.passed:
        raise ValueError(
            "operator sets do not share a constant group commutator "
            f"(max deviation {result.report.max_residual:.3e})"
        )
    return result


def verify_propositions(s_a, s_b, which: int, tol: float | None = None) -> ResidualReport:
    """Exhaustively check one of the three product identities implied by a
    constant group commutator.

    which=1: the four cancellation relations such as (A_i^-1, B_j B_i^-1) = I.
    which=2: (A_i A_j, B_k B_l) = (A_j^2, B_l^2) over all quadruples.
    which=3: triple products reduce to their two trailing indices.
    """
    tol = residual_tolerance() if tol is None else tol
    _require_constant(s_a, s_b, tol)
    s_a = [as_matrix(m) for m in s_a]
    s_b = [as_matrix(m) for m in s_b]
    inv_a = [inverse(m) for m in s_a]
    inv_b = [inverse(m) for m in s_b]
    n_a, n_b = len(s_a), len(s_b)
    worst = 0.0
    checked = 0

    if which == 1:
        n = min(n_a, n_b)
        eye = np.eye(s_a[0].shape[0])
        for i, j in product(range(n), repeat=2):
            rels = (
                group_commutator(inv_a[i], s_b[j] @ inv_b[i]),
                group_commutator(inv_a[j], s_b[j] @ inv_b[i]),
                group_commutator(s_b[i], s_a[j] @ inv_a[i]),
                group_commutator(s_b[j], s_a[j] @ inv_a[i]),
            )
            worst = max(worst, max(frobenius(r - eye) for r in rels))
            checked += 1
    elif which == 2:
        for i, j in product(range(n_a), repeat=2):
            left_a = s_a[i] @ s_a[j]
            rhs_a = s_a[j] @ s_a[j]
            for k, l in product(range(n_b), repeat=2):
                lhs = group_commutator(left_a, s_b[k] @ s_b[l])
                rhs = group_commutator(rhs_a, s_b[l] @ s_b[l])
                worst = max(worst, frobenius(lhs - rhs))
                checked += 1
    elif which == 3:
        for j1, j2, j3 in product(range(n_a), repeat=3):
            lhs_a = s_a[j1] @ s_a[j2] @ s_a[j3]
            rhs_a = s_a[j3] @ s_a[j2] @ s_a[j3]
            for i1, i2, i3 in product(range(n_b), repeat=3):
                lhs = group_commutator(lhs_a, s_b[i1] @ s_b[i2] @ s_b[i3])
                rhs = group_commutator(rhs_a, s_b[i3] @ s_b[i2] @ s_b[i3])
                worst = max(worst, frobenius(lhs - rhs))
                checked += 1
    else:
        raise ValueError(f"unknown proposition {which!r}, expected 1, 2 or 3")

    return ResidualReport(f"proposition-{which}", checked, worst, worst < tol)


def extend_sets(s_a, s_b, tol: float | None = None):
    """Build the closure sets {A_i A_j^-1} and {B_i B_j^-1}.

    Duplicates (within tolerance) collapse; the identity appears exactly
    once.  Every cross pair of the extended sets group-commutes.
    """
    tol = residual_tolerance() if tol is None else tol
    _require_constant(s_a, s_b, tol)

    def closure(ops):
        ops = [as_matrix(m) for m in ops]
        invs = [inverse(m) for m in ops]
        out: list[np.ndarray] = []
        for i, j in product(range(len(ops)), repeat=2):
            cand = ops[i] @ invs[j]
            if not any(frobenius(cand - seen) < tol for seen in out):
                out.append(cand)
        return tuple(out)

    return closure(s_a), closure(s_b)


def count_non_identity(ops, tol: float | None = None) -> int:
    tol = residual_tolerance() if tol is None else tol
    total = 0
    for m in ops:
        m = as_matrix(m)
        if frobenius(m - np.eye(m.shape[0])) >= tol:
            total += 1
    return total
