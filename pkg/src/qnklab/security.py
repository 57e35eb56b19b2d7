"""Indistinguishability and key-security evaluation.

Three layers:

* averaged wire operators: the superoperators an eavesdropper effectively
  sees at each of the three passes once the key and local randomness are
  marginalized out;
* diamond norms of differences of such maps, computed by semidefinite
  programming and cross-checked per call against the Choi trace-norm
  sandwich ``tn(J)/d <= dnorm <= tn(J)``;
* the state-level and operator-level security checks (pairwise cipher
  distances, common-state radius, the three wire-operator norms, the
  per-key sufficient conditions, and pairwise key comparisons).

The asymptotic 1/poly(n) bounds of the security definitions have no
content at a fixed dimension; every check here takes an explicit epsilon
threshold instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import cvxpy as cp
import numpy as np

from .channels import choi_reshuffle
from .commutators import inverse
from .config import residual_tolerance
from .families import OperatorFamily
from .linalg import (
    DensityMatrix,
    as_matrix,
    dagger,
    trace_distance,
    trace_norm,
    unvectorize,
    vectorize,
)

PROB_TOL = 1e-12

SDP_EPS = 1e-9

BOUND_SLACK = 1e-6


@dataclass(frozen=True)
class CipherAverages:
    """Averaged wire superoperators M1, M2, M3 and the distributions that
    produced them."""

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    key_probs: tuple[float, ...]
    local_probs: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class SecurityVerdict:
    criterion: str  # "Def1" | "Def2" | "Def3" | "Def4" | "Sufficient"
    epsilon: float
    measured: dict
    passed: bool

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "epsilon": self.epsilon,
            "measured": {k: float(v) for k, v in self.measured.items()},
            "pass": self.passed,
        }


@dataclass(frozen=True)
class IndistinguishabilityResult:
    def1: SecurityVerdict
    def2: SecurityVerdict
    tau: DensityMatrix
    equivalence_ok: bool


@dataclass(frozen=True)
class OperatorSecurityResult:
    def3: SecurityVerdict
    sufficient: SecurityVerdict
    implication_ok: bool


def _normalized_probs(probs, size: int, what: str) -> tuple[float, ...]:
    if probs is None:
        return tuple([1.0 / size] * size)
    p = tuple(float(x) for x in probs)
    if len(p) != size:
        raise ValueError(f"{what} distribution needs {size} entries, got {len(p)}")
    if any(x < 0 for x in p):
        raise ValueError(f"{what} distribution has negative entries")
    if abs(sum(p) - 1.0) > PROB_TOL:
        raise ValueError(f"{what} distribution sums to {sum(p)}, not 1")
    return p


def _as_families(families) -> list[OperatorFamily]:
    if isinstance(families, OperatorFamily):
        return [families]
    fams = list(families)
    if not fams:
        raise ValueError("need at least one operator family")
    return fams


def wire_operators(family: OperatorFamily, local_probs=None):
    """The three l-averaged superoperators of one keyed family:
    sum_l1 p A, sum p p B A, and sum p p A^-1 B A."""
    probs = _normalized_probs(local_probs, len(family.index_set), "local")
    dsq = family.dim**2
    w1 = np.zeros((dsq, dsq), dtype=complex)
    w2 = np.zeros_like(w1)
    w3 = np.zeros_like(w1)
    for p1, l1 in zip(probs, family.index_set):
        a = family.s_a[l1]
        a_inv = inverse(a)
        w1 += p1 * a
        for p2, l2 in zip(probs, family.index_set):
            ba = family.s_b[l2] @ a
            w2 += p1 * p2 * ba
            w3 += p1 * p2 * (a_inv @ ba)
    return w1, w2, w3


def cipher_average_operators(families, key_probs=None, local_probs=None) -> CipherAverages:
    """Average the wire operators over the key distribution as well.

    ``families`` is one keyed family or a sequence of them (one per key
    pair); ``key_probs`` weighs them and ``local_probs`` weighs the local
    indices inside each family.  Distributions must sum to one.
    """
    fams = _as_families(families)
    kp = _normalized_probs(key_probs, len(fams), "key")
    dsq = fams[0].dim ** 2
    if any(f.dim != fams[0].dim for f in fams):
        raise ValueError("families must share one message dimension")
    m1 = np.zeros((dsq, dsq), dtype=complex)
    m2 = np.zeros_like(m1)
    m3 = np.zeros_like(m1)
    locals_used = []
    for weight, fam in zip(kp, fams):
        lp = _normalized_probs(local_probs, len(fam.index_set), "local")
        locals_used.append(lp)
        w1, w2, w3 = wire_operators(fam, lp)
        m1 += weight * w1
        m2 += weight * w2
        m3 += weight * w3
    return CipherAverages(m1, m2, m3, kp, tuple(locals_used))


def choi_bounds(delta) -> tuple[float, float]:
    """Trace-norm sandwich for the diamond norm of a superoperator."""
    m = as_matrix(delta)
    d = int(round(np.sqrt(m.shape[0])))
    tn = trace_norm(choi_reshuffle(m))
    return tn / d, tn


def _hull_distance(points: np.ndarray) -> float:
    """Distance from the origin to the convex hull of complex points.

    Zero when no open half-plane through the origin contains every point
    (largest angular gap at most pi); otherwise the minimum over all
    point-to-segment distances.
    """
    pts = np.asarray(points, dtype=complex).reshape(-1)
    angles = np.sort(np.angle(pts))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
    if gaps.max() <= np.pi + 1e-12:
        return 0.0
    best = float(np.min(np.abs(pts)))
    for a, b in combinations(pts, 2):
        span = b - a
        denom = abs(span) ** 2
        if denom < 1e-30:
            continue
        t = float(np.clip(-np.real(a * np.conj(span)) / denom, 0.0, 1.0))
        best = min(best, abs(a + t * span))
    return best


def unitary_pair_diamond_distance(u, v) -> float:
    """Closed form for the diamond distance of two unitary conjugations:
    2 sqrt(1 - nu**2) with nu the distance from the origin to the convex
    hull of the eigenvalues of U† V."""
    u = as_matrix(u)
    v = as_matrix(v)
    nu = _hull_distance(np.linalg.eigvals(dagger(u) @ v))
    return 2.0 * float(np.sqrt(max(0.0, 1.0 - nu * nu)))


def diamond_norm(delta, solver_eps: float = SDP_EPS, check_bounds: bool = True) -> float:
    """Diamond norm of a superoperator difference via the Watrous SDP.

    The input acts on vectorized d x d matrices (so it is d**2 x d**2).
    Every call is checked against the Choi sandwich; a violation beyond
    solver slack raises RuntimeError.
    """
    m = as_matrix(delta)
    dsq = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise ValueError("superoperator must be square")
    d = int(round(np.sqrt(dsq)))
    if d * d != dsq:
        raise ValueError(f"superoperator dimension {dsq} is not a perfect square")

    j = choi_reshuffle(m)
    lower, upper = choi_bounds(m)
    if upper < 1e-14:
        return 0.0

    x = cp.Variable((dsq, dsq), complex=True)
    rho0 = cp.Variable((d, d), hermitian=True)
    rho1 = cp.Variable((d, d), hermitian=True)
    ident = np.eye(d)
    block = cp.bmat([[cp.kron(ident, rho0), x], [x.H, cp.kron(ident, rho1)]])
    problem = cp.Problem(
        cp.Maximize(cp.real(cp.trace(j.conj().T @ x))),
        [block >> 0, cp.trace(rho0) == 1, cp.trace(rho1) == 1],
    )
    problem.solve(solver=cp.SCS, eps_abs=solver_eps, eps_rel=solver_eps)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise RuntimeError(f"diamond norm SDP failed with status {problem.status}")
    value = float(problem.value)

    if check_bounds:
        slack = BOUND_SLACK + 10 * solver_eps * max(1.0, upper)
        if value < lower - slack or value > upper + slack:
            raise RuntimeError(
                f"diamond norm {value:.6e} violates Choi bounds [{lower:.6e}, {upper:.6e}]"
            )
    return value


def check_indistinguishability(ciphers, epsilon: float) -> IndistinguishabilityResult:
    """Evaluate both state-level security readings on three cipher states.

    The pairwise reading passes when every mutual trace distance stays
    below epsilon.  The common-state reading searches the Euclidean
    barycenter first and falls back to the first cipher, passing when
    every cipher sits within epsilon of the chosen reference.  The
    triangle bound linking the two readings is verified on the instance.
    """
    states = [c if isinstance(c, DensityMatrix) else DensityMatrix(as_matrix(c)) for c in ciphers]
    if len(states) != 3:
        raise ValueError("need exactly three cipher states, fewer or more given")

    pairwise = {
        f"D(rho{i + 1},rho{j + 1})": trace_distance(states[i], states[j])
        for i, j in combinations(range(3), 2)
    }
    def1 = SecurityVerdict("Def1", epsilon, pairwise, all(v < epsilon for v in pairwise.values()))

    barycenter = DensityMatrix(sum(s.matrix for s in states) / 3)
    candidates = [barycenter, states[0]]
    radii = [max(trace_distance(s, tau) for s in states) for tau in candidates]
    tau = candidates[int(np.argmin(radii))]
    measured2 = {f"D(rho{i + 1},tau)": trace_distance(states[i], tau) for i in range(3)}
    def2 = SecurityVerdict("Def2", epsilon, measured2, all(v < epsilon for v in measured2.values()))

    tol = residual_tolerance()
    equivalence_ok = all(
        pairwise[f"D(rho{i + 1},rho{j + 1})"]
        <= measured2[f"D(rho{i + 1},tau)"] + measured2[f"D(rho{j + 1},tau)"] + tol
        for i, j in combinations(range(3), 2)
    )
    return IndistinguishabilityResult(def1, def2, tau, equivalence_ok)


def check_operator_security(
    families,
    epsilon: float,
    key_probs=None,
    local_probs=None,
    solver_eps: float = SDP_EPS,
) -> OperatorSecurityResult:
    """Operator-level security: the three averaged-wire diamond norms, and
    separately the per-key sufficient conditions.

    The middle norm is evaluated on the jointly averaged difference
    ``sum p p (B A - A^-1 B A)`` exactly as defined.  When the sufficient
    conditions pass at epsilon the wire norms must pass at 2 epsilon; a
    violation of that implication raises RuntimeError.
    """
    fams = _as_families(families)
    averages = cipher_average_operators(fams, key_probs, local_probs)
    kp = averages.key_probs

    joint_23 = np.zeros_like(averages.m2)
    for weight, fam, lp in zip(kp, fams, averages.local_probs):
        for p1, l1 in zip(lp, fam.index_set):
            a = fam.s_a[l1]
            a_inv = inverse(a)
            for p2, l2 in zip(lp, fam.index_set):
                ba = fam.s_b[l2] @ a
                joint_23 += weight * p1 * p2 * (ba - a_inv @ ba)

    def3_measured = {
        "||M1-M2||": diamond_norm(averages.m1 - averages.m2, solver_eps),
        "||M2-M3||": diamond_norm(joint_23, solver_eps),
        "||M1-M3||": diamond_norm(averages.m1 - averages.m3, solver_eps),
    }
    def3 = SecurityVerdict(
        "Def3", epsilon, def3_measured, all(v < epsilon for v in def3_measured.values())
    )

    ident = np.eye(fams[0].dim ** 2, dtype=complex)
    worst_b = 0.0
    worst_a_inv = 0.0
    worst_wire3 = 0.0
    for fam, lp in zip(fams, averages.local_probs):
        b_avg = sum(p2 * fam.s_b[l2] for p2, l2 in zip(lp, fam.index_set))
        worst_b = max(worst_b, diamond_norm(ident - b_avg, solver_eps))
        for l1 in fam.index_set:
            a_inv = inverse(fam.s_a[l1])
            worst_a_inv = max(worst_a_inv, diamond_norm(ident - a_inv, solver_eps))
            worst_wire3 = max(worst_wire3, diamond_norm(ident - a_inv @ b_avg, solver_eps))
    sufficient_measured = {
        "||I-avg(B)||": worst_b,
        "||I-A^-1||": worst_a_inv,
        "||I-A^-1 avg(B)||": worst_wire3,
    }
    sufficient = SecurityVerdict(
        "Sufficient",
        epsilon,
        sufficient_measured,
        all(v < epsilon for v in sufficient_measured.values()),
    )

    implication_ok = (not sufficient.passed) or all(
        v < 2 * epsilon + BOUND_SLACK for v in def3_measured.values()
    )
    if not implication_ok:
        raise RuntimeError("sufficient conditions passed but wire norms exceed 2 epsilon")
    return OperatorSecurityResult(def3, sufficient, implication_ok)


def check_key_security(
    keyed_families,
    epsilon: float,
    local_probs=None,
    solver_eps: float = SDP_EPS,
) -> SecurityVerdict:
    """Pairwise key indistinguishability: for every pair of keyed families
    the three l-averaged wire operators must be within epsilon in diamond
    norm.  A single key passes vacuously.
    """
    fams = _as_families(keyed_families)
    wires = [wire_operators(f, local_probs) for f in fams]
    measured: dict = {}
    for (ia, wa), (ib, wb) in combinations(enumerate(wires), 2):
        for wire_idx in range(3):
            name = f"keys({ia},{ib}).wire{wire_idx + 1}"
            measured[name] = diamond_norm(wa[wire_idx] - wb[wire_idx], solver_eps)
    passed = all(v < epsilon for v in measured.values())
    return SecurityVerdict("Def4", epsilon, measured, passed)


def averaged_cipher_states(averages: CipherAverages, reference: DensityMatrix):
    """Apply the averaged wire operators to a reference input, giving the
    three cipher states an eavesdropper would average over many sessions."""
    v = vectorize(reference)
    return tuple(
        DensityMatrix(unvectorize(m @ v)) for m in (averages.m1, averages.m2, averages.m3)
    )
