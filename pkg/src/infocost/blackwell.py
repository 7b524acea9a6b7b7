"""Blackwell comparisons between information structures and experiments.

Both representations reduce to linear feasibility problems: a martingale
coupling between posteriors, or a column-stochastic garbling between signal
kernels.  The LPs are dense and small, so they go to scipy's HiGHS solver and
every witness is re-checked against the original constraints before being
trusted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InvariantError, NumericalError
from .structures import InformationStructure, SignalExperiment

FEAS_TOL = 1e-9
REPLICATION_TOL = 1e-10
MAX_ATOMS = 200

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class Relation(str, enum.Enum):
    EQUIVALENT = "equivalent"
    FIRST = "first_more_informative"
    SECOND = "second_more_informative"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class OrderingResult:
    relation: Relation
    witness: np.ndarray | None = None


def _feasible(A_eq: np.ndarray, b_eq: np.ndarray, tol: float) -> np.ndarray | None:
    """Nonnegative ``x`` with ``A_eq x = b_eq`` (within ``tol``), or None."""
    n = A_eq.shape[1]
    res = linprog(
        np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=(0, None),
        method="highs", options=_HIGHS_OPTIONS,
    )
    if res.status == 2:
        return None
    if res.status != 0:
        raise NumericalError(f"LP solver failed: {res.message}")
    x = np.clip(res.x, 0, None)
    if np.abs(A_eq @ x - b_eq).max() > tol:
        return None
    return x


def _check_priors(a: InformationStructure, b: InformationStructure, tol: float):
    if a.n_states != b.n_states:
        raise InvariantError("structures live on different state spaces")
    if np.abs(a.prior - b.prior).max() > tol:
        raise InvariantError(f"priors differ: {a.prior} vs {b.prior}")
    if max(a.n_atoms, b.n_atoms) > MAX_ATOMS:
        raise InvariantError(f"structures are capped at {MAX_ATOMS} atoms")


def dominates(
    fine: InformationStructure, coarse: InformationStructure, tol: float = FEAS_TOL
) -> tuple[bool, np.ndarray | None]:
    """Is ``coarse`` a mean-preserving contraction of ``fine``?

    Searches for a coupling ``W`` (coarse atoms x fine atoms) whose marginals
    are the two weight vectors and in which every coarse posterior is the
    conditional mean of the fine posteriors coupled to it.
    """
    _check_priors(fine, coarse, tol)
    m, n = coarse.n_atoms, fine.n_atoms
    k = fine.n_states
    rows, rhs = [], []
    for i in range(m):
        r = np.zeros((m, n))
        r[i] = 1
        rows.append(r.ravel())
        rhs.append(coarse.weights[i])
    for j in range(n):
        r = np.zeros((m, n))
        r[:, j] = 1
        rows.append(r.ravel())
        rhs.append(fine.weights[j])
    # conditional-mean constraints, one per coarse atom and state
    for i in range(m):
        for x in range(k):
            r = np.zeros((m, n))
            r[i] = fine.posteriors[:, x]
            rows.append(r.ravel())
            rhs.append(coarse.weights[i] * coarse.posteriors[i, x])
    sol = _feasible(np.array(rows), np.array(rhs), tol)
    if sol is None:
        return False, None
    return True, sol.reshape(m, n)


def compare(a: InformationStructure, b: InformationStructure, tol: float = FEAS_TOL) -> OrderingResult:
    ab, w_ab = dominates(a, b, tol)
    ba, w_ba = dominates(b, a, tol)
    if ab and ba:
        return OrderingResult(Relation.EQUIVALENT, w_ab)
    if ab:
        return OrderingResult(Relation.FIRST, w_ab)
    if ba:
        return OrderingResult(Relation.SECOND, w_ba)
    return OrderingResult(Relation.INCOMPARABLE)


def _kernel(e) -> np.ndarray:
    return e.kernel if isinstance(e, SignalExperiment) else np.asarray(e, dtype=float)


def matrix_dominates(P, P_prime, tol: float = FEAS_TOL) -> tuple[bool, np.ndarray | None]:
    """Is ``P`` a garbling of ``P_prime``?

    Looks for a column-stochastic ``M`` with ``M @ P_prime.kernel == P.kernel``.
    Accepts experiments or raw kernels (signals x states).
    """
    A, B = _kernel(P), _kernel(P_prime)
    if A.shape[1] != B.shape[1]:
        raise InvariantError("experiments have different state counts")
    if isinstance(P, SignalExperiment) and isinstance(P_prime, SignalExperiment):
        if np.abs(P.prior - P_prime.prior).max() > tol:
            raise InvariantError("experiments have different priors")
    n, n2 = A.shape[0], B.shape[0]
    k = A.shape[1]
    rows, rhs = [], []
    for j in range(n2):
        r = np.zeros((n, n2))
        r[:, j] = 1
        rows.append(r.ravel())
        rhs.append(1.0)
    for i in range(n):
        for x in range(k):
            r = np.zeros((n, n2))
            r[i] = B[:, x]
            rows.append(r.ravel())
            rhs.append(A[i, x])
    sol = _feasible(np.array(rows), np.array(rhs), tol)
    if sol is None:
        return False, None
    return True, sol.reshape(n, n2)


def replicated_pairs(P, tol: float = REPLICATION_TOL) -> list[tuple[int, int]]:
    """Index pairs of rows that are positive multiples of each other."""
    K = _kernel(P)
    norms = np.linalg.norm(K, axis=1)
    pairs = []
    for i in range(len(K)):
        for j in range(i + 1, len(K)):
            if np.abs(K[i] * norms[j] - K[j] * norms[i]).max() <= tol:
                pairs.append((i, j))
    return pairs


def merge_replicated_rows(P, tol: float = REPLICATION_TOL) -> np.ndarray:
    """Sum together rows that are multiples of each other; drop zero rows."""
    K = _kernel(P)
    K = K[K.sum(axis=1) > 0]
    norms = np.linalg.norm(K, axis=1)
    groups: list[list[int]] = []
    for i in range(len(K)):
        for g in groups:
            j = g[0]
            if np.abs(K[i] * norms[j] - K[j] * norms[i]).max() <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return np.array([K[g].sum(axis=0) for g in groups])


def _is_permutation(M: np.ndarray, tol: float = FEAS_TOL) -> bool:
    if M.shape[0] != M.shape[1]:
        return False
    R = np.round(M)
    if np.abs(M - R).max() > tol:
        return False
    return bool(np.all(R.sum(axis=0) == 1) and np.all(R.sum(axis=1) == 1))


def mutual_garbling_is_permutation(P, P_prime, tol: float = FEAS_TOL) -> bool:
    """Check that mutual garblings between ``P`` and ``P_prime`` are permutations.

    ``P`` must be free of replicated rows.  Replicated rows of ``P_prime`` are
    merged first, since splitting a signal into proportional copies produces a
    Blackwell-equivalent experiment with more rows.  Raises
    :class:`InvariantError` when the preconditions fail.
    """
    A = _kernel(P)
    A = A[A.sum(axis=1) > 0]
    if replicated_pairs(A):
        raise InvariantError("P has replicated rows")
    B = merge_replicated_rows(P_prime)
    ok1, M1 = matrix_dominates(A, B, tol)
    ok2, M2 = matrix_dominates(B, A, tol)
    if not (ok1 and ok2):
        raise InvariantError("P and P_prime are not mutual garblings")
    return _is_permutation(M1, tol * 10) and _is_permutation(M2, tol * 10)
