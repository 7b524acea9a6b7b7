"""Beliefs, information structures, signal experiments and Markov kernels.

An information structure is a finitely supported distribution over posterior
beliefs; its mean is the prior.  Everything here is immutable: arrays held by
the containers are flagged read-only and every operation returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvariantError

MERGE_TOL = 1e-12
PRUNE_TOL = 1e-15
DRIFT_TOL = 1e-9
MARTINGALE_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_belief(p, n_states: int | None = None, tol: float = DRIFT_TOL) -> np.ndarray:
    """Validate ``p`` as a point of the simplex and return it as a float array.

    Entries in ``[-tol, 0)`` are clipped and a sum within ``tol`` of one is
    renormalized; anything worse raises :class:`InvariantError`.
    """
    b = np.array(p, dtype=float).ravel()
    if b.size < 2:
        raise InvariantError("a belief needs at least two states")
    if n_states is not None and b.size != n_states:
        raise InvariantError(f"belief has {b.size} states, expected {n_states}")
    if not np.all(np.isfinite(b)):
        raise InvariantError("belief has non-finite entries")
    if b.min() < -tol:
        raise InvariantError(f"belief has negative entry {b.min():.3g}")
    b = np.clip(b, 0.0, None)
    s = b.sum()
    if abs(s - 1.0) > tol:
        raise InvariantError(f"belief sums to {float(s)!r}, not 1")
    return b / s


def _as_beliefs(P: np.ndarray, tol: float = DRIFT_TOL) -> np.ndarray:
    """Row-wise :func:`as_belief` for a 2-D array."""
    if P.shape[1] < 2:
        raise InvariantError("a belief needs at least two states")
    if not np.all(np.isfinite(P)):
        raise InvariantError("belief has non-finite entries")
    if P.min() < -tol:
        raise InvariantError(f"belief has negative entry {P.min():.3g}")
    P = np.clip(P, 0.0, None)
    s = P.sum(axis=1)
    bad = np.abs(s - 1.0) > tol
    if bad.any():
        raise InvariantError(f"belief sums to {float(s[bad][0])!r}, not 1")
    return P / s[:, None]


def _key(b: np.ndarray, tol: float) -> bytes:
    """Hash key; equal keys imply max-norm distance below ``tol``."""
    return np.rint(b / tol).astype(np.int64).tobytes()


def _keys(P: np.ndarray, tol: float) -> list[bytes]:
    """Row-wise :func:`_key` in one pass."""
    return [r.tobytes() for r in np.rint(P / tol).astype(np.int64)]


def _group_duplicates(points: np.ndarray, tol: float) -> np.ndarray:
    """Label rows of ``points``; rows within ``tol`` (max-norm) of an earlier
    representative share its label.  Labels follow first appearance."""
    n = len(points)
    if n == 2:
        return np.array([0, 0 if np.abs(points[0] - points[1]).max() <= tol else 1])
    labels = np.full(n, -1, dtype=int)
    reps: list[int] = []
    for i in range(n):
        if reps:
            d = np.abs(points[reps] - points[i]).max(axis=1)
            j = int(np.argmin(d))
            if d[j] <= tol:
                labels[i] = labels[reps[j]]
                continue
        labels[i] = len(reps)
        reps.append(i)
    return labels


@dataclass(frozen=True, eq=False)
class InformationStructure:
    """Finitely supported distribution over posterior beliefs.

    Construction normalizes the weights, prunes atoms lighter than
    ``PRUNE_TOL`` and merges posteriors that agree within ``MERGE_TOL``.
    """

    weights: np.ndarray
    posteriors: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        post = np.array(self.posteriors, dtype=float)
        if post.ndim != 2:
            raise InvariantError("posteriors must be a 2-D array (atoms x states)")
        if len(w) != len(post):
            raise InvariantError("one weight per posterior is required")
        if len(w) == 0:
            raise InvariantError("an information structure needs at least one atom")
        if not np.all(np.isfinite(w)) or w.min() < 0:
            raise InvariantError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise InvariantError("weights sum to zero")
        post = _as_beliefs(post)
        w = w / total
        keep = w > PRUNE_TOL
        w, post = w[keep], post[keep]
        w = w / w.sum()

        labels = _group_duplicates(post, MERGE_TOL)
        k = labels.max() + 1
        if k < len(w):
            mw = np.bincount(labels, weights=w, minlength=k)
            mp = np.zeros((k, post.shape[1]))
            np.add.at(mp, labels, w[:, None] * post)
            post = mp / mw[:, None]
            w = mw
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "posteriors", _frozen(post))

    @classmethod
    def _trusted(cls, weights: np.ndarray, posteriors: np.ndarray) -> "InformationStructure":
        """Skip validation; for internal callers whose atoms are valid and distinct."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "weights", _frozen(weights))
        object.__setattr__(obj, "posteriors", _frozen(posteriors))
        return obj

    @classmethod
    def point_mass(cls, belief) -> "InformationStructure":
        b = as_belief(belief)
        return cls(np.ones(1), b[None, :])

    @classmethod
    def full_revelation(cls, prior) -> "InformationStructure":
        mu = as_belief(prior)
        keep = mu > 0
        return cls(mu[keep], np.eye(len(mu))[keep])

    @cached_property
    def prior(self) -> np.ndarray:
        return _frozen(self.weights @ self.posteriors)

    @property
    def n_atoms(self) -> int:
        return len(self.weights)

    @property
    def n_states(self) -> int:
        return self.posteriors.shape[1]

    def __len__(self):
        return self.n_atoms

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(zip(self.weights.tolist(), self.posteriors))

    def __repr__(self):
        atoms = ", ".join(
            f"({w:.6g}, {np.array2string(p, precision=6, separator=',')})" for w, p in self
        )
        return f"InformationStructure([{atoms}])"

    def is_point_mass(self, tol: float = MERGE_TOL) -> bool:
        return bool(np.abs(self.posteriors - self.prior).max() <= tol)

    def sorted(self) -> "InformationStructure":
        """Same structure with atoms in lexicographic order of posteriors."""
        order = np.lexsort(self.posteriors.T[::-1])
        return InformationStructure(self.weights[order], self.posteriors[order])

    def allclose(self, other: "InformationStructure", tol: float = 1e-12) -> bool:
        """Atomwise equality up to reordering."""
        if self.n_states != other.n_states or self.n_atoms != other.n_atoms:
            return False
        used = np.zeros(other.n_atoms, dtype=bool)
        for w, p in self:
            d = np.abs(other.posteriors - p).max(axis=1)
            d[used] = np.inf
            j = int(np.argmin(d))
            if d[j] > tol or abs(other.weights[j] - w) > tol:
                return False
            used[j] = True
        return True


def make_structure(atoms: Iterable[tuple[float, Sequence[float]]]) -> InformationStructure:
    """Build a structure from ``(weight, posterior)`` pairs."""
    atoms = list(atoms)
    if not atoms:
        raise InvariantError("no atoms given")
    w = np.array([a[0] for a in atoms], dtype=float)
    if np.any(w < 0):
        raise InvariantError("negative weight")
    dims = {len(np.ravel(a[1])) for a in atoms}
    if len(dims) != 1:
        raise InvariantError(f"posteriors have mixed dimensions {sorted(dims)}")
    return InformationStructure(w, np.array([np.ravel(a[1]) for a in atoms], dtype=float))


@dataclass(frozen=True, eq=False)
class SignalExperiment:
    """Prior plus a signal kernel; ``kernel[i, x]`` is P(signal i | state x)."""

    prior: np.ndarray
    kernel: np.ndarray

    def __post_init__(self):
        mu = as_belief(self.prior)
        P = np.array(self.kernel, dtype=float)
        if P.ndim != 2 or P.shape[1] != len(mu):
            raise InvariantError(f"kernel must have shape (signals, {len(mu)})")
        if P.shape[0] < 1:
            raise InvariantError("kernel needs at least one signal")
        if not np.all(np.isfinite(P)) or P.min() < -DRIFT_TOL:
            raise InvariantError("kernel entries must be finite and nonnegative")
        P = np.clip(P, 0.0, None)
        cols = P.sum(axis=0)
        if np.abs(cols - 1).max() > DRIFT_TOL:
            raise InvariantError(f"kernel columns sum to {cols}, not 1")
        object.__setattr__(self, "prior", _frozen(mu))
        object.__setattr__(self, "kernel", _frozen(P / cols))

    @property
    def n_signals(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_states(self) -> int:
        return self.kernel.shape[1]


def from_experiment(e: SignalExperiment) -> InformationStructure:
    """Distribution of Bayes posteriors induced by an experiment."""
    joint = e.kernel * e.prior  # signal x state
    p = joint.sum(axis=1)
    keep = p > PRUNE_TOL
    return InformationStructure(p[keep], joint[keep] / p[keep, None])


def to_experiment(pi: InformationStructure) -> SignalExperiment:
    """Canonical experiment with one signal per atom.

    Refuses structures whose prior has a zero coordinate: the kernel column
    for that state is undetermined.
    """
    mu = pi.prior
    if np.any(mu <= 0):
        raise InvariantError("prior is not of full support; structure is not generic")
    kernel = pi.weights[:, None] * pi.posteriors / mu
    return SignalExperiment(mu, kernel)


def dilution(pi: InformationStructure, lam: float) -> InformationStructure:
    """``lam * pi + (1 - lam) * point mass at the prior``."""
    if not 0 < lam <= 1:
        raise InvariantError(f"dilution factor must lie in (0, 1], got {lam}")
    w = np.append(lam * pi.weights, 1.0 - lam)
    post = np.vstack([pi.posteriors, pi.prior])
    return InformationStructure(w, post)


def mix(parts: Sequence[tuple[float, InformationStructure]]) -> InformationStructure:
    """Mixture of structures sharing a common prior."""
    parts = list(parts)
    if not parts:
        raise InvariantError("nothing to mix")
    mu = parts[0][1].prior
    for _, s in parts[1:]:
        if s.n_states != len(mu) or np.abs(s.prior - mu).max() > MARTINGALE_TOL:
            raise InvariantError("mixed structures must share the same prior")
    lam = np.array([p for p, _ in parts], dtype=float)
    if np.any(lam < 0) or lam.sum() <= 0:
        raise InvariantError("mixture weights must be nonnegative with positive sum")
    lam = lam / lam.sum()
    w = np.concatenate([l * s.weights for l, (_, s) in zip(lam, parts)])
    post = np.vstack([s.posteriors for _, s in parts])
    return InformationStructure(w, post)


class MarkovKernel:
    """Finite table mapping source beliefs to conditional structures.

    For acquisition kernels every conditional structure must average back to
    its source (the martingale property).  Disposal kernels carry no such
    requirement; their validity depends on the law they are applied to.
    """

    def __init__(
        self,
        entries: Iterable[tuple[Sequence[float], InformationStructure]],
        acquisition: bool = True,
        tol: float = MARTINGALE_TOL,
    ):
        entries = list(entries)
        if not entries:
            raise InvariantError("a kernel needs at least one entry")
        try:
            sources = np.array([np.ravel(s) for s, _ in entries], dtype=float)
        except ValueError as exc:
            raise InvariantError("kernel sources have mixed dimensions") from exc
        sources = _as_beliefs(sources)
        structures = tuple(s for _, s in entries)
        k = sources.shape[1]
        if any(st.n_states != k for st in structures):
            raise InvariantError("kernel entries disagree on the state count")
        if acquisition:
            gap = np.abs(np.array([st.prior for st in structures]) - sources).max(axis=1)
            if gap.max() > tol:
                j = int(np.argmax(gap))
                raise InvariantError(
                    f"martingale violation at source {sources[j]}: "
                    f"structure mean {structures[j].prior}"
                )
        n = len(sources)
        if 1 < n <= 2048:
            d = np.abs(sources[:, None, :] - sources[None, :, :]).max(axis=2)
            np.fill_diagonal(d, np.inf)
            dup = bool((d <= tol).any())
        else:
            dup = n > 1 and _group_duplicates(sources, tol).max() + 1 < n
        if dup:
            raise InvariantError("a source belief appears more than once")
        self.sources = _frozen(sources)
        self.structures = structures
        self._lookup = {key: j for j, key in enumerate(_keys(sources, tol))}
        self.acquisition = acquisition
        self.tol = tol

    @classmethod
    def _trusted(cls, sources: np.ndarray, structures, acquisition: bool = True,
                 tol: float = MARTINGALE_TOL) -> "MarkovKernel":
        """Build without validation; for kernels that are valid by construction."""
        self = cls.__new__(cls)
        self.sources = _frozen(np.asarray(sources, dtype=float))
        self.structures = tuple(structures)
        self._lookup = {key: j for j, key in enumerate(_keys(self.sources, tol))}
        self.acquisition = acquisition
        self.tol = tol
        return self

    @classmethod
    def identity(cls, beliefs: Iterable[Sequence[float]]) -> "MarkovKernel":
        return cls([(b, InformationStructure.point_mass(b)) for b in beliefs])

    def __len__(self):
        return len(self.structures)

    def __iter__(self):
        return iter(zip(self.sources, self.structures))

    def index(self, belief) -> int | None:
        b = np.asarray(belief, dtype=float)
        j = self._lookup.get(_key(b, self.tol))
        if j is not None:
            return j
        d = np.abs(self.sources - b).max(axis=1)
        j = int(np.argmin(d))
        return j if d[j] <= self.tol else None

    def get(self, belief, default=None):
        j = self.index(belief)
        return default if j is None else self.structures[j]

    def __call__(self, belief) -> InformationStructure:
        j = self.index(belief)
        if j is None:
            raise InvariantError(f"kernel has no entry for belief {np.asarray(belief)}")
        return self.structures[j]

    def __repr__(self):
        kind = "acquisition" if self.acquisition else "disposal"
        return f"MarkovKernel({len(self)} {kind} entries)"


def compose(first: InformationStructure, second: MarkovKernel) -> InformationStructure:
    """Marginal of the terminal belief after ``first`` then ``second``."""
    ws, ps = [], []
    for w, nu in first:
        st = second(nu)
        if not second.acquisition and np.abs(st.prior - nu).max() > second.tol:
            raise InvariantError(f"martingale violation at {nu}")
        ws.append(w * st.weights)
        ps.append(st.posteriors)
    return InformationStructure(np.concatenate(ws), np.vstack(ps))


def garble(e: SignalExperiment, M) -> SignalExperiment:
    """Post-process signals with a column-stochastic matrix ``M``.

    ``M[j, i]`` is the probability that original signal ``i`` is reported as
    new signal ``j``; the new kernel is ``M @ e.kernel``.
    """
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[1] != e.n_signals:
        raise InvariantError(f"garbling matrix must have {e.n_signals} columns")
    if M.min() < -DRIFT_TOL or np.abs(M.sum(axis=0) - 1).max() > DRIFT_TOL:
        raise InvariantError("garbling matrix must be column-stochastic")
    return SignalExperiment(e.prior, np.clip(M, 0, None) @ e.kernel)
