"""Finite belief processes that replicate a target information structure.

A process alternates acquisition steps (martingale moves of the belief) and
disposal steps (forgetting).  Stages may repeat a stationary pair of kernels
many times; such stages are propagated by repeated squaring, which keeps long
random walks cheap.  Beliefs that a kernel does not list stay where they are.

Constructors provided: direct acquisition, dilution chains, peeling
decompositions and absorbed random walks on a grid.  :func:`indirect_upper`
searches these families for the cheapest replication of a target.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .axioms import check_fie
from .costs import CostFunctional, PotentialFunction, ups_from_potential
from .errors import InvariantError, NumericalError
from .structures import (
    InformationStructure,
    MarkovKernel,
    PRUNE_TOL,
    as_belief,
    _key,
    _keys,
    dilution,
)

BELIEF_TOL = 1e-9
ABSORB_EPS = 1e-9
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Stage:
    """An acquisition kernel, an optional disposal kernel, applied ``repeat`` times."""

    acquire: MarkovKernel
    dispose: MarkovKernel | None = None
    repeat: int = 1

    def __post_init__(self):
        if int(self.repeat) != self.repeat or self.repeat < 1:
            raise InvariantError("repeat must be a positive integer")


class _BeliefTable:
    def __init__(self, k: int):
        self._pts = np.zeros((16, k))
        self.n = 0
        self.keys: list[bytes] = []
        self._lookup: dict[bytes, int] = {}

    def find(self, b: np.ndarray, key: bytes | None = None) -> int | None:
        j = self._lookup.get(_key(b, BELIEF_TOL) if key is None else key)
        if j is not None:
            return j
        if self.n:
            d = np.abs(self._pts[: self.n] - b).max(axis=1)
            j = int(np.argmin(d))
            if d[j] <= BELIEF_TOL:
                return j
        return None

    def index(self, b: np.ndarray, key: bytes | None = None) -> int:
        key = _key(b, BELIEF_TOL) if key is None else key
        j = self.find(b, key)
        if j is not None:
            return j
        if self.n == len(self._pts):
            self._pts = np.vstack([self._pts, np.zeros_like(self._pts)])
        self._pts[self.n] = b
        self._lookup.setdefault(key, self.n)
        self.keys.append(key)
        self.n += 1
        return self.n - 1

    def index_many(self, P: np.ndarray) -> list[int]:
        return [self.index(b, k) for b, k in zip(P, _keys(P, BELIEF_TOL))]

    @property
    def points(self) -> np.ndarray:
        return self._pts[: self.n].copy()


@dataclass
class _CompiledStage:
    active: np.ndarray  # global belief indices touched by the stage
    acq: np.ndarray  # local acquisition transition matrix
    dis: np.ndarray | None
    entry: list  # local index -> acquisition kernel entry (or None)
    repeat: int


def _pow_sum_apply(T: np.ndarray, r: int, u: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    """Return ``u T^r`` and ``sum_{t<r} u T^t c`` by repeated squaring."""
    B = T.copy()
    SB = np.eye(len(T))
    total = 0.0
    while r:
        if r & 1:
            total += float(u @ SB @ c)
            u = u @ B
        r >>= 1
        if r:
            SB = SB + SB @ B
            B = B @ B
    return u, total


class BeliefProcess:
    """A finite-horizon acquisition/disposal process started at ``initial``."""

    def __init__(self, initial, stages: Sequence[Stage] = (), info: dict | None = None):
        self.initial = as_belief(initial)
        self.stages = tuple(stages)
        self.info = dict(info or {})
        k = len(self.initial)
        for st in self.stages:
            for ker in (st.acquire, st.dispose):
                if ker is not None and ker.sources.shape[1] != k:
                    raise InvariantError("kernel state count differs from the initial belief")

    @classmethod
    def direct(cls, pi: InformationStructure) -> "BeliefProcess":
        return cls(pi.prior, [Stage(MarkovKernel([(pi.prior, pi)]))], {"family": "direct"})

    @property
    def horizon(self) -> int:
        return 2 * sum(st.repeat for st in self.stages)

    @property
    def n_states(self) -> int:
        return len(self.initial)

    def __repr__(self):
        return f"BeliefProcess(horizon={self.horizon}, stages={len(self.stages)})"

    @cached_property
    def _compiled(self) -> tuple[np.ndarray, list[_CompiledStage]]:
        table = _BeliefTable(self.n_states)
        reach = {table.index(self.initial)}
        compiled = []
        for st in self.stages:
            active: list[int] = []
            seen: set[int] = set()
            acq_rows: dict[int, list[tuple[int, float]]] = {}
            dis_rows: dict[int, list[tuple[int, float]]] = {}
            entries: dict[int, int | None] = {}

            def rows(kernel, i):
                if kernel is None:
                    return None, [(i, 1.0)]
                j = kernel._lookup.get(table.keys[i]) if kernel.tol == BELIEF_TOL else None
                if j is None:
                    j = kernel.index(table._pts[i])
                if j is None:
                    return None, [(i, 1.0)]
                s = kernel.structures[j]
                return j, list(zip(table.index_many(s.posteriors), s.weights.tolist()))

            hit = {table.find(src, key) for ker in (st.acquire, st.dispose) if ker is not None
                   for src, key in zip(ker.sources, _keys(ker.sources, BELIEF_TOL))}
            queue = sorted(reach & hit)
            seen.update(queue)
            while queue:
                i = queue.pop(0)
                active.append(i)
                entries[i], acq_rows[i] = rows(st.acquire, i)
                _, dis_rows[i] = rows(st.dispose, i)
                for c, _ in acq_rows[i] + dis_rows[i]:
                    if c not in seen:
                        seen.add(c)
                        queue.append(c)
            act = np.array(active, dtype=int)
            loc = {g: l for l, g in enumerate(active)}
            n = len(active)
            A = np.zeros((n, n))
            D = np.zeros((n, n)) if st.dispose is not None else None
            for g in active:
                for c, w in acq_rows[g]:
                    A[loc[g], loc[c]] += w
                if D is not None:
                    for c, w in dis_rows[g]:
                        D[loc[g], loc[c]] += w
            compiled.append(_CompiledStage(act, A, D, [entries.get(g) for g in active], st.repeat))
            reach |= set(active)
        return table.points, compiled

    @property
    def beliefs(self) -> np.ndarray:
        return self._compiled[0]

    def _initial_law(self) -> np.ndarray:
        table, _ = self._compiled
        p = np.zeros(len(table))
        p[0] = 1.0
        return p

    def laws(self):
        """Yield ``(stage, law before the stage)`` and finally ``(None, terminal law)``."""
        table, comp = self._compiled
        p = self._initial_law()
        for st, cs in zip(self.stages, comp):
            yield st, p.copy()
            T = cs.acq if cs.dis is None else cs.acq @ cs.dis
            u = p[cs.active]
            u, _ = _pow_sum_apply(T, cs.repeat, u, np.zeros(len(u)))
            p[cs.active] = u
        yield None, p


def terminal_law(p: BeliefProcess, check: bool = False) -> InformationStructure:
    """Law of the belief after the last step, as an information structure."""
    if check:
        res = verify_replicates(p, None)
        if not res:
            raise InvariantError(f"invalid process: {res.detail}")
    *_, (_, law) = p.laws()
    law = np.clip(law, 0.0, None)
    keep = law > PRUNE_TOL
    return InformationStructure(law[keep], p.beliefs[keep])


def process_cost(p: BeliefProcess, C: CostFunctional) -> float:
    """Expected total direct cost of the acquisition steps."""
    table, comp = p._compiled
    prob = p._initial_law()
    total = 0.0
    cache: dict[tuple[int, int], float] = {}
    for st, cs in zip(p.stages, comp):
        c = np.zeros(len(cs.active))
        for l, j in enumerate(cs.entry):
            if j is not None:
                key = (id(st.acquire), j)
                if key not in cache:
                    cache[key] = C(st.acquire.structures[j])
                c[l] = cache[key]
        T = cs.acq if cs.dis is None else cs.acq @ cs.dis
        u, cost = _pow_sum_apply(T, cs.repeat, prob[cs.active], c)
        prob[cs.active] = u
        total += cost
    return total


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ReplicationCheck:
    ok: bool
    clause: int | None = None
    step: int | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def wasserstein1(a: InformationStructure, b: InformationStructure) -> float:
    """Earth mover distance between two structures with max-norm ground cost."""
    n, m = a.n_atoms, b.n_atoms
    cost = np.abs(a.posteriors[:, None, :] - b.posteriors[None, :, :]).max(axis=2)
    rows = np.zeros((n + m, n * m))
    for i in range(n):
        rows[i, i * m:(i + 1) * m] = 1
    for j in range(m):
        rows[n + j, j::m] = 1
    res = linprog(cost.ravel(), A_eq=rows, b_eq=np.concatenate([a.weights, b.weights]),
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericalError(f"transport LP failed: {res.message}")
    return float(res.fun)


def _nearest_coupling_cost(a: InformationStructure, b: InformationStructure) -> float:
    """Upper bound on :func:`wasserstein1` from sending each atom of ``a`` to
    its nearest atom of ``b``; unmatched mass pays the diameter, at most 1."""
    d = np.abs(a.posteriors[:, None, :] - b.posteriors[None, :, :]).max(axis=2)
    j = np.argmin(d, axis=1)
    moved = np.bincount(j, weights=a.weights, minlength=b.n_atoms)
    return float(a.weights @ d[np.arange(a.n_atoms), j] + 0.5 * np.abs(moved - b.weights).sum())


def verify_replicates(p: BeliefProcess, target: InformationStructure | None,
                      tol: float = 1e-9) -> ReplicationCheck:
    """Check the three replication clauses on the induced joint law.

    1. the terminal law equals ``target`` (earth mover distance, and the
       initial belief equals the target prior, both within ``tol``);
    2. every acquisition step is a martingale at every belief carrying mass;
    3. every disposal step is a reverse martingale.

    ``target=None`` skips clause 1.
    """
    slack = tol * (1 + 1e-9) + 1e-15
    table, comp = p._compiled
    step = 0
    prob = p._initial_law()
    for st, cs in zip(p.stages, comp):
        pts = table[cs.active]
        drift = np.abs(cs.acq @ pts - pts).max(axis=1)
        if drift.max(initial=0.0) > tol:
            # only beliefs that carry mass at some acquisition step matter
            T = cs.acq if cs.dis is None else cs.acq @ cs.dis
            G = T > 0
            live = prob[cs.active] > 0
            frontier = live.copy()
            for _ in range(min(cs.repeat - 1, len(live))):
                frontier = (frontier.astype(float) @ G > 0) & ~live
                if not frontier.any():
                    break
                live |= frontier
            bad = np.flatnonzero(live & (drift > tol))
            if len(bad):
                i = bad[0]
                return ReplicationCheck(False, 2, step, f"acquisition drifts by {drift[i]:.3g} at "
                                                         f"belief {pts[i]}")
        if cs.dis is None:
            T = cs.acq
            u, _ = _pow_sum_apply(T, cs.repeat, prob[cs.active], np.zeros(len(cs.active)))
            prob[cs.active] = u
            step += 2 * cs.repeat
            continue
        u = prob[cs.active]
        for _ in range(cs.repeat):
            q = u @ cs.acq
            J = q[:, None] * cs.dis
            mass = J.sum(axis=0)
            has = mass > PRUNE_TOL
            back = (J.T @ pts)[has] / mass[has, None]
            dev = np.abs(back - pts[has]).max(axis=1) if has.any() else np.zeros(0)
            if len(dev) and dev.max() > tol:
                i = int(np.argmax(dev))
                return ReplicationCheck(False, 3, step + 1,
                                        f"disposal is not a reverse martingale at {pts[has][i]}")
            u = mass
            step += 2
        prob[cs.active] = u
    if target is not None:
        if target.n_states != p.n_states:
            return ReplicationCheck(False, 1, p.horizon, "state dimension mismatch")
        d0 = float(np.abs(target.prior - p.initial).max())
        if d0 > slack:
            return ReplicationCheck(False, 1, 0, f"initial belief is {d0:.3g} from the target prior")
        law = np.clip(prob, 0, None)
        keep = law > PRUNE_TOL
        term = InformationStructure(law[keep], table[keep])
        if _nearest_coupling_cost(term, target) <= slack:
            return ReplicationCheck(True)
        dist = wasserstein1(term, target)
        if dist > slack:
            return ReplicationCheck(False, 1, p.horizon,
                                    f"terminal law is {dist:.3g} from the target")
    return ReplicationCheck(True)


# ---------------------------------------------------------------------------
# constructors


def _strip_prior_atom(pi: InformationStructure) -> tuple[InformationStructure | None, float]:
    """Split ``pi`` into the part away from the prior and the weight at the prior."""
    d = np.abs(pi.posteriors - pi.prior).max(axis=1)
    at = d <= BELIEF_TOL
    w0 = float(pi.weights[at].sum())
    if at.all():
        return None, 1.0
    rest = InformationStructure(pi.weights[~at], pi.posteriors[~at])
    return rest, w0


def dilution_chain(pi: InformationStructure, K: int, schedule: str = "poisson") -> BeliefProcess:
    """Acquire ``pi`` through repeated small dilutions at the prior.

    ``schedule="poisson"`` jumps with constant hazard ``1/K`` from the prior,
    so the expected number of acquisition periods is ``K``; the chain is cut
    once less than ``1e-9`` of the mass that must move is still at the prior,
    and a last step moves it.  ``schedule="uniform"`` uses exactly ``K``
    steps, each moving the same unconditional mass (hazard ``1/(K - t)``).
    The terminal law is ``pi`` in both cases.
    """
    if int(K) != K or K < 1:
        raise InvariantError("K must be a positive integer")
    mu = pi.prior
    rest, w0 = _strip_prior_atom(pi)
    if rest is None:
        return BeliefProcess(mu, [], {"family": f"dilution[K={K}]"})
    if schedule == "uniform":
        q = (1 - w0) / K
        R = 1 - q * np.arange(K + 1)
    elif schedule == "poisson":
        R = [1.0]
        while R[-1] - w0 > ABSORB_EPS * (1 - w0) and len(R) <= 100_000:
            R.append(w0 + (1 - w0) * (1 - 1 / K) ** len(R))
        if R[-1] - w0 > 0:
            R.append(w0)
        R = np.array(R)
    else:
        raise InvariantError(f"unknown schedule {schedule!r}")
    stages = []
    lam_prev = None
    for t in range(len(R) - 1):
        lam = float(min(1.0, (R[t] - R[t + 1]) / R[t]))
        if lam <= 0:
            continue
        if lam_prev is not None and abs(lam - lam_prev) < 1e-15:
            prev = stages[-1]
            stages[-1] = Stage(prev.acquire, None, prev.repeat + 1)
        else:
            stages.append(Stage(MarkovKernel([(mu, dilution(rest, lam))])))
        lam_prev = lam
    return BeliefProcess(mu, stages, {"family": f"dilution[K={K}]", "schedule": schedule})


def peeling_decomposition(pi: InformationStructure) -> BeliefProcess:
    """Peel off one atom per step until the target is reached.

    Each step splits the current residual belief into the atom farthest from
    it and the conditional mean of the atoms that remain, so ``n`` atoms take
    ``n - 1`` steps.
    """
    return BeliefProcess(pi.prior, [Stage(MarkovKernel([(src, s)])) for src, s in _peel_splits(pi)],
                         {"family": "peeling"})


def _peel_splits(pi: InformationStructure) -> list[tuple[np.ndarray, InformationStructure]]:
    w = list(pi.weights)
    post = [p for p in pi.posteriors]
    mean, mass = pi.prior.copy(), 1.0
    splits = []
    while len(w) >= 2:
        d = [np.linalg.norm(p - mean) for p in post]
        i = int(np.argmax(d))
        wa, a = w.pop(i), post.pop(i)
        rest_mass = mass - wa
        rest_mean = (mass * mean - wa * a) / rest_mass
        if len(w) == 1:
            rest_mean = post[0]
        rest_mean = np.clip(rest_mean, 0, None)
        rest_mean = rest_mean / rest_mean.sum()
        splits.append((mean, InformationStructure(np.array([wa, rest_mass]) / mass,
                                                  np.vstack([a, rest_mean]))))
        mean, mass = rest_mean, rest_mass
    return splits


def _grid(lo: np.ndarray, hi: np.ndarray, M: int) -> np.ndarray:
    return lo + (np.arange(M + 1)[:, None] / M) * (hi - lo)


def _absorption_horizon(Q: np.ndarray, start: np.ndarray, eps: float) -> int:
    """Smallest ``T`` with ``start Q^T`` summing below ``eps`` (binary lifting)."""
    if start.sum() < eps:
        return 0
    powers = [Q]
    while (start @ powers[-1]).sum() >= eps:
        if len(powers) > 60:
            raise NumericalError("random walk does not absorb")
        powers.append(powers[-1] @ powers[-1])
    T, v = 0, start
    for k in range(len(powers) - 1, -1, -1):
        w = v @ powers[k]
        if w.sum() >= eps:
            v, T = w, T + (1 << k)
    return T + 1


def _walk_stages(nu1, nu2, start, M: int) -> tuple[list[Stage], dict]:
    """Stages of a symmetric walk on the ``M``-grid from ``nu1`` to ``nu2``.

    ``start`` is either an interior grid index or a belief on the segment;
    in the latter case a first step splits it onto its neighbouring grid
    points.
    """
    grid = _grid(nu1, nu2, M)
    stages = []
    init = np.zeros(M - 1)  # law over interior points 1..M-1
    if isinstance(start, (int, np.integer)):
        init[start - 1] = 1.0
    else:
        j = int(np.argmax(np.abs(nu2 - nu1)))
        x = (start[j] - nu1[j]) / (nu2[j] - nu1[j]) * M
        i = int(np.clip(np.floor(x + 1e-12), 0, M - 1))
        frac = x - i
        if frac < 1e-12 or abs(frac - 1) < 1e-12:
            i = int(round(x))
            if 0 < i < M:
                init[i - 1] = 1.0
        else:
            split = InformationStructure(np.array([1 - frac, frac]), grid[[i, i + 1]])
            stages.append(Stage(MarkovKernel([(start, split)])))
            for g, wt in ((i, 1 - frac), (i + 1, frac)):
                if 0 < g < M:
                    init[g - 1] += wt
    Q = np.zeros((M - 1, M - 1))
    for i in range(M - 1):
        if i > 0:
            Q[i, i - 1] = 0.5
        if i < M - 2:
            Q[i, i + 1] = 0.5
    T = _absorption_horizon(Q, init, ABSORB_EPS)
    if T > 0:
        half = np.array([0.5, 0.5])
        walk = MarkovKernel._trusted(grid[1:M], [
            InformationStructure._trusted(half, grid[[i - 1, i + 1]]) for i in range(1, M)
        ])
        stages.append(Stage(walk, None, T))
        reveal = MarkovKernel._trusted(grid[1:M], [
            InformationStructure._trusted(np.array([M - i, i]) / M, grid[[0, M]]) for i in range(1, M)
        ])
        stages.append(Stage(reveal))
    return stages, {"walk_steps": T}


def random_walk_replication(pi: InformationStructure, M: int, snap: bool = True) -> BeliefProcess:
    """Replicate a two-posterior binary-state target by an absorbed random walk.

    The segment between the two posteriors is cut into ``M`` equal steps and
    the belief moves one step left or right with equal probability until it
    hits an endpoint.  With ``snap=True`` the walk starts from the grid point
    nearest the prior, so the terminal law is the snapped target; the
    distance moved is recorded in ``info["snap_distance"]``.  With
    ``snap=False`` a first step splits the prior onto its two neighbouring
    grid points and the target is replicated exactly.
    """
    if pi.n_states != 2:
        raise InvariantError("random_walk_replication needs two states")
    if pi.n_atoms != 2:
        raise InvariantError("random_walk_replication needs exactly two posteriors")
    if int(M) != M or M < 2:
        raise InvariantError("M must be an integer >= 2")
    order = np.argsort(pi.posteriors[:, 0])
    nu1, nu2 = pi.posteriors[order[0]], pi.posteriors[order[1]]
    mu = pi.prior
    x = (mu[0] - nu1[0]) / (nu2[0] - nu1[0]) * M
    info = {"family": f"random_walk[M={M}]", "M": M}
    if snap:
        i0 = int(np.clip(np.round(x), 1, M - 1))
        start = _grid(nu1, nu2, M)[i0]
        stages, extra = _walk_stages(nu1, nu2, i0, M)
        info["snap_distance"] = float(np.abs(start - mu).max())
        return BeliefProcess(start, stages, {**info, **extra})
    stages, extra = _walk_stages(nu1, nu2, mu, M)
    info["snap_distance"] = 0.0
    return BeliefProcess(mu, stages, {**info, **extra})


def peeling_random_walk(pi: InformationStructure, M: int) -> BeliefProcess:
    """Peeling decomposition with every split refined into a random walk."""
    if pi.n_states != 2:
        raise InvariantError("random-walk refinement needs two states")
    stages = []
    for src, split in _peel_splits(pi):
        a, b = split.posteriors
        lo, hi = (a, b) if a[0] < b[0] else (b, a)
        st, _ = _walk_stages(lo, hi, src, M)
        stages.extend(st)
    return BeliefProcess(pi.prior, stages, {"family": f"peeling+random_walk[M={M}]", "M": M})


# ---------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class IndirectConfig:
    M_list: tuple[int, ...] = (20, 40, 80)
    K_list: tuple[int, ...] = (1, 2, 4, 8, 16)
    depth: int = 2
    tol: float = 1e-9
    fie_trials: int = 200
    seed: int = 0


@dataclass
class IndirectEstimate:
    target: InformationStructure
    upper: float
    lower: float | None
    best_process: BeliefProcess
    family: str
    candidates: list[tuple[str, float, bool]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def indirect_upper(C: CostFunctional, pi: InformationStructure,
                   config: IndirectConfig = IndirectConfig(),
                   potential: PotentialFunction | None = None) -> IndirectEstimate:
    """Cheapest replication of ``pi`` found among the constructive families.

    Families, in enumeration order (ties keep the earlier one): direct
    acquisition, dilution chains for each ``K``, peeling, and at depth 2 or
    more peeling refined by random walks for each ``M`` (binary states only).
    Only candidates that pass :func:`verify_replicates` count.  If
    ``potential`` is given and ``C`` passes the FIE check against it, its
    uniformly posterior separable cost of ``pi`` is reported as ``lower``.
    """
    notes: list[str] = []
    builders = [("direct", lambda: BeliefProcess.direct(pi))]
    for K in config.K_list:
        builders.append((f"dilution[K={K}]", lambda K=K: dilution_chain(pi, K)))
    if config.depth >= 1:
        builders.append(("peeling", lambda: peeling_decomposition(pi)))
    if config.depth >= 2:
        if pi.n_states == 2:
            for M in config.M_list:
                builders.append((f"peeling+random_walk[M={M}]", lambda M=M: peeling_random_walk(pi, M)))
        else:
            notes.append("random-walk refinement skipped: needs two states")
    candidates = []
    best = None
    for name, build in builders:
        proc = build()
        ok = bool(verify_replicates(proc, pi, config.tol))
        cost = process_cost(proc, C)
        candidates.append((name, cost, ok))
        if not ok:
            notes.append(f"{name} failed replication check; discarded")
            continue
        if best is None or cost < best[1] - TIE_TOL * max(1.0, abs(best[1])):
            best = (name, cost, proc)
    lower = None
    if potential is not None:
        rep = check_fie(C, potential, config.fie_trials, config.seed, pi.n_states)
        if rep.passed:
            lower = ups_from_potential(potential, check_dims=())(pi)
        else:
            notes.append(f"potential not certified: {len(rep.violations)} FIE violations")
    return IndirectEstimate(pi, best[1], lower, best[2], best[0], candidates, notes)


# ---------------------------------------------------------------------------
# Markovianization of signal trees


@dataclass(frozen=True, eq=False)
class SignalTree:
    """A layered signal strategy.

    ``layers`` alternates ``("acquire", [L_node, ...])`` and
    ``("dispose", D)``, starting with an acquisition layer.  ``L_node`` has
    shape (children, states) with columns summing to one: the state-dependent
    law of the signal at that node; children are numbered consecutively over
    the layer's nodes.  ``D`` is a row-stochastic (nodes, next nodes) matrix
    that does not depend on the state.
    """

    prior: np.ndarray
    layers: tuple

    def __post_init__(self):
        mu = as_belief(self.prior)
        object.__setattr__(self, "prior", mu)
        layers = tuple(self.layers)
        nodes = 1
        for i, (kind, data) in enumerate(layers):
            want = "acquire" if i % 2 == 0 else "dispose"
            if kind != want:
                raise InvariantError(f"layer {i} must be {want!r}, got {kind!r}")
            if kind == "acquire":
                if len(data) != nodes:
                    raise InvariantError(f"layer {i} needs one matrix per node ({nodes})")
                total = 0
                for L in data:
                    L = np.asarray(L, dtype=float)
                    if L.ndim != 2 or L.shape[1] != len(mu):
                        raise InvariantError(f"layer {i}: likelihood shape {L.shape}")
                    if L.min() < 0 or np.abs(L.sum(axis=0) - 1).max() > 1e-9:
                        raise InvariantError(f"layer {i}: likelihood columns must sum to 1")
                    total += L.shape[0]
                nodes = total
            else:
                D = np.asarray(data, dtype=float)
                if D.ndim != 2 or D.shape[0] != nodes:
                    raise InvariantError(f"layer {i}: disposal must have {nodes} rows")
                if D.min() < 0 or np.abs(D.sum(axis=1) - 1).max() > 1e-9:
                    raise InvariantError(f"layer {i}: disposal rows must sum to 1")
                nodes = D.shape[1]
        object.__setattr__(self, "layers", layers)


@dataclass
class MarkovianizationResult:
    process: BeliefProcess
    original_cost: float
    markov_cost: float
    terminal: InformationStructure


def _group(beliefs: np.ndarray) -> np.ndarray:
    labels = -np.ones(len(beliefs), dtype=int)
    reps: list[int] = []
    for i, b in enumerate(beliefs):
        for k, r in enumerate(reps):
            if np.abs(beliefs[r] - b).max() <= BELIEF_TOL:
                labels[i] = k
                break
        else:
            labels[i] = len(reps)
            reps.append(i)
    return labels


def markovianize(tree: SignalTree, C: CostFunctional) -> MarkovianizationResult:
    """Collapse a history-dependent signal tree into a belief process.

    Nodes of a layer that hold the same belief are merged; the merged
    acquisition kernel at a belief is the probability-weighted mixture of
    the nodes' continuation structures, and disposal transitions are merged
    the same way.  Returns the process together with the tree's own cost and
    the cost of the collapsed process.
    """
    mu = tree.prior
    reach = np.ones((1, len(mu)))  # reach[n, x] = P(node n | state x)
    original = 0.0
    stages: list[Stage] = []
    pending_acq = None
    terminal = None
    for kind, data in tree.layers:
        joint = reach * mu
        pn = joint.sum(axis=1)
        live = pn > PRUNE_TOL
        beliefs = np.where(live[:, None], joint / np.where(live, pn, 1)[:, None], 0.0)
        if kind == "acquire":
            kids, structs = [], []
            for n, L in enumerate(data):
                L = np.asarray(L, dtype=float)
                r = reach[n][None, :] * L
                kids.append(r)
                if live[n]:
                    cj = L * beliefs[n]
                    cw = cj.sum(axis=1)
                    keep = cw > PRUNE_TOL
                    s = InformationStructure(cw[keep], cj[keep] / cw[keep, None])
                    structs.append(s)
                    original += pn[n] * C(s)
                else:
                    structs.append(None)
            labels = _group(beliefs[live])
            idx = np.flatnonzero(live)
            entries = []
            for g in range(labels.max() + 1 if len(labels) else 0):
                members = idx[labels == g]
                wts = pn[members]
                merged = InformationStructure(
                    np.concatenate([w * structs[m].weights for w, m in zip(wts, members)]),
                    np.vstack([structs[m].posteriors for m in members]),
                )
                entries.append((beliefs[members[0]], merged))
            if pending_acq is not None:
                stages.append(Stage(pending_acq))
            pending_acq = MarkovKernel(entries) if entries else None
            reach = np.vstack(kids)
        else:
            D = np.asarray(data, dtype=float)
            nxt = D.T @ reach
            jn = nxt * mu
            pm = jn.sum(axis=1)
            ok = pm > PRUNE_TOL
            nb = np.where(ok[:, None], jn / np.where(ok, pm, 1)[:, None], 0.0)
            labels = _group(beliefs[live])
            idx = np.flatnonzero(live)
            entries = []
            for g in range(labels.max() + 1 if len(labels) else 0):
                members = idx[labels == g]
                flow = pn[members] @ D[members]
                keep = (flow > PRUNE_TOL) & ok
                entries.append((beliefs[members[0]],
                                InformationStructure(flow[keep], nb[keep])))
            dispose = MarkovKernel(entries, acquisition=False) if entries else None
            stages.append(Stage(pending_acq, dispose))
            pending_acq = None
            reach = nxt
    if pending_acq is not None:
        stages.append(Stage(pending_acq))
    proc = BeliefProcess(mu, stages, {"family": "markovianized"})
    joint = reach * mu
    pn = joint.sum(axis=1)
    keep = pn > PRUNE_TOL
    terminal = InformationStructure(pn[keep], joint[keep] / pn[keep, None])
    return MarkovianizationResult(proc, original, process_cost(proc, C), terminal)
