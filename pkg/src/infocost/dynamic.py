"""Dynamic information acquisition with a per-period delay cost.

Each period the decision maker pays a delay cost ``m`` plus ``f`` of the
information cost acquired that period, and may stop and act.  The problem
reduces to a static one indexed by a flow rate ``lam``: acquire ``pi`` at the
price ``(m + f(lam)) / lam`` per unit of cost, subject to ``C(pi) >= lam``.
A Poisson strategy (jump to ``pi`` with hazard ``lam / C(pi)``, otherwise
stay) attains that value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .costs import CostFunctional
from .errors import InvariantError, NumericalError
from .structures import InformationStructure, SignalExperiment, as_belief, dilution, from_experiment

LAMBDA_MIN = 1e-6


# ---------------------------------------------------------------------------
# problem data


@dataclass(frozen=True)
class FlowTransform:
    """Increasing convex ``f`` with ``f(0) = 0``.

    Kinds: ``linear`` (``param * lam``), ``power`` (``lam ** param``,
    ``param >= 1``), ``cap`` (zero up to ``param``, infinite above) and
    ``custom`` (a user callable, checked on sampled points).
    """

    kind: str = "power"
    param: float = 2.0
    func: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kind == "linear" and self.param < 0:
            raise InvariantError("linear flow cost needs a nonnegative slope")
        if self.kind == "power" and self.param < 1:
            raise InvariantError("power flow cost needs exponent >= 1")
        if self.kind == "cap" and self.param <= 0:
            raise InvariantError("cap must be positive")
        if self.kind == "custom":
            if self.func is None:
                raise InvariantError("custom flow cost needs a callable")
            if abs(self.func(0.0)) > 1e-12:
                raise InvariantError("flow cost must vanish at zero")
            x = np.linspace(0, 2, 41)
            y = np.array([self.func(float(v)) for v in x])
            if np.any(np.diff(y) < -1e-12) or np.any(y[:-2] + y[2:] - 2 * y[1:-1] < -1e-9):
                raise InvariantError("flow cost must be increasing and convex")
        elif self.kind not in ("linear", "power", "cap"):
            raise InvariantError(f"unknown flow cost kind {self.kind!r}")

    def __call__(self, lam: float) -> float:
        if self.kind == "linear":
            return self.param * lam
        if self.kind == "power":
            return lam**self.param
        if self.kind == "cap":
            return 0.0 if lam <= self.param else np.inf
        return float(self.func(lam))

    @property
    def upper(self) -> float:
        """Largest rate with finite flow cost."""
        return self.param if self.kind == "cap" else np.inf

    @property
    def strictly_convex(self) -> bool:
        if self.kind == "power":
            return self.param > 1
        if self.kind == "custom":
            x = np.linspace(0, 2, 41)
            y = np.array([self.func(float(v)) for v in x])
            return bool(np.all(y[:-2] + y[2:] - 2 * y[1:-1] > 1e-12))
        return False


@dataclass(frozen=True, eq=False)
class DynamicProblem:
    """Actions x states utility matrix, delay cost ``m``, flow cost ``f``, prior."""

    u: np.ndarray
    m: float
    f: FlowTransform
    prior: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 2:
            raise InvariantError("u must be an actions x states matrix")
        mu = as_belief(self.prior, u.shape[1])
        if self.m < 0:
            raise InvariantError("delay cost must be nonnegative")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "prior", mu)

    @property
    def n_actions(self) -> int:
        return self.u.shape[0]

    @property
    def n_states(self) -> int:
        return self.u.shape[1]


def decision_utility(problem: DynamicProblem, mu) -> float | np.ndarray:
    """``max_a E_mu[u(a, x)]``; accepts a single belief or a stack of them."""
    mu = np.asarray(mu, dtype=float)
    return np.max(mu @ problem.u.T, axis=-1)


def expected_utility(problem: DynamicProblem, pi: InformationStructure) -> float:
    return float(pi.weights @ decision_utility(problem, pi.posteriors))


def price(problem: DynamicProblem, lam: float) -> float:
    """Cost of one unit of information at flow rate ``lam``."""
    return (problem.m + problem.f(lam)) / lam


def static_objective(problem: DynamicProblem, C: CostFunctional, lam: float,
                     pi: InformationStructure) -> float:
    """``E_pi[U] - (m / lam + f(lam) / lam) C(pi)``."""
    return expected_utility(problem, pi) - (problem.m / lam + problem.f(lam) / lam) * C(pi)


# ---------------------------------------------------------------------------
# Poisson strategies


@dataclass(frozen=True, eq=False)
class PoissonStrategy:
    """Jump to ``target`` with a constant per-period rate of information ``rate``."""

    target: InformationStructure
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise InvariantError("rate must be positive")

    def hazard(self, C: CostFunctional) -> float:
        c = C(self.target)
        if c <= 0:
            raise InvariantError("target carries no information; hazard undefined")
        h = self.rate / c
        if h > 1 + 1e-12:
            raise InvariantError(f"rate {self.rate} exceeds the target cost {c}")
        return min(h, 1.0)


def poisson_value(strategy: PoissonStrategy, problem: DynamicProblem, C: CostFunctional) -> float:
    """Expected payoff of a Poisson strategy.

    Every period before the jump costs ``m + f(rate)`` and the expected
    number of such periods is ``C(target) / rate``.
    """
    h = strategy.hazard(C)
    eu = expected_utility(problem, strategy.target)
    return eu - (problem.m + problem.f(strategy.rate)) / h


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    std_error: float
    paths: int
    periods: np.ndarray | None = None
    payoffs: np.ndarray | None = None


def simulate(strategy: PoissonStrategy, problem: DynamicProblem, C: CostFunctional,
             paths: int = 100_000, seed: int = 0, keep_paths: bool = False) -> SimulationResult:
    """Monte Carlo estimate of a Poisson strategy's payoff.

    Stopping periods are geometric with the strategy's hazard; the terminal
    posterior is drawn from the target.  Each period is charged ``m`` plus
    ``f`` of the cost of the diluted structure actually acquired that period.
    Draws come from a counter-based Philox stream keyed by ``seed``.
    """
    if paths < 1:
        raise InvariantError("paths must be at least 1")
    h = strategy.hazard(C)
    flow = C(dilution(strategy.target, h))
    per_period = problem.m + problem.f(flow)
    rng = np.random.Generator(np.random.Philox(key=seed))
    n = rng.geometric(h, size=paths)
    idx = rng.choice(strategy.target.n_atoms, size=paths, p=strategy.target.weights)
    U = decision_utility(problem, strategy.target.posteriors)
    pay = U[idx] - n * per_period
    se = float(pay.std(ddof=1) / np.sqrt(paths)) if paths > 1 else np.inf
    return SimulationResult(float(pay.mean()), se, paths,
                            n if keep_paths else None, pay if keep_paths else None)


# ---------------------------------------------------------------------------
# static problem


@dataclass(frozen=True)
class SearchConfig:
    n_starts: int = 6
    grid: int = 10_001
    seed: int = 0
    method: str = "auto"  # auto | concavify | search


@dataclass
class StaticSolution:
    value: float
    lam: float | None
    pi: InformationStructure
    binding: bool
    price: float | None = None
    candidates: list = field(default_factory=list)


def _upper_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    """Indices of the upper concave hull of points sorted by ``x``."""
    xs, ys = x.tolist(), y.tolist()
    hull: list[int] = []
    for i in range(len(xs)):
        xi, yi = xs[i], ys[i]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (ys[b] - ys[a]) * (xi - xs[a]) <= (yi - ys[a]) * (xs[b] - xs[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _bridge(x: np.ndarray, y: np.ndarray, mu0: float):
    """Hull segment over ``mu0`` by alternating tangents, or None if unsettled.

    Fixing the right end, the best left end minimizes the slope to it, and
    vice versa; the value at ``mu0`` never falls, and a pair that is tangent
    from both sides supports every point.
    """
    L = np.flatnonzero(x <= mu0)
    R = np.flatnonzero(x > mu0)
    if not len(L) or not len(R):
        return None
    a = int(L[np.argmax(y[L])])
    b = a
    prev = -np.inf
    for _ in range(64):
        b = int(R[np.argmax((y[R] - y[a]) / (x[R] - x[a]))])
        a = int(L[np.argmin((y[b] - y[L]) / (x[b] - x[L]))])
        wl = (x[b] - mu0) / (x[b] - x[a])
        val = wl * y[a] + (1 - wl) * y[b]
        if val <= prev:
            break
        prev = val
    slope = (y[b] - y[a]) / (x[b] - x[a])
    gap = np.max(y - (y[a] + slope * (x - x[a])))
    if gap > 1e-12 * max(1.0, float(np.abs(y).max())):
        return None
    if x[a] == mu0:
        return float(y[a]), (float(mu0), float(mu0)), 1.0
    return float(val), (float(x[a]), float(x[b])), float(wl)


def _hull_at(x: np.ndarray, y: np.ndarray, mu0: float) -> tuple[float, tuple[float, float], float]:
    found = _bridge(x, y, mu0)
    if found is not None:
        return found
    h = _upper_hull(x, y)
    hx = x[h]
    j = int(np.searchsorted(hx, mu0, side="right")) - 1
    j = min(max(j, 0), len(h) - 1)
    if hx[j] == mu0 or j == len(h) - 1:
        return float(y[h[j]]), (float(hx[j]), float(hx[j])), 1.0
    a, b = h[j], h[j + 1]
    wl = (x[b] - mu0) / (x[b] - x[a])
    return float(wl * y[a] + (1 - wl) * y[b]), (float(x[a]), float(x[b])), float(wl)


def _binary_grid(mu0: float, grid: int) -> np.ndarray:
    x = np.linspace(0.0, 1.0, grid)
    if not np.any(x == mu0):
        x = np.sort(np.append(x, mu0))
    return x


def _finite_values(g, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``g`` on ``x``; drop the endpoints if ``g`` rejects them."""
    with np.errstate(divide="ignore", invalid="ignore"):
        try:
            y = np.asarray(g(x), dtype=float)
        except InvariantError:
            x = x[(x > 0) & (x < 1)]
            y = np.asarray(g(x), dtype=float)
    ok = np.isfinite(y)
    return x[ok], y[ok]


def concavify_binary(g: Callable[[np.ndarray], np.ndarray], mu0: float, grid: int = 10_001
                     ) -> tuple[float, tuple[float, float], float]:
    """Concave envelope of ``g`` (a function of the first coordinate) at ``mu0``.

    Returns the envelope value, the two posteriors spanning it and the weight
    on the left one.  Non-finite grid values are dropped.
    """
    x, y = _finite_values(g, _binary_grid(mu0, grid))
    if not len(x) or not (x[0] <= mu0 <= x[-1]):
        raise NumericalError("prior lies outside the finite domain of the objective")
    return _hull_at(x, y, mu0)


def _binary_structure(nus: tuple[float, float], wl: float) -> InformationStructure:
    a, b = nus
    return InformationStructure(np.array([wl, 1 - wl]), np.array([[a, 1 - a], [b, 1 - b]]))


def _structure_from_logits(z, A, mu) -> InformationStructure:
    Z = z.reshape(A, len(mu))
    P = np.exp(Z - Z.max(axis=0))
    P /= P.sum(axis=0)
    return from_experiment(SignalExperiment(mu, P))


def _obedient_payoff(z, A, mu, u) -> float:
    Z = z.reshape(A, len(mu))
    P = np.exp(Z - Z.max(axis=0))
    P /= P.sum(axis=0)
    return float(np.sum(P * u * mu))


def _safe_cost(C: CostFunctional, pi: InformationStructure) -> float:
    try:
        return C(pi)
    except InvariantError:
        return np.inf


class _InnerSolver:
    """Maximizes ``E_pi[U] - k C(pi)`` at the prior for varying ``k``."""

    def __init__(self, problem: DynamicProblem, C: CostFunctional, cfg: SearchConfig):
        self.problem, self.C, self.cfg = problem, C, cfg
        method = cfg.method
        ups2 = C.claims_ups and C.potential is not None and problem.n_states == 2
        if method == "auto":
            method = "concavify" if ups2 else "search"
        if method == "concavify" and not ups2:
            raise InvariantError("concavification needs a UPS cost on two states")
        if method not in ("concavify", "search"):
            raise InvariantError(f"unknown inner method {method!r}")
        self.method = method
        self.full = InformationStructure.full_revelation(problem.prior)
        self.c_full = _safe_cost(C, self.full)
        if method == "concavify":
            mu0 = float(problem.prior[0])
            x, Hx = _finite_values(lambda t: C.potential(np.stack([t, 1 - t], axis=-1)),
                                   _binary_grid(mu0, cfg.grid))
            if not len(x) or not (x[0] <= mu0 <= x[-1]):
                raise NumericalError("prior lies outside the finite domain of the potential")
            P = np.stack([x, 1 - x], axis=-1)
            self.x, self.Ux, self.Hx = x, np.max(P @ problem.u.T, axis=-1), Hx
            # most informative structure representable on the grid
            wl = (x[-1] - mu0) / (x[-1] - x[0])
            self.full = _binary_structure((float(x[0]), float(x[-1])), float(wl))
            self.c_full = C(self.full)

    def solve(self, k: float) -> InformationStructure:
        if self.method == "concavify":
            _, nus, wl = _hull_at(self.x, self.Ux - k * self.Hx, float(self.problem.prior[0]))
            return _binary_structure(nus, wl)
        return self._search(k, None)

    def _search(self, k, lam) -> InformationStructure:
        """Multi-start local search over direct signals (one signal per action)."""
        problem, C, cfg = self.problem, self.C, self.cfg
        A, mu, u = problem.n_actions, problem.prior, problem.u
        rng = np.random.default_rng(cfg.seed)
        starts = [np.log(np.eye(A, problem.n_states) * 0.98 + 0.01).ravel()]
        starts += [rng.normal(scale=3.0, size=A * problem.n_states) for _ in range(cfg.n_starts - 1)]

        def neg(z):
            return -(_obedient_payoff(z, A, mu, u) - k * C(_structure_from_logits(z, A, mu)))

        cons, method = (), "L-BFGS-B"
        if lam is not None:
            cons = ({"type": "ineq", "fun": lambda z: C(_structure_from_logits(z, A, mu)) - lam},)
            method = "SLSQP"
        best, best_val = InformationStructure.point_mass(mu), -np.inf
        for z0 in starts:
            res = minimize(neg, z0, method=method, constraints=cons)
            pi = _structure_from_logits(res.x, A, mu)
            if lam is not None and C(pi) < lam - 1e-8:
                continue
            val = expected_utility(problem, pi) - k * C(pi)
            if val > best_val:
                best, best_val = pi, val
        return best

    def solve_constrained(self, lam: float, k: float) -> InformationStructure | None:
        """Best structure with ``C(pi) >= lam`` at price ``k``, or None if infeasible."""
        C = self.C
        pi = self.solve(k)
        if C(pi) >= lam:
            return pi
        if self.c_full < lam:
            return None
        if self.method == "search":
            return self._search(k, lam)
        # lower the effective price until the unconstrained solution is informative
        # enough, then mix the two frontier solutions (C is linear in same-prior mixtures)
        lo_k, lo_pi = k, pi
        step = max(1.0, k)
        hi_k = k - step
        hi_pi = self.solve(hi_k)
        for _ in range(60):
            if C(hi_pi) >= lam:
                break
            step *= 2
            hi_k = k - step
            hi_pi = self.solve(hi_k)
        else:
            hi_pi = self.full
            hi_k = -np.inf
        for _ in range(45 if np.isfinite(hi_k) else 0):
            mid = 0.5 * (lo_k + hi_k)
            p = self.solve(mid)
            if C(p) >= lam:
                hi_k, hi_pi = mid, p
            else:
                lo_k, lo_pi = mid, p
        c_hi, c_lo = C(hi_pi), C(lo_pi)
        theta = 1.0 if c_hi == c_lo else (lam - c_lo) / (c_hi - c_lo)
        return _mix(hi_pi, lo_pi, float(np.clip(theta, 0.0, 1.0)))


def inner_solve(problem: DynamicProblem, C: CostFunctional, k: float,
                cfg: SearchConfig = SearchConfig()) -> InformationStructure:
    """Maximizer of ``E_pi[U] - k C(pi)`` over structures at the prior.

    ``cfg.method`` picks exact concavification on a grid (UPS costs, two
    states), multi-start local search over direct signals, or ``auto``.
    """
    return _InnerSolver(problem, C, cfg).solve(k)


def _mix(a: InformationStructure, b: InformationStructure, theta: float) -> InformationStructure:
    w = np.concatenate([theta * a.weights, (1 - theta) * b.weights])
    return InformationStructure(w, np.vstack([a.posteriors, b.posteriors]))


LAMBDA_MAX = 1e3


def static_solve(problem: DynamicProblem, C: CostFunctional,
                 lambda_grid: Sequence[float] | None = None,
                 cfg: SearchConfig = SearchConfig(), refine: int = 40) -> StaticSolution:
    """Solve the static reduction over flow rates and structures.

    Rates range over ``[1e-6, C(full revelation)]``, clipped to a hard cap
    if ``f`` has one.  With grid concavification "full revelation" means the
    most informative structure on the grid, which keeps the bound finite for
    potentials that diverge at the boundary.  Because ``E[U] - k C`` falls as the price ``k`` rises, the rate
    that minimizes the price is optimal whenever the constraint
    ``C(pi) >= lam`` is slack there; it is found on the log grid and refined
    by bounded golden-section search.  Otherwise the full objective is
    searched over the same grid.  Doing nothing is always a candidate.
    """
    mu = problem.prior
    solver = _InnerSolver(problem, C, cfg)
    hi = min(solver.c_full, problem.f.upper, LAMBDA_MAX)
    if lambda_grid is None:
        lambda_grid = np.geomspace(LAMBDA_MIN, hi, 48) if hi > LAMBDA_MIN else []
    lambda_grid = [float(l) for l in lambda_grid if 0 < l <= hi * (1 + 1e-12)]
    stay = InformationStructure.point_mass(mu)
    best = StaticSolution(float(decision_utility(problem, mu)), None, stay, False, None)
    if not lambda_grid:
        return best

    def refine_max(score, grid_vals):
        i = int(np.argmax(grid_vals))
        lam = lambda_grid[i]
        if refine and len(lambda_grid) > 1:
            lo = np.log(lambda_grid[max(i - 1, 0)])
            up = np.log(lambda_grid[min(i + 1, len(lambda_grid) - 1)])
            res = minimize_scalar(lambda t: -score(np.exp(t)), bounds=(lo, up),
                                  method="bounded", options={"xatol": 1e-12, "maxiter": refine})
            if -res.fun >= grid_vals[i]:
                lam = float(np.exp(res.x))
        return lam

    def evaluate(lam):
        k = price(problem, lam)
        if not np.isfinite(k):
            return -np.inf, None, k, False
        pi = solver.solve(k)
        binding = C(pi) < lam
        if binding:
            pi = solver.solve_constrained(lam, k)
            if pi is None:
                return -np.inf, None, k, True
        return expected_utility(problem, pi) - k * C(pi), pi, k, binding

    def neg_price(lam):
        k = price(problem, lam)
        return -k if np.isfinite(k) else -np.inf

    lam_k = refine_max(neg_price, [neg_price(l) for l in lambda_grid])
    val, pi, k, binding = evaluate(lam_k)
    cand = [(lam_k, val)]
    if binding or pi is None:
        vals = [evaluate(l)[0] for l in lambda_grid]
        lam = refine_max(lambda l: evaluate(l)[0], vals)
        val2, pi2, k2, b2 = evaluate(lam)
        cand.append((lam, val2))
        if pi is None or val2 > val:
            lam_k, val, pi, k, binding = lam, val2, pi2, k2, b2
    if pi is not None and val > best.value:
        best = StaticSolution(val, lam_k, pi, binding, k)
    best.candidates = cand
    return best


# ---------------------------------------------------------------------------
# solution properties


@dataclass
class SolutionReport:
    shared_support: bool | None
    supports: list[np.ndarray]
    constancy: str  # "vacuous", "constant" or "uneven"
    dominated: list[tuple[int, float, float]]  # (index, cost of strategy, evened-out bound)
    unique: bool | None


def _same_support(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    if len(a) != len(b):
        return False
    used = np.zeros(len(b), dtype=bool)
    for p in a:
        d = np.abs(b - p).max(axis=1)
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > tol:
            return False
        used[j] = True
    return True


def check_solution_properties(solutions: Sequence[StaticSolution], C: CostFunctional,
                              f: FlowTransform, strategies: Sequence[Sequence[float]] = (),
                              value_tol: float = 1e-6, support_tol: float = 1e-6) -> SolutionReport:
    """Inspect optimal strategies.

    1. near-optimal solutions (within ``value_tol`` of the best) should share
       one posterior support when ``C`` is claimed monotone;
    2. each entry of ``strategies`` lists per-period information costs of a
       user strategy; under strictly convex ``f`` an uneven sequence is
       dominated by its evened-out version, whose flow cost is
       ``T f(mean)``;
    3. whether the near-optimal set is a single structure (reported only).
    """
    solutions = list(solutions)
    supports: list[np.ndarray] = []
    shared = None
    unique = None
    if solutions:
        top = max(s.value for s in solutions)
        near = [s for s in solutions if s.value >= top - value_tol]
        supports = [s.pi.sorted().posteriors for s in near]
        if C.claims_monotone:
            shared = all(_same_support(supports[0], s, support_tol) for s in supports[1:])
        unique = all(s.pi.allclose(near[0].pi, support_tol) for s in near[1:])
    dominated = []
    if not f.strictly_convex:
        constancy = "vacuous"
    else:
        constancy = "constant"
        for i, seq in enumerate(strategies):
            c = np.asarray(seq, dtype=float)
            actual = float(sum(f(x) for x in c))
            even = len(c) * f(float(c.mean()))
            if actual > even + 1e-12:
                dominated.append((i, actual, even))
                constancy = "uneven"
    return SolutionReport(shared, supports, constancy, dominated, unique)
