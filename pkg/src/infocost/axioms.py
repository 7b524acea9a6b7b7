"""Randomized falsification checks for the cost axioms.

Each checker draws ``trials`` random instances, evaluates both sides of an
inequality and records every instance where it fails by more than ``tol``.
Trial ``i`` draws from ``numpy.random.default_rng([seed, i])``, so a report
is reproducible trial by trial regardless of evaluation order, and each
recorded :class:`Violation` carries the objects needed to replay it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostFunctional, PotentialFunction, ups_from_potential
from .errors import InvariantError
from .structures import (
    InformationStructure,
    MarkovKernel,
    compose,
    dilution,
    from_experiment,
    garble,
    mix,
    to_experiment,
)

AXIOM_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorConfig:
    n_states: int = 3
    min_atoms: int = 2
    max_atoms: int = 8
    max_garbled_signals: int = 6


@dataclass
class Violation:
    trial: int
    lhs: float
    rhs: float
    objects: dict

    @property
    def excess(self) -> float:
        return self.lhs - self.rhs


@dataclass
class AxiomReport:
    axiom: str
    trials: int
    seed: int
    tol: float
    violations: list[Violation] = field(default_factory=list)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    params: dict = field(default_factory=dict)

    @property
    def max_violation(self) -> float:
        return max((v.excess for v in self.violations), default=0.0)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __repr__(self):
        return (f"AxiomReport({self.axiom}: {len(self.violations)} violations in "
                f"{self.trials} trials, max {self.max_violation:.3g})")


# ---------------------------------------------------------------------------
# random instances


def random_structure(rng: np.random.Generator, cfg: GeneratorConfig = GeneratorConfig()
                     ) -> InformationStructure:
    """Dirichlet posteriors with Dirichlet weights; the prior is their mean."""
    n = int(rng.integers(cfg.min_atoms, cfg.max_atoms + 1))
    post = rng.dirichlet(np.ones(cfg.n_states), size=n)
    w = rng.dirichlet(np.ones(n))
    return InformationStructure(w, post)


def random_structure_at(rng: np.random.Generator, prior, cfg: GeneratorConfig = GeneratorConfig()
                        ) -> InformationStructure:
    """Random structure whose prior is ``prior``.

    A random structure is translated onto ``prior`` and shrunk toward it by a
    random fraction of the largest factor that keeps every posterior in the
    simplex.
    """
    prior = np.asarray(prior, dtype=float)
    base = random_structure(rng, GeneratorConfig(len(prior), cfg.min_atoms, cfg.max_atoms))
    d = base.posteriors - base.prior
    neg = d < -1e-15
    s_max = np.min(np.where(neg, prior / np.where(neg, -d, 1.0), np.inf))
    if not np.isfinite(s_max):
        s_max = 1.0
    s = s_max * rng.uniform(0.1, 0.95)
    return InformationStructure(base.weights, prior + s * d)


def random_garbling(rng: np.random.Generator, pi: InformationStructure,
                    cfg: GeneratorConfig = GeneratorConfig()) -> InformationStructure:
    """Push ``pi`` through a random column-stochastic signal merge."""
    e = to_experiment(pi)
    n_new = int(rng.integers(1, cfg.max_garbled_signals + 1))
    M = rng.dirichlet(np.ones(n_new), size=e.n_signals).T
    return from_experiment(garble(e, M))


def random_kernel(rng: np.random.Generator, pi: InformationStructure,
                  cfg: GeneratorConfig = GeneratorConfig()) -> MarkovKernel:
    """Acquisition kernel with a random continuation at every atom of ``pi``."""
    return MarkovKernel([(nu, random_structure_at(rng, nu, cfg)) for nu in pi.posteriors])


def _cfg(n_states) -> GeneratorConfig:
    return GeneratorConfig(n_states=n_states)


# ---------------------------------------------------------------------------
# sides of each inequality, shared by the checkers and by replay


def _split_sides(C, objects):
    first, kernel = objects["first"], objects["kernel"]
    two_step = C(first) + sum(w * C(kernel(nu)) for w, nu in first)
    return C(compose(first, kernel)), two_step


def _sides(axiom: str, C: CostFunctional, objects: dict, **kw) -> tuple[float, float]:
    if axiom == "monotonicity":
        return C(objects["garbled"]), C(objects["original"])
    if axiom == "subadditivity":
        return _split_sides(C, objects)
    if axiom == "additivity":
        lhs, rhs = _split_sides(C, objects)
        return abs(lhs - rhs), 0.0
    if axiom == "axiom0":
        if "point_mass" in objects:
            return abs(C(objects["point_mass"])), 0.0
        parts = objects["parts"]
        return C(mix(parts)), sum(lam * C(s) for lam, s in parts)
    if axiom == "fie":
        return ups_from_potential(kw["H"], check_dims=())(objects["structure"]), C(objects["structure"])
    if axiom == "assumption2":
        pi = objects["structure"]
        d = pi.posteriors - pi.prior
        if kw.get("norm", "euclidean") == "first_coordinate":
            spread = pi.weights @ d[:, 0] ** 2
        else:
            spread = pi.weights @ np.sum(d * d, axis=1)
        return kw["m"] * float(spread), C(pi)
    raise InvariantError(f"unknown axiom {axiom!r}")


def replay(report: AxiomReport, C: CostFunctional, violation: Violation) -> float:
    """Recompute a recorded violation's excess from its stored objects."""
    lhs, rhs = _sides(report.axiom, C, violation.objects, **report.params)
    return lhs - rhs


def _run(axiom, C, trials, seed, tol, cfg, draw, **kw) -> AxiomReport:
    if trials < 1:
        raise InvariantError("trials must be at least 1")
    report = AxiomReport(axiom, trials, seed, tol, generator=cfg, params=kw)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        for objects in draw(rng):
            lhs, rhs = _sides(axiom, C, objects, **kw)
            if lhs - rhs > tol:
                report.violations.append(Violation(t, lhs, rhs, objects))
    return report


# ---------------------------------------------------------------------------
# checkers


def check_monotonicity(C: CostFunctional, trials: int = 200, rng_seed: int = 0,
                       n_states: int = 3, tol: float = AXIOM_TOL) -> AxiomReport:
    """``C(garbled) <= C(original)`` on random structures and garblings."""
    cfg = _cfg(n_states)

    def draw(rng):
        pi = random_structure(rng, cfg)
        yield {"original": pi, "garbled": random_garbling(rng, pi, cfg)}

    return _run("monotonicity", C, trials, rng_seed, tol, cfg, draw)


def check_subadditivity(C: CostFunctional, trials: int = 200, rng_seed: int = 0,
                        n_states: int = 3, tol: float = AXIOM_TOL) -> AxiomReport:
    """``C(compose(pi, k)) <= C(pi) + E_pi[C(k(nu))]`` on random pairs."""
    cfg = _cfg(n_states)

    def draw(rng):
        pi = random_structure(rng, cfg)
        yield {"first": pi, "kernel": random_kernel(rng, pi, cfg)}

    return _run("subadditivity", C, trials, rng_seed, tol, cfg, draw)


def check_additivity(C: CostFunctional, trials: int = 200, rng_seed: int = 0,
                     n_states: int = 3, tol: float = AXIOM_TOL) -> AxiomReport:
    """Two-sided version of :func:`check_subadditivity`."""
    cfg = _cfg(n_states)

    def draw(rng):
        pi = random_structure(rng, cfg)
        yield {"first": pi, "kernel": random_kernel(rng, pi, cfg)}

    return _run("additivity", C, trials, rng_seed, tol, cfg, draw)


def check_axiom0(C: CostFunctional, trials: int = 200, rng_seed: int = 0,
                 n_states: int = 3, tol: float = AXIOM_TOL) -> AxiomReport:
    """Convexity under same-prior mixtures, plus vanishing on point masses."""
    cfg = _cfg(n_states)

    def draw(rng):
        mu = rng.dirichlet(np.ones(n_states))
        yield {"point_mass": InformationStructure.point_mass(mu)}
        k = int(rng.integers(2, 4))
        lam = rng.dirichlet(np.ones(k))
        yield {"parts": [(float(l), random_structure_at(rng, mu, cfg)) for l in lam]}

    return _run("axiom0", C, trials, rng_seed, tol, cfg, draw)


def check_fie(C: CostFunctional, H: PotentialFunction, trials: int = 200, rng_seed: int = 0,
              n_states: int = 3, tol: float = AXIOM_TOL) -> AxiomReport:
    """``C(pi) >= E[H(nu)] - H(prior)`` on random structures."""
    cfg = _cfg(n_states)

    def draw(rng):
        yield {"structure": random_structure(rng, cfg)}

    return _run("fie", C, trials, rng_seed, tol, cfg, draw, H=H)


def check_assumption2(C: CostFunctional, m: float, trials: int = 200, rng_seed: int = 0,
                      n_states: int = 2, norm: str = "euclidean",
                      tol: float = AXIOM_TOL) -> AxiomReport:
    """``C(pi) >= m * E||nu - prior||^2`` on random structures.

    ``norm="euclidean"`` uses the full vector norm; ``"first_coordinate"``
    measures binary beliefs by their first coordinate only, which halves the
    spread.  Structures are drawn both globally and shrunk toward their prior,
    since violations of a local bound concentrate near uninformative ones.
    """
    if norm not in ("euclidean", "first_coordinate"):
        raise InvariantError(f"unknown norm {norm!r}")
    var_lower_bound = float(m)
    cfg = _cfg(n_states)

    def draw(rng):
        pi = random_structure(rng, cfg)
        yield {"structure": pi}
        yield {"structure": random_structure_at(rng, pi.prior, cfg)}
        s = 10.0 ** rng.uniform(-3, -1)
        yield {"structure": InformationStructure(pi.weights, pi.prior + s * (pi.posteriors - pi.prior))}

    return _run("assumption2", C, trials, rng_seed, tol, cfg, draw, m=var_lower_bound, norm=norm)


@dataclass
class DilutionReport:
    mode: str  # "equality" or "upper"
    rows: list[tuple[float, float, float]]  # (lambda, C(diluted), lambda * C(pi))
    tol: float

    @property
    def max_gap(self) -> float:
        if self.mode == "equality":
            return max((abs(a - b) for _, a, b in self.rows), default=0.0)
        return max((a - b for _, a, b in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_gap <= self.tol


def check_dilution_linearity(C: CostFunctional, pi: InformationStructure, lams,
                             tol: float = 1e-12, equality: bool | None = None,
                             trials: int = 50, rng_seed: int = 0) -> DilutionReport:
    """Compare ``C(dilution(pi, lam))`` with ``lam * C(pi)``.

    Equality is demanded when the cost passes the mixture-convexity and
    sub-additivity checkers (or when ``equality`` is forced); otherwise only
    the upper bound ``C(pi_lam) <= lam * C(pi)`` is checked.
    """
    if equality is None:
        k = pi.n_states
        equality = (check_axiom0(C, trials, rng_seed, k).passed
                    and check_subadditivity(C, trials, rng_seed, k).passed)
    base = C(pi)
    rows = [(float(l), C(dilution(pi, l)), float(l) * base) for l in lams]
    return DilutionReport("equality" if equality else "upper", rows, tol)
