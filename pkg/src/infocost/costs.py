"""Information cost functionals and the building blocks used to define them.

A cost functional maps an information structure to a nonnegative price.  The
presets here cover the posterior-separable family (a divergence from the
prior), its uniform subfamily (a convex potential), quadratic kernel costs,
and a few transforms that are useful for manufacturing counterexamples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import rel_entr, xlogy

from .errors import InvariantError
from .structures import InformationStructure, as_belief, to_experiment

ZERO_TOL = 1e-9
PSD_TOL = 1e-8


# ---------------------------------------------------------------------------
# potentials and divergences


@dataclass(frozen=True)
class PotentialFunction:
    """Convex function on the simplex.

    ``value`` must accept an array whose last axis indexes states and reduce
    over it.  ``hessian`` (optional) returns the full ``K x K`` Hessian at a
    single interior belief.
    """

    value: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "H"

    def __call__(self, p) -> float | np.ndarray:
        return self.value(np.asarray(p, dtype=float))

    def scaled(self, k: float) -> "PotentialFunction":
        hess = None if self.hessian is None else (lambda mu: k * self.hessian(mu))
        return PotentialFunction(lambda p: k * self.value(p), hess, f"{k:g}*{self.label}")

    def convexity_violations(self, n_states: int, trials: int = 200, seed: int = 0,
                             tol: float = ZERO_TOL) -> list[tuple[np.ndarray, np.ndarray]]:
        """Sampled segments on which the midpoint value exceeds the chord."""
        rng = np.random.default_rng(seed)
        a = rng.dirichlet(np.ones(n_states), size=trials)
        b = rng.dirichlet(np.ones(n_states), size=trials)
        gap = self.value(0.5 * (a + b)) - 0.5 * (self.value(a) + self.value(b))
        return [(a[i], b[i]) for i in np.flatnonzero(gap > tol)]


@dataclass(frozen=True)
class DivergenceFunction:
    """Nonnegative ``D(nu || mu)`` vanishing on the diagonal."""

    value: Callable[[np.ndarray, np.ndarray], float]
    label: str = "D"

    def __call__(self, nu, mu) -> float:
        return float(self.value(np.asarray(nu, dtype=float), np.asarray(mu, dtype=float)))


def _neg_entropy(p):
    return np.sum(xlogy(p, p), axis=-1)


def _entropy_hessian(mu):
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise InvariantError("entropy Hessian is undefined on the boundary")
    return np.diag(1.0 / mu)


NEG_ENTROPY = PotentialFunction(_neg_entropy, _entropy_hessian, "neg_entropy")
QUADRATIC = PotentialFunction(
    lambda p: np.sum(p * p, axis=-1), lambda mu: 2.0 * np.eye(len(mu)), "quadratic"
)

KL = DivergenceFunction(lambda nu, mu: float(np.sum(rel_entr(nu, mu))), "kl")
TV_SQUARED = DivergenceFunction(lambda nu, mu: float((0.5 * np.abs(nu - mu).sum()) ** 2), "tv2")
SQ_EUCLIDEAN = DivergenceFunction(lambda nu, mu: float(np.sum((nu - mu) ** 2)), "sq_euclidean")

POTENTIALS: dict[str, PotentialFunction] = {"entropy": NEG_ENTROPY, "quadratic": QUADRATIC}
DIVERGENCES: dict[str, DivergenceFunction] = {
    "kl": KL,
    "tv2": TV_SQUARED,
    "sq_euclidean": SQ_EUCLIDEAN,
}


def binary_fie_potential(alpha: float) -> PotentialFunction:
    """Binary potential whose curvature is ``alpha / (mu^2 (1 - mu)^2)``.

    Parametrized by the first coordinate.  Diverges at the boundary, where it
    raises :class:`InvariantError`.
    """
    if alpha <= 0:
        raise InvariantError("alpha must be positive")

    def value(p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != 2:
            raise InvariantError("binary potential needs two states")
        m = p[..., 0]
        if np.any(m <= 0) or np.any(m >= 1):
            raise InvariantError("binary FIE potential diverges at posteriors 0 and 1")
        return alpha * (2 * (m * np.log(m) + (1 - m) * np.log1p(-m)) - np.log(m) - np.log1p(-m))

    def hessian(mu):
        m = float(as_belief(mu, 2)[0])
        if not 0 < m < 1:
            raise InvariantError("binary FIE potential diverges at posteriors 0 and 1")
        h = alpha / (m * m * (1 - m) ** 2)
        return np.array([[h, 0.0], [0.0, 0.0]])

    return PotentialFunction(value, hessian, f"binary_fie({alpha:g})")


# ---------------------------------------------------------------------------
# cost functionals


@dataclass(frozen=True, eq=False)
class CostFunctional:
    """A price on information structures.

    The flags record what the constructor claims about the functional; the
    checkers in :mod:`infocost.axioms` test those claims.  At construction
    the functional is evaluated on point masses over ``check_dims`` states
    and must vanish there.
    """

    evaluator: Callable[[InformationStructure], float]
    label: str
    claims_monotone: bool = False
    claims_subadditive: bool = False
    claims_ups: bool = False
    potential: PotentialFunction | None = None
    check_dims: tuple[int, ...] = (2, 3)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        rng = np.random.default_rng(20240601)
        for k in self.check_dims:
            for mu in rng.dirichlet(np.ones(k), size=4):
                v = self.evaluator(InformationStructure.point_mass(mu))
                if abs(v) > ZERO_TOL:
                    raise InvariantError(
                        f"{self.label}: cost of a point mass at {mu} is {v}, not 0"
                    )

    def __call__(self, pi: InformationStructure) -> float:
        return float(self.evaluator(pi))

    def __repr__(self):
        return f"CostFunctional({self.label})"


def mutual_information() -> CostFunctional:
    """Expected entropy reduction, in nats."""

    def ev(pi):
        return float(pi.weights @ _neg_entropy(pi.posteriors) - _neg_entropy(pi.prior))

    return CostFunctional(ev, "mutual_information", True, True, True, NEG_ENTROPY)


def ups_from_potential(H: PotentialFunction, check_dims=(2, 3)) -> CostFunctional:
    """``E[H(posterior)] - H(prior)``."""

    def ev(pi):
        return float(pi.weights @ np.asarray(H(pi.posteriors)) - H(pi.prior))

    return CostFunctional(ev, f"ups[{H.label}]", True, True, True, H, tuple(check_dims))


def ps_from_divergence(D: DivergenceFunction, check_dims=(2, 3)) -> CostFunctional:
    """``E[D(posterior || prior)]``."""

    def ev(pi):
        mu = pi.prior
        return float(sum(w * D(nu, mu) for w, nu in pi))

    return CostFunctional(ev, f"ps[{D.label}]", check_dims=tuple(check_dims))


def variance_cost() -> CostFunctional:
    """Expected squared Euclidean distance of the posterior from the prior."""
    c = ups_from_potential(QUADRATIC)
    return CostFunctional(c.evaluator, "variance", True, True, True, QUADRATIC)


def tangent_projection(B: np.ndarray) -> np.ndarray:
    """``[I, -1] B [I, -1]^T``: the form on the first ``K - 1`` coordinates."""
    B = np.asarray(B, dtype=float)
    K = B.shape[0]
    J = np.hstack([np.eye(K - 1), -np.ones((K - 1, 1))])
    return J @ B @ J.T


def kernel_cost(B: Callable[[np.ndarray], np.ndarray], check_dims=(), label="kernel") -> CostFunctional:
    """``E[(nu - mu)^T B(mu) (nu - mu)]`` for a belief-dependent matrix ``B``.

    ``B(mu)`` is checked for positive semi-definiteness on the tangent space
    at each evaluation.
    """

    def ev(pi):
        mu = pi.prior
        Bm = np.asarray(B(mu), dtype=float)
        if Bm.shape != (len(mu), len(mu)):
            raise InvariantError(f"kernel has shape {Bm.shape} at a {len(mu)}-state prior")
        if len(mu) > 1:
            Bt = tangent_projection(0.5 * (Bm + Bm.T))
            if np.linalg.eigvalsh(Bt).min() < -PSD_TOL * max(1.0, np.abs(Bt).max()):
                raise InvariantError(f"kernel is not PSD on the tangent space at {mu}")
        d = pi.posteriors - mu
        return float(pi.weights @ np.einsum("ij,jk,ik->i", d, Bm, d))

    return CostFunctional(ev, label, check_dims=tuple(check_dims))


def binary_fie_cost(alpha: float) -> CostFunctional:
    """UPS cost of :func:`binary_fie_potential` on binary states."""
    H = binary_fie_potential(alpha)
    c = ups_from_potential(H, check_dims=())

    def ev(pi):
        if pi.n_states != 2:
            raise InvariantError("binary_fie_cost is defined on two states only")
        return c.evaluator(pi)

    return CostFunctional(ev, f"binary_fie({alpha:g})", True, True, True, H, check_dims=(2,),
                          params={"alpha": alpha})


def binary_fie_kl_form(alpha: float, pi: InformationStructure) -> float:
    """Same cost as :func:`binary_fie_cost`, written with KL divergences.

    ``2 alpha (KL(P_sx || P_s x mu) + 1/2 sum_x KL(P_s || P^x))`` where
    ``P_sx`` is the signal-state joint, ``P_s`` the signal marginal and ``P^x``
    the signal law given state ``x``.
    """
    if pi.n_states != 2:
        raise InvariantError("binary states only")
    if np.any(pi.posteriors <= 0):
        raise InvariantError("interior posteriors required")
    e = to_experiment(pi)
    joint = e.kernel * e.prior
    ps = joint.sum(axis=1)
    mi = float(np.sum(rel_entr(joint, np.outer(ps, e.prior))))
    back = sum(float(np.sum(rel_entr(ps, e.kernel[:, x]))) for x in range(2))
    return 2 * alpha * (mi + 0.5 * back)


def power_transform(C: CostFunctional, gamma: float) -> CostFunctional:
    """``C ** gamma``; for ``gamma > 1`` this typically breaks subadditivity."""
    if gamma <= 1:
        raise InvariantError("gamma must exceed 1")
    return CostFunctional(
        lambda pi: C(pi) ** gamma, f"({C.label})^{gamma:g}", C.claims_monotone,
        check_dims=C.check_dims, params={"base": C.label, "gamma": gamma},
    )


def scaled(C: CostFunctional, k: float) -> CostFunctional:
    """``k * C`` for ``k > 0``."""
    if k <= 0:
        raise InvariantError("scale must be positive")
    H = None if C.potential is None else C.potential.scaled(k)
    return CostFunctional(
        lambda pi: k * C(pi), f"{k:g}*{C.label}", C.claims_monotone, C.claims_subadditive,
        C.claims_ups, H, C.check_dims, params={"base": C.label, "scale": k},
    )


def negated_mutual_information() -> CostFunctional:
    """Debug preset: ``-MI``.  Vanishes on point masses, violates monotonicity."""
    mi = mutual_information()
    return CostFunctional(lambda pi: -mi(pi), "negated_mi")


PRESETS: dict[str, Callable[[], CostFunctional]] = {
    "mi": mutual_information,
    "mutual_information": mutual_information,
    "variance": variance_cost,
    "negated_mi": negated_mutual_information,
}


def cost_from_spec(spec) -> CostFunctional:
    """Build a cost functional from a JSON-like spec or a preset name.

    Accepted kinds: ``mutual_information``, ``ups`` (``potential``), ``ps``
    (``divergence``), ``kernel`` (``matrix``: constant ``K x K`` form),
    ``binary_fie`` (``alpha``), ``power`` (``base``, ``gamma``) and ``scaled``
    (``base``, ``scale``).  A bare string names a preset.
    """
    if isinstance(spec, str):
        if spec in PRESETS:
            return PRESETS[spec]()
        raise InvariantError(f"unknown cost preset {spec!r}")
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvariantError("cost spec must be a preset name or an object with 'kind'")
    kind = spec["kind"]
    params = spec.get("params", {}) or {}
    if kind in PRESETS:
        return PRESETS[kind]()
    if kind == "ups":
        name = params.get("potential", "entropy")
        if name not in POTENTIALS:
            raise InvariantError(f"unknown potential {name!r}")
        return ups_from_potential(POTENTIALS[name])
    if kind == "ps":
        name = params.get("divergence", "kl")
        if name not in DIVERGENCES:
            raise InvariantError(f"unknown divergence {name!r}")
        return ps_from_divergence(DIVERGENCES[name])
    if kind == "kernel":
        B = np.asarray(params["matrix"], dtype=float)
        return kernel_cost(lambda mu: B, check_dims=(B.shape[0],), label="kernel[const]")
    if kind == "binary_fie":
        return binary_fie_cost(float(params.get("alpha", 1.0)))
    if kind == "power":
        return power_transform(cost_from_spec(params.get("base", "mi")), float(params["gamma"]))
    if kind == "scaled":
        return scaled(cost_from_spec(params.get("base", "mi")), float(params["scale"]))
    raise InvariantError(f"unknown cost kind {kind!r}")
