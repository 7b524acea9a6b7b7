"""Second-order behaviour of cost functionals near uninformative structures.

Throughout, the local kernel ``B(mu)`` is normalized so that a two-point
spread ``mu +/- t v`` (weights one half each) costs ``t^2 v^T B(mu) v`` to
leading order.  For a uniformly posterior separable cost this makes ``B``
one half of the Hessian of the potential.  Matrices on the tangent space are
expressed in the first ``K - 1`` coordinates via ``[I, -1] B [I, -1]^T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .costs import CostFunctional, PotentialFunction, tangent_projection
from .errors import InvariantError, NumericalError
from .structures import InformationStructure, as_belief

DEFAULT_SCALES = (1e-2, 5e-3, 2.5e-3)


@dataclass(frozen=True)
class KernelEstimate:
    at: np.ndarray
    projected_matrix: np.ndarray
    error_bound: float
    probe_scales: tuple[float, ...]


def _tangent_basis(K: int) -> np.ndarray:
    return np.hstack([np.eye(K - 1), -np.ones((K - 1, 1))])


def _spread_cost(C: CostFunctional, mu: np.ndarray, v: np.ndarray, t: float) -> float:
    a, b = mu + t * v, mu - t * v
    if min(a.min(), b.min()) <= 0:
        raise InvariantError(f"probe at scale {t} leaves the interior of the simplex")
    return C(InformationStructure(np.array([0.5, 0.5]), np.vstack([a, b])))


def _richardson(values: np.ndarray, ratio: float = 2.0) -> tuple[float, float]:
    """Eliminate the ``t^2`` and ``t^4`` terms from values at ``t, t/r, t/r^2, ...``."""
    table = [np.asarray(values, dtype=float)]
    p = 2
    while len(table[-1]) > 1:
        prev = table[-1]
        f = ratio**p
        table.append((f * prev[1:] - prev[:-1]) / (f - 1))
        p += 2
    best = float(table[-1][0])
    err = abs(best - float(table[-2][-1])) if len(table) > 1 else np.inf
    return best, err


def estimate_kernel(C: CostFunctional, mu, scales: Sequence[float] = DEFAULT_SCALES
                    ) -> KernelEstimate:
    """Estimate the projected local kernel of ``C`` at an interior belief.

    Diagonal entries come from spreads along ``e_i - e_K``; off-diagonal ones
    from polarization.  Each quadratic form is extrapolated to ``t -> 0``
    from the ratio-2 scales.
    """
    mu = as_belief(mu)
    if np.any(mu <= 0):
        raise InvariantError("estimate_kernel needs an interior belief")
    scales = tuple(float(s) for s in scales)
    if len(scales) < 2 or any(b >= a for a, b in zip(scales, scales[1:])):
        raise InvariantError("scales must be strictly decreasing, at least two")
    ratios = np.array(scales[:-1]) / np.array(scales[1:])
    if not np.allclose(ratios, ratios[0]):
        raise InvariantError("scales must form a geometric sequence")
    r = float(ratios[0])
    V = _tangent_basis(len(mu))
    n = len(V)

    def form(v):
        vals = np.array([_spread_cost(C, mu, v, t) / t**2 for t in scales])
        d = np.abs(np.diff(vals))
        mag = max(1.0, float(np.abs(vals).max()))
        if len(d) > 1 and d[-1] > 0.75 * d[-2] + 1e-9 * mag:
            raise NumericalError(f"probe values do not converge quadratically: {vals}")
        return _richardson(vals, r)

    Bt = np.zeros((n, n))
    err = 0.0
    for i in range(n):
        Bt[i, i], e = form(V[i])
        err = max(err, e)
    for i in range(n):
        for j in range(i + 1, n):
            qp, ep = form(V[i] + V[j])
            qm, em = form(V[i] - V[j])
            Bt[i, j] = Bt[j, i] = (qp - qm) / 4
            err = max(err, (ep + em) / 4)
    return KernelEstimate(mu, Bt, err, scales)


def fisher_kernel(mu) -> tuple[np.ndarray, np.ndarray]:
    """``diag(mu)^-1 - 1 1^T`` and its tangent projection."""
    mu = as_belief(mu)
    if np.any(mu <= 0):
        raise InvariantError("Fisher kernel is undefined on the boundary")
    F = np.diag(1.0 / mu) - np.ones((len(mu), len(mu)))
    return F, tangent_projection(F)


@dataclass(frozen=True, eq=False)
class PriorIndependentKernel:
    """Symmetric PSD ``Q`` with zero row sums."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise InvariantError("Q must be square")
        if np.abs(Q - Q.T).max() > 1e-12:
            raise InvariantError("Q must be symmetric")
        if np.abs(Q.sum(axis=1)).max() > 1e-12:
            raise InvariantError("rows of Q must sum to zero")
        if np.linalg.eigvalsh(Q).min() < -1e-10:
            raise InvariantError("Q must be positive semi-definite")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)


def prior_independent_kernel(Q) -> Callable[[np.ndarray], np.ndarray]:
    """``mu -> diag(mu)^-1 Q diag(mu)^-1``."""
    q = Q if isinstance(Q, PriorIndependentKernel) else PriorIndependentKernel(Q)

    def B(mu):
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (q.Q.shape[0],):
            raise InvariantError("belief dimension does not match Q")
        if np.any(mu <= 0):
            raise InvariantError("kernel is undefined on the boundary")
        d = 1.0 / mu
        return d[:, None] * q.Q * d[None, :]

    return B


# ---------------------------------------------------------------------------
# potentials from curvature


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _vectorized(b):
    def f(x):
        x = np.asarray(x, dtype=float)
        try:
            y = np.asarray(b(x), dtype=float)
            if y.shape == x.shape:
                return y
        except (TypeError, ValueError):
            pass
        return np.vectorize(lambda s: float(b(s)))(x)

    return f


def integrate_potential_binary(b: Callable[[float], float], grid: int = 2000,
                               delta: float = 1e-3) -> PotentialFunction:
    """Convex ``H`` on binary beliefs with ``H'' = b``, ``H(1/2) = H'(1/2) = 0``.

    ``H`` is parametrized by the first coordinate and defined on
    ``[delta, 1 - delta]``.  Each grid cell is integrated with 10-point
    Gauss-Legendre; values between nodes are integrated from the left node.
    """
    bf = _vectorized(b)
    half = grid // 2
    nodes = np.concatenate([np.linspace(delta, 0.5, half + 1)[:-1], np.linspace(0.5, 1 - delta, half + 1)])
    c = half  # index of 1/2
    lo, hi = nodes[:-1], nodes[1:]
    h = hi - lo
    s = lo[:, None] + h[:, None] * (_GL_X[None, :] + 1) / 2
    bs = bf(s)
    if np.any(bs < 0) or np.any(bf(nodes) < 0):
        raise InvariantError("curvature b must be nonnegative")
    wq = _GL_W[None, :] * h[:, None] / 2
    I0 = np.sum(wq * bs, axis=1)
    I_right = np.sum(wq * (hi[:, None] - s) * bs, axis=1)  # int (x_{k+1} - s) b
    I_left = np.sum(wq * (s - lo[:, None]) * bs, axis=1)   # int (s - x_k) b

    H = np.zeros(len(nodes))
    D = np.zeros(len(nodes))
    for k in range(c, len(nodes) - 1):
        D[k + 1] = D[k] + I0[k]
        H[k + 1] = H[k] + D[k] * h[k] + I_right[k]
    for k in range(c - 1, -1, -1):
        D[k] = D[k + 1] - I0[k]
        H[k] = H[k + 1] - D[k + 1] * h[k] + I_left[k]

    def scalar(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < delta - 1e-15) or np.any(x > 1 - delta + 1e-15):
            raise InvariantError(f"potential is only defined on [{delta}, {1 - delta}]")
        k = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 2)
        x0 = nodes[k]
        dx = x - x0
        sq = x0[..., None] + dx[..., None] * (_GL_X + 1) / 2
        tail = np.sum(_GL_W * dx[..., None] / 2 * (x[..., None] - sq) * bf(sq), axis=-1)
        return H[k] + D[k] * dx + tail

    def value(p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != 2:
            raise InvariantError("binary potential needs two states")
        return scalar(p[..., 0])

    def hessian(mu):
        m = float(as_belief(mu, 2)[0])
        return np.array([[float(bf(np.array(m))), 0.0], [0.0, 0.0]])

    return PotentialFunction(value, hessian, "integrated")


# ---------------------------------------------------------------------------
# integrability


@dataclass(frozen=True)
class IntegrabilityReport:
    residual: float
    scale: float
    tol: float
    per_point: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return self.residual < self.tol * self.scale


def hessian_integrability_check(kernel: Callable[[np.ndarray], np.ndarray],
                                points: Sequence, h: float = 1e-4,
                                tol: float = 1e-6) -> IntegrabilityReport:
    """Test whether the projected kernel could be the Hessian of a potential.

    A Hessian field has symmetric third derivatives, so in tangent
    coordinates ``d_i Bt_jk = d_j Bt_ik``.  Derivatives use a 4-point central
    stencil along ``e_i - e_K``.  Binary kernels pass vacuously.
    """
    per_point = []
    scale = 1.0
    for p in points:
        mu = as_belief(p)
        K = len(mu)
        if np.any(mu <= 0):
            raise InvariantError("probe points must be interior")
        if K <= 2:
            per_point.append(0.0)
            continue
        V = _tangent_basis(K)
        if np.any(mu[None, :] - 2 * h * np.abs(V) <= 0):
            raise InvariantError("stencil leaves the simplex")

        def Bt(x):
            return tangent_projection(np.asarray(kernel(x), dtype=float))

        scale = max(scale, float(np.abs(Bt(mu)).max()))
        dB = np.array([
            (-Bt(mu + 2 * h * v) + 8 * Bt(mu + h * v) - 8 * Bt(mu - h * v) + Bt(mu - 2 * h * v))
            / (12 * h)
            for v in V
        ])  # dB[i, j, k] = d_i Bt_jk
        per_point.append(float(np.abs(dB - dB.transpose(1, 0, 2)).max()))
    return IntegrabilityReport(max(per_point, default=0.0), scale, tol, tuple(per_point))
