"""Acceptance criteria 1-10 at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line (collected again in the
terminal summary) and then asserts the same verdict.
"""

import math
import time

import numpy as np
import pytest

from helpers import binary, random_tree
from infocost import (
    DynamicProblem,
    FlowTransform,
    InformationStructure,
    PoissonStrategy,
    SignalExperiment,
    binary_fie_cost,
    binary_fie_kl_form,
    check_additivity,
    check_axiom0,
    check_dilution_linearity,
    check_monotonicity,
    check_subadditivity,
    dilution_chain,
    estimate_kernel,
    fisher_kernel,
    from_experiment,
    hessian_integrability_check,
    indirect_upper,
    kernel_cost,
    markovianize,
    matrix_dominates,
    mutual_garbling_is_permutation,
    mutual_information,
    poisson_value,
    power_transform,
    prior_independent_kernel,
    process_cost,
    random_walk_replication,
    replay,
    simulate,
    static_objective,
    terminal_law,
    variance_cost,
)
from infocost.axioms import GeneratorConfig, random_structure, random_structure_at
from infocost.blackwell import replicated_pairs
from infocost.costs import tangent_projection
from infocost.replication import wasserstein1

MI = mutual_information()
VAR = variance_cost()
MI_SQ = power_transform(MI, 2)


def test_criterion_1_fixed_point(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for C in (MI, VAR):
        for i in range(50):
            pi = random_structure(np.random.default_rng([1, i]), GeneratorConfig(n_states=2))
            worst = max(worst, abs(indirect_upper(C, pi).upper - C(pi)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    assert verdict(1, ok, f"max |upper - C| = {worst:.2e}, {elapsed:.1f} s")


def test_criterion_2_dilution_chain(verdict):
    want = {1: 0.480453, 2: 0.240227, 4: 0.120113, 8: 0.060057, 16: 0.030028}
    full = InformationStructure.full_revelation([0.5, 0.5])
    got = {K: process_cost(dilution_chain(full, K), MI_SQ) for K in want}
    worst = max(abs(got[K] - want[K]) for K in want)
    ok = worst <= 1e-6 and all(got[K] < MI_SQ(full) for K in want if K > 1)
    assert verdict(2, ok, f"max error {worst:.2e}; upper at K=16 is {got[16]:.6f}")


def test_criterion_3_random_walk(verdict):
    pi = binary((0.5, 0.1), (0.5, 0.9))
    exact = MI(pi)
    t0 = time.perf_counter()
    err = {M: process_cost(random_walk_replication(pi, M), MI) - exact for M in (20, 40, 80, 160)}
    elapsed = time.perf_counter() - t0
    ratios = []
    for M in (20, 40, 80):
        ratios.append(abs(err[2 * M] / err[M]) if err[M] != 0 else math.nan)
    in_band = all(0.3 <= r <= 0.7 for r in ratios)
    ok = in_band and abs(err[160]) < 5e-3 and elapsed < 5
    detail = (f"errors {[f'{e:.1e}' for e in err.values()]}, ratios "
              f"{[f'{r:.2f}' for r in ratios]}, {elapsed:.2f} s")
    assert verdict(3, ok, detail)


def test_criterion_4_binary_fie_forms(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0):
        for _ in range(100):
            prior = rng.uniform(0.05, 0.95)
            kernel = rng.dirichlet(np.ones(int(rng.integers(2, 5))), size=2).T
            kernel = 0.02 + 0.96 * kernel
            kernel /= kernel.sum(axis=0)
            pi = from_experiment(SignalExperiment([prior, 1 - prior], kernel))
            worst = max(worst, abs(binary_fie_cost(alpha)(pi) - binary_fie_kl_form(alpha, pi)))
    assert verdict(4, worst <= 1e-9, f"max gap {worst:.2e}")


def test_criterion_5_kernel_estimation(verdict):
    rng = np.random.default_rng(5)
    worst_rel = 0.0
    for i in range(20):
        k = 2 if i < 10 else 3
        mu = 0.05 + (1 - 0.05 * k) * rng.dirichlet(np.ones(k))
        est = estimate_kernel(MI, mu).projected_matrix
        want = 0.5 * fisher_kernel(mu)[1]
        worst_rel = max(worst_rel, np.abs(est - want).max() / np.abs(want).max())
    worst_exact = 0.0
    A = rng.normal(size=(3, 3))
    for B in (lambda mu: A @ A.T, lambda mu: 0.5 * fisher_kernel(mu)[0]):
        C = kernel_cost(B)
        for _ in range(5):
            mu = 0.1 + 0.7 * rng.dirichlet(np.ones(3))
            est = estimate_kernel(C, mu).projected_matrix
            worst_exact = max(worst_exact, np.abs(est - tangent_projection(B(mu))).max())
    ok = worst_rel <= 1e-3 and worst_exact < 1e-10
    assert verdict(5, ok, f"MI relative error {worst_rel:.1e}, kernel inputs {worst_exact:.1e}")


def test_criterion_6_integrability(verdict):
    mu = [0.2, 0.3, 0.5]
    Q = [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]
    bad = hessian_integrability_check(prior_independent_kernel(Q), [mu]).residual
    good = hessian_integrability_check(lambda m: fisher_kernel(m)[0], [mu]).residual
    ok = bad > 1e-3 and good < 1e-6
    assert verdict(6, ok, f"prior-independent residual {bad:.3g}, Fisher residual {good:.1e}")


def test_criterion_7_poisson(verdict):
    worst_gap = 0.0
    worst_z = 0.0
    for i in range(20):
        rng = np.random.default_rng([7, i])
        k = int(rng.integers(2, 4))
        mu = rng.dirichlet(np.ones(k))
        f = FlowTransform("power", float(rng.uniform(1, 3))) if i % 2 else FlowTransform("linear", float(rng.uniform(0, 1)))
        prob = DynamicProblem(rng.normal(size=(int(rng.integers(2, 4)), k)), float(rng.uniform(0, 0.1)), f, mu)
        pi = random_structure_at(rng, mu)
        C = MI if i < 10 else VAR
        rate = float(rng.uniform(0.05, 1.0)) * C(pi)
        s = PoissonStrategy(pi, rate)
        v = poisson_value(s, prob, C)
        worst_gap = max(worst_gap, abs(v - static_objective(prob, C, rate, pi)))
        res = simulate(s, prob, C, 100_000, seed=i)
        worst_z = max(worst_z, abs(res.mean - v) / res.std_error)
    prob = DynamicProblem(np.eye(2), 0.02, FlowTransform("power", 2.0), [0.5, 0.5])
    s = PoissonStrategy(binary((0.5, 0.1), (0.5, 0.9)), 0.1)
    v = poisson_value(s, prob, MI)
    res = simulate(s, prob, MI, 100_000, seed=0)
    ok = (worst_gap <= 1e-12 and worst_z <= 3 and abs(v - 0.789581) < 5e-7
          and abs(res.mean - 0.789581) <= 3 * res.std_error)
    detail = (f"identity gap {worst_gap:.1e}, worst |z| {worst_z:.2f}, example {v:.6f}, "
              f"simulated {res.mean:.6f} +/- {res.std_error:.1e}")
    assert verdict(7, ok, detail)


def test_criterion_8_axiom_suite(verdict):
    counts = {}
    for name, C in (("MI", MI), ("variance", VAR)):
        for check in (check_monotonicity, check_subadditivity, check_axiom0, check_additivity):
            counts[f"{name}/{check.__name__[6:]}"] = len(check(C, 200).violations)
    rep = check_subadditivity(MI_SQ, 200)
    replayable = bool(rep.violations) and all(
        abs(replay(rep, MI_SQ, v) - v.excess) <= 1e-12 for v in rep.violations)
    sym = binary((0.5, 0.1), (0.5, 0.9))
    lin = check_dilution_linearity(MI, sym, [0.25, 0.5, 0.75], tol=1e-12)
    ok = not any(counts.values()) and replayable and lin.passed and lin.mode == "equality"
    detail = (f"{sum(counts.values())} violations for MI and variance, "
              f"{len(rep.violations)} replayable MI^2 witnesses, linearity gap {lin.max_gap:.1e}")
    assert verdict(8, ok, detail)


def test_criterion_9_markovianization(verdict):
    worst_law = worst_mi = worst_eq = 0.0
    for i in range(100):
        rng = np.random.default_rng([9, i])
        tree = random_tree(rng, n_states=int(rng.integers(2, 4)), depth=int(rng.integers(2, 4)))
        res = markovianize(tree, MI)
        worst_law = max(worst_law, wasserstein1(terminal_law(res.process), res.terminal))
        worst_mi = max(worst_mi, res.markov_cost - res.original_cost)
        for C in (MI, VAR):
            r = res if C is MI else markovianize(tree, C)
            worst_eq = max(worst_eq, abs(r.markov_cost - r.original_cost))
    ok = worst_law <= 1e-9 and worst_mi <= 1e-9 and worst_eq <= 1e-9
    detail = f"terminal law {worst_law:.1e}, MI excess {worst_mi:.1e}, UPS gap {worst_eq:.1e}"
    assert verdict(9, ok, detail)


def _is_permutation(M, tol=1e-6):
    R = np.round(M)
    return (M.shape[0] == M.shape[1] and np.abs(M - R).max() <= tol
            and np.all(R.sum(axis=0) == 1) and np.all(R.sum(axis=1) == 1))


def test_criterion_10_mutual_garbling(verdict):
    rng = np.random.default_rng(10)
    detected = perms = 0
    for _ in range(50):
        n, k = int(rng.integers(2, 6)), int(rng.integers(2, 4))
        P = rng.dirichlet(np.ones(n), size=k).T
        assert not replicated_pairs(P)
        Pp = P[rng.permutation(n)]
        detected += mutual_garbling_is_permutation(P, Pp)
        ok1, M1 = matrix_dominates(Pp, P)
        ok2, M2 = matrix_dominates(P, Pp)
        perms += ok1 and ok2 and _is_permutation(M1) and _is_permutation(M2)
    ok = detected == 50 and perms == 50
    assert verdict(10, ok, f"{detected}/50 detected, {perms}/50 witnesses are permutations")
