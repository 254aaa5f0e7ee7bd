#
# 8888888b.   .d8888b.  888b    888  .d8888b.  8888888 888b     d888 
# 888  "Y88b d88P  Y88b 8888b   888 d88P  Y88b   888   8888b   d8888 
# 888    888 888    888 88888b  888 Y88b.        888   88888b.d88888 
# 888    888 888        888Y88b 888  "Y888b.     888   888Y88888P888 
# 888    888 888        888 Y88b888     "Y88b.   888   888 Y888P 888 
# 888    888 888    888 888  Y88888       "888   888   888  Y8P  888 
# 888  .d88P Y88b  d88P 888   Y8888 Y88b  d88P   888   888   "   888 
# 8888888P"   "Y8888P"  888    Y888  "Y8888P"  8888888 888       888 
#
# Copyright (c) 2025, Abe Mishler
# Licensed under the Universal Permissive License v 1.0
# as shown at https://oss.oracle.com/licenses/upl/. 
# 

"""
Invariant suites run by `dcnsim check`.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .adcn import PsiTerm, psi_direct_value
from .base import DcnError, SuiteSpec, TopologySpec
from .consensus import Communicator
from .cubic import CubicModel, PsiState, model_grad, psi_argmin, psi_grad, psi_update, psi_value, solve_cubic
from .network import (MixingOperator, chebyshev_degree, estimate_contraction, generate)
from .objectives import finite_difference_check, make_suite

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def model_bound_ratio(suite, points: np.ndarray, grads: np.ndarray, hessians: np.ndarray,
                      delta1: float, delta2: float, rng, samples: int = 20,
                      scale: float = 1.0) -> float:
    """
    Largest ratio of |f(x) - model_i(x)| to its inexact-Taylor bound
    delta1 r + delta2/2 r^2 + L2/6 r^3 over random displacements around each
    node's point. Values at most 1 mean the bound holds.
    """
    worst = 0.0
    L2 = suite.L2_bar
    for i in range(points.shape[0]):
        xh = points[i]
        f_h = suite.value(xh)
        for _ in range(samples):
            s = rng.standard_normal(xh.shape[0])
            s *= scale * rng.uniform(0.0, 1.0) / max(np.linalg.norm(s), 1e-300)
            r = np.linalg.norm(s)
            model = f_h + grads[i] @ s + 0.5 * s @ hessians[i] @ s
            lhs = abs(suite.value(xh + s) - model)
            rhs = delta1 * r + 0.5 * delta2 * r ** 2 + L2 / 6.0 * r ** 3
            slack = 1e-12 * max(1.0, abs(f_h))
            worst = max(worst, (lhs - slack) / rhs if rhs > 0 else (0.0 if lhs <= slack else np.inf))
    return float(worst)


def check_finite_differences(seed: int) -> CheckResult:
    grad_worst = hess_worst = 0.0
    for family in ("quadratic", "logistic"):
        suite = make_suite(SuiteSpec(family=family, m=3, d=6), seed)
        rng = np.random.default_rng(seed)
        for obj in suite.objectives:
            for x in rng.standard_normal((50, suite.dim)):
                report = finite_difference_check(obj, x)
                grad_worst = max(grad_worst, report.grad_rel_err)
                hess_worst = max(hess_worst, report.hess_rel_err)
    return CheckResult("finite differences", grad_worst <= 1e-5 and hess_worst <= 1e-4,
                       f"gradient error {grad_worst:.2e}, Hessian error {hess_worst:.2e} over 50 points")


def check_stochasticity(seed: int) -> CheckResult:
    worst = 0.0
    specs = [("static", TopologySpec(graph=g)) for g in ("ring", "complete", "path", "random-geometric")]
    specs += [("per-step-connected", TopologySpec()), ("tau-connected", TopologySpec(tau=3))]
    for kind, spec in specs:
        schedule = generate(kind, spec, 8, seed)
        for k in range(6):
            W = schedule.matrix(k)
            off = ~np.eye(8, dtype=bool)
            mask = np.zeros((8, 8), dtype=bool)
            for i, j in schedule.snapshot(k).edges:
                mask[i, j] = mask[j, i] = True
            worst = max(worst,
                        np.abs(W.sum(axis=0) - 1).max(),
                        np.abs(W.sum(axis=1) - 1).max(),
                        np.abs(W[off & ~mask]).max(initial=0.0))
    return CheckResult("mixing matrices", worst <= 1e-12, f"max violation {worst:.2e}")


def check_contraction(seed: int) -> CheckResult:
    schedule = generate("static", TopologySpec(graph="ring"), 8, seed)
    lam = estimate_contraction(schedule, 1)
    rng = np.random.default_rng(seed)
    J = np.full((8, 8), 1.0 / 8)
    ok = True
    for _ in range(20):
        U = rng.standard_normal((8, 5))
        before = np.linalg.norm(U - J @ U)
        after = np.linalg.norm(schedule.matrix(0) @ U - J @ U)
        ok &= after <= (1.0 - lam) * (1.0 + 1e-9) * before
    return CheckResult("ring contraction", bool(ok), f"lambda {lam:.4f}")


def check_chebyshev(seed: int) -> CheckResult:
    schedule = generate("static", TopologySpec(graph="ring"), 16, seed)
    W = schedule.matrix(0)
    lam = estimate_contraction(schedule, 1)
    K = chebyshev_degree(lam)
    op = MixingOperator(W, K)
    J = np.full((16, 16), 1.0 / 16)
    plain = 1.0 - np.linalg.norm(np.linalg.matrix_power(W, K) - J, 2)
    return CheckResult("Chebyshev acceleration", op.contraction > plain,
                       f"K = {K}: {op.contraction:.4f} vs plain {plain:.4f}")


def check_cubic(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 17))
        B = rng.standard_normal((d, d))
        model = CubicModel(rng.standard_normal(d), B @ B.T / d, rng.uniform(0, 1), rng.uniform(0.1, 10))
        s = solve_cubic(model)
        worst = max(worst, np.linalg.norm(model_grad(model, s)) / (1.0 + np.linalg.norm(model.g)))
    return CheckResult("cubic subproblem", worst <= 1e-8, f"max scaled residual {worst:.2e}")


def check_psi_replay(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    d, mu, alpha = 4, 0.5, 0.3
    center = rng.standard_normal(d)
    state = PsiState.initial(center, mu / 2.0, 1.5 * mu)
    terms: List[PsiTerm] = []
    A = 1.0
    for _ in range(10):
        A *= 1.0 - alpha
        g, x = rng.standard_normal(d), rng.standard_normal(d)
        state = psi_update(state, alpha, A, mu / 2.0, 1.5 * mu, mu, g, x)
        terms.append(PsiTerm(alpha / A, g, x))
    points = rng.standard_normal((10, d))
    diffs = [psi_direct_value(center, mu / 2.0, 1.5 * mu, mu, terms, p) - psi_value(state, p)
             for p in points]
    spread = (max(diffs) - min(diffs)) / max(1.0, max(abs(v) for v in diffs))
    y = psi_argmin(state)
    grad = np.linalg.norm(psi_grad(state, y)) / (1.0 + np.linalg.norm(state.lin_acc))
    return CheckResult("estimating function replay", spread <= 1e-9 and grad <= 1e-8,
                       f"spread {spread:.2e}, argmin gradient {grad:.2e}")


def check_model_bound(seed: int) -> CheckResult:
    suite = make_suite(SuiteSpec(family="logistic", m=6, d=5, heterogeneity=0.5), seed)
    schedule = generate("static", TopologySpec(graph="ring"), suite.m, seed)
    comm = Communicator(schedule, 1, estimate_contraction(schedule, 1))
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((suite.m, suite.dim))
    Xh, rep_x = comm.mix(X, "point", rounds=2)
    grads = np.array([obj.gradient(x) for obj, x in zip(suite.objectives, Xh)])
    hess = np.array([obj.hessian(x) for obj, x in zip(suite.objectives, Xh)])
    Gh, rep_g = comm.mix(grads, "gradient", rounds=2)
    Hh, rep_h = comm.mix(hess.reshape(suite.m, -1), "hessian", rounds=2)
    Hh = Hh.reshape(hess.shape)
    delta1 = rep_g.max_row_deviation + 2.0 * suite.L1_bar * rep_x.max_row_deviation
    delta2 = rep_h.max_row_deviation + 2.0 * suite.L2_bar * rep_x.max_row_deviation
    ratio = model_bound_ratio(suite, Xh, Gh, Hh, delta1, delta2, rng)
    return CheckResult("inexact Taylor bound", ratio <= 1.0, f"worst ratio {ratio:.3f}")


CHECKS: List[Callable[[int], CheckResult]] = [
    check_finite_differences,
    check_stochasticity,
    check_contraction,
    check_chebyshev,
    check_cubic,
    check_psi_replay,
    check_model_bound,
]


def run_checks(seed: int = 0) -> List[CheckResult]:
    """Run every invariant suite; a raised DcnError counts as a failure"""
    results = []
    for check in CHECKS:
        try:
            result = check(seed)
        except DcnError as e:
            result = CheckResult(check.__name__.replace("check_", "").replace("_", " "), False, str(e))
        logger.debug("%s: %s (%s)", result.name, "ok" if result.passed else "FAILED", result.detail)
        results.append(result)
    return results
