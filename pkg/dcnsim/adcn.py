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
Accelerated Decentralized Cubic Newton for strongly convex suites.

Each node keeps three sequences: the cubic-step iterate x, the
estimating-function minimizer y and their interpolation v, at which the
local cubic model is built.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .base import BaseOptimizer, ConfigError, DcnError, NodePool, SolverOptions
from .consensus import AccRoundPlan, ConsensusReport, plan_rounds_acc
from .cubic import CubicModel, PsiState, psi_argmin, psi_update, solve_cubic
from .dcn import resolve_lreg, ceil_count, ratio
from .metrics import MetricsTrace, format_radii

logger = logging.getLogger(__name__)

SQRT5 = math.sqrt(5.0)
REPLAY_STEPS = 5


@dataclass
class AdcnParams:
    alpha: float
    kappa2: float
    kappa3: float
    Lreg: float
    delta2: float
    N: int
    target_v: float
    target_g: float
    target_h: float
    target_gx: float
    C: float
    R: float
    R_bar: float
    rounds: Optional[AccRoundPlan] = None
    adaptive: bool = True
    solved: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def schedule_accelerated(reference, suite, eps: float, Lreg: Optional[float] = None) -> AdcnParams:
    """
    Constant-alpha schedule: alpha, kappa coefficients, the four
    consensus targets, the constant C and the iteration count.

    Args:
        reference: Reference solution supplying R = |x0 - x*|, R-bar and gap0
        suite: Strongly convex problem suite
        eps: Target gap
        Lreg: Cubic coefficient, defaults to 3 * mean L2

    Returns:
        AdcnParams: Precompute plus N steps reach an eps-solution

    Raises:
        ConfigError: If eps <= 0, mean mu is not positive or Lreg < 3 * mean L2
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    mu = suite.mu_bar
    if mu <= 0:
        raise ConfigError("accelerated schedule needs mean mu > 0")
    Lreg = resolve_lreg(suite, Lreg, factor=3.0)
    R, R_bar = reference.R0, reference.R_bar
    kappa2 = mu / 2.0
    if R == 0.0:
        logger.info("start point is already optimal, nothing to schedule")
        return AdcnParams(0.0, kappa2, 0.0, Lreg, 0.0, 0, math.inf, math.inf, math.inf,
                          math.inf, 0.0, 0.0, R_bar, solved=True)
    L1, L2, mu_hat = suite.L1_bar, suite.L2_bar, suite.mu_hat
    alpha = min(0.8, ratio(3.0 * mu / R_bar, 160.0 * L2) ** (1.0 / 3.0))
    a2 = alpha * alpha
    target_h = min(mu / (60.0 * SQRT5 * a2), ratio(alpha * mu_hat * eps, 320.0 * L1 * R_bar ** 2))
    target_g = min(ratio(alpha * mu_hat * eps, 160.0 * L1 * R_bar), alpha * eps / (160.0 * R_bar))
    target_v = min(ratio(mu, 120.0 * SQRT5 * a2 * L2), ratio(alpha * eps, 320.0 * L1 * R_bar))
    target_gx = eps / (8.0 * R_bar)
    delta1_0 = target_g + 2.0 * L1 * target_v
    delta2_0 = target_h + 2.0 * L2 * target_v
    C = (4.0 * delta1_0 / (mu * R) + 4.0 * delta1_0 * R_bar / (mu * R * R)
         + 4.0 * delta2_0 / mu + 0.5 + (8.0 * L2 + 3.0 * mu / R_bar) / (6.0 * mu) * R)
    top = 2.0 * C * reference.gap0 / eps
    N = max(0, ceil_count(math.log(top) / -math.log1p(-alpha))) if top > 1.0 else 0
    params = AdcnParams(
        alpha=alpha, kappa2=kappa2, kappa3=1.5 * mu / R_bar, Lreg=Lreg,
        delta2=3.0 * delta2_0, N=N,
        target_v=target_v, target_g=target_g, target_h=target_h, target_gx=target_gx,
        C=C, R=R, R_bar=R_bar,
    )
    logger.debug("accelerated schedule: %s", params)
    return params


@dataclass
class PsiTerm:
    """One weighted lower model folded into the estimating function"""
    weight: float
    g: np.ndarray
    x: np.ndarray


@dataclass
class AdcnState:
    X: np.ndarray
    Y: np.ndarray
    V: np.ndarray
    V_hat: np.ndarray
    psi: List[PsiState]
    k: int
    A: float
    weight_sum: float
    trace: MetricsTrace
    f_bar: float
    gap0: float
    delta2_max: float = 0.0
    alpha: float = 0.0
    psi_terms: List[PsiTerm] = field(default_factory=list)


def psi_direct_value(center0: np.ndarray, kappa2: float, kappa3: float, mu_bar: float,
                     terms: List[PsiTerm], x: np.ndarray) -> float:
    """Term-by-term estimating function, function values dropped"""
    z = np.asarray(x, dtype=float) - center0
    r = np.linalg.norm(z)
    total = 0.5 * kappa2 * r ** 2 + kappa3 / 6.0 * r ** 3
    for t in terms:
        dx = x - t.x
        total += t.weight * (t.g @ dx + 0.5 * mu_bar * dx @ dx)
    return float(total)


def _derivatives(state_points, suite, communicator, backend, pool, plan_g, plan_h, params):
    m = state_points.shape[0]
    grads = np.array(pool.map(lambda i: suite.objectives[i].gradient(state_points[i]), range(m)))
    Gh, rep_g = communicator.mix(grads, "gradient", rounds=plan_g, target=params.target_g)
    Hh, rep_h = backend.exchange(communicator, suite, state_points, pool,
                                 rounds=plan_h, target=params.target_h)
    return Gh, rep_g, Hh, rep_h


def _cubic_steps(V_hat, Gh, Hh, delta2, params, pool, solver) -> np.ndarray:
    def local_step(i):
        model = CubicModel(Gh[i], Hh[i], delta2, params.Lreg)
        return solve_cubic(model, tol=solver.tol, eigen_max_dim=solver.eigen_max_dim,
                           max_iter=solver.max_iter)
    return V_hat + np.array(pool.map(local_step, range(V_hat.shape[0])))


def _mix_gradients_at(X, suite, communicator, pool, rounds, target):
    m = X.shape[0]
    grads = np.array(pool.map(lambda i: suite.objectives[i].gradient(X[i]), range(m)))
    return communicator.mix(grads, "gradient", rounds=rounds, target=target)


def _record(state: AdcnState, params: AdcnParams, suite, communicator, reference,
            reports: Tuple, delta1: float, delta2: float, A_k: float, telescoping: float) -> None:
    rep_v, rep_g, rep_h, rep_gx = reports
    x_bar = state.X.mean(axis=0)
    f_next = suite.value(x_bar)
    gap = f_next - reference.f_star
    slack = 1e-10 * max(1.0, abs(f_next))
    # per node, the farthest of x, y, v and v-hat from x*
    radii = np.max([np.linalg.norm(S - reference.x_star, axis=1)
                    for S in (state.X, state.Y, state.V, state.V_hat)], axis=0)
    max_radius = float(radii.max())
    bounded = max_radius <= params.R_bar
    if not bounded:
        logger.warning("iteration %d: radius %.4g exceeds R-bar %.4g", state.k, max_radius,
                       params.R_bar)
    bound_ok = gap <= A_k * params.C * state.gap0 * (1.0 + 1e-6) + slack
    if not bound_ok:
        logger.debug("iteration %d: gap %.3e above the geometric bound", state.k, gap)
    jensen_ok = f_next <= np.mean([suite.value(x) for x in state.X]) + slack
    state.trace.append(
        iteration=state.k + 1, gap=gap, f_value=f_next,
        delta_x=rep_v.max_row_deviation, delta_g=rep_g.max_row_deviation,
        delta_h=rep_h.max_row_deviation, delta_gx=rep_gx.max_row_deviation,
        rounds_x=rep_v.rounds_used, rounds_g=rep_g.rounds_used,
        rounds_h=rep_h.rounds_used, rounds_gx=rep_gx.rounds_used,
        cum_rounds=communicator.total_rounds, cum_scalars=communicator.total_scalars,
        delta1=delta1, delta2=delta2, jensen_ok=bool(jensen_ok),
        max_radius=max_radius, node_radii=format_radii(radii), bounded=bool(bounded),
        telescoping_residual=telescoping, bound_ok=bool(bound_ok),
    )
    state.f_bar = f_next


def adcn_precompute(state: AdcnState, params: AdcnParams, suite, communicator, backend,
                    reference, pool: Optional[NodePool] = None,
                    solver: Optional[SolverOptions] = None) -> AdcnState:
    """
    First cubic step from the common start and the initial estimating
    function, centered at the mixed start point.
    """
    pool = pool or NodePool(1)
    solver = solver or SolverOptions()
    plan = params.rounds
    try:
        state.V = state.X.copy()
        V_hat, rep_v = communicator.mix(state.V, "point", rounds=plan.v if plan else None,
                                        target=params.target_v)
        Gh, rep_g, Hh, rep_h = _derivatives(V_hat, suite, communicator, backend, pool,
                                            plan.g_v if plan else None,
                                            plan.h_v if plan else None, params)
        delta1 = rep_g.max_row_deviation + 2.0 * suite.L1_bar * rep_v.max_row_deviation
        delta2 = rep_h.max_row_deviation + 2.0 * suite.L2_bar * rep_v.max_row_deviation
        d2 = 3.0 * delta2 if params.adaptive else params.delta2
        X1 = _cubic_steps(V_hat, Gh, Hh, d2, params, pool, solver)
        # the initial estimating function folds in no gradient at x1
        rep_gx = ConsensusReport(0, 0.0, 0.0)
        state.psi = [PsiState.initial(V_hat[i], params.kappa2, params.kappa3)
                     for i in range(suite.m)]
        state.Y = np.array([psi_argmin(p) for p in state.psi])
    except DcnError as e:
        raise e.with_context("precompute") from e
    state.V_hat = V_hat
    state.X = X1
    state.delta2_max = delta2
    _record(state, params, suite, communicator, reference, (rep_v, rep_g, rep_h, rep_gx),
            delta1, delta2, 1.0, 0.0)
    state.k = 1
    return state


def adcn_step(state: AdcnState, params: AdcnParams, suite, communicator, backend, reference,
              pool: Optional[NodePool] = None, solver: Optional[SolverOptions] = None) -> AdcnState:
    """
    Interpolate, mix, take the cubic step at the mixed interpolation
    point, then fold the mixed gradient at the new iterate into the
    estimating function and move y to its minimizer.

    In adaptive mode alpha is also capped by the measured Hessian error
    so far, and delta2 is three times this iteration's measured error.

    Raises:
        DcnError: Any consensus or solver failure, prefixed with the iteration
    """
    pool = pool or NodePool(1)
    solver = solver or SolverOptions()
    plan = params.rounds
    k = state.k
    alpha = params.alpha
    if params.adaptive and state.delta2_max > 0.0:
        alpha = min(alpha, math.sqrt(suite.mu_bar / (30.0 * SQRT5 * state.delta2_max)))
    try:
        V = (1.0 - alpha) * state.X + alpha * state.Y
        V_hat, rep_v = communicator.mix(V, "point", rounds=plan.v if plan else None,
                                        target=params.target_v)
        Gh, rep_g, Hh, rep_h = _derivatives(V_hat, suite, communicator, backend, pool,
                                            plan.g_v if plan else None,
                                            plan.h_v if plan else None, params)
        delta1 = rep_g.max_row_deviation + 2.0 * suite.L1_bar * rep_v.max_row_deviation
        delta2 = rep_h.max_row_deviation + 2.0 * suite.L2_bar * rep_v.max_row_deviation
        d2 = 3.0 * delta2 if params.adaptive else params.delta2
        X_next = _cubic_steps(V_hat, Gh, Hh, d2, params, pool, solver)
        Gx_hat, rep_gx = _mix_gradients_at(X_next, suite, communicator, pool,
                                           plan.g_x if plan else None, params.target_gx)
        A_k = state.A * (1.0 - alpha)
        state.psi = [psi_update(state.psi[i], alpha, A_k, params.kappa2, params.kappa3,
                                suite.mu_bar, Gx_hat[i], X_next[i])
                     for i in range(suite.m)]
        Y = np.array([psi_argmin(p) for p in state.psi])
    except DcnError as e:
        raise e.with_context(f"iteration {k}") from e

    if k <= REPLAY_STEPS:
        state.psi_terms.append(PsiTerm(alpha / A_k, Gx_hat[0].copy(), X_next[0].copy()))
    state.weight_sum += alpha / A_k
    expected = 1.0 / A_k - 1.0
    telescoping = abs(state.weight_sum - expected) / max(1.0, expected)
    if telescoping > 1e-9:
        logger.warning("iteration %d: weight telescoping off by %.3e", k, telescoping)
    state.V, state.V_hat, state.X, state.Y = V, V_hat, X_next, Y
    state.A = A_k
    state.alpha = alpha
    state.delta2_max = max(state.delta2_max, delta2)
    _record(state, params, suite, communicator, reference, (rep_v, rep_g, rep_h, rep_gx),
            delta1, delta2, A_k, telescoping)
    state.k = k + 1
    return state


class AcceleratedDecentralizedCubicNewton(BaseOptimizer):
    """Precompute, then N accelerated steps"""

    name = "adcn"

    def schedule(self) -> AdcnParams:
        opts = self.options
        params = schedule_accelerated(self.reference, self.suite, opts.eps, opts.lreg)
        params.adaptive = opts.mode == "adaptive"
        if params.solved:
            return params
        if opts.fixed_rounds is not None:
            T = int(opts.fixed_rounds)
            params.rounds = AccRoundPlan(T, T, T, T)
        elif not params.adaptive:
            params.rounds = plan_rounds_acc(self.reference, self.suite, params,
                                            self.communicator.tau, self.communicator.lam)
        logger.info("%s: N = %d, alpha = %.4g, C = %.4g, rounds %s", self.name, params.N,
                    params.alpha, params.C, params.rounds if params.rounds else "adaptive")
        return params

    def initialize(self, x0) -> AdcnState:
        x0 = np.asarray(x0, dtype=float)
        self.backend.prepare(self.suite, self.communicator)
        m = self.suite.m
        X = np.tile(x0, (m, 1))
        f0 = self.suite.value(x0)
        gap0 = f0 - self.reference.f_star
        r0 = float(np.linalg.norm(x0 - self.reference.x_star))
        trace = MetricsTrace(self.name, self.options.timing)
        trace.append(iteration=0, gap=gap0, f_value=f0,
                     delta_x=0.0, delta_g=0.0, delta_h=0.0,
                     rounds_x=0, rounds_g=0, rounds_h=0,
                     cum_rounds=self.communicator.total_rounds,
                     cum_scalars=self.communicator.total_scalars,
                     max_radius=r0, node_radii=format_radii(np.full(self.suite.m, r0)))
        return AdcnState(X=X, Y=X.copy(), V=X.copy(), V_hat=X.copy(), psi=[], k=0, A=1.0,
                         weight_sum=0.0, trace=trace, f_bar=f0, gap0=max(gap0, 0.0),
                         alpha=self.params.alpha)

    def step(self, state: AdcnState) -> AdcnState:
        if state.k == 0:
            return adcn_precompute(state, self.params, self.suite, self.communicator,
                                   self.backend, self.reference, self.pool, self.options.solver)
        return adcn_step(state, self.params, self.suite, self.communicator, self.backend,
                         self.reference, self.pool, self.options.solver)

    def iterations(self) -> int:
        return 0 if self.params.solved else self.params.N + 1
