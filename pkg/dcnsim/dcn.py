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
Decentralized Cubic Newton.

Every iteration mixes the node points, evaluates local derivatives at
the mixed points, mixes those derivatives and takes a local cubic step.
The two schedulers give the parameters under which the average iterate
reaches an eps-solution in the convex and the strongly convex regime.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .base import BaseOptimizer, ConfigError, DcnError, NodePool, SolverOptions
from .consensus import RoundPlan, plan_rounds_convex, plan_rounds_sc
from .cubic import CubicModel, solve_cubic
from .metrics import MetricsTrace, format_radii

logger = logging.getLogger(__name__)


def ceil_count(x: float) -> int:
    """Ceiling that ignores float noise just above an integer"""
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def ratio(num: float, den: float) -> float:
    """num / den, infinite when den is zero"""
    return num / den if den > 0.0 else math.inf


def default_lreg(suite, factor: float = 1.0) -> float:
    """Smallest admissible cubic coefficient, kept strictly positive"""
    return max(factor * suite.L2_bar, 1e-10 * max(1.0, suite.L1_bar))


@dataclass
class DcnParams:
    regime: str
    delta1: float
    delta2: float
    gamma: float
    Lreg: float
    N: int
    target_x: float
    target_g: float
    target_h: float
    alpha: Optional[float] = None
    # accuracies the round planner sizes point and gradient rounds for
    plan_target_x: Optional[float] = None
    plan_target_g: Optional[float] = None
    rounds: Optional[RoundPlan] = None
    adaptive: bool = True
    solved: bool = False

    def validate(self, suite) -> None:
        """
        Raises:
            ConfigError: If the regularization does not cover the
                aggregated consensus targets or Lreg < mean L2
        """
        slack = 1e-12
        need1 = self.target_g + 2.0 * suite.L1_bar * self.target_x
        need2 = self.target_h + 2.0 * suite.L2_bar * self.target_x
        if self.delta1 < need1 * (1.0 - slack):
            raise ConfigError(f"delta1 {self.delta1:.3e} below aggregated gradient error {need1:.3e}")
        if self.delta2 < need2 * (1.0 - slack):
            raise ConfigError(f"delta2 {self.delta2:.3e} below aggregated Hessian error {need2:.3e}")
        if self.Lreg < suite.L2_bar:
            raise ConfigError(f"Lreg {self.Lreg:.3e} below mean L2 {suite.L2_bar:.3e}")

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_lreg(suite, Lreg: Optional[float], factor: float = 1.0) -> float:
    floor = factor * suite.L2_bar
    if Lreg is None:
        return default_lreg(suite, factor)
    if Lreg < floor:
        raise ConfigError(f"Lreg {Lreg} must be at least {floor}")
    return float(Lreg)


def _solved(regime: str, Lreg: float) -> DcnParams:
    logger.info("start point is already optimal, nothing to schedule")
    return DcnParams(regime, 0.0, 0.0, 1.0, Lreg, 0, math.inf, math.inf, math.inf, solved=True)


def schedule_convex(reference, suite, eps: float, Lreg: Optional[float] = None) -> DcnParams:
    """
    Iteration count, smoothing and accuracy targets for convex suites.

    Args:
        reference: Reference solution supplying D
        suite: Problem suite
        eps: Target gap
        Lreg: Cubic coefficient, defaults to mean L2

    Returns:
        DcnParams: N + 1 iterations reach an eps-solution

    Raises:
        ConfigError: If eps <= 0 or Lreg < mean L2
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    Lreg = resolve_lreg(suite, Lreg)
    D = reference.D
    if D == 0.0:
        return _solved("convex", Lreg)
    L1, L2 = suite.L1_bar, suite.L2_bar
    LL = Lreg + L2
    common = [ratio(math.sqrt(2.0) * eps, 288.0 * L1 * D),
              ratio(math.sqrt(3.0 * eps * LL), 144.0 * L2 * math.sqrt(D))]
    if eps <= 12.0 * LL * D ** 3:
        N = ceil_count(math.sqrt(108.0 * LL * D ** 3 / eps)) - 2
        target_x = min(common + [ratio(math.sqrt(eps), 3.0 * math.sqrt(LL * D))])
    else:
        N = 1
        target_x = min(common + [ratio(eps ** (1.0 / 3.0), (6.0 * LL) ** (1.0 / 3.0)), D])
    params = DcnParams(
        regime="convex",
        delta1=math.sqrt(2.0) / 72.0 * eps / D,
        delta2=math.sqrt(3.0) / 36.0 * math.sqrt(eps * LL / D),
        gamma=math.sqrt((N + 1) * (N + 2)) / (6.0 * D),
        Lreg=Lreg, N=N,
        target_x=target_x,
        target_g=math.sqrt(2.0) / 144.0 * eps / D,
        target_h=math.sqrt(3.0) / 72.0 * math.sqrt(eps * LL / D),
    )
    logger.debug("convex schedule: %s", params)
    return params


def schedule_strongly_convex(reference, suite, eps: float, Lreg: Optional[float] = None) -> DcnParams:
    """
    Linear-rate schedule for strongly convex suites, with gamma = 1/D.

    Raises:
        ConfigError: If eps <= 0, mean mu is not positive or Lreg < mean L2
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    mu = suite.mu_bar
    if mu <= 0:
        raise ConfigError("strongly convex schedule needs mean mu > 0")
    Lreg = resolve_lreg(suite, Lreg)
    D = reference.D
    if D == 0.0:
        return _solved("strongly-convex", Lreg)
    L1, L2 = suite.L1_bar, suite.L2_bar
    LL = Lreg + L2
    alpha = min(0.5, math.sqrt(ratio(3.0 * mu, 16.0 * LL * D)))
    if reference.gap0 <= eps / 2.0:
        N = 0
    else:
        N = max(0, ceil_count(math.log(2.0 * reference.gap0 / eps) / alpha) - 1)
    ae = alpha * eps
    plan_x = min(
        ratio(ae, 24.0 * L1 * D),
        ratio(ae, 4.0 * LL) ** (1.0 / 3.0),
        1.0 / math.sqrt(ratio(3.0 * mu, 4.0 * ae) + (2.0 / D + ratio(L2, L1)) / D),
    )
    plan_g = ae / (12.0 * D)
    target_x = min(plan_x, mu / (64.0 * (L1 / D + L2)))
    target_g = min(plan_g, mu * D / 32.0)
    target_h = mu / 16.0
    params = DcnParams(
        regime="strongly-convex",
        delta1=target_g + 2.0 * L1 * target_x,
        delta2=target_h + 2.0 * L2 * target_x,
        gamma=1.0 / D,
        Lreg=Lreg, N=N,
        target_x=target_x, target_g=target_g, target_h=target_h,
        alpha=alpha, plan_target_x=plan_x, plan_target_g=plan_g,
    )
    logger.debug("strongly convex schedule: %s", params)
    return params


@dataclass
class RunState:
    X: np.ndarray
    k: int
    trace: MetricsTrace
    f_bar: float
    f0: float
    eps: float = 0.0
    history: List[np.ndarray] = field(default_factory=list)


def dcn_step(state: RunState, params: DcnParams, suite, communicator, backend, reference,
             pool: Optional[NodePool] = None, solver: Optional[SolverOptions] = None) -> RunState:
    """
    One iteration on every node: point consensus, local derivatives,
    derivative consensus, local cubic step.

    In adaptive mode delta1 and delta2 are the measured aggregated
    consensus errors of this iteration; otherwise the scheduled values.

    Raises:
        DcnError: Any consensus or solver failure, prefixed with the iteration
    """
    pool = pool or NodePool(1)
    solver = solver or SolverOptions()
    k = state.k
    try:
        plan = params.rounds
        m = state.X.shape[0]
        Xh, rep_x = communicator.mix(state.X, "point", rounds=plan.x if plan else None,
                                     target=params.target_x)
        grads = np.array(pool.map(lambda i: suite.objectives[i].gradient(Xh[i]), range(m)))
        Gh, rep_g = communicator.mix(grads, "gradient", rounds=plan.g if plan else None,
                                     target=params.target_g)
        Hh, rep_h = backend.exchange(communicator, suite, Xh, pool,
                                     rounds=plan.h if plan else None, target=params.target_h)

        dx, dg, dh = rep_x.max_row_deviation, rep_g.max_row_deviation, rep_h.max_row_deviation
        delta1 = dg + 2.0 * suite.L1_bar * dx
        delta2 = dh + 2.0 * suite.L2_bar * dx
        d1, d2 = (delta1, delta2) if params.adaptive else (params.delta1, params.delta2)
        sigma2 = params.gamma * d1 + d2

        def local_step(i):
            model = CubicModel(Gh[i], Hh[i], sigma2, params.Lreg)
            return solve_cubic(model, tol=solver.tol, eigen_max_dim=solver.eigen_max_dim,
                               max_iter=solver.max_iter)

        X_next = Xh + np.array(pool.map(local_step, range(m)))
        x_bar = X_next.mean(axis=0)
        f_next = suite.value(x_bar)
    except DcnError as e:
        raise e.with_context(f"iteration {k}") from e

    f_star = reference.f_star
    gap, gap_prev = f_next - f_star, state.f_bar - f_star
    slack = 1e-10 * max(1.0, abs(state.f_bar))
    err_hat = (2.0 * (params.Lreg + suite.L2_bar) / 3.0) * dx ** 3 + 2.0 * sigma2 * dx ** 2
    radii = np.linalg.norm(X_next - reference.x_star, axis=1)
    descent_ok = f_next <= state.f_bar + d1 / params.gamma + err_hat + slack
    jensen_ok = f_next <= np.mean([suite.value(x) for x in X_next]) + slack
    if params.alpha is not None:
        bound_ok = gap <= (1.0 - params.alpha) * gap_prev + d1 / params.gamma + err_hat + slack
    else:
        bound_ok = f_next <= state.f0 + state.eps + slack
    if not descent_ok:
        logger.warning("iteration %d: descent check failed (f %.12g -> %.12g)", k, state.f_bar, f_next)
    if not bound_ok:
        logger.warning("iteration %d: %s progress bound violated", k, params.regime)

    state.trace.append(
        iteration=k + 1, gap=gap, f_value=f_next,
        delta_x=dx, delta_g=dg, delta_h=dh,
        rounds_x=rep_x.rounds_used, rounds_g=rep_g.rounds_used, rounds_h=rep_h.rounds_used,
        cum_rounds=communicator.total_rounds, cum_scalars=communicator.total_scalars,
        delta1=delta1, delta2=delta2, err_hat=err_hat,
        descent_ok=bool(descent_ok), jensen_ok=bool(jensen_ok), bound_ok=bool(bound_ok),
        max_radius=float(radii.max()), node_radii=format_radii(radii),
    )
    logger.debug("iteration %d: gap %.3e, rounds %d/%d/%d", k, gap,
                 rep_x.rounds_used, rep_g.rounds_used, rep_h.rounds_used)
    state.X = X_next
    state.f_bar = f_next
    state.k = k + 1
    return state


class DecentralizedCubicNewton(BaseOptimizer):
    """
    Decentralized Cubic Newton driver.

    Subclasses pick the regime; the schedule, round plan and step are
    shared.
    """

    name = "dcn"
    regime = "convex"

    def schedule(self) -> DcnParams:
        opts = self.options
        if self.regime == "convex":
            params = schedule_convex(self.reference, self.suite, opts.eps, opts.lreg)
            planner = plan_rounds_convex
        else:
            params = schedule_strongly_convex(self.reference, self.suite, opts.eps, opts.lreg)
            planner = plan_rounds_sc
        params.adaptive = opts.mode == "adaptive"
        if params.solved:
            return params
        if opts.fixed_rounds is not None:
            T = int(opts.fixed_rounds)
            params.rounds = RoundPlan(T, T, T)
        elif not params.adaptive:
            params.rounds = planner(self.reference, self.suite, params,
                                    self.communicator.tau, self.communicator.lam)
        params.validate(self.suite)
        logger.info("%s: N = %d, gamma = %.4g, rounds %s", self.name, params.N, params.gamma,
                    params.rounds if params.rounds else "adaptive")
        return params

    def initialize(self, x0) -> RunState:
        x0 = np.asarray(x0, dtype=float)
        self.backend.prepare(self.suite, self.communicator)
        X = np.tile(x0, (self.suite.m, 1))
        f0 = self.suite.value(x0)
        r0 = float(np.linalg.norm(x0 - self.reference.x_star))
        trace = MetricsTrace(self.name, self.options.timing)
        trace.append(iteration=0, gap=f0 - self.reference.f_star, f_value=f0,
                     delta_x=0.0, delta_g=0.0, delta_h=0.0,
                     rounds_x=0, rounds_g=0, rounds_h=0,
                     cum_rounds=self.communicator.total_rounds,
                     cum_scalars=self.communicator.total_scalars,
                     max_radius=r0, node_radii=format_radii(np.full(self.suite.m, r0)))
        return RunState(X, 0, trace, f0, f0, self.options.eps)

    def step(self, state: RunState) -> RunState:
        return dcn_step(state, self.params, self.suite, self.communicator, self.backend,
                        self.reference, self.pool, self.options.solver)

    def iterations(self) -> int:
        return 0 if self.params.solved else self.params.N + 1


class DcnConvex(DecentralizedCubicNewton):
    name = "dcn-convex"
    regime = "convex"


class DcnStronglyConvex(DecentralizedCubicNewton):
    name = "dcn-sc"
    regime = "strongly-convex"


def centralized_cubic_newton(suite, x0, sigma2: float, Lreg: float, iters: int,
                             solver: Optional[SolverOptions] = None) -> np.ndarray:
    """Single-machine cubic Newton on the average objective; rows are the iterates"""
    solver = solver or SolverOptions()
    x = np.asarray(x0, dtype=float).copy()
    out = [x.copy()]
    for _ in range(iters):
        model = CubicModel(suite.gradient(x), suite.hessian(x), sigma2, Lreg)
        x = x + solve_cubic(model, tol=solver.tol, eigen_max_dim=solver.eigen_max_dim,
                            max_iter=solver.max_iter)
        out.append(x.copy())
    return np.array(out)


def naive_newton_average(suite, x0, iters: int = 1) -> np.ndarray:
    """
    Local Newton steps followed by exact averaging. Does not converge to
    the minimizer of the average in general; rows are the iterates.
    """
    x = np.asarray(x0, dtype=float).copy()
    out = [x.copy()]
    for _ in range(iters):
        x = np.mean([x - np.linalg.solve(obj.hessian(x), obj.gradient(x))
                     for obj in suite.objectives], axis=0)
        out.append(x.copy())
    return np.array(out)
