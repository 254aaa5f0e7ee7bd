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
Multi-round consensus on stacked node data, round planning and the
Hessian exchange backends.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .base import ArgumentError, ConfigError, ContractionError, NodePool
from .network import MixingOperator, TopologySchedule

logger = logging.getLogger(__name__)

LABELS = ("point", "gradient", "hessian", "glm-weights")


@dataclass
class StackedState:
    """Per-node vectors stacked as rows of an m x p matrix"""
    U: np.ndarray
    label: str = "point"

    def __post_init__(self):
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        if self.label not in LABELS:
            raise ArgumentError(f"unknown stack label '{self.label}'")

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def width(self) -> int:
        return self.U.shape[1]


@dataclass
class ConsensusReport:
    rounds_used: int
    max_row_deviation: float
    frob_deviation: float
    scalars: int = 0
    initial_deviation: float = 0.0


def deviation(U: np.ndarray, center: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """(max row distance, Frobenius distance) of the rows from center (default: row mean)"""
    center = U.mean(axis=0) if center is None else center
    rows = np.linalg.norm(U - center, axis=1)
    return float(rows.max(initial=0.0)), float(np.sqrt(np.sum(rows ** 2)))


def run(U: StackedState, schedule: TopologySchedule, start_step: int, T: int,
        operator: Optional[MixingOperator] = None) -> Tuple[StackedState, ConsensusReport]:
    """
    Apply T successive mixing rounds starting at schedule step start_step.

    With a Chebyshev operator each of the T applications is a super-round
    costing K communication rounds.
    """
    if T < 0:
        raise ArgumentError(f"round count must be nonnegative, got {T}")
    if U.m != schedule.m:
        raise ArgumentError(f"stack has {U.m} rows, schedule has {schedule.m} nodes")
    X = U.U
    scalars = 0
    for t in range(T):
        k = start_step + t
        if operator is not None:
            X = operator.apply(X)
            scalars += operator.K * schedule.edge_count(k) * U.width
        else:
            X = schedule.matrix(k) @ X
            scalars += schedule.edge_count(k) * U.width
    per_call = operator.K if operator is not None else 1
    max_row, frob = deviation(X)
    report = ConsensusReport(T * per_call, max_row, frob, scalars, deviation(U.U)[1])
    return StackedState(X, U.label), report


def rounds_for(radius: float, target: float, tau: int, lam: float) -> int:
    """
    Rounds so that (1 - lambda) contraction per tau-window shrinks
    radius to target: max(0, ceil((tau / lambda) ln(radius / target))).

    Raises:
        ContractionError: If lambda is outside (0, 1]
        ConfigError: If a positive radius must reach a nonpositive target
    """
    if not (0.0 < lam <= 1.0):
        raise ContractionError(f"lambda must be in (0, 1], got {lam}")
    if radius <= 0.0 or target >= radius or math.isinf(target):
        return 0
    if target <= 0.0:
        raise ConfigError(f"cannot reach consensus target {target} from radius {radius}")
    x = (tau / lam) * math.log(radius / target)
    return max(0, math.ceil(x - 1e-9 * max(1.0, x)))


@dataclass
class RoundPlan:
    """Rounds per consensus call: points, gradients, Hessians"""
    x: int
    g: int
    h: int


@dataclass
class AccRoundPlan:
    """Rounds per accelerated call: v, gradient at v, Hessian at v, gradient at x"""
    v: int
    g_v: int
    h_v: int
    g_x: int


def _radii(reference, suite, scale: float):
    m = suite.m
    point = 2.0 * scale * math.sqrt(m)
    grad = math.sqrt(m) * (reference.zeta_g + 2.0 * suite.L1_max * scale)
    hess = math.sqrt(m) * (reference.zeta_H + 2.0 * suite.L2_max * math.sqrt(suite.dim) * scale)
    return point, grad, hess


def plan_rounds_convex(reference, suite, params, tau: int, lam: float) -> RoundPlan:
    """Worst-case radii from the reference solve against the convex accuracy targets"""
    point, grad, hess = _radii(reference, suite, reference.D)
    return RoundPlan(rounds_for(point, params.target_x, tau, lam),
                     rounds_for(grad, params.target_g, tau, lam),
                     rounds_for(hess, params.target_h, tau, lam))


def plan_rounds_sc(reference, suite, params, tau: int, lam: float) -> RoundPlan:
    """
    Strongly convex round counts. Point and gradient rounds are sized by
    the eps-dependent accuracies alone (plan_target_x, plan_target_g),
    without the mean-mu caps that tighten the regularization targets.
    """
    point, grad, hess = _radii(reference, suite, reference.D)
    target_x = params.target_x if params.plan_target_x is None else params.plan_target_x
    target_g = params.target_g if params.plan_target_g is None else params.plan_target_g
    return RoundPlan(rounds_for(point, target_x, tau, lam),
                     rounds_for(grad, target_g, tau, lam),
                     rounds_for(hess, params.target_h, tau, lam))


def plan_rounds_acc(reference, suite, params, tau: int, lam: float) -> AccRoundPlan:
    point, grad, hess = _radii(reference, suite, reference.R_bar)
    return AccRoundPlan(rounds_for(point, params.target_v, tau, lam),
                        rounds_for(grad, params.target_g, tau, lam),
                        rounds_for(hess, params.target_h, tau, lam),
                        rounds_for(grad, params.target_gx, tau, lam))


class Communicator:
    """
    Stateful wrapper around a schedule for the drivers.

    Keeps the global step counter so consecutive consensus calls walk
    forward through the schedule, and accumulates the communication
    cost. With a Chebyshev operator, tau and lam describe one
    super-round.
    """

    def __init__(self, schedule: TopologySchedule, tau: int, lam: float,
                 operator: Optional[MixingOperator] = None):
        if operator is not None and not schedule.is_static:
            raise ConfigError("Chebyshev mixing requires a static schedule")
        self.schedule = schedule
        self.operator = operator
        if operator is not None:
            self.tau, self.lam = 1, operator.contraction
        else:
            self.tau, self.lam = tau, lam
        if not (0.0 < self.lam <= 1.0):
            raise ContractionError(f"lambda must be in (0, 1], got {self.lam}")
        self.step = 0
        self.total_rounds = 0
        self.total_scalars = 0

    @property
    def m(self) -> int:
        return self.schedule.m

    def rounds_for(self, radius: float, target: float) -> int:
        return rounds_for(radius, target, self.tau, self.lam)

    def charge(self, scalars: int) -> None:
        self.total_scalars += int(scalars)

    def mix(self, U: np.ndarray, label: str, rounds: Optional[int] = None,
            target: Optional[float] = None, width: Optional[int] = None,
            radius: Optional[float] = None) -> Tuple[np.ndarray, ConsensusReport]:
        """
        Run one consensus call.

        Args:
            U: m x p stack
            label: Stack kind
            rounds: Fixed number of (super-)rounds; planned from target when None
            target: Accuracy target used when rounds is None
            width: Scalars per row charged per round (defaults to p)
            radius: Initial radius for planning (defaults to the measured one)

        Returns:
            Tuple of the mixed stack and its report
        """
        state = StackedState(U, label)
        if rounds is None:
            if target is None:
                raise ArgumentError("either rounds or target is required")
            if radius is None:
                radius = deviation(state.U)[1]
            rounds = self.rounds_for(radius, target)
        mixed, report = run(state, self.schedule, self.step, rounds, self.operator)
        if width is not None and width != state.width:
            report.scalars = report.scalars // max(1, state.width) * width
        self.step += rounds
        self.total_rounds += report.rounds_used
        self.total_scalars += report.scalars
        return mixed.U, report


class HessianBackend(ABC):
    """
    Abstract base class for Hessian exchange strategies.

    A backend turns the nodes' current points into consensus Hessian
    estimates and reports the measured deviation from the exact average
    in Frobenius norm.
    """

    name = "abstract"

    def prepare(self, suite, communicator: Communicator) -> None:
        """One-time setup before the first iteration"""
        pass

    @abstractmethod
    def exchange(self, communicator: Communicator, suite, points: np.ndarray,
                 pool: NodePool, rounds: Optional[int] = None,
                 target: Optional[float] = None) -> Tuple[np.ndarray, ConsensusReport]:
        """
        Estimate the average Hessian at every node.

        Args:
            communicator: Consensus driver
            suite: Problem suite
            points: m x d stack of evaluation points (node i uses row i)
            pool: Worker pool for local oracle calls
            rounds: Fixed rounds, or None to plan from target
            target: Hessian accuracy target in Frobenius norm

        Returns:
            Tuple of the m x d x d estimates and the consensus report
        """
        pass


class DenseHessianBackend(HessianBackend):
    """Consensus on flattened d x d Hessians"""

    name = "dense"

    def exchange(self, communicator, suite, points, pool, rounds=None, target=None):
        m, d = points.shape
        local = pool.map(lambda i: suite.objectives[i].hessian(points[i]), range(m))
        stack = np.array(local).reshape(m, d * d)
        mixed, report = communicator.mix(stack, "hessian", rounds=rounds, target=target)
        H = mixed.reshape(m, d, d)
        return 0.5 * (H + H.transpose(0, 2, 1)), report
