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
Base types shared by every part of the simulator: option dataclasses,
the optimizer interface, the per-node worker pool and the exception
hierarchy.
"""

import copy
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, List, Optional, Union

logger = logging.getLogger(__name__)


@dataclass
class SuiteSpec:
    """Data class describing a generated problem suite"""
    family: str = "quadratic"  # quadratic or logistic
    m: int = 10
    d: int = 20
    heterogeneity: float = 0.1
    mu: float = 1e-2  # quadratic: smallest eigenvalue
    L: float = 10.0  # quadratic: largest eigenvalue
    samples: int = 20  # logistic: rows per node
    mu_reg: float = 1e-3  # logistic: l2 coefficient
    feature_norm: float = 1.0


@dataclass
class TopologySpec:
    """Data class describing a graph schedule"""
    kind: str = "static"  # static, per-step-connected, tau-connected, explicit
    graph: str = "ring"  # ring, complete, path, random-geometric
    tau: int = 1
    radius: float = 0.5  # random-geometric connection radius
    chords: int = 1  # per-step-connected: extra random edges per step
    chebyshev: Optional[Union[int, str]] = None  # degree K or "auto"
    path: Optional[str] = None  # explicit: edge-list file
    trials: int = 20  # windows sampled when estimating contraction


@dataclass
class SolverOptions:
    """Data class holding subproblem and reference-solve settings"""
    tol: float = 1e-10
    eigen_max_dim: int = 64
    max_iter: int = 200
    ref_tol: float = 1e-9
    ref_max_iter: int = 500
    inflation_D: float = 2.0
    inflation_R: float = 2.0


@dataclass
class RunOptions:
    """Data class holding one fully resolved experiment configuration"""
    suite: SuiteSpec = field(default_factory=SuiteSpec)
    topology: TopologySpec = field(default_factory=TopologySpec)
    solver: SolverOptions = field(default_factory=SolverOptions)
    algorithm: str = "dcn-sc"
    eps: float = 1e-4
    mode: str = "adaptive"  # analytic or adaptive
    backend: str = "dense"  # dense, glm or glm-topk:K
    seed: int = 0
    out_dir: str = "./runs/latest"
    save_suite: bool = False
    timing: bool = False
    workers: int = 1
    max_iterations: Optional[int] = None
    lreg: Optional[float] = None
    fixed_rounds: Optional[int] = None
    x0: Optional[List[float]] = None


class DcnError(Exception):
    """Base exception for all simulator failures"""

    def with_context(self, context: str) -> "DcnError":
        """
        Return a copy of this error whose message is prefixed with context.

        Args:
            context: Short location string, e.g. "iteration 3"

        Returns:
            DcnError: Same class and attributes, new message
        """
        err = copy.copy(self)
        err.args = (f"{context}: {self}",) + tuple(self.args[1:])
        return err


class ConfigError(DcnError):
    """Invalid, unknown or unsatisfiable configuration"""
    pass


class ArgumentError(DcnError):
    """Argument with the wrong shape or an unsupported value"""
    pass


class DomainError(DcnError):
    """Non-finite numeric input"""
    pass


class ContractionError(DcnError):
    """Graph schedule does not contract towards the average"""
    pass


class ConvergenceError(DcnError):
    """Iterative solve stopped before reaching its tolerance"""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class OracleFailureError(DcnError):
    """Centralized reference solve did not converge"""
    pass


class UnboundedModelError(DcnError):
    """Model has no finite minimizer"""
    pass


class ReplicationError(DcnError):
    """Dataset flooding did not finish within its horizon"""
    pass


class NodePool:
    """
    Order-preserving map over nodes.

    With one worker the calls run inline; otherwise they run on a thread
    pool. Results always come back in input order, so runs are identical
    for any worker count.
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))
        self._executor: Optional[ThreadPoolExecutor] = None
        if self.workers > 1:
            self._executor = ThreadPoolExecutor(max_workers=self.workers)

    def map(self, fn: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        if self._executor is None:
            return [fn(item) for item in items]
        return list(self._executor.map(fn, items))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "NodePool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class BaseOptimizer(ABC):
    """
    Abstract base class for all decentralized optimizers.

    Each algorithm computes its parameter schedule, builds an initial
    state and advances it one outer iteration at a time. The shared
    `run` method drives that loop and returns the metrics trace.
    """

    name = "base"

    def __init__(self, suite, reference, communicator, backend,
                 options: RunOptions, pool: Optional[NodePool] = None):
        self.suite = suite
        self.reference = reference
        self.communicator = communicator
        self.backend = backend
        self.options = options
        self.pool = pool or NodePool(1)
        self.params = None

    @abstractmethod
    def schedule(self) -> Any:
        """
        Compute the parameter schedule for this run.

        Returns:
            Parameter dataclass of the algorithm

        Raises:
            ConfigError: If the suite does not satisfy the regime's assumptions
        """
        pass

    @abstractmethod
    def initialize(self, x0) -> Any:
        """
        Build the initial state with every node at x0.

        Args:
            x0: Common starting point

        Returns:
            Algorithm state holding the metrics trace
        """
        pass

    @abstractmethod
    def step(self, state) -> Any:
        """
        Advance the state by one outer iteration.

        Args:
            state: Current algorithm state

        Returns:
            The updated state

        Raises:
            DcnError: With the iteration index in the message
        """
        pass

    @abstractmethod
    def iterations(self) -> int:
        """Number of outer iterations prescribed by the schedule"""
        pass

    def finish(self, state):
        trace = state.trace
        trace.target_met = trace.final_gap <= self.options.eps
        if not trace.target_met:
            logger.warning("%s: final gap %.3e misses target %.3e",
                           self.name, trace.final_gap, self.options.eps)
        return trace

    def run(self, x0):
        """
        Run the algorithm from a common starting point.

        This is the main entry point: schedule, initialize, then step
        through the prescribed number of iterations.

        Args:
            x0: Common starting point for all nodes

        Returns:
            MetricsTrace: Per-iteration record of the run
        """
        self.params = self.schedule()
        state = self.initialize(x0)
        total = self.iterations()
        cap = self.options.max_iterations
        if cap is not None and cap < total:
            logger.info("%s: capping %d iterations at %d", self.name, total, cap)
            total = cap
        logger.info("%s: running %d iterations", self.name, total)
        for _ in range(total):
            state = self.step(state)
        return self.finish(state)
