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
Local objective families, problem suites and the centralized reference
solve that supplies x*, f*, D, R-bar and the heterogeneity constants.
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit, log_expit

from .base import (ArgumentError, ConfigError, DomainError, OracleFailureError,
                   SolverOptions, SuiteSpec)
from .cubic import CubicModel, solve_cubic

logger = logging.getLogger(__name__)

# sup |sigma''| of the logistic sigmoid
_LOGISTIC_THIRD = 1.0 / (6.0 * math.sqrt(3.0))


class LocalObjective(ABC):
    """
    Abstract base class for per-node objectives.

    Subclasses provide value, gradient and Hessian oracles together with
    the constants L1 (gradient Lipschitz), L2 (Hessian Lipschitz) and mu
    (strong convexity).
    """

    kind = "abstract"

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.L1 = 0.0
        self.L2 = 0.0
        self.mu = 0.0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ArgumentError(f"expected point of shape ({self.dim},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("point has non-finite entries")
        return x

    @abstractmethod
    def _value(self, x: np.ndarray) -> float:
        pass

    @abstractmethod
    def _gradient(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _hessian(self, x: np.ndarray) -> np.ndarray:
        pass

    def eval(self, x, order: int = 0) -> Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]:
        """
        Evaluate the oracle up to the requested order.

        Args:
            x: Point of length dim
            order: 0 for value, 1 adds the gradient, 2 adds the Hessian

        Returns:
            Tuple of value, gradient or None, Hessian or None

        Raises:
            ArgumentError: If x has the wrong shape or order is not 0, 1 or 2
            DomainError: If x has non-finite entries
        """
        if order not in (0, 1, 2):
            raise ArgumentError(f"order must be 0, 1 or 2, got {order}")
        x = self._check(x)
        grad = self._gradient(x) if order >= 1 else None
        hess = self._hessian(x) if order >= 2 else None
        return self._value(x), grad, hess

    def value(self, x) -> float:
        return self._value(self._check(x))

    def gradient(self, x) -> np.ndarray:
        return self._gradient(self._check(x))

    def hessian(self, x) -> np.ndarray:
        return self._hessian(self._check(x))


class QuadraticObjective(LocalObjective):
    """f(x) = 1/2 x'Ax + b'x + c with A symmetric positive semidefinite"""

    kind = "quadratic"

    def __init__(self, A, b, c: float = 0.0):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        super().__init__(b.shape[0])
        if A.shape != (self.dim, self.dim):
            raise ArgumentError(f"matrix shape {A.shape} does not match vector length {self.dim}")
        if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.max(np.abs(A)))):
            raise ArgumentError("quadratic matrix must be symmetric")
        self.A = 0.5 * (A + A.T)
        self.b = b
        self.c = float(c)
        eig = np.linalg.eigvalsh(self.A)
        if eig[0] < -1e-10 * max(1.0, eig[-1]):
            raise ArgumentError(f"quadratic matrix not positive semidefinite (min eigenvalue {eig[0]:.3e})")
        self.mu = max(0.0, float(eig[0]))
        self.L1 = max(0.0, float(eig[-1]))
        self.L2 = 0.0

    def _value(self, x):
        return float(0.5 * x @ self.A @ x + self.b @ x + self.c)

    def _gradient(self, x):
        return self.A @ x + self.b

    def _hessian(self, x):
        return self.A.copy()


class LogisticObjective(LocalObjective):
    """
    Logistic loss over local samples with an l2 term:

        f(x) = sum_j log(1 + exp(-y_j a_j'x)) + mu_reg/2 |x|^2

    The Hessian is A' diag(h) A + mu_reg I, with h the per-sample
    curvature weights, so it travels as a vector of length `samples`.
    """

    kind = "logistic"

    def __init__(self, features, labels, mu_reg: float = 0.0):
        features = np.atleast_2d(np.asarray(features, dtype=float))
        labels = np.asarray(labels, dtype=float).reshape(-1)
        super().__init__(features.shape[1])
        if labels.shape[0] != features.shape[0]:
            raise ArgumentError("one label per feature row required")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ArgumentError("labels must be +1 or -1")
        if mu_reg < 0:
            raise ArgumentError("mu_reg must be nonnegative")
        self.features = features
        self.labels = labels
        self.mu_reg = float(mu_reg)
        gram_max = np.linalg.norm(features, 2) ** 2 if features.size else 0.0
        self.mu = self.mu_reg
        self.L1 = self.mu_reg + 0.25 * gram_max
        self.L2 = _LOGISTIC_THIRD * float(np.sum(np.linalg.norm(features, axis=1) ** 3))

    @property
    def samples(self) -> int:
        return self.features.shape[0]

    def _margins(self, x):
        return self.labels * (self.features @ x)

    def curvature(self, x) -> np.ndarray:
        """Second derivative of each sample's link at its margin"""
        t = self._margins(self._check(x))
        return expit(t) * expit(-t)

    def _value(self, x):
        return float(-np.sum(log_expit(self._margins(x))) + 0.5 * self.mu_reg * x @ x)

    def _gradient(self, x):
        t = self._margins(x)
        return -self.features.T @ (self.labels * expit(-t)) + self.mu_reg * x

    def _hessian(self, x):
        t = self._margins(x)
        h = expit(t) * expit(-t)
        return (self.features.T * h) @ self.features + self.mu_reg * np.eye(self.dim)


class ProblemSuite:
    """m local objectives of a common dimension and their aggregate constants"""

    def __init__(self, objectives: List[LocalObjective], spec: Optional[SuiteSpec] = None):
        if not objectives:
            raise ArgumentError("a suite needs at least one objective")
        dims = {obj.dim for obj in objectives}
        if len(dims) != 1:
            raise ArgumentError(f"objectives have different dimensions: {sorted(dims)}")
        self.objectives = list(objectives)
        self.spec = spec
        self.m = len(objectives)
        self.dim = dims.pop()
        L1 = np.array([obj.L1 for obj in objectives])
        L2 = np.array([obj.L2 for obj in objectives])
        mu = np.array([obj.mu for obj in objectives])
        self.L1_bar = float(L1.mean())
        self.L2_bar = float(L2.mean())
        self.mu_bar = float(mu.mean())
        self.L1_max = float(L1.max())
        self.L2_max = float(L2.max())
        self.mu_hat = float(mu.min())

    @property
    def is_glm(self) -> bool:
        return all(isinstance(obj, LogisticObjective) for obj in self.objectives)

    def value(self, x) -> float:
        return float(np.mean([obj.value(x) for obj in self.objectives]))

    def gradient(self, x) -> np.ndarray:
        return np.mean([obj.gradient(x) for obj in self.objectives], axis=0)

    def hessian(self, x) -> np.ndarray:
        return np.mean([obj.hessian(x) for obj in self.objectives], axis=0)

    def constants(self) -> dict:
        return {
            "m": self.m, "d": self.dim,
            "L1_bar": self.L1_bar, "L2_bar": self.L2_bar, "mu_bar": self.mu_bar,
            "L1_max": self.L1_max, "L2_max": self.L2_max, "mu_hat": self.mu_hat,
        }


def make_suite(spec: SuiteSpec, seed: int) -> ProblemSuite:
    """
    Generate a deterministic problem suite.

    Quadratic nodes share eigenvectors; their spectra are log-spaced
    between spec.mu and spec.L and perturbed per node by the
    heterogeneity level. Logistic nodes draw unit-direction feature rows
    scaled to spec.feature_norm with labels from per-node perturbed
    models.

    Args:
        spec: Family, size and heterogeneity of the suite
        seed: Seed for numpy's default_rng

    Returns:
        ProblemSuite: The generated suite

    Raises:
        ConfigError: If the SuiteSpec is infeasible
    """
    if spec.m < 2 or spec.d < 1:
        raise ConfigError(f"suite needs m >= 2 and d >= 1, got m={spec.m}, d={spec.d}")
    if spec.heterogeneity < 0:
        raise ConfigError("heterogeneity must be nonnegative")
    rng = np.random.default_rng(seed)
    if spec.family == "quadratic":
        objectives = _quadratic_nodes(spec, rng)
    elif spec.family == "logistic":
        objectives = _logistic_nodes(spec, rng)
    else:
        raise ConfigError(f"unknown suite family '{spec.family}'")
    suite = ProblemSuite(objectives, spec)
    logger.debug("suite %s: %s", spec.family, suite.constants())
    return suite


def _quadratic_nodes(spec: SuiteSpec, rng) -> List[LocalObjective]:
    if spec.L <= 0 or spec.mu < 0 or spec.mu > spec.L:
        raise ConfigError(f"need 0 <= mu <= L and L > 0, got mu={spec.mu}, L={spec.L}")
    d = spec.d
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    if spec.mu > 0:
        base = np.geomspace(spec.mu, spec.L, d)
    else:
        base = np.concatenate([[0.0], np.geomspace(spec.L / 100.0, spec.L, d - 1)])[:d]
    center = rng.standard_normal(d)
    objectives = []
    for _ in range(spec.m):
        eig = base * np.exp(spec.heterogeneity * rng.uniform(-1.0, 1.0, d))
        eig = np.clip(eig, spec.mu, spec.L)
        eig[base == 0.0] = 0.0
        A = (Q * eig) @ Q.T
        z = center + spec.heterogeneity * rng.standard_normal(d)
        b = -A @ z
        objectives.append(QuadraticObjective(A, b, 0.5 * z @ A @ z))
    return objectives


def _logistic_nodes(spec: SuiteSpec, rng) -> List[LocalObjective]:
    if spec.samples < 1 or spec.mu_reg < 0 or spec.feature_norm <= 0:
        raise ConfigError("logistic suite needs samples >= 1, mu_reg >= 0, feature_norm > 0")
    d = spec.d
    w0 = rng.standard_normal(d) / math.sqrt(d)
    objectives = []
    for _ in range(spec.m):
        shift = spec.heterogeneity * rng.standard_normal(d)
        rows = rng.standard_normal((spec.samples, d)) + shift
        rows *= spec.feature_norm / np.linalg.norm(rows, axis=1, keepdims=True)
        w = w0 + spec.heterogeneity * rng.standard_normal(d)
        p = expit(rows @ w)
        labels = np.where(rng.random(spec.samples) < p, 1.0, -1.0)
        objectives.append(LogisticObjective(rows, labels, spec.mu_reg))
    return objectives


@dataclass
class ReferenceSolution:
    """Ground-truth quantities from the centralized solve"""
    x_star: np.ndarray
    f_star: float
    D: float
    zeta_g: float
    zeta_H: float
    R_bar: float
    R0: float  # |x0 - x*|
    gap0: float  # f(x0) - f*
    iterations: int = 0

    def scalars(self) -> dict:
        out = asdict(self)
        out.pop("x_star")
        return out


def reference_solve(suite: ProblemSuite, eps_ref: float, x0,
                    options: Optional[SolverOptions] = None) -> ReferenceSolution:
    """
    Solve the average objective with centralized cubic Newton.

    D and R-bar are the largest distance to x* along the recorded
    trajectory (start included), inflated by the configured factors.

    Args:
        suite: Convex problem suite
        eps_ref: Gradient-norm tolerance for x*
        x0: Common starting point of the decentralized run
        options: Iteration cap, inflation factors and subproblem settings

    Returns:
        ReferenceSolution: x*, f*, D, zeta_g, zeta_H, R-bar and the start gap

    Raises:
        ArgumentError: If eps_ref is not positive
        OracleFailureError: If the tolerance is not reached within the cap
    """
    options = options or SolverOptions()
    if eps_ref <= 0:
        raise ArgumentError("eps_ref must be positive")
    x0 = np.asarray(x0, dtype=float)
    Lreg = max(suite.L2_bar, 1e-10 * max(1.0, suite.L1_bar))
    x = x0.copy()
    trajectory = [x.copy()]
    grad = suite.gradient(x)
    iterations = 0
    while np.linalg.norm(grad) > eps_ref:
        if iterations >= options.ref_max_iter:
            raise OracleFailureError(
                f"reference solve stopped at |grad| = {np.linalg.norm(grad):.3e} "
                f"after {iterations} iterations")
        model = CubicModel(grad, suite.hessian(x), 0.0, Lreg)
        x = x + solve_cubic(model, tol=options.tol, eigen_max_dim=options.eigen_max_dim,
                            max_iter=options.max_iter)
        trajectory.append(x.copy())
        grad = suite.gradient(x)
        iterations += 1

    x_star = x
    f_star = suite.value(x_star)
    radius = max(np.linalg.norm(p - x_star) for p in trajectory)
    grads = np.array([obj.gradient(x_star) for obj in suite.objectives])
    hessians = np.array([obj.hessian(x_star) for obj in suite.objectives])
    zeta_g = math.sqrt(np.mean(np.sum(grads ** 2, axis=1)))
    spread = hessians - hessians.mean(axis=0)
    zeta_H = math.sqrt(np.mean(np.sum(spread ** 2, axis=(1, 2))))
    reference = ReferenceSolution(
        x_star=x_star, f_star=f_star,
        D=options.inflation_D * radius,
        zeta_g=zeta_g, zeta_H=zeta_H,
        R_bar=options.inflation_R * radius,
        R0=float(np.linalg.norm(x0 - x_star)),
        gap0=max(0.0, suite.value(x0) - f_star),
        iterations=iterations,
    )
    logger.info("reference solve: %d iterations, f* = %.12g, D = %.4g",
                iterations, f_star, reference.D)
    return reference


@dataclass
class FdReport:
    grad_rel_err: float
    hess_rel_err: float


def finite_difference_check(obj: LocalObjective, x, h: Optional[float] = None) -> FdReport:
    """
    Central differences of value and gradient against the analytic oracles.

    Args:
        obj: Objective to check
        x: Evaluation point
        h: Step, defaults to 1e-5 (1 + |x|)

    Raises:
        ArgumentError: If h lies outside [1e-7, 1e-3] (1 + |x|)
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    size = 1.0 + np.linalg.norm(x)
    if h is None:
        h = 1e-5 * size
    elif not (1e-7 * size <= h <= 1e-3 * size):
        raise ArgumentError(f"finite difference step {h} outside "
                            f"[{1e-7 * size:.3e}, {1e-3 * size:.3e}]")
    value, grad, hess = obj.eval(x, order=2)
    fd_grad = np.empty(d)
    fd_hess = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        fd_grad[k] = (obj.value(x + e) - obj.value(x - e)) / (2 * h)
        fd_hess[:, k] = (obj.gradient(x + e) - obj.gradient(x - e)) / (2 * h)
    grad_err = np.linalg.norm(fd_grad - grad) / max(1.0, np.linalg.norm(grad))
    hess_err = np.linalg.norm(fd_hess - hess) / max(1.0, np.linalg.norm(hess))
    return FdReport(float(grad_err), float(hess_err))


def save_suite(suite: ProblemSuite, path) -> Path:
    """Write a suite to a numpy .npz container with a JSON header"""
    path = Path(path)
    arrays = {}
    header = {"m": suite.m, "d": suite.dim, "nodes": []}
    if suite.spec is not None:
        header["spec"] = asdict(suite.spec)
    for i, obj in enumerate(suite.objectives):
        if isinstance(obj, QuadraticObjective):
            header["nodes"].append({"kind": obj.kind, "c": obj.c})
            arrays[f"A_{i}"] = obj.A
            arrays[f"b_{i}"] = obj.b
        elif isinstance(obj, LogisticObjective):
            header["nodes"].append({"kind": obj.kind, "mu_reg": obj.mu_reg})
            arrays[f"features_{i}"] = obj.features
            arrays[f"labels_{i}"] = obj.labels
        else:
            raise ArgumentError(f"cannot serialize objective kind '{obj.kind}'")
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
    return path


def load_suite(path) -> ProblemSuite:
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        objectives = []
        for i, node in enumerate(header["nodes"]):
            if node["kind"] == "quadratic":
                objectives.append(QuadraticObjective(data[f"A_{i}"], data[f"b_{i}"], node["c"]))
            else:
                objectives.append(LogisticObjective(data[f"features_{i}"], data[f"labels_{i}"],
                                                    node["mu_reg"]))
    spec = SuiteSpec(**header["spec"]) if "spec" in header else None
    return ProblemSuite(objectives, spec)
