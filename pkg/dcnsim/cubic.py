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
Local subproblems: the cubic-regularized model minimized at every node
step, and the aggregated estimating function of the accelerated method.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.optimize import brentq
from scipy.sparse.linalg import cg

from .base import ArgumentError, ConvergenceError, UnboundedModelError

logger = logging.getLogger(__name__)


@dataclass
class CubicModel:
    """
    Model m(s) = <g, s> + 1/2 <H s, s> + sigma2/2 |s|^2 + Lreg/6 |s|^3.

    The displacement s is measured from `center`.
    """
    g: np.ndarray
    H: np.ndarray
    sigma2: float = 0.0
    Lreg: float = 0.0
    center: Optional[np.ndarray] = None

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float).reshape(-1)
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        d = self.g.shape[0]
        if self.H.shape != (d, d):
            raise ArgumentError(f"Hessian shape {self.H.shape} does not match gradient length {d}")
        if self.sigma2 < 0 or self.Lreg < 0:
            raise ArgumentError("sigma2 and Lreg must be nonnegative")
        asym = np.max(np.abs(self.H - self.H.T)) if d else 0.0
        if asym > 1e-10 * max(1.0, np.max(np.abs(self.H))):
            raise ArgumentError(f"Hessian not symmetric (asymmetry {asym:.2e})")
        self.H = 0.5 * (self.H + self.H.T)


def model_value(model: CubicModel, s: np.ndarray) -> float:
    s = np.asarray(s, dtype=float)
    r = np.linalg.norm(s)
    return float(model.g @ s + 0.5 * s @ model.H @ s
                 + 0.5 * model.sigma2 * r ** 2 + model.Lreg / 6.0 * r ** 3)


def model_grad(model: CubicModel, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    r = np.linalg.norm(s)
    return model.g + model.H @ s + model.sigma2 * s + 0.5 * model.Lreg * r * s


def _stationarity(model: CubicModel, s: np.ndarray) -> float:
    return float(np.linalg.norm(model_grad(model, s)))


def solve_cubic(model: CubicModel, tol: float = 1e-10, eigen_max_dim: int = 64,
                max_iter: int = 200) -> np.ndarray:
    """
    Global minimizer of a cubic model.

    Small problems go through an eigendecomposition and a bracketed root
    of the secular equation, which also covers the hard case. Larger
    positive definite problems use safeguarded Newton on the secular
    equation with conjugate-gradient inner solves.

    Args:
        model: The model to minimize
        tol: Stationarity tolerance, relative to max(1, |g|)
        eigen_max_dim: Largest dimension solved by eigendecomposition
        max_iter: Iteration cap for the scalar root search

    Returns:
        np.ndarray: Displacement s from the model center

    Raises:
        ArgumentError: If Lreg = 0 and H + sigma2 I is not positive definite
        ConvergenceError: If the stationarity residual stays above tol
    """
    d = model.g.shape[0]
    B = model.H + model.sigma2 * np.eye(d)
    gnorm = np.linalg.norm(model.g)
    limit = tol * max(1.0, gnorm)

    if model.Lreg == 0.0:
        try:
            factor = linalg.cho_factor(B)
        except linalg.LinAlgError as e:
            raise ArgumentError("H + sigma2 I must be positive definite when Lreg = 0") from e
        s = -linalg.cho_solve(factor, model.g)
    elif d <= eigen_max_dim:
        s = _polish(model, B, _solve_eigen(model, B, max_iter), limit)
    else:
        s = _polish(model, B, _solve_newton_cg(model, B, tol, max_iter), limit)

    residual = _stationarity(model, s)
    if residual > limit:
        raise ConvergenceError(
            f"cubic subproblem residual {residual:.3e} above {limit:.3e}", residual=residual)
    return s


def _solve_eigen(model: CubicModel, B: np.ndarray, max_iter: int) -> np.ndarray:
    L = model.Lreg
    w, V = linalg.eigh(B)
    gt = V.T @ model.g
    w_min = w[0]
    r_min = max(0.0, -2.0 * w_min / L)
    scale = max(1.0, np.max(np.abs(w)), np.linalg.norm(model.g))

    def step(r):
        return -(gt / (w + 0.5 * L * r))

    def phi(r):
        return np.linalg.norm(step(r)) - r

    if np.linalg.norm(model.g) == 0.0 and w_min >= 0.0:
        return np.zeros_like(model.g)

    lo = r_min + 1e-15 * max(1.0, r_min, scale / L)
    if phi(lo) <= 0.0:
        return V @ _hard_case(w, gt, r_min, L, scale)

    hi = max(2.0 * lo, 1.0)
    for _ in range(200):
        if phi(hi) < 0.0:
            break
        hi *= 2.0
    r = brentq(phi, lo, hi, xtol=1e-16 * max(1.0, hi), rtol=4 * np.finfo(float).eps,
               maxiter=max(max_iter, 100))
    return V @ step(r)


def _hard_case(w, gt, r_min, L, scale):
    # components outside the bottom eigenspace, then fill along it to norm r_min,
    # against the gradient's bottom component when it has one
    shifted = w + 0.5 * L * r_min
    bottom = shifted <= 1e-12 * scale
    z = np.zeros_like(gt)
    z[~bottom] = -gt[~bottom] / shifted[~bottom]
    fill = r_min ** 2 - z @ z
    if fill > 0.0:
        g_bottom = np.where(bottom, gt, 0.0)
        norm = np.linalg.norm(g_bottom)
        if norm > 0.0:
            z -= math.sqrt(fill) * g_bottom / norm
        else:
            z[np.argmax(bottom)] += math.sqrt(fill)
    return z


def _polish(model: CubicModel, B: np.ndarray, s: np.ndarray, limit: float,
            steps: int = 8) -> np.ndarray:
    """
    Newton steps on g + B s + (Lreg/2)|s| s = 0, keeping the iterate with
    the smallest residual.

    The Jacobian B + (Lreg/2)(|s| I + s s^T / |s|) stays well conditioned
    near the hard case, where the secular equation loses digits.
    """
    best, best_res = s, _stationarity(model, s)
    eye = np.eye(B.shape[0])
    for _ in range(steps):
        if best_res <= limit:
            break
        r = np.linalg.norm(s)
        J = B + 0.5 * model.Lreg * r * eye
        if r > 0.0:
            J = J + 0.5 * model.Lreg * np.outer(s, s) / r
        try:
            s = s - linalg.solve(J, model_grad(model, s), assume_a="sym")
        except linalg.LinAlgError:
            break
        res = _stationarity(model, s)
        if res < best_res:
            best, best_res = s, res
            logger.debug("polished cubic step to residual %.3e", res)
    return best


def _solve_newton_cg(model: CubicModel, B: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    L = model.Lreg
    w_min = linalg.eigh(B, eigvals_only=True, subset_by_index=[0, 0])[0]
    if w_min <= 1e-12 * max(1.0, np.linalg.norm(B, 1)):
        logger.debug("indefinite model in dimension %d, using eigendecomposition", B.shape[0])
        return _solve_eigen(model, B, max_iter)

    d = B.shape[0]
    inner_tol = 0.1 * tol
    eye = np.eye(d)

    def solve(r, rhs):
        x, info = cg(B + 0.5 * L * r * eye, rhs, rtol=inner_tol, atol=0.0, maxiter=10 * d)
        if info > 0:
            raise ConvergenceError(f"conjugate gradient stalled after {info} iterations")
        return x

    limit = 0.5 * tol * max(1.0, np.linalg.norm(model.g))
    lo, hi, r = 0.0, math.inf, 0.0
    s = -solve(r, model.g)
    for _ in range(max_iter):
        norm_s = np.linalg.norm(s)
        phi = norm_s - r
        if 0.5 * L * abs(phi) * norm_s <= limit:
            return s
        if phi > 0.0:
            lo = r
        else:
            hi = r
        q = solve(r, s)
        dphi = -0.5 * L * (s @ q) / max(norm_s, np.finfo(float).tiny) - 1.0
        candidate = r - phi / dphi
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * max(lo, 1.0)
        r = candidate
        s = -solve(r, model.g)
    raise ConvergenceError("secular Newton iteration cap reached",
                           residual=_stationarity(model, s))


@dataclass(frozen=True)
class PsiState:
    """
    Aggregated estimating function, up to an additive constant:

        psi(x) = <lin_acc, z> + quad_coeff/2 |z|^2 + cubic_coeff/6 |z|^3,  z = x - center0
    """
    center0: np.ndarray
    kappa2: float
    quad_coeff: float
    cubic_coeff: float
    lin_acc: np.ndarray
    A: float = 1.0

    @classmethod
    def initial(cls, center0: np.ndarray, kappa2: float, kappa3: float) -> "PsiState":
        center0 = np.asarray(center0, dtype=float)
        return cls(center0=center0, kappa2=kappa2, quad_coeff=kappa2,
                   cubic_coeff=kappa3, lin_acc=np.zeros_like(center0), A=1.0)


def psi_update(state: PsiState, alpha_k: float, A_k: float, kappa2_k: float,
               kappa3_k: float, mu_bar: float, g_hat_x: np.ndarray,
               x_next: np.ndarray) -> PsiState:
    """Fold one weighted lower model into the estimating function"""
    weight = alpha_k / A_k
    z_next = np.asarray(x_next, dtype=float) - state.center0
    lin = state.lin_acc + weight * (np.asarray(g_hat_x, dtype=float) - mu_bar * z_next)
    quad = state.quad_coeff + (kappa2_k - state.kappa2) + weight * mu_bar
    return replace(state, kappa2=kappa2_k, quad_coeff=quad, cubic_coeff=kappa3_k,
                   lin_acc=lin, A=A_k)


def psi_value(state: PsiState, x: np.ndarray) -> float:
    z = np.asarray(x, dtype=float) - state.center0
    r = np.linalg.norm(z)
    return float(state.lin_acc @ z + 0.5 * state.quad_coeff * r ** 2
                 + state.cubic_coeff / 6.0 * r ** 3)


def psi_grad(state: PsiState, x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=float) - state.center0
    r = np.linalg.norm(z)
    return state.lin_acc + state.quad_coeff * z + 0.5 * state.cubic_coeff * r * z


def psi_argmin(state: PsiState) -> np.ndarray:
    """
    Exact minimizer of the estimating function.

    Raises:
        UnboundedModelError: If quad_coeff <= 0 and cubic_coeff = 0
    """
    A, k3 = state.quad_coeff, state.cubic_coeff
    if k3 == 0.0 and A <= 0.0:
        raise UnboundedModelError(f"estimating function unbounded (quad {A:.3e}, cubic 0)")
    b = state.lin_acc
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        if A >= 0.0:
            return state.center0.copy()
        # ring of minimizers; take the first coordinate direction
        u = np.zeros_like(b)
        u[0] = 1.0
        return state.center0 - (2.0 * A / k3) * u
    # root of A t + k3/2 t^2 = |b|, rationalized
    t = 2.0 * bnorm / (A + math.sqrt(A * A + 2.0 * k3 * bnorm))
    return state.center0 - t * b / bnorm
