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
Hessian exchange for generalized linear models.

Feature rows are flooded to every node once. After that nodes only mix
their per-sample curvature vectors and rebuild the averaged Hessian
locally, optionally sending only the top-k curvature entries.
"""

import hashlib
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .base import ArgumentError, ConfigError, ReplicationError
from .consensus import ConsensusReport, HessianBackend, deviation

logger = logging.getLogger(__name__)


@dataclass
class GlmWeights:
    """Per-sample second derivatives of the link at one node"""
    h: np.ndarray
    owner: int = 0

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float).reshape(-1)


@dataclass
class ReplicatedData:
    """Which node holds which dataset after flooding"""
    holdings: np.ndarray  # m x m, holdings[i, j] is True when node i holds dataset j
    fingerprints: List[str]
    cost: int
    steps: int

    @property
    def complete(self) -> bool:
        return bool(self.holdings.all())


def _dataset_digest(obj) -> bytes:
    sha = hashlib.sha256()
    sha.update(np.ascontiguousarray(obj.features).tobytes())
    sha.update(np.ascontiguousarray(obj.labels).tobytes())
    return sha.digest()


def _fingerprints(suite, holdings: np.ndarray) -> List[str]:
    digests = [_dataset_digest(obj) for obj in suite.objectives]
    out = []
    for row in holdings:
        sha = hashlib.sha256()
        for j in np.flatnonzero(row):
            sha.update(digests[j])
        out.append(sha.hexdigest())
    return out


def replicate_datasets(suite, schedule, horizon: Optional[int] = None,
                       start_step: int = 0,
                       holdings: Optional[np.ndarray] = None) -> ReplicatedData:
    """
    Flood every node's dataset to every other node over the schedule.

    Each step, every node forwards everything it held at the start of the
    step to its current neighbours. A node receiving a dataset it lacks
    is charged samples * (d + 1) scalars for it.

    Args:
        suite: GLM problem suite
        schedule: Topology schedule used for the flooding
        horizon: Step cap; defaults to tau * m
        start_step: First schedule step used
        holdings: Existing holdings matrix, identity when None

    Returns:
        ReplicatedData: Final holdings, per-node fingerprints, cost and steps

    Raises:
        ConfigError: If the suite is not a GLM suite
        ReplicationError: If some node still lacks a dataset after the horizon
    """
    if not suite.is_glm:
        raise ConfigError("dataset replication needs a GLM suite")
    m = suite.m
    held = np.eye(m, dtype=bool) if holdings is None else np.array(holdings, dtype=bool)
    if held.shape != (m, m):
        raise ArgumentError(f"holdings must be {m} x {m}, got {held.shape}")
    horizon = schedule.tau * m if horizon is None else horizon
    sizes = np.array([obj.samples * (obj.dim + 1) for obj in suite.objectives])
    cost = 0
    steps = 0
    while not held.all():
        if steps >= horizon:
            missing = int((~held).sum())
            raise ReplicationError(f"{missing} datasets still missing after {horizon} steps")
        new = held.copy()
        for i, j in schedule.snapshot(start_step + steps).edges:
            new[i] |= held[j]
            new[j] |= held[i]
        cost += int(sizes @ (new & ~held).sum(axis=0))
        held = new
        steps += 1
    data = ReplicatedData(held, _fingerprints(suite, held), cost, steps)
    if steps:
        logger.info("replicated %d datasets in %d steps (%d scalars)", m, steps, cost)
    return data


def glm_weights(obj, x, owner: int = 0) -> GlmWeights:
    return GlmWeights(obj.curvature(x), owner)


def topk_compress(h: GlmWeights, k: int) -> GlmWeights:
    """
    Keep the k largest-magnitude entries and zero the rest.

    Ties go to the lowest index. k above the vector length keeps everything.
    """
    if k < 1:
        raise ArgumentError(f"top-k needs k >= 1, got {k}")
    if k >= h.h.size:
        return replace(h, h=h.h.copy())
    keep = np.argsort(-np.abs(h.h), kind="stable")[:k]
    out = np.zeros_like(h.h)
    out[keep] = h.h[keep]
    return replace(h, h=out)


def weight_layout(suite) -> np.ndarray:
    """Block offsets of each node's samples in the concatenated weight vector"""
    return np.concatenate([[0], np.cumsum([obj.samples for obj in suite.objectives])])


def stack_weights(weights: Sequence[GlmWeights], offsets: np.ndarray) -> np.ndarray:
    """
    Row i carries m * h_i in block i and zeros elsewhere, so the row mean
    is the concatenation of every node's weights.

    Raises:
        ArgumentError: If owners or block lengths do not match the layout
    """
    m = len(offsets) - 1
    if len(weights) != m:
        raise ArgumentError(f"expected {m} weight vectors, got {len(weights)}")
    U = np.zeros((m, offsets[-1]))
    for i, w in enumerate(weights):
        lo, hi = offsets[i], offsets[i + 1]
        if w.owner != i or w.h.size != hi - lo:
            raise ArgumentError(f"weights of node {w.owner} ({w.h.size} entries) "
                                f"do not fit block {i} ({hi - lo} entries)")
        U[i, lo:hi] = m * w.h
    return U


def consensus_weights(weights: Sequence[GlmWeights], offsets: np.ndarray, communicator,
                      rounds: Optional[int] = None, target: Optional[float] = None,
                      radius: Optional[float] = None, width: Optional[int] = None):
    """Mix the stacked weight vectors; returns the m x sum(l) stack and the report"""
    U = stack_weights(weights, offsets)
    return communicator.mix(U, "glm-weights", rounds=rounds, target=target,
                            width=width, radius=radius)


def reconstruct_hessians(suite, mixed: np.ndarray) -> np.ndarray:
    """
    Rebuild each node's averaged-Hessian estimate from its mixed weights:
    F^T diag(row) F / m + mean(mu_reg) I, with F all feature rows stacked.
    """
    F = np.vstack([obj.features for obj in suite.objectives])
    if mixed.shape != (suite.m, F.shape[0]):
        raise ArgumentError(f"weight stack shape {mixed.shape} does not match "
                            f"({suite.m}, {F.shape[0]})")
    mu = float(np.mean([obj.mu_reg for obj in suite.objectives]))
    H = np.einsum("il,lj,lk->ijk", mixed, F, F) / suite.m
    H += mu * np.eye(suite.dim)
    return 0.5 * (H + H.transpose(0, 2, 1))


class GlmHessianBackend(HessianBackend):
    """
    Curvature-vector exchange, optionally top-k compressed.

    Top-k compression is one-shot: each node sparsifies its own weights
    once, before the first round, and the mixed stack is never
    recompressed. Every round then carries only the kept entries, which
    is what width() charges. Adaptive rounds are planned from the spread
    of the local Hessians so the dense and GLM paths use the same round
    counts. Reported deviations are measured against the exact
    (uncompressed) average Hessian.
    """

    name = "glm"

    def __init__(self, topk: Optional[int] = None):
        if topk is not None and topk < 1:
            raise ConfigError(f"top-k needs k >= 1, got {topk}")
        self.topk = topk
        self.replicated: Optional[ReplicatedData] = None
        self.offsets: Optional[np.ndarray] = None

    def prepare(self, suite, communicator) -> None:
        if not suite.is_glm:
            raise ConfigError(f"backend '{self.label}' needs a GLM (logistic) suite")
        mu = {obj.mu_reg for obj in suite.objectives}
        if len(mu) != 1:
            raise ConfigError("GLM reconstruction needs a common mu_reg")
        self.offsets = weight_layout(suite)
        self.replicated = replicate_datasets(suite, communicator.schedule)
        communicator.charge(self.replicated.cost)

    @property
    def label(self) -> str:
        return self.name if self.topk is None else f"glm-topk:{self.topk}"

    def width(self, suite) -> int:
        if self.topk is None:
            return int(self.offsets[-1])
        return 2 * sum(min(self.topk, obj.samples) for obj in suite.objectives)

    def exchange(self, communicator, suite, points, pool, rounds=None, target=None):
        if self.offsets is None:
            self.prepare(suite, communicator)
        m = points.shape[0]
        weights = pool.map(lambda i: glm_weights(suite.objectives[i], points[i], owner=i), range(m))
        local = np.array(pool.map(lambda i: suite.objectives[i].hessian(points[i]), range(m)))
        exact = local.mean(axis=0)
        if self.topk is not None:
            weights = [topk_compress(w, self.topk) for w in weights]
        radius = None
        if rounds is None:
            radius = deviation(local.reshape(m, -1))[1]
        mixed, report = consensus_weights(weights, self.offsets, communicator, rounds=rounds,
                                          target=target, radius=radius, width=self.width(suite))
        H = reconstruct_hessians(suite, mixed)
        max_row, frob = deviation(H.reshape(m, -1), exact.reshape(-1))
        report = ConsensusReport(report.rounds_used, max_row, frob, report.scalars,
                                 report.initial_deviation)
        return H, report
