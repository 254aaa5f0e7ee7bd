#!/usr/bin/env python3
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
Tests for dataset replication, GLM weights and the GLM Hessian backend
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from dcnsim.base import (ArgumentError, ConfigError, NodePool, ReplicationError,
                         SuiteSpec, TopologySpec)
from dcnsim.consensus import Communicator, DenseHessianBackend
from dcnsim.glm import (GlmHessianBackend, GlmWeights, glm_weights, reconstruct_hessians,
                        replicate_datasets, stack_weights, topk_compress, weight_layout)
from dcnsim.network import estimate_contraction, generate
from dcnsim.objectives import LogisticObjective, ProblemSuite, make_suite


def _suite(m=6, d=4, samples=5, seed=0):
    return make_suite(SuiteSpec(family="logistic", m=m, d=d, samples=samples), seed)


def _comm(m, graph="ring"):
    schedule = generate("static", TopologySpec(graph=graph), m, 0)
    return Communicator(schedule, 1, estimate_contraction(schedule, 1))


def test_replication_on_ring():
    suite = _suite(m=6)
    data = replicate_datasets(suite, _comm(6).schedule)
    assert data.complete
    assert data.steps == 3  # ring diameter
    assert len(set(data.fingerprints)) == 1
    sizes = [obj.samples * (obj.dim + 1) for obj in suite.objectives]
    assert data.cost == 5 * sum(sizes)


def test_replication_already_complete_costs_nothing():
    suite = _suite(m=4)
    data = replicate_datasets(suite, _comm(4).schedule, holdings=np.ones((4, 4), dtype=bool))
    assert data.steps == 0 and data.cost == 0


def test_replication_horizon():
    suite = _suite(m=6)
    with pytest.raises(ReplicationError):
        replicate_datasets(suite, _comm(6).schedule, horizon=1)


def test_replication_needs_glm_suite():
    suite = make_suite(SuiteSpec(family="quadratic", m=4, d=3), 0)
    with pytest.raises(ConfigError):
        replicate_datasets(suite, _comm(4).schedule)


def test_weights_match_curvature():
    suite = _suite()
    x = np.full(suite.dim, 0.2)
    w = glm_weights(suite.objectives[2], x, owner=2)
    assert w.owner == 2
    assert np.allclose(w.h, suite.objectives[2].curvature(x))


def test_topk_keeps_largest_magnitudes():
    h = GlmWeights(np.array([0.1, -0.5, 0.3, 0.5]))
    assert np.array_equal(topk_compress(h, 2).h, [0.0, -0.5, 0.0, 0.5])
    assert np.array_equal(topk_compress(h, 1).h, [0.0, -0.5, 0.0, 0.0])  # tie goes to lower index
    full = topk_compress(h, 10)
    assert np.array_equal(full.h, h.h) and full.h is not h.h
    with pytest.raises(ArgumentError):
        topk_compress(h, 0)


def test_stack_weights_layout():
    suite = _suite(m=3, samples=2)
    offsets = weight_layout(suite)
    assert list(offsets) == [0, 2, 4, 6]
    weights = [GlmWeights(np.full(2, i + 1.0), owner=i) for i in range(3)]
    U = stack_weights(weights, offsets)
    assert np.allclose(U.mean(axis=0), [1, 1, 2, 2, 3, 3])
    with pytest.raises(ArgumentError):
        stack_weights(weights[::-1], offsets)
    with pytest.raises(ArgumentError):
        stack_weights(weights[:2], offsets)


def test_reconstruction_of_exact_average():
    suite = _suite(m=4)
    x = np.linspace(-0.5, 0.5, suite.dim)
    offsets = weight_layout(suite)
    weights = [glm_weights(obj, x, owner=i) for i, obj in enumerate(suite.objectives)]
    mean = stack_weights(weights, offsets).mean(axis=0)
    H = reconstruct_hessians(suite, np.tile(mean, (4, 1)))
    for i in range(4):
        assert np.allclose(H[i], suite.hessian(x), atol=1e-12)
    with pytest.raises(ArgumentError):
        reconstruct_hessians(suite, np.zeros((4, 3)))


def test_glm_backend_matches_dense_backend():
    """Mixing commutes with the linear rebuild, so both paths agree"""
    suite = _suite(m=6, d=5, samples=3)
    points = np.random.default_rng(1).standard_normal((6, 5))
    dense_comm, glm_comm = _comm(6), _comm(6)
    H_dense, rep_dense = DenseHessianBackend().exchange(dense_comm, suite, points, NodePool(1), rounds=4)
    backend = GlmHessianBackend()
    backend.prepare(suite, glm_comm)
    replication = glm_comm.total_scalars
    H_glm, rep_glm = backend.exchange(glm_comm, suite, points, NodePool(1), rounds=4)
    assert np.allclose(H_dense, H_glm, atol=1e-10)
    assert rep_glm.scalars == 4 * 6 * 18
    assert rep_glm.scalars < rep_dense.scalars
    assert glm_comm.total_scalars == replication + rep_glm.scalars
    assert backend.replicated.complete


def test_glm_backend_complete_graph_is_exact():
    suite = _suite(m=4)
    comm = _comm(4, "complete")
    points = np.tile(np.full(suite.dim, 0.3), (4, 1))
    H, report = GlmHessianBackend().exchange(comm, suite, points, NodePool(1), rounds=1)
    assert report.frob_deviation <= 1e-12
    assert np.allclose(H[0], suite.hessian(points[0]))


def test_topk_backend_width_and_error():
    suite = _suite(m=4, samples=6)
    comm = _comm(4, "complete")
    points = np.random.default_rng(2).standard_normal((4, suite.dim))
    backend = GlmHessianBackend(topk=2)
    assert backend.label == "glm-topk:2"
    H, report = backend.exchange(comm, suite, points, NodePool(1), rounds=1)
    assert backend.width(suite) == 2 * 4 * 2
    assert report.scalars == 6 * backend.width(suite)
    assert report.frob_deviation > 0.0
    with pytest.raises(ConfigError):
        GlmHessianBackend(topk=0)


def test_glm_backend_rejects_unsupported_suites():
    quad = make_suite(SuiteSpec(family="quadratic", m=4, d=3), 0)
    with pytest.raises(ConfigError):
        GlmHessianBackend().prepare(quad, _comm(4))
    rng = np.random.default_rng(0)
    objs = [LogisticObjective(rng.standard_normal((3, 2)), [1.0, -1.0, 1.0], mu_reg=r)
            for r in (0.1, 0.2)]
    with pytest.raises(ConfigError):
        GlmHessianBackend().prepare(ProblemSuite(objs), _comm(2))


def test_topk_compresses_once_before_mixing():
    """Ring mixing of the compressed weights, rebuilt, is the backend output"""
    suite = _suite(m=4, samples=6)
    points = np.random.default_rng(3).standard_normal((4, suite.dim))
    backend = GlmHessianBackend(topk=2)
    comm = _comm(4)
    backend.prepare(suite, comm)
    H, report = backend.exchange(comm, suite, points, NodePool(1), rounds=3)

    offsets = weight_layout(suite)
    kept = [topk_compress(glm_weights(obj, x, owner=i), 2)
            for i, (obj, x) in enumerate(zip(suite.objectives, points))]
    U = stack_weights(kept, offsets)
    schedule = comm.schedule
    for k in range(3):
        U = schedule.matrix(k) @ U
    assert np.allclose(H, reconstruct_hessians(suite, U), atol=1e-12)
    assert all(np.count_nonzero(w.h) <= 2 for w in kept)
    assert report.rounds_used == 3
