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
Tests for graph schedules, mixing matrices and Chebyshev acceleration
"""

import math
import sys
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from dcnsim.base import ConfigError, ContractionError, TopologySpec
from dcnsim.network import (GraphSnapshot, MixingOperator, chebyshev_degree,
                            contraction_pair, estimate_contraction, generate,
                            load_edge_lists, metropolis, save_edge_lists)


def _ring(m):
    return generate("static", TopologySpec(graph="ring"), m, 0)


def test_metropolis_is_doubly_stochastic():
    snap = GraphSnapshot(5, frozenset({(0, 1), (1, 2), (2, 3), (1, 4)}))
    W = metropolis(snap)
    assert np.allclose(W, W.T)
    assert np.abs(W.sum(axis=0) - 1).max() <= 1e-12
    assert np.abs(W.sum(axis=1) - 1).max() <= 1e-12
    assert W[0, 1] == pytest.approx(1.0 / 4.0)  # max degree 3 at node 1
    assert W[0, 2] == 0.0
    assert np.all(W >= 0)


def test_snapshot_normalizes_edges():
    snap = GraphSnapshot(3, frozenset({(np.int64(2), np.int64(0)), (1, 2)}))
    assert snap.edges == frozenset({(0, 2), (1, 2)})
    assert all(type(i) is int for e in snap.edges for i in e)
    with pytest.raises(ConfigError):
        GraphSnapshot(3, frozenset({(1, 1)}))
    with pytest.raises(ConfigError):
        GraphSnapshot(3, frozenset({(0, 3)}))


def test_ring_contraction_is_exact():
    lam = estimate_contraction(_ring(8), 1)
    expected = 1.0 - (1.0 / 3.0 + 2.0 / 3.0 * math.cos(2 * math.pi / 8))
    assert lam == pytest.approx(expected, rel=1e-10)


def test_complete_graph_mixes_in_one_round():
    schedule = generate("static", TopologySpec(graph="complete"), 5, 0)
    assert np.allclose(schedule.matrix(0), np.full((5, 5), 0.2), atol=1e-15)
    assert estimate_contraction(schedule, 1) == pytest.approx(1.0)


def test_static_graphs_are_connected():
    for graph in ("ring", "complete", "path", "random-geometric"):
        schedule = generate("static", TopologySpec(graph=graph), 10, 3)
        assert schedule.is_static
        assert nx.is_connected(schedule.snapshot(0).to_networkx())


def test_random_geometric_gives_up():
    with pytest.raises(ConfigError):
        generate("static", TopologySpec(graph="random-geometric", radius=0.01), 8, 0)


def test_unknown_kinds():
    with pytest.raises(ConfigError):
        generate("static", TopologySpec(graph="star-of-david"), 4, 0)
    with pytest.raises(ConfigError):
        generate("hypercube", TopologySpec(), 4, 0)


def test_per_step_connected_is_deterministic():
    a = generate("per-step-connected", TopologySpec(chords=2), 9, 5)
    b = generate("per-step-connected", TopologySpec(chords=2), 9, 5)
    for k in range(10):
        assert a.snapshot(k) == b.snapshot(k)
        assert nx.is_connected(a.snapshot(k).to_networkx())
    assert not a.is_static and a.period is None


def test_tau_connected_needs_whole_window():
    schedule = generate("tau-connected", TopologySpec(tau=3), 6, 0)
    assert schedule.period == 3
    assert not nx.is_connected(schedule.snapshot(0).to_networkx())
    with pytest.raises(ContractionError):
        estimate_contraction(schedule, 1, trials=3)
    assert 0.0 < estimate_contraction(schedule, 3, trials=3) <= 1.0
    with pytest.raises(ConfigError):
        generate("tau-connected", TopologySpec(tau=7), 6, 0)


def test_contraction_pair_discounts_time_varying():
    static = _ring(6)
    assert contraction_pair(static) == (1, estimate_contraction(static, 1))
    varying = generate("per-step-connected", TopologySpec(), 6, 0)
    tau, lam = contraction_pair(varying, trials=5)
    assert tau == 1
    assert lam == pytest.approx(0.9 * estimate_contraction(varying, 1, trials=5))


def test_window_product_order():
    schedule = generate("tau-connected", TopologySpec(tau=2), 4, 0)
    P = schedule.window(1, 2)
    assert np.allclose(P, schedule.matrix(2) @ schedule.matrix(1))


def test_edge_list_roundtrip(tmp_path):
    schedule = generate("tau-connected", TopologySpec(tau=2), 6, 0)
    path = save_edge_lists(6, schedule.snapshots(2), tmp_path / "edges.txt")
    m, snaps = load_edge_lists(path)
    assert m == 6
    assert snaps == schedule.snapshots(2)
    explicit = generate("explicit", TopologySpec(kind="explicit", path=str(path), tau=2), 6, 0)
    assert np.allclose(explicit.matrix(3), schedule.matrix(1))
    with pytest.raises(ConfigError):
        generate("explicit", TopologySpec(kind="explicit", path=str(path)), 5, 0)


def test_edge_list_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 1\n")
    with pytest.raises(ConfigError):
        load_edge_lists(path)
    path.write_text("step 1\n0 1\n")
    with pytest.raises(ConfigError):
        load_edge_lists(path)
    path.write_text("step 0\n0 1\n")
    assert load_edge_lists(path)[0] == 2


def test_chebyshev_preserves_average():
    W = _ring(10).matrix(0)
    op = MixingOperator(W, 4)
    P = op.matrix()
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.allclose(MixingOperator(W, 1).matrix(), W)


def test_chebyshev_beats_plain_mixing():
    """Equal communication: K rounds of W against one degree-K operator"""
    W = _ring(16).matrix(0)
    lam = estimate_contraction(_ring(16), 1)
    K = chebyshev_degree(lam)
    J = np.full((16, 16), 1.0 / 16)
    plain = 1.0 - np.linalg.norm(np.linalg.matrix_power(W, K) - J, 2)
    assert MixingOperator(W, K).contraction > plain


def test_chebyshev_degree():
    assert chebyshev_degree(0.01) == 10
    assert chebyshev_degree(1.0) == 1
    with pytest.raises(ConfigError):
        MixingOperator(np.eye(3), 2)
    with pytest.raises(ConfigError):
        MixingOperator(_ring(4).matrix(0), 0)
