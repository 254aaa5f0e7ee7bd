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
Graph schedules and mixing matrices.

Builds static and time-varying graph sequences with networkx, turns each
snapshot into Metropolis weights, estimates the contraction pair
(tau, lambda) and wraps static matrices in Chebyshev polynomials.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from .base import ConfigError, ContractionError, TopologySpec

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

_RESAMPLE_LIMIT = 100


@dataclass(frozen=True)
class GraphSnapshot:
    """Undirected graph on nodes 0..m-1; edges stored as (low, high) pairs"""
    m: int
    edges: FrozenSet[Edge]

    def __post_init__(self):
        normalized = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ConfigError(f"self-loop at node {i}")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ConfigError(f"edge ({i}, {j}) outside [0, {self.m})")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "GraphSnapshot":
        return cls(graph.number_of_nodes(), frozenset(graph.edges()))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.m))
        graph.add_edges_from(self.edges)
        return graph

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.m, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def metropolis(g: GraphSnapshot) -> np.ndarray:
    """
    Metropolis mixing matrix of a graph.

    W_ij = 1/(1 + max(deg i, deg j)) on edges; the diagonal completes
    each row to 1.
    """
    deg = g.degrees()
    W = np.zeros((g.m, g.m))
    for i, j in g.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    W[np.diag_indices(g.m)] = 1.0 - W.sum(axis=1)
    return W


class TopologySchedule:
    """
    Deterministic sequence of graph snapshots and their mixing matrices.

    Periodic schedules cycle through a fixed list of snapshots; the
    per-step-connected kind draws snapshot k from a generator seeded by
    (seed, k). Matrices are cached per snapshot.
    """

    def __init__(self, kind: str, m: int, tau: int = 1,
                 snapshots: Optional[List[GraphSnapshot]] = None,
                 generator: Optional[Callable[[int], GraphSnapshot]] = None):
        if snapshots is None and generator is None:
            raise ConfigError("schedule needs snapshots or a generator")
        self.kind = kind
        self.m = m
        self.tau = int(tau)
        self._snapshots = list(snapshots) if snapshots is not None else None
        self._generator = generator
        self._matrices: Dict[int, np.ndarray] = {}

    @property
    def is_static(self) -> bool:
        return self._snapshots is not None and len(self._snapshots) == 1

    @property
    def period(self) -> Optional[int]:
        return len(self._snapshots) if self._snapshots is not None else None

    def _key(self, k: int) -> int:
        return k % len(self._snapshots) if self._snapshots is not None else k

    def snapshot(self, k: int) -> GraphSnapshot:
        if self._snapshots is not None:
            return self._snapshots[self._key(k)]
        return self._generator(k)

    def matrix(self, k: int) -> np.ndarray:
        key = self._key(k)
        if key not in self._matrices:
            W = metropolis(self.snapshot(k))
            W.flags.writeable = False
            self._matrices[key] = W
        return self._matrices[key]

    def edge_count(self, k: int) -> int:
        return len(self.snapshot(k).edges)

    def window(self, start: int, length: int) -> np.ndarray:
        """Product W^{start+length-1} ... W^{start}"""
        P = np.eye(self.m)
        for k in range(start, start + length):
            P = self.matrix(k) @ P
        return P

    def snapshots(self, steps: int) -> List[GraphSnapshot]:
        return [self.snapshot(k) for k in range(steps)]


def _ring_edges(m: int) -> List[Edge]:
    if m == 2:
        return [(0, 1)]
    return [(i, (i + 1) % m) for i in range(m)]


def _static_graph(spec: TopologySpec, m: int, seed: int) -> GraphSnapshot:
    if m == 1:
        graph = nx.empty_graph(1)
    elif spec.graph == "ring":
        graph = nx.cycle_graph(m)
    elif spec.graph == "complete":
        graph = nx.complete_graph(m)
    elif spec.graph == "path":
        graph = nx.path_graph(m)
    elif spec.graph == "random-geometric":
        for attempt in range(_RESAMPLE_LIMIT):
            graph = nx.random_geometric_graph(m, spec.radius, seed=seed + attempt)
            if nx.is_connected(graph):
                break
        else:
            raise ConfigError(
                f"random geometric graph (m={m}, radius={spec.radius}) "
                f"disconnected after {_RESAMPLE_LIMIT} samples")
    else:
        raise ConfigError(f"unknown static graph '{spec.graph}'")
    if m > 1 and not nx.is_connected(graph):
        raise ConfigError(f"static graph '{spec.graph}' is disconnected")
    return GraphSnapshot.from_networkx(graph)


def generate(kind: str, spec: TopologySpec, m: int, seed: int) -> TopologySchedule:
    """
    Build a topology schedule.

    Args:
        kind: static, per-step-connected, tau-connected or explicit
        spec: Graph parameters
        m: Number of nodes
        seed: Seed for every random choice

    Returns:
        TopologySchedule: The schedule with its nominal period tau

    Raises:
        ConfigError: If the parameters cannot be satisfied
    """
    if m < 1:
        raise ConfigError("schedule needs at least one node")
    if kind == "static":
        return TopologySchedule(kind, m, spec.tau, [_static_graph(spec, m, seed)])

    if kind == "per-step-connected":
        if spec.chords < 0:
            raise ConfigError("chords must be nonnegative")

        def draw(k: int) -> GraphSnapshot:
            rng = np.random.default_rng([seed, k])
            order = rng.permutation(m)
            edges = {(order[i], order[j]) for i, j in _ring_edges(m)} if m > 1 else set()
            if m > 2:
                for _ in range(spec.chords):
                    i, j = rng.choice(m, size=2, replace=False)
                    edges.add((i, j))
            return GraphSnapshot(m, frozenset(edges))

        return TopologySchedule(kind, m, 1, generator=draw)

    if kind == "tau-connected":
        base = _ring_edges(m) if m > 1 else []
        if spec.tau < 1 or spec.tau > max(1, len(base)):
            raise ConfigError(f"tau must be in [1, {len(base)}] for a ring of {m}, got {spec.tau}")
        groups = [GraphSnapshot(m, frozenset(e for idx, e in enumerate(base) if idx % spec.tau == g))
                  for g in range(spec.tau)]
        return TopologySchedule(kind, m, spec.tau, groups)

    if kind == "explicit":
        if not spec.path:
            raise ConfigError("explicit topology needs a path")
        file_m, snapshots = load_edge_lists(spec.path)
        if file_m != m:
            raise ConfigError(f"edge-list file has {file_m} nodes, suite has {m}")
        if spec.tau < 1:
            raise ConfigError("tau must be at least 1")
        return TopologySchedule(kind, m, spec.tau, snapshots)

    raise ConfigError(f"unknown topology kind '{kind}'")


def estimate_contraction(schedule: TopologySchedule, tau: int, trials: int = 20) -> float:
    """
    Contraction lambda of tau-step windows.

    Static schedules give 1 - sigma_2(W^tau) exactly; otherwise lambda is
    1 minus the largest sigma_max(W_window - J/m) over the first `trials`
    windows.

    Raises:
        ContractionError: If some window does not contract
    """
    if tau < 1 or trials < 1:
        raise ConfigError("tau and trials must be at least 1")
    m = schedule.m
    J = np.full((m, m), 1.0 / m)
    starts = [0] if schedule.is_static else range(trials)
    worst = 0.0
    for start in starts:
        P = schedule.window(start, tau)
        worst = max(worst, np.linalg.norm(P - J, 2))
    lam = 1.0 - worst
    if lam <= 1e-12:
        raise ContractionError(
            f"no contraction over {tau}-step windows (sigma = {worst:.6f}); "
            "union graph is disconnected")
    return min(lam, 1.0)


def contraction_pair(schedule: TopologySchedule, trials: int = 20,
                     discount: float = 0.9) -> Tuple[int, float]:
    """(tau, lambda) used by the planners; time-varying estimates are discounted"""
    lam = estimate_contraction(schedule, schedule.tau, trials)
    if not schedule.is_static:
        lam *= discount
    return schedule.tau, lam


class MixingOperator:
    """
    Degree-K Chebyshev polynomial of a static mixing matrix,

        P_K(W) = T_K(W / s) / T_K(1 / s),   s = sigma_2(W),

    applied with the three-term recurrence normalized so P_K(1) = 1.
    One application costs K communication rounds.
    """

    def __init__(self, W: np.ndarray, K: int):
        if K < 1:
            raise ConfigError(f"Chebyshev degree must be at least 1, got {K}")
        self.W = np.asarray(W, dtype=float)
        self.K = int(K)
        m = self.W.shape[0]
        s = np.linalg.svd(self.W - np.full((m, m), 1.0 / m), compute_uv=False)
        self.sigma2 = float(s[0]) if m > 1 else 0.0
        if self.sigma2 >= 1.0 - 1e-12:
            raise ConfigError("Chebyshev mixing needs a connected static graph")
        self._degenerate = self.sigma2 <= 1e-12
        self._matrix: Optional[np.ndarray] = None

    def apply(self, U: np.ndarray) -> np.ndarray:
        if self._degenerate or self.K == 1:
            out = U
            for _ in range(self.K):
                out = self.W @ out
            return out
        inv = 1.0 / self.sigma2
        a_prev, a_cur = 1.0, inv
        Y_prev, Y_cur = U, self.W @ U
        for _ in range(1, self.K):
            a_next = 2.0 * inv * a_cur - a_prev
            Y_next = (2.0 * inv * a_cur / a_next) * (self.W @ Y_cur) - (a_prev / a_next) * Y_prev
            a_prev, a_cur = a_cur, a_next
            Y_prev, Y_cur = Y_cur, Y_next
        return Y_cur

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = self.apply(np.eye(self.W.shape[0]))
        return self._matrix

    @property
    def contraction(self) -> float:
        m = self.W.shape[0]
        return 1.0 - float(np.linalg.norm(self.matrix() - np.full((m, m), 1.0 / m), 2))


def chebyshev_operator(W: np.ndarray, K: int) -> MixingOperator:
    return MixingOperator(W, K)


def chebyshev_degree(lam: float) -> int:
    """K = ceil(sqrt(1 / lambda))"""
    return max(1, math.ceil(math.sqrt(1.0 / lam)))


def save_edge_lists(m: int, snapshots: Iterable[GraphSnapshot], path) -> Path:
    path = Path(path)
    lines = [f"# nodes {m}"]
    for k, snap in enumerate(snapshots):
        lines.append(f"step {k}")
        lines.extend(f"{i} {j}" for i, j in sorted(snap.edges))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_edge_lists(path) -> Tuple[int, List[GraphSnapshot]]:
    """
    Read a `step k` / `i j` edge-list file.

    A `# nodes m` comment fixes the node count; otherwise it is one more
    than the largest index seen.
    """
    m: Optional[int] = None
    steps: List[List[Edge]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                m = int(parts[1])
            continue
        parts = line.split()
        if parts[0] == "step":
            if len(parts) != 2 or int(parts[1]) != len(steps):
                raise ConfigError(f"{path}:{lineno}: expected 'step {len(steps)}'")
            steps.append([])
            continue
        if len(parts) != 2 or not steps:
            raise ConfigError(f"{path}:{lineno}: malformed edge line '{line}'")
        steps[-1].append((int(parts[0]), int(parts[1])))
    if not steps:
        raise ConfigError(f"{path}: no steps found")
    if m is None:
        m = 1 + max((max(e) for edges in steps for e in edges), default=0)
    return m, [GraphSnapshot(m, frozenset(edges)) for edges in steps]
