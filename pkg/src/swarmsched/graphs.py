"""Random graph generation and degree distributions for swarm overlays.

All generators return a :class:`SwarmGraph`: a simple, undirected, connected
graph with 0-based node ids.  Generation is deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CONNECT_RETRY_BUDGET = 100


class GraphGenerationError(RuntimeError):
    """Raised when no connected sample is drawn within the retry budget."""


@dataclass(frozen=True)
class DegreeDistribution:
    """Probability mass over node degrees on an explicit finite support.

    support: strictly increasing degrees (each >= 1)
    mass:    probability per degree, summing to 1 within 1e-12
    """

    support: tuple[int, ...]
    mass: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.mass) or not self.support:
            raise ValueError("support and mass must be non-empty and equally long")
        if any(k < 1 for k in self.support):
            raise ValueError("degrees must be >= 1")
        if list(self.support) != sorted(set(self.support)):
            raise ValueError("support must be strictly increasing without repeats")
        if any(m < -1e-15 or m > 1 + 1e-12 for m in self.mass):
            raise ValueError("masses must lie in [0, 1]")
        if abs(sum(self.mass) - 1.0) > 1e-12:
            raise ValueError("masses must sum to 1 within 1e-12")

    def mean(self) -> float:
        return float(sum(k * m for k, m in zip(self.support, self.mass)))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.support, self.mass))


def size_biased(d: DegreeDistribution) -> DegreeDistribution:
    """Size-biased transform: the degree law seen along a uniformly random edge.

    q(k) = k * pi(k) / sum_j j * pi(j)
    """
    mean = d.mean()
    if mean <= 0.0:
        raise ValueError("size biasing requires a positive mean degree")
    mass = [k * m / mean for k, m in zip(d.support, d.mass)]
    # renormalise away accumulated rounding so the invariant holds exactly
    total = sum(mass)
    return DegreeDistribution(d.support, tuple(m / total for m in mass))


@dataclass
class SwarmGraph:
    """A concrete simple connected graph: adjacency lists plus degrees."""

    node_count: int
    adjacency: list[list[int]]

    def __post_init__(self):
        self.degrees = np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    def validate(self) -> None:
        """Check simplicity, symmetry and connectivity; raise ValueError if broken."""
        if len(self.adjacency) != self.node_count:
            raise ValueError("adjacency length does not match node count")
        seen = set()
        for u, nbrs in enumerate(self.adjacency):
            if len(set(nbrs)) != len(nbrs):
                raise ValueError(f"parallel edges at node {u}")
            for v in nbrs:
                if v == u:
                    raise ValueError(f"self-loop at node {u}")
                if not 0 <= v < self.node_count:
                    raise ValueError(f"neighbor {v} out of range")
                seen.add((min(u, v), max(u, v)))
        for u, v in seen:
            if u not in self.adjacency[v] or v not in self.adjacency[u]:
                raise ValueError(f"asymmetric edge ({u}, {v})")
        if not self.is_connected():
            raise ValueError("graph is not connected")

    def is_connected(self) -> bool:
        if self.node_count == 0:
            return False
        visited = np.zeros(self.node_count, dtype=bool)
        stack = [0]
        visited[0] = True
        count = 1
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if not visited[v]:
                    visited[v] = True
                    count += 1
                    stack.append(v)
        return count == self.node_count

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    out.append((u, v))
        out.sort()
        return out

    def to_edge_list_text(self) -> str:
        """Serialize as 'M E' header plus one 'u v' line per edge (u < v, ascending)."""
        lines = [f"{self.node_count} {self.edge_count}"]
        lines.extend(f"{u} {v}" for u, v in self.edges())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list_text(cls, text: str) -> "SwarmGraph":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        m, e = (int(tok) for tok in lines[0].split())
        adjacency: list[list[int]] = [[] for _ in range(m)]
        if len(lines) - 1 != e:
            raise ValueError(f"expected {e} edge lines, found {len(lines) - 1}")
        for ln in lines[1:]:
            u, v = (int(tok) for tok in ln.split())
            adjacency[u].append(v)
            adjacency[v].append(u)
        for a in adjacency:
            a.sort()
        return cls(m, adjacency)


def _graph_from_edge_set(m: int, edge_set: set[tuple[int, int]]) -> SwarmGraph:
    adjacency: list[list[int]] = [[] for _ in range(m)]
    for u, v in edge_set:
        adjacency[u].append(v)
        adjacency[v].append(u)
    for a in adjacency:
        a.sort()
    return SwarmGraph(m, adjacency)


def empirical_degree_distribution(g: SwarmGraph) -> DegreeDistribution:
    """Degree histogram of a sample graph, normalised to a probability mass."""
    values, counts = np.unique(g.degrees, return_counts=True)
    mass = counts / g.node_count
    # exact rounding repair: the counts sum to M, the division may not sum to 1
    mass = mass / mass.sum()
    return DegreeDistribution(tuple(int(k) for k in values), tuple(float(p) for p in mass))


def _sample_er_edges(m: int, p: float, rng: np.random.Generator) -> set[tuple[int, int]]:
    # skip-based G(n, p) enumeration: O(edges) instead of O(n^2)
    edges: set[tuple[int, int]] = set()
    if p <= 0.0:
        return edges
    if p >= 1.0:
        return {(u, v) for u in range(m) for v in range(u + 1, m)}
    lp = math.log(1.0 - p)
    v, w = 1, -1
    while v < m:
        r = rng.random()
        w += 1 + int(math.log(1.0 - r) / lp)
        while w >= v and v < m:
            w -= v
            v += 1
        if v < m:
            edges.add((w, v))
    return edges


def generate_er(M: int, mean_degree: float, seed: int,
                retry_budget: int = CONNECT_RETRY_BUDGET) -> SwarmGraph:
    """Erdős–Rényi sample G(M, mean_degree/M), rejected until connected.

    Raises GraphGenerationError after `retry_budget` disconnected draws,
    which signals that the requested mean degree is too sparse.
    """
    if M < 2:
        raise ValueError("need at least two nodes")
    if not 0.0 < mean_degree < M:
        raise ValueError("mean_degree must lie in (0, M)")
    p = mean_degree / M
    rng = np.random.default_rng(seed)
    for _ in range(retry_budget):
        g = _graph_from_edge_set(M, _sample_er_edges(M, p, rng))
        if g.is_connected():
            return g
    raise GraphGenerationError(
        f"no connected G({M}, {p:.4g}) sample in {retry_budget} tries; "
        "mean degree is likely below the connectivity threshold")


def generate_ba(M: int, m_attach: int, seed: int) -> SwarmGraph:
    """Preferential-attachment graph: complete seed on m_attach+1 nodes, then
    every newcomer attaches to m_attach distinct nodes chosen with probability
    proportional to current degree.  Connected by construction.
    """
    if m_attach < 1:
        raise ValueError("m_attach must be >= 1")
    if M <= m_attach:
        raise ValueError("need M > m_attach")
    rng = np.random.default_rng(seed)
    m0 = m_attach + 1
    edges: set[tuple[int, int]] = {(u, v) for u in range(m0) for v in range(u + 1, m0)}
    # one entry per half-edge: sampling uniformly from this list is
    # degree-proportional sampling
    repeated: list[int] = []
    for u, v in edges:
        repeated.append(u)
        repeated.append(v)
    for new in range(m0, M):
        targets: set[int] = set()
        while len(targets) < m_attach:
            targets.add(repeated[rng.integers(len(repeated))])
        for t in sorted(targets):
            edges.add((t, new))
            repeated.append(t)
            repeated.append(new)
    return _graph_from_edge_set(M, edges)


def generate_ws(M: int, ring_degree: int, rewire_prob: float, seed: int,
                retry_budget: int = CONNECT_RETRY_BUDGET) -> SwarmGraph:
    """Small-world graph: ring lattice with `ring_degree` neighbors per node,
    each forward edge rewired with probability `rewire_prob` to a uniform new
    endpoint (self-loops and duplicates excluded; edge count is preserved).
    Rejected until connected, same retry budget as generate_er.
    """
    if ring_degree < 2 or ring_degree % 2 != 0:
        raise ValueError("ring_degree must be a positive even integer")
    if M <= ring_degree:
        raise ValueError("need M > ring_degree")
    if not 0.0 <= rewire_prob <= 1.0:
        raise ValueError("rewire_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    half = ring_degree // 2
    for _ in range(retry_budget):
        adjacency: list[set[int]] = [set() for _ in range(M)]
        for u in range(M):
            for j in range(1, half + 1):
                v = (u + j) % M
                adjacency[u].add(v)
                adjacency[v].add(u)
        for u in range(M):
            for j in range(1, half + 1):
                v = (u + j) % M
                if v not in adjacency[u]:
                    continue  # already rewired away
                if rng.random() >= rewire_prob:
                    continue
                w = -1
                for _attempt in range(M):
                    cand = int(rng.integers(M))
                    if cand != u and cand not in adjacency[u]:
                        w = cand
                        break
                if w < 0:
                    continue  # node saturated; keep the ring edge
                adjacency[u].discard(v)
                adjacency[v].discard(u)
                adjacency[u].add(w)
                adjacency[w].add(u)
        g = SwarmGraph(M, [sorted(a) for a in adjacency])
        if g.is_connected():
            return g
    raise GraphGenerationError(
        f"no connected small-world sample in {retry_budget} tries "
        f"(M={M}, ring_degree={ring_degree}, rewire_prob={rewire_prob})")
