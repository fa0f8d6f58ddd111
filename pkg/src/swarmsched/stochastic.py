"""Monte Carlo simulation of the buffer/shifting contact process on a graph.

Each unit of time: the server (re-)selects its peer on link breakage and
uploads one chunk at buffer index 1; every other peer draws a Poisson number
of neighbor contacts at rate degree * contact_scale; all contacts are
globally permuted and executed one by one (download the lowest missing index
under LDF, the highest under EDF); finally every buffer shifts one slot
toward playback (or by a Poisson(1) count per peer under exponential
shifting).  Runs are bit-identical for a fixed seed.

Buffers are stored as integer bitmasks, bit i-1 <-> buffer index i, which
keeps the sequential contact loop cheap.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .graphs import SwarmGraph
from .mean_field import EDF, LDF

PURE_LDF = "pure_ldf"
PURE_EDF = "pure_edf"
MIXED = "mixed"

DETERMINISTIC = "deterministic"
EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class StrategyRule:
    """Maps node degree to a chunk-selection strategy.

    mixed(q) assigns LDF to nodes whose degree reaches the (1-q) empirical
    degree quantile; ties at the threshold degree all play LDF.
    """

    kind: str
    threshold_quantile: float = 0.2

    def __post_init__(self):
        if self.kind not in (PURE_LDF, PURE_EDF, MIXED):
            raise ValueError(f"unknown strategy rule {self.kind!r}")
        if not 0.0 < self.threshold_quantile <= 1.0:
            raise ValueError("threshold quantile must lie in (0, 1]")

    @classmethod
    def pure_ldf(cls) -> "StrategyRule":
        return cls(PURE_LDF)

    @classmethod
    def pure_edf(cls) -> "StrategyRule":
        return cls(PURE_EDF)

    @classmethod
    def mixed(cls, threshold_quantile: float = 0.2) -> "StrategyRule":
        return cls(MIXED, threshold_quantile)


def assign_strategies(graph: SwarmGraph, rule: StrategyRule) -> list[str]:
    """Per-node strategy under the given rule."""
    if rule.kind == PURE_LDF:
        return [LDF] * graph.node_count
    if rule.kind == PURE_EDF:
        return [EDF] * graph.node_count
    threshold = np.quantile(graph.degrees, 1.0 - rule.threshold_quantile,
                            method="inverted_cdf")
    return [LDF if d >= threshold else EDF for d in graph.degrees]


@dataclass
class SimConfig:
    graph: SwarmGraph
    buffer_len: int
    contact_scale: float
    strategy_rule: StrategyRule
    breakage_prob: float = 0.01
    shifting: str = DETERMINISTIC
    horizon: int = 4000
    burn_in: int | None = None
    seed: int = 0
    check_invariants: bool = False

    def __post_init__(self):
        if self.buffer_len < 2:
            raise ValueError("buffer_len must be >= 2")
        if self.buffer_len > 63:
            raise ValueError("buffer_len must fit a 64-bit bitmask")
        if self.contact_scale < 0.0:
            raise ValueError("contact_scale must be non-negative")
        if not 0.0 <= self.breakage_prob <= 1.0:
            raise ValueError("breakage_prob must lie in [0, 1]")
        if self.shifting not in (DETERMINISTIC, EXPONENTIAL):
            raise ValueError(f"unknown shifting mode {self.shifting!r}")
        if self.burn_in is None:
            self.burn_in = self.horizon // 2
        if not 0 <= self.burn_in < self.horizon:
            raise ValueError("need 0 <= burn_in < horizon")


@dataclass
class SwarmState:
    """Full system state: per-peer buffer bitmasks plus server attachment."""

    buffers: list[int]
    served_peer: int
    clock: int = 0

    def to_matrix(self, buffer_len: int) -> np.ndarray:
        """Expand the bitmasks to an (M, n) boolean availability matrix."""
        arr = np.array(self.buffers, dtype=np.uint64)
        bits = np.unpackbits(arr.view(np.uint8).reshape(len(self.buffers), 8),
                             axis=1, bitorder="little")
        return bits[:, :buffer_len].astype(bool)


def check_state_invariant(state: SwarmState, shifting: str = DETERMINISTIC) -> None:
    """Assert the server-slot constraint: index 1 only at the served peer.

    Holds at every step boundary under deterministic shifting (the shift
    clears index 1 everywhere and only the served peer is re-fed).  Under
    exponential shifting a chunk may linger at index 1 of a previously served
    peer until its own shift clock ticks, so only downloads are constrained.
    """
    holders = [v for v, b in enumerate(state.buffers) if b & 1]
    if shifting == DETERMINISTIC:
        if holders not in ([], [state.served_peer]):
            raise AssertionError(
                f"index-1 chunk held by {holders}, served={state.served_peer}")


def execute_contact(state: SwarmState, peer: int, strategy: str,
                    rng: np.random.Generator, graph: SwarmGraph,
                    buffer_len: int) -> int | None:
    """One peer-to-peer contact: pick a uniform neighbor and download one chunk.

    The downloadable set is every index >= 2 the peer lacks and the neighbor
    holds; LDF takes its minimum, EDF its maximum.  Returns the downloaded
    buffer index, or None when nothing was downloadable.
    """
    if peer == state.served_peer:
        raise ValueError("the served peer does not contact neighbors")
    nbrs = graph.adjacency[peer]
    neighbor = nbrs[rng.integers(len(nbrs))]
    mask = ((1 << buffer_len) - 1) & ~1  # indices >= 2 only
    downloadable = ~state.buffers[peer] & state.buffers[neighbor] & mask
    if not downloadable:
        return None
    if strategy == LDF:
        bit = (downloadable & -downloadable).bit_length() - 1
    else:
        bit = downloadable.bit_length() - 1
    state.buffers[peer] |= 1 << bit
    return bit + 1


@dataclass
class SimMetrics:
    """Stationary availability estimates from one run."""

    degrees: tuple[int, ...]
    strategies: tuple[str, ...]            # strategy per degree class
    class_counts: tuple[int, ...]          # peers per degree class
    buffer_prob: np.ndarray                # (classes, n) mean availability
    buffer_prob_se: np.ndarray             # (classes, n) std error over samples
    buffer_prob_global: np.ndarray         # (n,)
    buffer_prob_global_se: np.ndarray      # (n,)
    continuity: dict[int, float]
    continuity_global: float
    startup_latency: dict[int, float]
    startup_latency_normalized: dict[int, float]
    startup_latency_global: float
    startup_latency_global_normalized: float
    samples: int
    seed: int
    shifting: str
    strategy_rule: str

    def class_curve(self, strategy: str) -> np.ndarray | None:
        """Population-weighted availability curve of one strategy class."""
        weights = np.array([c for c, s in zip(self.class_counts, self.strategies)
                            if s == strategy], dtype=float)
        rows = np.array([row for row, s in zip(self.buffer_prob, self.strategies)
                         if s == strategy])
        if len(weights) == 0:
            return None
        return weights @ rows / weights.sum()

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("strategy,shifting,degree_class,buffer_index,probability,stderr\n")
        for c, k in enumerate(self.degrees):
            for i in range(self.buffer_prob.shape[1]):
                buf.write(f"{self.strategies[c]},{self.shifting},{k},{i + 1},"
                          f"{self.buffer_prob[c, i]:.17g},"
                          f"{self.buffer_prob_se[c, i]:.17g}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "strategy_rule": self.strategy_rule,
            "shifting": self.shifting,
            "seed": self.seed,
            "samples": self.samples,
            "continuity_global": self.continuity_global,
            "continuity": {str(k): v for k, v in self.continuity.items()},
            "startup_latency_global": self.startup_latency_global,
            "startup_latency_global_normalized":
                self.startup_latency_global_normalized,
            "startup_latency": {str(k): v for k, v in self.startup_latency.items()},
        }


def run(cfg: SimConfig) -> SimMetrics:
    """Simulate the contact process and collect stationary buffer statistics.

    Metrics are sampled once per unit time after the burn-in, immediately
    after the contact phase (before the shift), so index 1 carries exactly
    the server-fed chunk.
    """
    g = cfg.graph
    m = g.node_count
    n = cfg.buffer_len
    rng = np.random.default_rng(cfg.seed)
    strategies = assign_strategies(g, cfg.strategy_rule)
    is_ldf = [s == LDF for s in strategies]

    # flat adjacency for O(1) uniform neighbor picks
    offsets = np.zeros(m + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(g.degrees)
    flat = np.concatenate([np.asarray(a, dtype=np.int64) for a in g.adjacency])
    flat_list = flat.tolist()
    offset_list = offsets.tolist()
    degree_list = g.degrees.tolist()

    full_mask = (1 << n) - 1
    dl_mask = full_mask & ~1
    lam = g.degrees.astype(float) * cfg.contact_scale

    served = int(rng.integers(m))
    interior = rng.integers(0, 2, size=(m, n - 1), dtype=np.uint8)
    packed = np.zeros(m, dtype=np.uint64)
    for i in range(n - 1):
        packed |= interior[:, i].astype(np.uint64) << np.uint64(i + 1)
    bufs = [int(b) for b in packed]
    bufs[served] |= 1

    # per-degree-class accumulators
    class_degrees = sorted(set(degree_list))
    class_index = {k: c for c, k in enumerate(class_degrees)}
    node_class = np.array([class_index[d] for d in degree_list])
    group = np.zeros((len(class_degrees), m))
    group[node_class, np.arange(m)] = 1.0
    class_counts = group.sum(axis=1)
    group /= class_counts[:, None]

    n_classes = len(class_degrees)
    class_shares = class_counts / m
    sum_p = np.zeros((n_classes, n))
    sum_p2 = np.zeros((n_classes, n))
    sum_g = np.zeros(n)
    sum_g2 = np.zeros(n)
    samples = 0

    for step in range(cfg.horizon):
        # server: breakage, then upload to the currently served peer
        if rng.random() < cfg.breakage_prob:
            served = int(rng.integers(m))
        bufs[served] |= 1

        # contact phase: Poisson counts, global random permutation
        counts = rng.poisson(lam)
        counts[served] = 0
        contacts = np.repeat(np.arange(m), counts)
        rng.shuffle(contacts)
        picks = rng.random(len(contacts))
        contact_list = contacts.tolist()
        pick_list = picks.tolist()
        for j in range(len(contact_list)):
            v = contact_list[j]
            nb = flat_list[offset_list[v] + int(pick_list[j] * degree_list[v])]
            d = ~bufs[v] & bufs[nb] & dl_mask
            if d:
                if is_ldf[v]:
                    bufs[v] |= d & -d
                else:
                    bufs[v] |= 1 << (d.bit_length() - 1)

        if cfg.check_invariants:
            # only the served peer can hold the server slot after contacts
            holders = [v for v in range(m) if bufs[v] & 1]
            if cfg.shifting == DETERMINISTIC and holders != [served]:
                raise AssertionError(
                    f"step {step}: server slot held by {holders}, "
                    f"served={served}")

        # sample availability before the shift
        if step >= cfg.burn_in:
            arr = np.array(bufs, dtype=np.uint64)
            bits = np.unpackbits(arr.view(np.uint8).reshape(m, 8), axis=1,
                                 bitorder="little")[:, :n]
            per_class = group @ bits
            global_row = class_shares @ per_class
            sum_p += per_class
            sum_p2 += per_class ** 2
            sum_g += global_row
            sum_g2 += global_row ** 2
            samples += 1

        # shift phase
        if cfg.shifting == DETERMINISTIC:
            for v in range(m):
                bufs[v] = (bufs[v] << 1) & full_mask
        else:
            shifts = rng.poisson(1.0, size=m).tolist()
            for v in range(m):
                s = shifts[v]
                if s:
                    bufs[v] = (bufs[v] << s) & full_mask if s < n else 0

    if samples == 0:
        raise RuntimeError("no samples collected; horizon too short")

    prob = sum_p / samples
    var = np.maximum(sum_p2 / samples - prob ** 2, 0.0)
    se = np.sqrt(var / samples)

    prob_global = sum_g / samples
    var_global = np.maximum(sum_g2 / samples - prob_global ** 2, 0.0)
    se_global = np.sqrt(var_global / samples)

    sigma = cfg.contact_scale
    k_max = max(class_degrees)
    scale = n * k_max * sigma if sigma > 0 else 1.0
    latency = {k: float(k * sigma * prob[c].sum())
               for c, k in enumerate(class_degrees)}
    mean_degree = float(np.mean(degree_list))
    latency_global = mean_degree * sigma * float(prob_global.sum())

    strategy_of_degree = {}
    for v, k in enumerate(degree_list):
        strategy_of_degree[k] = strategies[v]

    return SimMetrics(
        degrees=tuple(class_degrees),
        strategies=tuple(strategy_of_degree[k] for k in class_degrees),
        class_counts=tuple(int(c) for c in class_counts),
        buffer_prob=prob,
        buffer_prob_se=se,
        buffer_prob_global=prob_global,
        buffer_prob_global_se=se_global,
        continuity={k: float(prob[c, n - 1]) for c, k in enumerate(class_degrees)},
        continuity_global=float(prob_global[n - 1]),
        startup_latency=latency,
        startup_latency_normalized={k: v / scale for k, v in latency.items()},
        startup_latency_global=latency_global,
        startup_latency_global_normalized=latency_global / scale,
        samples=samples,
        seed=cfg.seed,
        shifting=cfg.shifting,
        strategy_rule=cfg.strategy_rule.kind,
    )
