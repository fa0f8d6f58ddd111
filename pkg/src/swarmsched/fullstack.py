"""Protocol-level discrete-event simulation of the streaming system.

Models the full pipeline around the scheduling strategies: a tracker-based
join procedure, a bandwidth-constrained mesh whose connection counts derive
from per-class up/download capacities, per-peer request scheduling over a
sliding window, message latencies, chunk transfers that occupy connection
slots, and a playback clock that records deadline misses.

The transfer model: every chunk is video_bitrate/chunk_rate bits; an active
transfer holds one upload slot at the sender and one download slot at the
receiver and proceeds at the smaller of the two per-slot bandwidth shares
(0.9 * bandwidth / slot cap).  Requests and denials travel with a fixed
one-way message latency.
"""

from __future__ import annotations

import heapq
import io
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mean_field import EDF, LDF

SOURCE_ID = 0

JOIN = "join"
TRACKER_RETRY = "tracker_retry"
CONNECT_REQ = "connect_req"
CONNECT_OK = "connect_ok"
CONNECT_DENIED = "connect_denied"
CONNECT_CLOSED = "connect_closed"
CHUNK_REQ = "chunk_req"
CHUNK_MISS = "chunk_miss"
TRANSFER_DONE = "transfer_done"
SCHED_TICK = "sched_tick"
PLAYBACK_TICK = "playback_tick"
MEASURE = "measure"

PURE_LDF = "pure_ldf"
PURE_EDF = "pure_edf"
MIXED = "mixed"


@dataclass(frozen=True)
class PeerClass:
    name: str
    count: int
    upload_mbit: float
    download_mbit: float

    def __post_init__(self):
        if self.upload_mbit <= 0 or self.download_mbit <= 0:
            raise ValueError("bandwidths must be positive")
        if self.count < 0:
            raise ValueError("counts must be >= 0")


def default_peer_classes() -> list[PeerClass]:
    """Broadband access mix: half low, a third medium, a fifth high capacity."""
    return [
        PeerClass("Low", 50, 5.0, 26.0),
        PeerClass("Medium", 30, 4.5, 60.0),
        PeerClass("High", 20, 56.0, 134.0),
    ]


@dataclass
class FullStackConfig:
    classes: list[PeerClass] = field(default_factory=default_peer_classes)
    video_bitrate_kbit: float = 1500.0
    chunk_rate: float = 8.0
    buffer_len_s: float = 4.0
    t_base: float = 1.0
    req_win: int = 20
    tracker_list_size: int = 30
    max_parallel_connect: int = 10
    blacklist_s: float = 60.0
    strong_replace_prob: float = 1.0 / 16.0
    random_replace_prob: float = 1.0 / 64.0
    source_upload_mbit: float = 12.5
    strategy: str = MIXED
    ldf_peer_count: int = 20
    arrival_rate: float = 2.0
    measure_interval_s: float = 60.0
    stabilization_s: float = 120.0
    sim_duration_s: float = 600.0
    message_latency_s: float = 0.05
    tracker_retry_s: float = 5.0
    seed: int = 0

    def __post_init__(self):
        chunks = self.buffer_len_s * self.chunk_rate
        if abs(chunks - round(chunks)) > 1e-9:
            raise ValueError("buffer_len_s * chunk_rate must be an integer")
        if self.req_win > round(chunks):
            raise ValueError("request window cannot exceed the buffer")
        if self.strategy not in (PURE_LDF, PURE_EDF, MIXED):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.ldf_peer_count < 0:
            raise ValueError("ldf_peer_count must be >= 0")

    @property
    def buffer_chunks(self) -> int:
        return round(self.buffer_len_s * self.chunk_rate)

    @property
    def chunk_bits(self) -> float:
        return self.video_bitrate_kbit * 1000.0 / self.chunk_rate

    def slot_cap(self, bandwidth_mbit: float) -> int:
        return math.floor(0.9 * bandwidth_mbit * 1e6
                          / (self.video_bitrate_kbit * 1000.0))


class Connection:
    """Established sender -> receiver link occupying one slot on each side."""

    __slots__ = ("sender", "receiver", "bandwidth", "queue", "active", "closed")

    def __init__(self, sender: "PeerNode", receiver: "PeerNode", bandwidth: float):
        self.sender = sender
        self.receiver = receiver
        self.bandwidth = bandwidth
        self.queue: deque[int] = deque()
        self.active: int | None = None
        self.closed = False


class PeerNode:
    """Runtime peer state: class caps, buffer window, connections, blacklist."""

    __slots__ = ("pid", "cls", "strategy", "in_cap", "out_cap", "is_strong",
                 "chunks", "pending", "in_conns", "out_conns", "blacklist",
                 "candidates", "outstanding", "playback_pos", "playback_started",
                 "play_start_time", "joined", "hits", "misses", "requests_sent",
                 "source_pos_at_join")

    def __init__(self, pid: int, cls: PeerClass, strategy: str, in_cap: int,
                 out_cap: int):
        self.pid = pid
        self.cls = cls
        self.strategy = strategy
        self.in_cap = in_cap
        self.out_cap = out_cap
        self.is_strong = cls.name == "High"
        self.chunks: set[int] = set()
        self.pending: set[int] = set()
        self.in_conns: list[Connection] = []
        self.out_conns: list[Connection] = []
        self.blacklist: dict[int, float] = {}
        self.candidates: list[int] = []
        self.outstanding: set[int] = set()
        self.playback_pos = 0
        self.playback_started = False
        self.play_start_time = 0.0
        self.joined = False
        self.hits = 0
        self.misses = 0
        self.requests_sent = 0
        self.source_pos_at_join = 0


@dataclass
class FullStackMetrics:
    continuity: dict[str, float]
    continuity_global: float
    requests_per_second: dict[str, float]
    requests_per_second_global: float
    buffer_profile: np.ndarray        # index buffer_chunks-1 = next deadline
    mean_in_degree: dict[str, float]
    counters: dict[str, int]
    measured_seconds: float
    seed: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("class,continuity,requests_per_s,mean_in_degree\n")
        for name in sorted(self.continuity):
            buf.write(f"{name},{self.continuity[name]:.17g},"
                      f"{self.requests_per_second[name]:.17g},"
                      f"{self.mean_in_degree[name]:.17g}\n")
        buf.write(f"__global__,{self.continuity_global:.17g},"
                  f"{self.requests_per_second_global:.17g},\n")
        return buf.getvalue()


class FullStackSim:
    """Single deterministic event-driven run."""

    def __init__(self, cfg: FullStackConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self.tracker_registry: list[int] = []
        self.counters = {
            "requests_sent": 0, "requests_received": 0,
            "chunks_delivered": 0, "chunks_denied": 0,
            "connects_accepted": 0, "connects_denied": 0,
            "connects_replaced": 0,
        }
        self.peers: dict[int, PeerNode] = {}
        bitrate = cfg.video_bitrate_kbit * 1000.0

        source_class = PeerClass("Source", 1, cfg.source_upload_mbit,
                                 cfg.source_upload_mbit)
        source = PeerNode(SOURCE_ID, source_class, LDF,
                          in_cap=0, out_cap=cfg.slot_cap(cfg.source_upload_mbit))
        source.joined = True
        self.peers[SOURCE_ID] = source
        self.source = source
        self.tracker_registry.append(SOURCE_ID)

        pid = SOURCE_ID + 1
        strong_budget = cfg.ldf_peer_count
        join_order = []
        for cls in cfg.classes:
            for _ in range(cls.count):
                if cfg.strategy == PURE_LDF:
                    strategy = LDF
                elif cfg.strategy == PURE_EDF:
                    strategy = EDF
                else:
                    if cls.name == "High" and strong_budget > 0:
                        strategy = LDF
                        strong_budget -= 1
                    else:
                        strategy = EDF
                peer = PeerNode(pid, cls, strategy,
                                in_cap=cfg.slot_cap(cls.download_mbit),
                                out_cap=cfg.slot_cap(cls.upload_mbit))
                self.peers[pid] = peer
                join_order.append(pid)
                pid += 1
        self.rng.shuffle(join_order)
        for i, peer_id in enumerate(join_order):
            self.schedule(i / cfg.arrival_rate, JOIN, peer_id)
        self.last_join_time = (len(join_order) - 1) / cfg.arrival_rate
        self.measure_start = self.last_join_time + cfg.stabilization_s
        self.per_slot_up = {}
        self.per_slot_down = {}
        for p in self.peers.values():
            up = 0.9 * p.cls.upload_mbit * 1e6
            down = 0.9 * p.cls.download_mbit * 1e6
            self.per_slot_up[p.pid] = up / p.out_cap if p.out_cap else 0.0
            self.per_slot_down[p.pid] = down / p.in_cap if p.in_cap else 0.0
        self.bitrate = bitrate
        self.profile_sum = np.zeros(cfg.buffer_chunks)
        self.profile_samples = 0
        self.in_degree_sum: dict[str, float] = {}
        self.in_degree_samples = 0
        t = self.measure_start
        while t <= cfg.sim_duration_s:
            self.schedule(t, MEASURE, None)
            t += cfg.measure_interval_s

    # -- event plumbing ----------------------------------------------------

    def schedule(self, when: float, kind: str, payload) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (when, self._seq, kind, payload))

    def source_position(self, t: float) -> int:
        return math.floor(self.cfg.chunk_rate * t)

    def holds(self, node: PeerNode, chunk: int) -> bool:
        if node.pid == SOURCE_ID:
            return chunk <= self.source_position(self.now)
        return chunk in node.chunks

    def in_measurement(self) -> bool:
        return self.now >= self.measure_start

    # -- tracker and mesh establishment -------------------------------------

    def tracker_query(self, peer: PeerNode) -> list[int]:
        """Uniform sample of up to tracker_list_size previously joined nodes."""
        pool = [pid for pid in self.tracker_registry if pid != peer.pid]
        if not pool:
            return []
        size = min(self.cfg.tracker_list_size, len(pool))
        picked = self.rng.choice(len(pool), size=size, replace=False)
        return [pool[i] for i in sorted(picked.tolist())]

    def handle_join(self, peer: PeerNode) -> None:
        peer.joined = True
        peer.source_pos_at_join = self.source_position(self.now)
        peer.playback_pos = peer.source_pos_at_join
        peer.play_start_time = self.now + self.cfg.buffer_len_s
        peer.candidates = self.tracker_query(peer)
        self.tracker_registry.append(peer.pid)
        self.schedule(peer.play_start_time, PLAYBACK_TICK, peer.pid)
        self.schedule(self.now + self.cfg.t_base, SCHED_TICK, peer.pid)
        self.try_connect(peer)

    def try_connect(self, peer: PeerNode) -> None:
        """Open parallel connection requests toward in-capacity, respecting
        blacklists and the parallel-request cap; re-query the tracker once
        the candidate list runs dry."""
        while (len(peer.outstanding) < self.cfg.max_parallel_connect
               and len(peer.in_conns) + len(peer.outstanding) < peer.in_cap
               and peer.candidates):
            cand = peer.candidates.pop(0)
            if cand in peer.outstanding:
                continue
            if peer.blacklist.get(cand, -1.0) > self.now:
                continue
            if any(c.sender.pid == cand for c in peer.in_conns):
                continue
            peer.outstanding.add(cand)
            self.schedule(self.now + self.cfg.message_latency_s, CONNECT_REQ,
                          (cand, peer.pid))
        if (not peer.candidates and not peer.outstanding
                and len(peer.in_conns) < peer.in_cap):
            self.schedule(self.now + self.cfg.tracker_retry_s, TRACKER_RETRY,
                          peer.pid)

    def handle_connect_req(self, target: PeerNode, requester_id: int) -> None:
        """Acceptor logic: free slot, else probabilistic replacement."""
        requester = self.peers[requester_id]
        accept = False
        if len(target.out_conns) < target.out_cap:
            accept = True
        elif requester.is_strong:
            if self.rng.random() < self.cfg.strong_replace_prob:
                weaker = [c for c in target.out_conns
                          if not c.receiver.is_strong]
                if weaker:
                    victim = weaker[int(self.rng.integers(len(weaker)))]
                    self.close_connection(victim, notify=True)
                    self.counters["connects_replaced"] += 1
                    accept = True
        else:
            if self.rng.random() < self.cfg.random_replace_prob:
                if target.out_conns:
                    victim = target.out_conns[
                        int(self.rng.integers(len(target.out_conns)))]
                    self.close_connection(victim, notify=True)
                    self.counters["connects_replaced"] += 1
                    accept = True
        if accept and len(target.out_conns) < target.out_cap:
            bandwidth = min(self.per_slot_up[target.pid],
                            self.per_slot_down[requester.pid])
            conn = Connection(target, requester, bandwidth)
            target.out_conns.append(conn)
            self.counters["connects_accepted"] += 1
            self.schedule(self.now + self.cfg.message_latency_s, CONNECT_OK,
                          (requester.pid, conn))
        else:
            self.counters["connects_denied"] += 1
            self.schedule(self.now + self.cfg.message_latency_s,
                          CONNECT_DENIED, (requester.pid, target.pid))

    def handle_connect_ok(self, peer: PeerNode, conn: Connection) -> None:
        peer.outstanding.discard(conn.sender.pid)
        if conn.closed:
            self.try_connect(peer)
            return
        if len(peer.in_conns) >= peer.in_cap:
            self.close_connection(conn, notify=False)
            self.try_connect(peer)
            return
        peer.in_conns.append(conn)
        assert len(peer.in_conns) <= peer.in_cap
        assert len(conn.sender.out_conns) <= conn.sender.out_cap
        self.try_connect(peer)

    def handle_connect_denied(self, peer: PeerNode, target_id: int) -> None:
        peer.outstanding.discard(target_id)
        peer.blacklist[target_id] = self.now + self.cfg.blacklist_s
        self.try_connect(peer)

    def close_connection(self, conn: Connection, notify: bool) -> None:
        """Tear down a link; queued chunks stop being pending at the receiver."""
        if conn.closed:
            return
        conn.closed = True
        if conn in conn.sender.out_conns:
            conn.sender.out_conns.remove(conn)
        stale = list(conn.queue)
        conn.queue.clear()
        if notify:
            self.schedule(self.now + self.cfg.message_latency_s,
                          CONNECT_CLOSED, (conn.receiver.pid, conn, stale))
        else:
            conn.receiver.pending.difference_update(stale)

    def handle_connect_closed(self, peer: PeerNode, conn: Connection,
                              stale: list[int]) -> None:
        if conn in peer.in_conns:
            peer.in_conns.remove(conn)
        peer.pending.difference_update(stale)
        self.try_connect(peer)

    # -- scheduling and transfer ---------------------------------------------

    def request_window(self, peer: PeerNode) -> range:
        b = self.cfg.buffer_chunks
        w = self.cfg.req_win
        if peer.strategy == EDF:
            return range(peer.playback_pos, peer.playback_pos + w)
        return range(peer.playback_pos + b - w, peer.playback_pos + b)

    def handle_sched_tick(self, peer: PeerNode) -> None:
        if peer.in_conns:
            window = self.request_window(peer)
            if peer.strategy == LDF:
                window = reversed(window)
            wanted = [c for c in window
                      if c not in peer.chunks and c not in peer.pending]
            if wanted:
                batches: dict[int, list[int]] = {}
                conns = peer.in_conns
                slots = self.rng.integers(len(conns), size=len(wanted))
                for chunk, slot in zip(wanted, slots.tolist()):
                    peer.pending.add(chunk)
                    batches.setdefault(slot, []).append(chunk)
                for slot, chunk_list in sorted(batches.items()):
                    self.schedule(self.now + self.cfg.message_latency_s,
                                  CHUNK_REQ, (conns[slot], chunk_list))
                if self.in_measurement():
                    peer.requests_sent += len(wanted)
                self.counters["requests_sent"] += len(wanted)
            delay = self.cfg.t_base / len(peer.in_conns)
        else:
            delay = self.cfg.t_base
        self.schedule(self.now + delay, SCHED_TICK, peer.pid)

    def handle_chunk_req(self, conn: Connection, chunk_list: list[int]) -> None:
        if conn.closed:
            self.schedule(self.now + self.cfg.message_latency_s, CHUNK_MISS,
                          (conn.receiver.pid, chunk_list))
            return
        self.counters["requests_received"] += len(chunk_list)
        sender = conn.sender
        missing = [c for c in chunk_list if not self.holds(sender, c)]
        have = [c for c in chunk_list if self.holds(sender, c)]
        if missing:
            self.counters["chunks_denied"] += len(missing)
            self.schedule(self.now + self.cfg.message_latency_s, CHUNK_MISS,
                          (conn.receiver.pid, missing))
        if have:
            idle = conn.active is None and not conn.queue
            conn.queue.extend(have)
            if idle:
                self.start_transfer(conn)

    def start_transfer(self, conn: Connection) -> None:
        if conn.closed or conn.active is not None or not conn.queue:
            return
        conn.active = conn.queue.popleft()
        duration = self.cfg.chunk_bits / conn.bandwidth
        self.schedule(self.now + duration, TRANSFER_DONE, conn)

    def handle_transfer_done(self, conn: Connection) -> None:
        chunk = conn.active
        conn.active = None
        receiver = conn.receiver
        receiver.pending.discard(chunk)
        if not conn.closed:
            window_top = receiver.playback_pos + self.cfg.buffer_chunks
            if receiver.playback_pos <= chunk < window_top:
                receiver.chunks.add(chunk)
            self.counters["chunks_delivered"] += 1
            self.start_transfer(conn)

    def handle_chunk_miss(self, peer: PeerNode, chunk_list: list[int]) -> None:
        peer.pending.difference_update(chunk_list)

    # -- playback ------------------------------------------------------------

    def handle_playback_tick(self, peer: PeerNode) -> None:
        due = peer.playback_pos
        if self.in_measurement():
            if due in peer.chunks:
                peer.hits += 1
            else:
                peer.misses += 1
        peer.chunks.discard(due)
        peer.pending.discard(due)
        peer.playback_pos = due + 1
        self.schedule(self.now + 1.0 / self.cfg.chunk_rate, PLAYBACK_TICK,
                      peer.pid)

    # -- measurement ----------------------------------------------------------

    def handle_measure(self) -> None:
        b = self.cfg.buffer_chunks
        joined = [p for p in self.peers.values()
                  if p.pid != SOURCE_ID and p.joined]
        if not joined:
            return
        profile = np.zeros(b)
        for p in joined:
            pos = p.playback_pos
            for c in p.chunks:
                offset = c - pos
                if 0 <= offset < b:
                    profile[b - 1 - offset] += 1.0
        self.profile_sum += profile / len(joined)
        self.profile_samples += 1
        for p in joined:
            name = p.cls.name
            self.in_degree_sum[name] = (self.in_degree_sum.get(name, 0.0)
                                        + len(p.in_conns))
        self.in_degree_samples += 1

    # -- main loop -----------------------------------------------------------

    def run(self) -> FullStackMetrics:
        cfg = self.cfg
        while self._heap:
            when, _, kind, payload = heapq.heappop(self._heap)
            if when > cfg.sim_duration_s:
                break
            self.now = when
            if kind == JOIN:
                self.handle_join(self.peers[payload])
            elif kind == SCHED_TICK:
                self.handle_sched_tick(self.peers[payload])
            elif kind == PLAYBACK_TICK:
                self.handle_playback_tick(self.peers[payload])
            elif kind == CHUNK_REQ:
                self.handle_chunk_req(*payload)
            elif kind == TRANSFER_DONE:
                self.handle_transfer_done(payload)
            elif kind == CHUNK_MISS:
                self.handle_chunk_miss(self.peers[payload[0]], payload[1])
            elif kind == CONNECT_REQ:
                self.handle_connect_req(self.peers[payload[0]], payload[1])
            elif kind == CONNECT_OK:
                self.handle_connect_ok(self.peers[payload[0]], payload[1])
            elif kind == CONNECT_DENIED:
                self.handle_connect_denied(self.peers[payload[0]], payload[1])
            elif kind == CONNECT_CLOSED:
                self.handle_connect_closed(self.peers[payload[0]], payload[1],
                                           payload[2])
            elif kind == TRACKER_RETRY:
                peer = self.peers[payload]
                if len(peer.in_conns) < peer.in_cap and not peer.outstanding:
                    peer.candidates = self.tracker_query(peer)
                    self.try_connect(peer)
            elif kind == MEASURE:
                self.handle_measure()
        return self.collect_metrics()

    def collect_metrics(self) -> FullStackMetrics:
        cfg = self.cfg
        measured = max(cfg.sim_duration_s - self.measure_start, 0.0)
        by_class: dict[str, list[PeerNode]] = {}
        for p in self.peers.values():
            if p.pid == SOURCE_ID:
                continue
            by_class.setdefault(p.cls.name, []).append(p)
        continuity = {}
        req_rate = {}
        for name, members in sorted(by_class.items()):
            ratios = [p.hits / (p.hits + p.misses)
                      for p in members if p.hits + p.misses > 0]
            continuity[name] = float(np.mean(ratios)) if ratios else 0.0
            req_rate[name] = (sum(p.requests_sent for p in members)
                              / max(measured, 1e-9) / max(len(members), 1))
        all_ratios = [p.hits / (p.hits + p.misses)
                      for ps in by_class.values() for p in ps
                      if p.hits + p.misses > 0]
        total_peers = sum(len(ps) for ps in by_class.values())
        total_requests = sum(p.requests_sent
                             for ps in by_class.values() for p in ps)
        mean_in = {}
        for name in by_class:
            if self.in_degree_samples:
                mean_in[name] = (self.in_degree_sum.get(name, 0.0)
                                 / self.in_degree_samples
                                 / len(by_class[name]))
            else:
                mean_in[name] = 0.0
        profile = (self.profile_sum / self.profile_samples
                   if self.profile_samples else np.zeros(cfg.buffer_chunks))
        return FullStackMetrics(
            continuity=continuity,
            continuity_global=float(np.mean(all_ratios)) if all_ratios else 0.0,
            requests_per_second=req_rate,
            requests_per_second_global=(total_requests / max(measured, 1e-9)
                                        / max(total_peers, 1)),
            buffer_profile=profile,
            mean_in_degree=mean_in,
            counters=dict(self.counters),
            measured_seconds=measured,
            seed=cfg.seed,
        )


def run_fullstack(cfg: FullStackConfig) -> FullStackMetrics:
    """Build and run one deterministic full-stack simulation."""
    return FullStackSim(cfg).run()
