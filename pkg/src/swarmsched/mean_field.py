"""Stationary mean-field buffer probabilities for degree-heterogeneous swarms.

A peer of degree k holding buffer index i obeys, at stationarity,

    p_k(i+1) = p_k(i) + k * sigma * theta_i * (1 - p_k(i)) * s_k(i),
    p_k(1)   = 1 / M,

where theta_i = sum_l q(l) p_l(i) couples the degree classes through the
size-biased degree law q, and s_k is the chunk-selection function of the
strategy played by that class:

    LDF (rarest first):            s_k(i) = 1 - p_k(i)
    EDF (closest deadline first):  s_k(i) = 1 - p_k(1) - p_k(n) + p_k(i+1)

The EDF form makes the step implicit in p_k(i+1); it is solved in closed form
per step, and the solver aborts if the step's linear coefficient crosses zero
(the mean-field equations have no monotone solution there).

`integrate_full_rate_equation` provides an independent small-buffer oracle:
it integrates the full 2^n-dimensional buffer-configuration distribution per
degree class to stationarity and marginalizes, without ever writing down the
per-index recurrence.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

LDF = "LDF"
EDF = "EDF"

_EDF_DENOM_FLOOR = 1e-12


class MeanFieldBreakdownError(RuntimeError):
    """EDF step coefficient 1 - k*sigma*theta*(1-p) dropped to <= 0.

    Signals that the mean-field approximation has no monotone fixed point for
    the given contact scale and degree; carries the offending (degree, index).
    """

    def __init__(self, degree: int, index: int, denominator: float):
        super().__init__(
            f"EDF step is singular at degree {degree}, buffer index {index} "
            f"(coefficient {denominator:.3e}); the mean-field equations have "
            "no monotone solution for this contact scale")
        self.degree = degree
        self.index = index
        self.denominator = denominator


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance."""


@dataclass(frozen=True)
class DegreeClass:
    degree: int
    share: float
    strategy: str

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not 0.0 <= self.share <= 1.0:
            raise ValueError("population share must lie in [0, 1]")
        if self.strategy not in (LDF, EDF):
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass
class MeanFieldConfig:
    """Buffer length, system size, contact scale and per-degree strategies."""

    buffer_len: int
    peer_count: int
    contact_scale: float
    degree_classes: list[DegreeClass]

    def __post_init__(self):
        self.degree_classes = [
            c if isinstance(c, DegreeClass) else DegreeClass(*c)
            for c in self.degree_classes
        ]
        if self.buffer_len < 2:
            raise ValueError("buffer_len must be >= 2")
        if self.peer_count < 1:
            raise ValueError("peer_count must be >= 1")
        # zero is allowed: the recurrence degenerates to the server-only
        # table p == 1/M, matching the simulator with contacts disabled
        if self.contact_scale < 0.0:
            raise ValueError("contact_scale must be non-negative")
        degrees = [c.degree for c in self.degree_classes]
        if len(set(degrees)) != len(degrees) or not degrees:
            raise ValueError("degree classes must be non-empty with distinct degrees")
        if abs(sum(c.share for c in self.degree_classes) - 1.0) > 1e-12:
            raise ValueError("population shares must sum to 1 within 1e-12")

    @property
    def degrees(self) -> np.ndarray:
        return np.array([c.degree for c in self.degree_classes], dtype=np.int64)

    @property
    def shares(self) -> np.ndarray:
        return np.array([c.share for c in self.degree_classes])

    @property
    def strategies(self) -> list[str]:
        return [c.strategy for c in self.degree_classes]

    def size_biased_shares(self) -> np.ndarray:
        """q(k) = k*pi(k) / sum_j j*pi(j) over the configured classes."""
        w = self.degrees * self.shares
        return w / w.sum()

    @property
    def boundary(self) -> float:
        return 1.0 / self.peer_count


@dataclass
class BufferTable:
    """Converged buffer probabilities: per-degree rows plus coupling vectors.

    p[c, i-1] is the probability that a peer in degree class c holds buffer
    index i; theta and p_global are the size-biased and share-weighted mixes.
    """

    degrees: tuple[int, ...]
    p: np.ndarray          # shape (num_classes, buffer_len)
    theta: np.ndarray      # shape (buffer_len,)
    p_global: np.ndarray   # shape (buffer_len,)

    def row(self, degree: int) -> np.ndarray:
        return self.p[self.degrees.index(degree)]

    def continuity(self, degree: int | None = None) -> float:
        """Probability of holding the playback-position chunk."""
        if degree is None:
            return float(self.p_global[-1])
        return float(self.row(degree)[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("degree,buffer_index,p,theta,p_global\n")
        for c, k in enumerate(self.degrees):
            for i in range(self.p.shape[1]):
                buf.write(f"{k},{i + 1},{self.p[c, i]:.17g},"
                          f"{self.theta[i]:.17g},{self.p_global[i]:.17g}\n")
        return buf.getvalue()


def chunk_selection_ldf(p_k: np.ndarray, i: int) -> float:
    """Closed-form rarest-first selection probability at buffer index i (1-based)."""
    n = len(p_k)
    if not 1 <= i <= n:
        raise IndexError(f"buffer index {i} out of range 1..{n}")
    return float(1.0 - p_k[i - 1])


def chunk_selection_edf(p_k: np.ndarray, i: int, n: int) -> float:
    """Closed-form greedy selection probability at buffer index i (1-based).

    Returns the raw value 1 - p_k(1) - p_k(n) + p_k(i+1); callers clamp to
    [0, 1] at reporting time only.
    """
    if len(p_k) != n:
        raise ValueError("p_k must have length n")
    if not 1 <= i <= n - 1:
        raise IndexError(f"buffer index {i} out of range 1..{n - 1}")
    return float(1.0 - p_k[0] - p_k[n - 1] + p_k[i])


def _sweep(cfg: MeanFieldConfig, p: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """One raw re-application of the recurrence at fixed theta and p_k(n)."""
    n = cfg.buffer_len
    k_sigma = cfg.degrees * cfg.contact_scale
    is_ldf = np.array([s == LDF for s in cfg.strategies])
    is_edf = ~is_ldf
    tail = 1.0 - cfg.boundary - p[:, n - 1]
    new = np.empty_like(p)
    cur = np.full(len(k_sigma), cfg.boundary)
    new[:, 0] = cur
    for i in range(1, n):
        drift = k_sigma * theta[i - 1] * (1.0 - cur)
        nxt = np.empty_like(cur)
        nxt[is_ldf] = cur[is_ldf] + drift[is_ldf] * (1.0 - cur[is_ldf])
        if is_edf.any():
            denom = 1.0 - drift[is_edf]
            if np.any(denom <= _EDF_DENOM_FLOOR):
                c = np.nonzero(is_edf)[0][np.argmin(denom)]
                raise MeanFieldBreakdownError(
                    int(cfg.degrees[c]), i, float(denom.min()))
            nxt[is_edf] = (cur[is_edf] + drift[is_edf] * tail[is_edf]) / denom
        # cap the raw carrier: divergent configs would otherwise overflow
        # within a single sweep; any value this large already fails the
        # convergence test by miles
        cur = np.minimum(nxt, 1e6)
        new[:, i] = cur
    return new


def solve_fixed_point(cfg: MeanFieldConfig, damping: float = 0.5,
                      tol: float = 1e-10, max_iter: int = 100_000,
                      stall_window: int = 5_000) -> BufferTable:
    """Damped fixed-point iteration for the stationary buffer probabilities.

    Each iteration recomputes theta and the EDF tail term p_k(n) from the
    current table, re-applies the recurrence for every degree class, and damps
    the update (entries clipped back to [0, 1]).  Converged when a raw
    re-application moves no entry by more than `tol`.  Raises
    MeanFieldBreakdownError if any EDF step turns singular, and
    ConvergenceError past `max_iter` or once the residual has stopped
    improving for `stall_window` iterations (the recurrence is pinned against
    the [0, 1] clip, so no interior fixed point exists).
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    q = cfg.size_biased_shares()
    p = np.full((len(cfg.degree_classes), cfg.buffer_len), cfg.boundary)
    best = np.inf
    since_best = 0
    for iteration in range(max_iter):
        theta = q @ p
        new = _sweep(cfg, p, theta)
        residual = float(np.max(np.abs(new - p)))
        if residual <= tol:
            return BufferTable(tuple(int(k) for k in cfg.degrees), p,
                               theta, cfg.shares @ p)
        if residual < best * (1.0 - 1e-12):
            best = residual
            since_best = 0
        else:
            since_best += 1
            if since_best >= stall_window:
                raise ConvergenceError(
                    f"residual stalled at {best:.3e} after {iteration + 1} "
                    f"iterations (tol {tol:g}); the recurrence leaves [0, 1] "
                    "for this contact scale and has no interior fixed point")
        p = np.clip(p + damping * (new - p), 0.0, 1.0)
    raise ConvergenceError(
        f"no fixed point within {max_iter} iterations at tol={tol:g} "
        f"(best residual {best:.3e})")


@dataclass
class StartupLatency:
    """Expected pre-playback waiting time, raw and normalised to (0, 1)."""

    per_degree: dict[int, float]
    per_degree_normalized: dict[int, float]
    global_value: float
    global_normalized: float
    normalization: str


def startup_latency(cfg: MeanFieldConfig, table: BufferTable) -> StartupLatency:
    """k*sigma*sum_i p_k(i) per degree; E[k]*sigma*sum_i p(i) globally.

    The normalised variant divides by n * k_max * sigma so that a full buffer
    at the largest degree maps to 1; the choice is recorded in the result.
    """
    sigma = cfg.contact_scale
    n = cfg.buffer_len
    k_max = int(cfg.degrees.max())
    scale = n * k_max * sigma
    per = {int(k): float(k * sigma * table.p[c].sum())
           for c, k in enumerate(cfg.degrees)}
    mean_degree = float(cfg.shares @ cfg.degrees)
    glob = mean_degree * sigma * float(table.p_global.sum())
    return StartupLatency(
        per_degree=per,
        per_degree_normalized={k: v / scale for k, v in per.items()},
        global_value=glob,
        global_normalized=glob / scale,
        normalization=f"raw / (n * k_max * sigma) = raw / {scale:g}",
    )


# ---------------------------------------------------------------------------
# Full buffer-configuration oracle (small n)
# ---------------------------------------------------------------------------

def _shift_targets(num_states: int, mask: int) -> np.ndarray:
    states = np.arange(num_states, dtype=np.int64)
    return (states << 1) & mask


def integrate_full_rate_equation(cfg: MeanFieldConfig, horizon: float = 2000.0,
                                 dt: float = 0.05,
                                 stationary_tol: float = 1e-9) -> BufferTable:
    """Integrate the full per-configuration distribution to stationarity.

    Tracks one probability vector over all 2^(n+1) buffer bit-patterns per
    degree class (one leading slot carries the server-fed chunk through the
    shift; its successors are reported as indices 1..n).  Dynamics per class:

        dw_u/dt = -w_u + sum_{v: Sv=u} [ w_v + sum_i (inflow_i(v) - outflow_i(v)) ]

    with download rates k*sigma*s_k(i)*theta_i into empty slots and a server
    influx of rate 1/M into the leading slot.  Fourth-order fixed-step
    integration; stationarity when the max derivative norm drops below
    `stationary_tol`.  Raises ConvergenceError if the horizon is exhausted.
    """
    n = cfg.buffer_len
    if n > 8:
        raise ValueError("full-configuration oracle is limited to buffer_len <= 8")
    if len(cfg.degree_classes) > 2:
        raise ValueError("full-configuration oracle supports at most two degree classes")
    num_classes = len(cfg.degree_classes)
    slots = n + 1
    size = 1 << slots
    mask = size - 1
    q = cfg.size_biased_shares()
    sigma = cfg.contact_scale
    ks = cfg.degrees
    strategies = cfg.strategies

    shift_to = _shift_targets(size, mask)
    states = np.arange(size, dtype=np.int64)
    # bit_set[b, u] == 1 iff internal slot b+1 is occupied in state u
    bit_set = np.array([(states >> b) & 1 for b in range(slots)], dtype=np.float64)
    empty = [np.nonzero(bit_set[b] == 0)[0] for b in range(slots)]

    def derivative(w: np.ndarray) -> np.ndarray:
        # marginals per class and internal slot
        marg = w @ bit_set.T                      # (classes, slots)
        theta_slot = q @ marg                     # coupling per internal slot
        dw = np.empty_like(w)
        for c in range(num_classes):
            k_sigma = ks[c] * sigma
            flow = np.zeros(size)
            # server influx into the leading slot; source/target index sets
            # are duplicate-free, so plain fancy indexing accumulates exactly
            src = empty[0]
            lam = w[c, src] / cfg.peer_count
            flow[src] -= lam
            flow[src + 1] += lam
            # peer downloads into interior slots (the final slot's downloads
            # are shifted out immediately and cancel exactly)
            for b in range(1, slots - 1):
                if strategies[c] == LDF:
                    s = 1.0 - marg[c, b]
                else:
                    s = 1.0 - marg[c, 1] - marg[c, slots - 1] + marg[c, b + 1]
                rate = k_sigma * max(s, 0.0) * theta_slot[b]
                if rate == 0.0:
                    continue
                src = empty[b]
                lam = w[c, src] * rate
                flow[src] -= lam
                flow[src + (1 << b)] += lam
            bracket = w[c] + flow
            dw[c] = -w[c] + np.bincount(shift_to, weights=bracket, minlength=size)
        return dw

    w = np.zeros((num_classes, size))
    w[:, 0] = 1.0  # all buffers empty
    steps = int(round(horizon / dt))
    check_every = max(1, int(round(1.0 / dt)))
    stationary = False
    for step in range(steps):
        k1 = derivative(w)
        if step % check_every == 0 and np.max(np.abs(k1)) < stationary_tol:
            stationary = True
            break
        k2 = derivative(w + 0.5 * dt * k1)
        k3 = derivative(w + 0.5 * dt * k2)
        k4 = derivative(w + dt * k3)
        w = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not stationary and np.max(np.abs(derivative(w))) >= stationary_tol:
        raise ConvergenceError(
            f"horizon {horizon} exhausted before stationarity "
            f"(max derivative {np.max(np.abs(derivative(w))):.3e})")

    marg = w @ bit_set.T
    p = marg[:, 1:]  # internal slots 2..n+1 are reported indices 1..n
    theta = q @ p
    return BufferTable(tuple(int(k) for k in cfg.degrees), p, theta, cfg.shares @ p)
