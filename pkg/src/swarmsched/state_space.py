"""Bounds on the size of the lumped buffer-configuration state space.

Lumping the per-peer process into per-degree counts helps only when the
lumped space is smaller than the raw one (|Omega| = M * 2^(M(n-1))).  The
lumped count is bracketed through contingency tables: configurations with
given per-degree row sums R and per-pattern column sums C are nonnegative
integer matrices, whose number #(R, C) is sandwiched by the variational
bound

    chi(R, C) >= #(R, C) >= M^(-a0 (|R| + 2^n)) * chi(R, C),

where chi(R, C) = min F(x, y) over the open unit box with

    F(x, y) = prod_i x_i^(-R_i) * prod_j y_j^(-C_j) * prod_ij 1/(1 - x_i y_j).

Substituting x = exp(-a), y = exp(-b) turns ln F into the convex function

    sum_i R_i a_i + sum_j C_j b_j - sum_ij ln(1 - exp(-a_i - b_j))

on the positive orthant, minimised here by gradient descent with
backtracking.  All report arithmetic stays in natural-log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mean_field import ConvergenceError


@dataclass(frozen=True)
class ReductionInstance:
    """Peer count, buffer length, per-degree populations and the bound constant."""

    peer_count: int
    buffer_len: int
    row_sums: tuple[int, ...]
    a0: float = 1.0

    def __post_init__(self):
        if sum(self.row_sums) != self.peer_count:
            raise ValueError("row sums must add up to the peer count")
        if any(r < 1 for r in self.row_sums):
            raise ValueError("every degree class needs at least one peer")
        if self.a0 <= 0.0:
            raise ValueError("a0 must be positive")


def omega_log_size(M: int, n: int) -> float:
    """ln |Omega| = ln M + M(n-1) ln 2 for the raw matrix state space."""
    if M < 2 or n < 2:
        raise ValueError("need M >= 2 and n >= 2")
    return math.log(M) + M * (n - 1) * math.log(2.0)


def count_contingency_bruteforce(R, C, budget: int = 10_000_000) -> int:
    """Exact number of nonnegative integer matrices with row sums R and
    column sums C, by recursive enumeration over rows (memoised on the
    remaining column sums).  Raises ConvergenceError past `budget` explored
    nodes.
    """
    R = tuple(int(r) for r in R)
    C = tuple(int(c) for c in C)
    if sum(R) != sum(C):
        raise ValueError("row and column totals must agree")
    cache: dict[tuple[int, tuple[int, ...]], int] = {}
    nodes = 0

    def compositions(total: int, caps: tuple[int, ...]):
        if len(caps) == 1:
            if total <= caps[0]:
                yield (total,)
            return
        for first in range(min(total, caps[0]) + 1):
            for rest in compositions(total - first, caps[1:]):
                yield (first,) + rest

    def count(row: int, remaining: tuple[int, ...]) -> int:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise ConvergenceError("contingency enumeration budget exceeded")
        if row == len(R):
            return 1 if all(c == 0 for c in remaining) else 0
        key = (row, remaining)
        if key in cache:
            return cache[key]
        total = 0
        for comp in compositions(R[row], remaining):
            total += count(row + 1,
                           tuple(c - x for c, x in zip(remaining, comp)))
        cache[key] = total
        return total

    return count(0, C)


@dataclass
class ChiResult:
    """Minimiser of the variational bound, in log space."""

    log_chi: float
    a: np.ndarray          # substituted row variables (x = exp(-a))
    b: np.ndarray          # substituted column variables
    gradient_norm: float
    iterations: int
    dropped_rows: int
    dropped_cols: int


def chi_objective(R: np.ndarray, C: np.ndarray, a: np.ndarray,
                  b: np.ndarray) -> float:
    """ln F at substituted coordinates a, b > 0."""
    s = a[:, None] + b[None, :]
    return float(R @ a + C @ b - np.log1p(-np.exp(-s)).sum())


def chi_gradient(R: np.ndarray, C: np.ndarray, a: np.ndarray,
                 b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = a[:, None] + b[None, :]
    occ = 1.0 / np.expm1(s)
    return R - occ.sum(axis=1), C - occ.sum(axis=0)


def chi(R, C, tol: float = 1e-10, max_iter: int = 200_000) -> ChiResult:
    """ln chi(R, C): minimise the convex substituted objective by damped
    gradient descent with backtracking line search.

    Zero rows or columns contribute nothing at the infimum (their box
    variables drift to the boundary) and are dropped exactly up front.
    """
    R_full = np.asarray(R, dtype=float)
    C_full = np.asarray(C, dtype=float)
    if R_full.sum() != C_full.sum():
        raise ValueError("row and column totals must agree")
    R_act = R_full[R_full > 0]
    C_act = C_full[C_full > 0]
    dropped_rows = int((R_full == 0).sum())
    dropped_cols = int((C_full == 0).sum())
    if len(R_act) == 0:
        return ChiResult(0.0, np.empty(0), np.empty(0), 0.0, 0,
                         dropped_rows, dropped_cols)

    x = np.ones(len(R_act) + len(C_act))
    nr = len(R_act)

    def objective(v: np.ndarray) -> float:
        return chi_objective(R_act, C_act, v[:nr], v[nr:])

    def gradient(v: np.ndarray) -> np.ndarray:
        ga, gb = chi_gradient(R_act, C_act, v[:nr], v[nr:])
        return np.concatenate([ga, gb])

    def recenter(v: np.ndarray) -> np.ndarray:
        # the objective is invariant under (a - c, b + c); balancing the two
        # blocks keeps iterates away from the positivity boundary, which the
        # gradient alone never does (the shift direction is exactly flat)
        c = 0.5 * (v[:nr].min() - v[nr:].min())
        out = v.copy()
        out[:nr] -= c
        out[nr:] += c
        return out

    value = objective(x)
    grad = gradient(x)
    step = 1.0
    iteration = 0
    # phase 1: backtracking descent until function-value resolution runs out
    phase1_cap = min(max_iter, 500)
    while iteration < phase1_cap:
        gnorm = math.sqrt(float(grad @ grad))
        if gnorm <= tol:
            return ChiResult(value, x[:nr], x[nr:], gnorm, iteration,
                             dropped_rows, dropped_cols)
        step = min(step * 2.0, 1e6)
        stalled = False
        while True:
            nx = x - step * grad
            if (nx > 0).all():
                nv = objective(nx)
                if nv <= value - 0.5 * step * gnorm ** 2 * 1e-4:
                    break
            step *= 0.5
            if step < 1e-15:
                stalled = True
                break
        if stalled:
            break
        x, value = recenter(nx), nv
        grad = gradient(x)
        iteration += 1
    # phase 2: Newton polish.  The objective is flat along the gauge
    # direction (a + c, b - c), so backtracking descent bottoms out at the
    # function-value resolution well above tight gradient tolerances; Newton
    # steps on the analytic Hessian (ridge-stabilised, gauge component
    # projected out) close the remaining gap.
    gauge = np.concatenate([np.ones(nr), -np.ones(len(C_act))])
    gauge /= math.sqrt(float(gauge @ gauge))
    for _ in range(200):
        gnorm = math.sqrt(float(grad @ grad))
        if gnorm <= tol:
            break
        s = x[:nr, None] + x[None, nr:]
        w = np.exp(s) / np.expm1(s) ** 2
        dim = len(x)
        hess = np.zeros((dim, dim))
        hess[:nr, :nr] = np.diag(w.sum(axis=1))
        hess[nr:, nr:] = np.diag(w.sum(axis=0))
        hess[:nr, nr:] = w
        hess[nr:, :nr] = w.T
        hess[np.diag_indices(dim)] += 1e-12 * (1.0 + np.trace(hess) / dim)
        try:
            direction = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            break
        direction -= (direction @ gauge) * gauge
        scale = 1.0
        while scale > 1e-12:
            nx = x + scale * direction
            if (nx > 0).all():
                nx = recenter(nx)
                ngrad = gradient(nx)
                if float(ngrad @ ngrad) < gnorm ** 2:
                    x, grad = nx, ngrad
                    break
            scale *= 0.5
        else:
            break
        iteration += 1
    gnorm = math.sqrt(float(grad @ grad))
    if gnorm > tol:
        raise ConvergenceError(
            f"chi optimisation did not reach gradient norm {tol:g} "
            f"within {max_iter} iterations (reached {gnorm:.3e})")
    return ChiResult(objective(x), x[:nr], x[nr:], gnorm, iteration,
                     dropped_rows, dropped_cols)


def enumerate_column_sums(M: int, n: int):
    """All admissible column-sum vectors: over the 2^n buffer patterns, the
    ones starting with a filled first slot share a single unit of mass and
    the rest share M-1 units.  Patterns are indexed by their bitmask; slot 1
    is bit 0.
    """
    size = 1 << n
    ones = [u for u in range(size) if u & 1]
    zeros = [u for u in range(size) if not u & 1]

    def compositions(total: int, cells: int):
        if cells == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, cells - 1):
                yield (first,) + rest

    for carrier in ones:
        for comp in compositions(M - 1, len(zeros)):
            c = [0] * size
            c[carrier] = 1
            for cell, value in zip(zeros, comp):
                c[cell] = value
            yield tuple(c)


def column_count_log(M: int, n: int) -> float:
    """ln |C-set| = (n-1) ln 2 + ln binom(M-2+2^(n-1), M-1)."""
    return (n - 1) * math.log(2.0) + math.log(math.comb(M - 2 + (1 << (n - 1)),
                                                        M - 1))


@dataclass
class ReductionReport:
    instance: ReductionInstance
    log_omega: float
    log_column_count: float
    column_count: int
    log_chi_min: float
    log_chi_max: float
    log_upsilon_lower: float
    log_upsilon_upper: float
    necessary_holds: bool
    sufficient_holds: bool
    per_column_log_chi: list[float]

    def as_dict(self) -> dict:
        return {
            "peer_count": self.instance.peer_count,
            "buffer_len": self.instance.buffer_len,
            "row_sums": list(self.instance.row_sums),
            "a0": self.instance.a0,
            "log_omega": self.log_omega,
            "log_column_count": self.log_column_count,
            "column_count": self.column_count,
            "log_chi_min": self.log_chi_min,
            "log_chi_max": self.log_chi_max,
            "log_upsilon_lower": self.log_upsilon_lower,
            "log_upsilon_upper": self.log_upsilon_upper,
            "necessary_holds": self.necessary_holds,
            "sufficient_holds": self.sufficient_holds,
            "per_column_log_chi": self.per_column_log_chi,
        }


def check_reduction_conditions(inst: ReductionInstance,
                               column_budget: int = 100_000) -> ReductionReport:
    """Evaluate the necessary and sufficient lumping conditions in log space.

    Enumerates every admissible column-sum vector, minimises the variational
    bound for each, and tests

        necessary:  ln M + (M-1)(n-1) ln 2 >= ln binom + min_C [ln chi]
                                              - a0 (|R| + 2^n) ln M
        sufficient: ln M + (M-1)(n-1) ln 2 >= ln binom + max_C [ln chi]

    together with the bracket it implies on the lumped state-space size.
    """
    M, n = inst.peer_count, inst.buffer_len
    expected = 2 ** (n - 1) * math.comb(M - 2 + (1 << (n - 1)), M - 1)
    if expected > column_budget:
        raise ConvergenceError(
            f"{expected} admissible column vectors exceed the enumeration "
            f"budget {column_budget}")
    log_chis = [chi(inst.row_sums, c).log_chi
                for c in enumerate_column_sums(M, n)]
    if len(log_chis) != expected:
        raise AssertionError("column enumeration does not match its closed form")
    log_omega = omega_log_size(M, n)
    log_ccount = column_count_log(M, n)
    log_binom = math.log(math.comb(M - 2 + (1 << (n - 1)), M - 1))
    lhs = math.log(M) + (M - 1) * (n - 1) * math.log(2.0)
    correction = inst.a0 * (len(inst.row_sums) + 2 ** n) * math.log(M)
    log_chi_min = min(log_chis)
    log_chi_max = max(log_chis)
    return ReductionReport(
        instance=inst,
        log_omega=log_omega,
        log_column_count=log_ccount,
        column_count=expected,
        log_chi_min=log_chi_min,
        log_chi_max=log_chi_max,
        log_upsilon_lower=log_ccount + log_chi_min - correction,
        log_upsilon_upper=log_ccount + log_chi_max,
        necessary_holds=lhs >= log_binom + log_chi_min - correction,
        sufficient_holds=lhs >= log_binom + log_chi_max,
        per_column_log_chi=log_chis,
    )
