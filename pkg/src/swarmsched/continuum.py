"""Continuous-buffer-index approximations for a two-degree swarm.

Treating the buffer index x as continuous turns the stationary recurrences
into ODEs on [1, n] for the weak-peer and strong-peer buffer probabilities
y1, y2 (coupled through theta = q1*y1 + q2*y2):

    LDF class:  dy/dx = k * sigma * theta * (1 - y)^2
    EDF class:  dy/dx = k * sigma * theta * (1 - y) * (y - p_b + eps)
                        / (1 - k * sigma * theta * (1 - y))

where p_b is the index-1 boundary value and eps = 1 - y(n) is determined
self-consistently by shooting.  The EDF denominator defines a singular set on
which the approximation is invalid; crossing it is a hard error.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .mean_field import EDF, LDF

DEFAULT_STEP = 0.01


class SingularDynamicsError(RuntimeError):
    """An EDF denominator 1 - k*sigma*theta*(1-y) fell below the floor."""

    def __init__(self, x: float, degree: int, denominator: float):
        super().__init__(
            f"EDF dynamics singular near x={x:.4g} for degree {degree} "
            f"(denominator {denominator:.3e}); the continuum approximation "
            "is invalid at this contact scale")
        self.x = x
        self.degree = degree
        self.denominator = denominator


class ShootingError(RuntimeError):
    """Self-consistency iteration for the EDF tail term failed to settle."""


@dataclass(frozen=True)
class TwoDegreeSystem:
    """Two degree classes k1 < k2 with size-biased weights and shares."""

    k1: int
    k2: int
    q1: float
    q2: float
    pi1: float
    pi2: float
    contact_scale: float
    p1_boundary: float

    def __post_init__(self):
        # k1 == k2 is tolerated as the degenerate identical-players case
        if not self.k1 <= self.k2:
            raise ValueError("need k1 <= k2")
        if abs(self.q1 + self.q2 - 1.0) > 1e-12:
            raise ValueError("size-biased masses must sum to 1")
        if abs(self.pi1 + self.pi2 - 1.0) > 1e-12:
            raise ValueError("population shares must sum to 1")
        if self.contact_scale <= 0.0:
            raise ValueError("contact_scale must be positive")
        if not 0.0 < self.p1_boundary < 1.0:
            raise ValueError("boundary probability must lie in (0, 1)")

    @property
    def r(self) -> float:
        return self.k1 / self.k2

    @classmethod
    def from_population(cls, k1: int, k2: int, pi1: float, contact_scale: float,
                        peer_count: int | None = None,
                        p1_boundary: float | None = None) -> "TwoDegreeSystem":
        """Build from population shares; q follows by size-biasing the degrees."""
        if (peer_count is None) == (p1_boundary is None):
            raise ValueError("give exactly one of peer_count or p1_boundary")
        pi2 = 1.0 - pi1
        norm = k1 * pi1 + k2 * pi2
        boundary = 1.0 / peer_count if peer_count is not None else p1_boundary
        return cls(k1, k2, k1 * pi1 / norm, k2 * pi2 / norm, pi1, pi2,
                   contact_scale, boundary)


@dataclass
class Trajectory:
    """Sampled buffer-probability curves along continuous buffer positions."""

    x: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    y: np.ndarray
    eps: dict[str, float] = field(default_factory=dict)

    def endpoint(self) -> tuple[float, float, float]:
        return float(self.y1[-1]), float(self.y2[-1]), float(self.y[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,y1,y2,y\n")
        for i in range(len(self.x)):
            buf.write(f"{self.x[i]:.17g},{self.y1[i]:.17g},"
                      f"{self.y2[i]:.17g},{self.y[i]:.17g}\n")
        return buf.getvalue()


def _make_rhs(sys: TwoDegreeSystem, strategies: tuple[str, str],
              eps: tuple[float, float]):
    """Scalar right-hand side of the coupled pair for the given profile."""
    k1s = sys.k1 * sys.contact_scale
    k2s = sys.k2 * sys.contact_scale
    q1, q2, pb = sys.q1, sys.q2, sys.p1_boundary
    ldf1, ldf2 = strategies[0] == LDF, strategies[1] == LDF
    e1, e2 = eps

    def rhs(x: float, a: float, b: float) -> tuple[float, float]:
        theta = q1 * a + q2 * b
        d1 = k1s * theta * (1.0 - a)
        d2 = k2s * theta * (1.0 - b)
        if ldf1:
            f1 = d1 * (1.0 - a)
        else:
            den = 1.0 - d1
            if den <= 1e-9:
                raise SingularDynamicsError(x, sys.k1, den)
            f1 = d1 * (a - pb + e1) / den
        if ldf2:
            f2 = d2 * (1.0 - b)
        else:
            den = 1.0 - d2
            if den <= 1e-9:
                raise SingularDynamicsError(x, sys.k2, den)
            f2 = d2 * (b - pb + e2) / den
        return f1, f2

    return rhs


def _integrate(sys: TwoDegreeSystem, strategies: tuple[str, str],
               eps: tuple[float, float], n: float, step: float,
               record: bool = True) -> Trajectory | tuple[float, float]:
    if step <= 0.0:
        raise ValueError("step must be positive")
    count = max(1, int(round((n - 1.0) / step)))
    h = (n - 1.0) / count
    rhs = _make_rhs(sys, strategies, eps)
    y1 = y2 = sys.p1_boundary
    if record:
        ys1 = np.empty(count + 1)
        ys2 = np.empty(count + 1)
        ys1[0] = ys2[0] = sys.p1_boundary
    half = 0.5 * h
    sixth = h / 6.0
    for i in range(count):
        x = 1.0 + i * h
        a1, b1 = rhs(x, y1, y2)
        a2, b2 = rhs(x + half, y1 + half * a1, y2 + half * b1)
        a3, b3 = rhs(x + half, y1 + half * a2, y2 + half * b2)
        a4, b4 = rhs(x + h, y1 + h * a3, y2 + h * b3)
        y1 = y1 + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        y2 = y2 + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if record:
            ys1[i + 1] = y1
            ys2[i + 1] = y2
    if not record:
        return y1, y2
    xs = 1.0 + np.arange(count + 1) * h
    y_global = sys.pi1 * ys1 + sys.pi2 * ys2
    eps_named = {}
    for idx, strat in enumerate(strategies):
        if strat == EDF:
            eps_named["eps1" if idx == 0 else "eps2"] = eps[idx]
    return Trajectory(xs, ys1, ys2, y_global, eps_named)


def _solve_eps_bisection(sys: TwoDegreeSystem, strategies: tuple[str, str],
                         eps: list[float], idx: int, n: float, step: float,
                         tol: float, guess: float | None = None) -> float:
    """Root of 1 - y_idx(n; eps) - eps by bisection; monotone in eps.

    A `guess` from an earlier pass seeds a small expanding bracket around it,
    so repeated solves during the outer self-consistency loop stay cheap.
    """

    def residual(e: float) -> float:
        trial = list(eps)
        trial[idx] = e
        ends = _integrate(sys, strategies, tuple(trial), n, step, record=False)
        return 1.0 - ends[idx] - e

    lo, hi = 0.0, 1.0
    if guess is not None:
        width = 1e-4
        while width < 1.0:
            lo = max(0.0, guess - width)
            hi = min(1.0, guess + width)
            if residual(lo) > 0.0 > residual(hi):
                break
            width *= 8.0
        else:
            lo, hi = 0.0, 1.0
    if residual(lo) <= 0.0:
        return lo
    if residual(hi) >= 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        if abs(f_mid) <= tol or hi - lo <= 1e-15:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def integrate_two_class(sys: TwoDegreeSystem, strategies: tuple[str, str],
                        n: float, step: float = DEFAULT_STEP,
                        shoot_tol: float = 1e-9, shoot_damping: float = 0.5,
                        max_shots: int = 200) -> Trajectory:
    """Integrate the coupled two-class system under any strategy pair.

    Every EDF class carries a tail term eps = 1 - y(n) that enters its own
    drift.  Damped shooting (move each eps `shoot_damping` of the way toward
    1 - y(n)) is tried first; where the tail map is too steep for it to settle
    the solver falls back to per-class bisection of the self-consistency
    residual, which is monotone in eps.
    """
    for s in strategies:
        if s not in (LDF, EDF):
            raise ValueError(f"unknown strategy {s!r}")
    needs_shot = [s == EDF for s in strategies]
    eps = [0.5 if flag else 0.0 for flag in needs_shot]
    if not any(needs_shot):
        return _integrate(sys, strategies, tuple(eps), n, step)

    converged = False
    for _ in range(40):
        ends = _integrate(sys, strategies, tuple(eps), n, step, record=False)
        delta = 0.0
        for idx in range(2):
            if not needs_shot[idx]:
                continue
            target = 1.0 - float(ends[idx])
            delta = max(delta, abs(target - eps[idx]))
            eps[idx] += shoot_damping * (target - eps[idx])
        if delta < shoot_tol:
            converged = True
            break

    if not converged:
        # steep tail map: damped iteration oscillates; Newton on the
        # self-consistency residual, guarded by bisection
        converged = _newton_eps(sys, strategies, eps, needs_shot, n, step,
                                shoot_tol)
    if not converged:
        worst = float("inf")
        previous: list[float | None] = [None, None]
        for _ in range(max_shots):
            worst = 0.0
            for idx in range(2):
                if not needs_shot[idx]:
                    continue
                eps[idx] = _solve_eps_bisection(sys, strategies, eps, idx,
                                                n, step, shoot_tol,
                                                guess=previous[idx])
                previous[idx] = eps[idx]
            ends = _integrate(sys, strategies, tuple(eps), n, step, record=False)
            for idx in range(2):
                if needs_shot[idx]:
                    worst = max(worst, abs(1.0 - ends[idx] - eps[idx]))
            if worst <= shoot_tol:
                converged = True
                break
        if not converged:
            raise ShootingError(
                f"tail term not self-consistent (residual {worst:.3e} "
                f"above {shoot_tol:g})")
    return _integrate(sys, strategies, tuple(eps), n, step)


def _newton_eps(sys: TwoDegreeSystem, strategies: tuple[str, str],
                eps: list[float], needs_shot: list[bool], n: float,
                step: float, tol: float, max_newton: int = 40) -> bool:
    """Damped Newton on F(eps) = (1 - y(n; eps)) - eps over the EDF classes.

    Mutates `eps` in place; returns True on success, False to let the caller
    fall back to bisection.  Finite-difference Jacobian, halving line search,
    iterates clamped to [0, 1].
    """
    active = [i for i in range(2) if needs_shot[i]]

    def residual(e: list[float]) -> np.ndarray | None:
        try:
            ends = _integrate(sys, strategies, tuple(e), n, step, record=False)
        except SingularDynamicsError:
            return None
        return np.array([1.0 - ends[i] - e[i] for i in active])

    f = residual(eps)
    if f is None:
        return False
    for _ in range(max_newton):
        if np.max(np.abs(f)) <= tol:
            return True
        jac = np.empty((len(active), len(active)))
        for col, idx in enumerate(active):
            h = max(1e-8, 1e-6 * eps[idx])
            bumped = list(eps)
            bumped[idx] = min(1.0, eps[idx] + h)
            f_b = residual(bumped)
            if f_b is None:
                return False
            jac[:, col] = (f_b - f) / (bumped[idx] - eps[idx])
        try:
            delta = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return False
        scale = 1.0
        improved = False
        for _ in range(30):
            trial = list(eps)
            for col, idx in enumerate(active):
                trial[idx] = min(1.0, max(0.0, eps[idx] + scale * delta[col]))
            f_t = residual(trial)
            if f_t is not None and np.max(np.abs(f_t)) < np.max(np.abs(f)):
                eps[:] = trial
                f = f_t
                improved = True
                break
            scale *= 0.5
        if not improved:
            return False
    return bool(np.max(np.abs(f)) <= tol)


def integrate_pure_ldf(sys: TwoDegreeSystem, n: float,
                       step: float = DEFAULT_STEP) -> Trajectory:
    """Both classes rarest-first; smooth dynamics, no shooting required."""
    return integrate_two_class(sys, (LDF, LDF), n, step)


def integrate_mixed(sys: TwoDegreeSystem, n: float, step: float = DEFAULT_STEP,
                    shoot_tol: float = 1e-9) -> Trajectory:
    """Weak class greedy, strong class rarest-first (the mixed assignment)."""
    return integrate_two_class(sys, (EDF, LDF), n, step, shoot_tol=shoot_tol)


def exact_ldf_relation(y1: float, r: float) -> float:
    """Strong-peer probability as a function of the weak-peer one, pure LDF,
    in the large-system boundary limit:  y2 = y1 / (1 - (1-r)(1-y1)).
    """
    if not 0.0 <= y1 <= 1.0:
        raise ValueError("y1 must lie in [0, 1]")
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    return y1 / (1.0 - (1.0 - r) * (1.0 - y1))


def exact_ldf_relation_finite(y1: float, k1: int, k2: int, peer_count: int) -> float:
    """Finite-system first integral of the pure-LDF pair with boundary
    y1 = y2 = 1/M:  y2 = (1 - (C*k1 + r)(1-y1)) / (1 - C*k1*(1-y1)),
    C = M/(M-1) * (1/k1 - 1/k2).
    """
    r = k1 / k2
    c = peer_count / (peer_count - 1.0) * (1.0 / k1 - 1.0 / k2)
    return (1.0 - (c * k1 + r) * (1.0 - y1)) / (1.0 - c * k1 * (1.0 - y1))


@dataclass
class BufferRequirement:
    n1: float
    dn1_deps1: float
    dn1_dp1: float
    constants: dict[str, float]


def _buffer_requirement_value(sys: TwoDegreeSystem, eps1: float, p1: float) -> float:
    r = sys.r
    q1, q2 = sys.q1, sys.q2
    k_sigma = sys.k1 * sys.contact_scale
    h = q1 * r + q2
    a = r / h
    b = r + q1 * (1.0 - r)
    c = 1.0 / k_sigma
    d = q1 ** 2 * q2 * (1.0 - r) ** 3 / (k_sigma * h)
    e = q1 * (1.0 - r) / h
    for arg in ((1.0 - eps1) / p1, (1.0 - p1) / eps1,
                (1.0 + e * (1.0 - eps1)) / (1.0 + e * p1)):
        if arg <= 0.0:
            raise ValueError("logarithm argument out of domain")
    return (a / k_sigma * math.log((1.0 - eps1) / p1)
            + b / k_sigma * math.log((1.0 - p1) / eps1)
            + c / eps1
            + d / (q1 * (1.0 - r)) * math.log((1.0 + e * (1.0 - eps1))
                                              / (1.0 + e * p1))
            - (c - 1.0 + p1) / (1.0 - p1))


def ldf_buffer_requirement(sys: TwoDegreeSystem, eps1: float,
                           p1: float | None = None) -> BufferRequirement:
    """Weak-peer buffer length needed for continuity 1 - eps1 under pure LDF.

    Closed-form integral of the weak-peer ODE after eliminating the strong
    class through the exact LDF relation:

        n1 = A/(k1*sigma) * ln((1-eps1)/p1) + B * ln((1-p1)/eps1) + C/eps1
             + D/(q1*(1-r)) * ln((1 + E*(1-eps1)) / (1 + E*p1))
             - (C - 1 + p1) / (1 - p1)

    with A = r/(q1*r+q2), B = (r + q1*(1-r))/(k1*sigma), C = 1/(k1*sigma),
    D = q1^2*q2*(1-r)^3/(k1*sigma*(q1*r+q2)), E = q1*(1-r)/(q1*r+q2).
    Sensitivities dn1/deps1 and dn1/dp1 are exposed via central differences.
    """
    if p1 is None:
        p1 = sys.p1_boundary
    if not 0.0 < eps1 < 1.0 - p1:
        raise ValueError("need 0 < eps1 < 1 - p1")
    n1 = _buffer_requirement_value(sys, eps1, p1)
    h_eps = 1e-6 * eps1
    h_p = 1e-6 * p1
    dn_deps = (_buffer_requirement_value(sys, eps1 + h_eps, p1)
               - _buffer_requirement_value(sys, eps1 - h_eps, p1)) / (2.0 * h_eps)
    dn_dp = (_buffer_requirement_value(sys, eps1, p1 + h_p)
             - _buffer_requirement_value(sys, eps1, p1 - h_p)) / (2.0 * h_p)
    r, q1, q2 = sys.r, sys.q1, sys.q2
    h = q1 * r + q2
    k_sigma = sys.k1 * sys.contact_scale
    constants = {
        "A": r / h,
        "B": (r + q1 * (1.0 - r)) / k_sigma,
        "C": 1.0 / k_sigma,
        "D": q1 ** 2 * q2 * (1.0 - r) ** 3 / (k_sigma * h),
        "E": q1 * (1.0 - r) / h,
    }
    return BufferRequirement(n1, dn_deps, dn_dp, constants)


def mixed_approx_relation(y1: float, sys: TwoDegreeSystem, eps1: float,
                          p1: float | None = None) -> float:
    """Conservative first-order closed form for the mixed strategy: the
    strong-peer probability reached while the weak (greedy) class sits at y1.

        y2 = (L - C - 1) / (L - C),
        L  = ln((y1 - p1 + eps1) / (1 - y1)) / (r * (1 - p1 + eps1)),
        C  = ln(eps1 / (1 - p1)) / (r * (1 - p1 + eps1)) - 1 / (1 - p1)

    The r in C's first denominator makes the curve satisfy its own boundary
    y2(p1) = p1 and reduces to the simplified logistic form when eps1 = p1.
    """
    if p1 is None:
        p1 = sys.p1_boundary
    r = sys.r
    if y1 - p1 + eps1 <= 0.0 or y1 >= 1.0:
        raise ValueError("logarithm argument out of domain")
    big_l = math.log((y1 - p1 + eps1) / (1.0 - y1)) / (r * (1.0 - p1 + eps1))
    big_c = (math.log(eps1 / (1.0 - p1)) / (r * (1.0 - p1 + eps1))
             - 1.0 / (1.0 - p1))
    return (big_l - big_c - 1.0) / (big_l - big_c)


def mixed_approx_relation_simplified(y2: float, sys: TwoDegreeSystem,
                                     p1: float | None = None) -> float:
    """Large-buffer simplification (tail term pinned to the boundary value):
    the weak-peer probability as a logistic function of the strong-peer one.

        y1 = 1 / (1 + exp(-r * (1/(1-y2) + C0))),
        C0 = ln(p1/(1-p1)) / r - 1/(1-p1)
    """
    if p1 is None:
        p1 = sys.p1_boundary
    r = sys.r
    if not 0.0 <= y2 < 1.0:
        raise ValueError("y2 must lie in [0, 1)")
    c0 = math.log(p1 / (1.0 - p1)) / r - 1.0 / (1.0 - p1)
    return 1.0 / (1.0 + math.exp(-r * (1.0 / (1.0 - y2) + c0)))


@dataclass
class StabilityReport:
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    notes: str = ""


def stability_jacobian(sys: TwoDegreeSystem, strategy: str,
                       at: tuple[float, float],
                       eps1: float | None = None) -> StabilityReport:
    """Analytic Jacobian of the chosen right-hand side at a point in [0,1]^2.

    strategy: "pure_ldf" or "mixed".  The mixed case needs the converged tail
    term eps1 and refuses points on the singular set.  At the filled-buffer
    equilibrium (1,1) the pure-LDF Jacobian vanishes entirely (doubly
    degenerate) while the mixed one keeps the single negative eigenvalue
    -k1*sigma*(1 - y0) with y0 = p1 - eps1.
    """
    y1, y2 = at
    if not (0.0 <= y1 <= 1.0 and 0.0 <= y2 <= 1.0):
        raise ValueError("evaluation point must lie in [0, 1]^2")
    q1, q2 = sys.q1, sys.q2
    s = sys.contact_scale
    k1, k2 = sys.k1, sys.k2
    theta = q1 * y1 + q2 * y2
    jac = np.empty((2, 2))
    # strong class is rarest-first in both supported profiles
    jac[1, 0] = k2 * s * q1 * (1.0 - y2) ** 2
    jac[1, 1] = k2 * s * (q2 * (1.0 - y2) ** 2 - 2.0 * theta * (1.0 - y2))
    notes = ""
    if strategy == "pure_ldf":
        jac[0, 0] = k1 * s * (q1 * (1.0 - y1) ** 2 - 2.0 * theta * (1.0 - y1))
        jac[0, 1] = k1 * s * q2 * (1.0 - y1) ** 2
    elif strategy == "mixed":
        if eps1 is None:
            raise ValueError("mixed stability needs the converged eps1")
        a = k1 * s * theta * (1.0 - y1)
        denom = 1.0 - a
        if denom <= 1e-9:
            raise SingularDynamicsError(float("nan"), k1, denom)
        grow = y1 - sys.p1_boundary + eps1
        da_dy1 = k1 * s * (q1 * (1.0 - y1) - theta)
        da_dy2 = k1 * s * q2 * (1.0 - y1)
        common = grow * (1.0 / denom + a / denom ** 2)
        jac[0, 0] = da_dy1 * common + a / denom
        jac[0, 1] = da_dy2 * common
        notes = ("eigenvalue -k1*sigma*(1-y0) at (1,1) corresponds to "
                 "y0 = p1_boundary - eps1")
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return StabilityReport(jac, np.linalg.eigvals(jac), notes)


def mixed_rhs(sys: TwoDegreeSystem, at: tuple[float, float],
              eps1: float) -> np.ndarray:
    """Mixed-profile right-hand side at a point (for finite-difference checks)."""
    rhs = _make_rhs(sys, (EDF, LDF), (eps1, 0.0))
    return np.array(rhs(0.0, at[0], at[1]))


def pure_ldf_rhs(sys: TwoDegreeSystem, at: tuple[float, float]) -> np.ndarray:
    """Pure-LDF right-hand side at a point (for finite-difference checks)."""
    rhs = _make_rhs(sys, (LDF, LDF), (0.0, 0.0))
    return np.array(rhs(0.0, at[0], at[1]))
