"""Two-player scheduling game between weak and strong degree classes.

Each class commits to LDF or EDF; its utility is the playback-continuity
probability p_i(n) at the resulting stationary point.  The payoff table is
filled by solving the coupled system once per strategy vector, with either
the discrete fixed-point backend or the continuum ODE backend, and pure Nash
equilibria are read off by checking unilateral deviations.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

from .continuum import (ShootingError, SingularDynamicsError, TwoDegreeSystem,
                        integrate_two_class)
from .mean_field import (EDF, LDF, ConvergenceError, MeanFieldBreakdownError,
                         MeanFieldConfig, solve_fixed_point)

BACKEND_MEAN_FIELD = "mean_field"
BACKEND_CONTINUUM = "continuum"

STRATEGY_VECTORS = ((LDF, LDF), (LDF, EDF), (EDF, LDF), (EDF, EDF))


class InvalidCellError(RuntimeError):
    """A payoff cell could not be computed, so equilibrium checks are off."""


@dataclass
class PayoffCell:
    u_weak: float | None
    u_strong: float | None
    u_global: float | None
    error: str | None = None

    @property
    def valid(self) -> bool:
        return self.error is None


@dataclass
class PayoffTable:
    system: TwoDegreeSystem
    buffer_len: int
    backend: str
    cells: dict[tuple[str, str], PayoffCell]

    def cell(self, weak: str, strong: str) -> PayoffCell:
        return self.cells[(weak, strong)]

    @property
    def complete(self) -> bool:
        return all(c.valid for c in self.cells.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("weak_strategy,strong_strategy,u_weak,u_strong,global\n")
        for (w, s), cell in sorted(self.cells.items()):
            if cell.valid:
                buf.write(f"{w},{s},{cell.u_weak:.17g},{cell.u_strong:.17g},"
                          f"{cell.u_global:.17g}\n")
            else:
                buf.write(f"{w},{s},invalid,invalid,invalid\n")
        return buf.getvalue()

    def report_json(self, equilibria: list[tuple[str, str]] | None = None) -> str:
        payload = {
            "backend": self.backend,
            "buffer_len": self.buffer_len,
            "k1": self.system.k1,
            "k2": self.system.k2,
            "pi1": self.system.pi1,
            "contact_scale": self.system.contact_scale,
            "p1_boundary": self.system.p1_boundary,
            "cells": {
                f"{w}/{s}": ({"u_weak": c.u_weak, "u_strong": c.u_strong,
                              "global": c.u_global} if c.valid
                             else {"error": c.error})
                for (w, s), c in sorted(self.cells.items())
            },
        }
        if equilibria is not None:
            payload["nash_equilibria"] = [list(e) for e in equilibria]
        return json.dumps(payload, indent=2)


def _solve_cell_mean_field(sys: TwoDegreeSystem, n: int,
                           profile: tuple[str, str]) -> PayoffCell:
    cfg = MeanFieldConfig(n, round(1.0 / sys.p1_boundary), sys.contact_scale,
                          [(sys.k1, sys.pi1, profile[0]),
                           (sys.k2, sys.pi2, profile[1])])
    table = solve_fixed_point(cfg)
    return PayoffCell(float(table.p[0, -1]), float(table.p[1, -1]),
                      float(table.p_global[-1]))


def _solve_cell_continuum(sys: TwoDegreeSystem, n: int,
                          profile: tuple[str, str]) -> PayoffCell:
    traj = integrate_two_class(sys, profile, float(n))
    y1, y2, y = traj.endpoint()
    return PayoffCell(y1, y2, y)


def build_payoff_table(sys: TwoDegreeSystem, n: int,
                       backend: str = BACKEND_MEAN_FIELD) -> PayoffTable:
    """Solve all four strategy vectors and record the continuity utilities.

    A solver failure (no monotone fixed point, singular dynamics, shooting
    failure) marks that cell invalid instead of aborting the whole table.
    """
    if backend not in (BACKEND_MEAN_FIELD, BACKEND_CONTINUUM):
        raise ValueError(f"unknown backend {backend!r}")
    solve = (_solve_cell_mean_field if backend == BACKEND_MEAN_FIELD
             else _solve_cell_continuum)
    cells = {}
    for profile in STRATEGY_VECTORS:
        try:
            cells[profile] = solve(sys, n, profile)
        except (MeanFieldBreakdownError, ConvergenceError,
                SingularDynamicsError, ShootingError) as exc:
            cells[profile] = PayoffCell(None, None, None,
                                        error=f"{type(exc).__name__}: {exc}")
    return PayoffTable(sys, n, backend, cells)


def nash_equilibria(table: PayoffTable,
                    nash_tol: float = 1e-9) -> list[tuple[str, str]]:
    """All strategy vectors from which no player gains more than nash_tol by
    a unilateral deviation (weak inequality: ties count as equilibria).
    """
    invalid = [p for p, c in table.cells.items() if not c.valid]
    if invalid:
        raise InvalidCellError(
            f"cannot check equilibria with invalid cells: {invalid}")
    result = []
    for (w, s) in STRATEGY_VECTORS:
        cell = table.cells[(w, s)]
        w_alt = table.cells[(EDF if w == LDF else LDF, s)]
        s_alt = table.cells[(w, EDF if s == LDF else LDF)]
        if (cell.u_weak >= w_alt.u_weak - nash_tol
                and cell.u_strong >= s_alt.u_strong - nash_tol):
            result.append((w, s))
    return result


def best_global(table: PayoffTable) -> tuple[str, str]:
    """Strategy vector with the largest global continuity."""
    invalid = [p for p, c in table.cells.items() if not c.valid]
    if invalid:
        raise InvalidCellError(
            f"cannot rank global utility with invalid cells: {invalid}")
    return max(STRATEGY_VECTORS, key=lambda p: table.cells[p].u_global)
