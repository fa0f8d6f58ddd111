"""Payoff table construction and pure Nash equilibrium checks.

The interesting regime mirrors the study's setup (degrees 25/55, weak share
0.85, M=1000, n=40).  Contact scales are chosen inside the window where the
solvers are valid: beyond roughly k*sigma*theta ~ 1 the mean-field and
continuum approximations break down by design, and those failures are
covered in the solver test modules.
"""

import numpy as np
import pytest

from swarmsched import (InvalidCellError, TwoDegreeSystem, best_global,
                        build_payoff_table, nash_equilibria, EDF, LDF)
from swarmsched.game import (BACKEND_CONTINUUM, BACKEND_MEAN_FIELD, PayoffCell,
                             PayoffTable, STRATEGY_VECTORS)

GAME_KW = dict(k1=25, k2=55, pi1=0.85, peer_count=1000)


def manual_table(values):
    """values: {(w, s): (u_weak, u_strong)}; global filled with the mean."""
    sys_ = TwoDegreeSystem.from_population(contact_scale=0.02, **GAME_KW)
    cells = {p: PayoffCell(values[p][0], values[p][1],
                           0.5 * (values[p][0] + values[p][1]))
             for p in STRATEGY_VECTORS}
    return PayoffTable(sys_, 40, "manual", cells)


def test_symmetric_degenerate_players_have_symmetric_payoffs():
    # fully interchangeable players: equal degrees AND equal shares mirror
    # the whole table under swapping
    sys_ = TwoDegreeSystem.from_population(25, 25, 0.5, 0.02, peer_count=1000)
    table = build_payoff_table(sys_, 40, backend=BACKEND_CONTINUUM)
    assert table.complete
    for w, s in STRATEGY_VECTORS:
        mirrored = table.cell(s, w)
        cell = table.cell(w, s)
        assert cell.u_weak == pytest.approx(mirrored.u_strong, abs=1e-9)
        assert cell.u_strong == pytest.approx(mirrored.u_weak, abs=1e-9)
    # equal degrees alone already equalise the same-strategy cells, the
    # shares only enter through the shared coupling term
    skewed = TwoDegreeSystem.from_population(25, 25, 0.85, 0.02,
                                             peer_count=1000)
    table = build_payoff_table(skewed, 40, backend=BACKEND_CONTINUUM)
    for p in ((LDF, LDF), (EDF, EDF)):
        cell = table.cell(*p)
        assert cell.u_weak == pytest.approx(cell.u_strong, abs=1e-9)


def test_continuum_backend_reproduces_the_claimed_game_structure():
    sys_ = TwoDegreeSystem.from_population(contact_scale=0.02, **GAME_KW)
    table = build_payoff_table(sys_, 40, backend=BACKEND_CONTINUUM)
    assert table.complete
    eq = nash_equilibria(table)
    assert (EDF, LDF) in eq
    assert (LDF, EDF) in eq
    assert best_global(table) == (EDF, LDF)


def test_mean_field_backend_confirms_both_equilibria():
    sys_ = TwoDegreeSystem.from_population(contact_scale=0.02, **GAME_KW)
    table = build_payoff_table(sys_, 40, backend=BACKEND_MEAN_FIELD)
    assert table.complete
    eq = nash_equilibria(table)
    assert (EDF, LDF) in eq
    assert (LDF, EDF) in eq


def test_backends_agree_qualitatively_and_numerically():
    sys_ = TwoDegreeSystem.from_population(contact_scale=0.02, **GAME_KW)
    mf = build_payoff_table(sys_, 40, backend=BACKEND_MEAN_FIELD)
    ode = build_payoff_table(sys_, 40, backend=BACKEND_CONTINUUM)
    assert set(nash_equilibria(mf)) == set(nash_equilibria(ode))
    for p in STRATEGY_VECTORS:
        # the continuum treatment is an approximation of the discrete
        # recurrence; agreement is qualitative plus a loose numeric band
        assert mf.cell(*p).u_weak == pytest.approx(ode.cell(*p).u_weak,
                                                   abs=0.1)
        assert mf.cell(*p).u_strong == pytest.approx(ode.cell(*p).u_strong,
                                                     abs=0.1)


def test_breakdown_contact_scale_marks_cells_invalid():
    sys_ = TwoDegreeSystem.from_population(contact_scale=0.25, **GAME_KW)
    table = build_payoff_table(sys_, 40, backend=BACKEND_MEAN_FIELD)
    assert not table.complete
    assert not table.cell(EDF, LDF).valid
    with pytest.raises(InvalidCellError):
        nash_equilibria(table)
    with pytest.raises(InvalidCellError):
        best_global(table)
    csv = table.to_csv()
    assert "invalid" in csv


def test_all_equal_table_makes_every_vector_nash():
    table = manual_table({p: (0.7, 0.7) for p in STRATEGY_VECTORS})
    assert nash_equilibria(table) == list(STRATEGY_VECTORS)


def test_nash_inequalities_hold_literally_for_returned_vectors():
    rng = np.random.default_rng(11)
    for _ in range(50):
        values = {p: (rng.uniform(), rng.uniform()) for p in STRATEGY_VECTORS}
        table = manual_table(values)
        for w, s in nash_equilibria(table, nash_tol=0.0):
            cell = table.cell(w, s)
            assert cell.u_weak >= table.cell(EDF if w == LDF else LDF, s).u_weak
            assert cell.u_strong >= table.cell(w, EDF if s == LDF else LDF).u_strong


def test_nash_set_invariant_under_monotone_utility_transforms():
    rng = np.random.default_rng(23)
    for _ in range(25):
        values = {p: (rng.uniform(), rng.uniform()) for p in STRATEGY_VECTORS}
        base = nash_equilibria(manual_table(values), nash_tol=0.0)
        warped = {p: (values[p][0] ** 3 + 2.0 * values[p][0],
                      np.tanh(3.0 * values[p][1]))
                  for p in STRATEGY_VECTORS}
        assert nash_equilibria(manual_table(warped), nash_tol=0.0) == base


def test_report_json_and_csv_round():
    sys_ = TwoDegreeSystem.from_population(contact_scale=0.02, **GAME_KW)
    table = build_payoff_table(sys_, 40, backend=BACKEND_CONTINUUM)
    eq = nash_equilibria(table)
    report = table.report_json(eq)
    assert '"nash_equilibria"' in report
    lines = table.to_csv().strip().split("\n")
    assert lines[0] == "weak_strategy,strong_strategy,u_weak,u_strong,global"
    assert len(lines) == 5


def test_unknown_backend_rejected():
    sys_ = TwoDegreeSystem.from_population(contact_scale=0.02, **GAME_KW)
    with pytest.raises(ValueError):
        build_payoff_table(sys_, 40, backend="oracle")
