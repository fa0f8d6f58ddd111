"""The 2x2 scheduling game between weak and strong peers.

Each class commits to rarest-first (LDF) or greedy (EDF); utilities are the
playback-continuity probabilities at the stationary point.  Both
(EDF, LDF) and (LDF, EDF) are pure Nash equilibria, and (EDF, LDF) - weak
peers greedy, strong peers seeding fresh chunks - maximises the global
continuity.
"""

from swarmsched import (TwoDegreeSystem, best_global, build_payoff_table,
                        nash_equilibria)

sys_ = TwoDegreeSystem.from_population(25, 55, 0.85, 0.02, peer_count=1000)
table = build_payoff_table(sys_, 40, backend="continuum")

print("payoff table (weak strategy, strong strategy) -> "
      "(u_weak, u_strong, global):")
for (w, s), cell in sorted(table.cells.items()):
    print(f"  ({w:>3}, {s:>3}) -> ({cell.u_weak:.4f}, {cell.u_strong:.4f}, "
          f"{cell.u_global:.4f})")

print(f"\npure Nash equilibria: {nash_equilibria(table)}")
print(f"global optimum: {best_global(table)}")
print("\nCSV export:\n" + table.to_csv())
