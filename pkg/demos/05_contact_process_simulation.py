"""Monte Carlo runs of the buffer/shifting contact process on a small world.

Scaled-down version of the production campaign (which uses M in the
thousands and 4000 time units): three strategy assignments on one graph,
deterministic shifting, one seed each.  The mixed assignment matches pure
rarest-first on continuity while cutting the start-up latency, and the
weak (greedy) class crosses above the strong (rarest-first) class within
the buffer.
"""

import numpy as np

from swarmsched import generate_ws
from swarmsched.stochastic import SimConfig, StrategyRule, run

graph = generate_ws(1500, 8, 0.2, seed=11)
print(f"graph: M={graph.node_count}, mean degree {graph.degrees.mean():.1f}")

metrics = {}
for rule in (StrategyRule.pure_ldf(), StrategyRule.pure_edf(),
             StrategyRule.mixed(0.2)):
    cfg = SimConfig(graph, buffer_len=40, contact_scale=0.25,
                    strategy_rule=rule, horizon=800, burn_in=400, seed=42)
    m = run(cfg)
    metrics[rule.kind] = m
    print(f"{rule.kind:>9}: continuity={m.continuity_global:.4f} "
          f"startup latency (normalised)="
          f"{m.startup_latency_global_normalized:.4f} "
          f"samples={m.samples}")

mixed = metrics["mixed"]
weak = mixed.class_curve("EDF")
strong = mixed.class_curve("LDF")
cross = np.nonzero(weak > strong)[0]
print(f"\nmixed assignment: weak class crosses above the strong class at "
      f"buffer index {cross[0] + 1} (of 40)")
print("index:  5     15    25    35    40")
print("weak :", "  ".join(f"{weak[i - 1]:.3f}" for i in (5, 15, 25, 35, 40)))
print("strong:", " ".join(f"{strong[i - 1]:.3f}" for i in (5, 15, 25, 35, 40)))
