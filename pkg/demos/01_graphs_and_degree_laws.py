"""Swarm overlays: generate the three graph families and inspect degree laws.

Every generator is deterministic for a fixed seed and guarantees a simple,
connected graph; the size-biased transform gives the degree law seen along a
uniformly random edge, which is what couples peers in the mean-field model.
"""

import numpy as np

from swarmsched import (empirical_degree_distribution, generate_ba,
                        generate_er, generate_ws, size_biased)

er = generate_er(1000, 8.0, seed=1)
ba = generate_ba(1000, 4, seed=1)
ws = generate_ws(1000, 8, 0.2, seed=1)

for name, g in (("Erdos-Renyi", er), ("preferential attachment", ba),
                ("small world", ws)):
    print(f"{name}: M={g.node_count} E={g.edge_count} "
          f"mean degree={g.degrees.mean():.2f} "
          f"min={g.degrees.min()} max={g.degrees.max()}")

# size-biasing shifts mass toward high degrees: a random edge endpoint is
# more likely to be a hub than a random node
dist = empirical_degree_distribution(ba)
q = size_biased(dist)
print("\npreferential attachment, degree mass vs edge-endpoint mass:")
for k in dist.support[:8]:
    print(f"  degree {k:>3}: pi={dist.as_dict()[k]:.4f}  q={q.as_dict()[k]:.4f}")
print(f"mean degree {dist.mean():.2f} vs size-biased mean {q.mean():.2f}")

# the edge-list text format round-trips
text = ws.to_edge_list_text()
print(f"\nedge list header: {text.splitlines()[0]!r} "
      f"({len(text.splitlines()) - 1} edge lines)")
