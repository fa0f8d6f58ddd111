"""Protocol-level streaming run: tracker join, capped mesh, request windows.

One hundred peers in three bandwidth classes pull a 1.5 Mbit/s stream at 8
chunks/s.  The mixed assignment (the twenty high-capacity peers request
rarest-first, everyone else greedy) keeps continuity high while roughly
halving the request traffic of an all-greedy swarm.
"""

from swarmsched import FullStackConfig, run_fullstack

for strategy, ldf_count in (("pure_edf", 0), ("pure_ldf", 0), ("mixed", 20)):
    cfg = FullStackConfig(strategy=strategy, ldf_peer_count=ldf_count,
                          arrival_rate=4.0, sim_duration_s=300.0, seed=5)
    m = run_fullstack(cfg)
    print(f"{strategy:>9}: continuity={m.continuity_global:.4f} "
          f"requests/s per peer={m.requests_per_second_global:.1f}")
    per_class = ", ".join(f"{k}={v:.3f}" for k, v in sorted(m.continuity.items()))
    print(f"           per class: {per_class}")
    degrees = ", ".join(f"{k}={v:.1f}" for k, v in sorted(m.mean_in_degree.items()))
    print(f"           mean in-degree: {degrees}")

# the realized mesh favours high-capacity peers (they replace weaker
# connections with a small probability), which the mixed strategy exploits
print("\nbuffer occupancy profile under mixed (oldest -> next deadline):")
profile = m.buffer_profile
marks = "".join("#" if p > 0.9 else "+" if p > 0.5 else "." for p in profile)
print(f"  [{marks}]")
