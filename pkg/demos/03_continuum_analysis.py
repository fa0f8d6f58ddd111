"""Continuum treatment of the two-class system: exact solutions and stability.

With the buffer index treated as continuous, the pure rarest-first pair has
a closed first integral, a closed buffer-size requirement, and degenerate
stability at the filled-buffer equilibrium; the mixed system is integrated
with a self-consistent tail term.
"""

import numpy as np

from swarmsched import (TwoDegreeSystem, exact_ldf_relation,
                        integrate_mixed, integrate_pure_ldf,
                        ldf_buffer_requirement, stability_jacobian)

sys_fast = TwoDegreeSystem.from_population(25, 55, 0.85, 0.25, peer_count=1000)
sys_slow = TwoDegreeSystem.from_population(25, 55, 0.85, 0.025, peer_count=1000)

# the weak/strong curves under pure rarest-first obey a closed-form relation
traj = integrate_pure_ldf(sys_fast, 40.0)
mid = len(traj.x) // 3
print("pure rarest-first first integral (large-system form):")
print(f"  at x={traj.x[mid]:.1f}: y1={traj.y1[mid]:.4f} y2={traj.y2[mid]:.4f} "
      f"predicted y2={exact_ldf_relation(traj.y1[mid], sys_fast.r):.4f}")

# buffer needed by the weak class for 90% continuity, plus sensitivities
req = ldf_buffer_requirement(sys_fast, eps1=0.1)
print(f"\nbuffer requirement at eps1=0.1: n1={req.n1:.3f} slots "
      f"(dn1/deps1={req.dn1_deps1:.1f}, dn1/dp1={req.dn1_dp1:.1f})")

# mixed assignment: tail term found by shooting; weak overtakes strong
mixed = integrate_mixed(sys_slow, 40.0)
ldf = integrate_pure_ldf(sys_slow, 40.0)
cross = np.nonzero(mixed.y1 > mixed.y2)[0]
print(f"\nmixed vs pure rarest-first at the deadline: "
      f"{mixed.y[-1]:.4f} vs {ldf.y[-1]:.4f}")
print(f"self-consistent tail term eps1={mixed.eps['eps1']:.5f}; "
      f"weak overtakes strong at x={mixed.x[cross[0]]:.2f}")

# stability at the filled-buffer corner: doubly degenerate under pure
# rarest-first, singly degenerate with one negative eigenvalue under mixed
pure = stability_jacobian(sys_slow, "pure_ldf", (1.0, 1.0))
mix = stability_jacobian(sys_slow, "mixed", (1.0, 1.0),
                         eps1=mixed.eps["eps1"])
print(f"\neigenvalues at (1,1): pure {np.round(pure.eigenvalues, 6)}, "
      f"mixed {np.round(mix.eigenvalues, 6)}")
