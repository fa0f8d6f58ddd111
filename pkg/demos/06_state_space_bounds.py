"""When does lumping peers into per-degree counts shrink the state space?

The lumped count is bracketed through contingency-table counting: the
variational bound chi(R, C) upper-bounds the number of tables with row sums
R (peers per degree) and column sums C (peers per buffer pattern), and a
convex minimisation evaluates it.  Everything is reported in natural logs.
"""

import math

from swarmsched import (ReductionInstance, check_reduction_conditions, chi,
                        count_contingency_bruteforce, omega_log_size)

# the bound against exact enumeration on a tiny instance
r, c = (3, 2), (2, 2, 1)
exact = count_contingency_bruteforce(r, c)
bound = chi(r, c)
print(f"tables with row sums {r}, column sums {c}: exact {exact}, "
      f"ln chi = {bound.log_chi:.4f} >= ln {exact} = {math.log(exact):.4f}")

# reduction conditions for a 4-peer, 2-slot system with degree split (3, 1)
inst = ReductionInstance(peer_count=4, buffer_len=2, row_sums=(3, 1), a0=1.0)
report = check_reduction_conditions(inst)
print(f"\nraw state space: ln|Omega| = {report.log_omega:.3f}")
print(f"admissible column-sum vectors: {report.column_count}")
print(f"ln chi over them: [{report.log_chi_min:.3f}, {report.log_chi_max:.3f}]")
print(f"lumped-size bracket: [{report.log_upsilon_lower:.3f}, "
      f"{report.log_upsilon_upper:.3f}]")
print(f"necessary condition holds: {report.necessary_holds}")
print(f"sufficient condition holds: {report.sufficient_holds}")

print(f"\nfor scale: ln|Omega| at M=1000, n=40 is "
      f"{omega_log_size(1000, 40):.1f} nats")
