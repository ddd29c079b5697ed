"""Front tracking on a single Riemann problem.

We start from one jump in a pipe, let the tracker split it into a shock and
a fan of small rarefaction fronts, and measure the L1 distance to the exact
self-similar solution as the rarefaction step ``eps`` shrinks.  Fans are
the only source of error here, so the distance falls linearly in ``eps``.

Run with ``python3 demos/demo_riemann.py``.
"""

from gasnet_wft import GasState, PressureLaw, run_line
from gasnet_wft.exact_riemann import exact_riemann, l1_distance_to_exact

law = PressureLaw(kappa=1.0, gamma_exp=2.0)

# gas at rest on the left, a slightly thinner stream moving right
ul = GasState(1.05, 0.0)
ur = GasState(0.95, 0.08)
sol = exact_riemann(law, ul, ur)
print("exact solution")
print(f"  middle state      rho={sol.middle.rho:.6f}  q={sol.middle.q:.6f}")
for fam, (lo, hi) in ((1, sol.wave1), (2, sol.wave2)):
    kind = "shock" if lo == hi else "rarefaction"
    print(f"  family {fam} {kind:<11s} speeds [{lo:+.4f}, {hi:+.4f}]")

t_end = 0.2
print(f"\nfront tracking at t={t_end}")
print("      eps   fronts      L1 error   L1/eps")
for eps in (2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3):
    tr = run_line(law, [(0.5, *ul), (1.0, *ur)], eps, t_end)
    f = tr.final.fields[0]
    err = l1_distance_to_exact(sol, 0.5, t_end, f.edges, f.states, (0.0, 1.0))
    print(f"  {eps:8.5f} {len(tr.final.fronts):7d} {err:13.3e} {err / eps:8.4f}")
