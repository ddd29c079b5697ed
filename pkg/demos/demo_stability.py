"""L1 stability of the front tracking semigroup on a network.

Two runs share a network and differ by a density bump of total mass
``delta`` in one pipe.  They are evolved side by side; at every sample and
at both limits of every event we record their L1 distance and the weighted
distance ``Phi``.  The ratio ``sup L1 / L1(0)`` is the Lipschitz constant of
the flow on these data; ``Phi`` must not jump upwards at events.  Between
events ``Phi`` can still grow, because waves amplified at the junction
carry weights that do not absorb the amplification.

Run with ``python3 demos/demo_stability.py``.
"""

from dataclasses import replace

from gasnet_wft import compare_runs, parse_scenario, random_scenario

doc = random_scenario(seed=62, n_pipes=2, amplitude=2e-3, jumps=2, gamma_w=0.0, verify_decay=False)
base = parse_scenario(doc)


def bump(segs, a, b, d):
    """Add ``d`` to the density on ``(a, b)``."""
    out, prev = [], 0.0
    for xr, rho, q in segs:
        cuts = sorted({prev, xr, *(x for x in (a, b) if prev < x < xr)})
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            out.append((x1, rho + (d if a < 0.5 * (x0 + x1) < b else 0.0), q))
        prev = xr
    return out


print("     delta   L1(0)     sup L1   ratio   max Phi jump    Phi growth/eps")
for delta in (1e-2, 1e-3, 1e-4):
    for eps in (8e-3, 4e-3):
        cfg_a = replace(base.sim_config(eps), t_end=0.75)
        ini = [list(s) for s in base.initial]
        ini[0] = bump(ini[0], 0.3, 0.7, delta / 0.4)
        rep = compare_runs(cfg_a, replace(cfg_a, initial=ini), params=cfg_a.params)
        print(f"  {delta:8.0e} {rep.l1_initial:8.1e} {rep.sup_l1:9.2e} {rep.lipschitz_ratio:7.3f}"
              f" {rep.max_phi_jump:+14.2e} {rep.growth_constant:17.4f}   (eps={eps:g})")

print("\nThe ratio stays near 2 for every delta, and Phi never jumps up at an event.")
print("The between-event growth rate of Phi is the same at both eps, so rate/eps doubles")
print("when eps halves: the growth comes from junction amplification, not from the")
print("rarefaction discretization.")
