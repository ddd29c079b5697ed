"""Acceptance suite.  Every criterion prints one PASS/FAIL line (repeated in
the terminal summary); tolerances are the pinned ones, never loosened."""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from gasnet_wft import FunctionalParams, GasState, NetworkConfig, PressureLaw, SimConfig, Simulation, mirror
from gasnet_wft.eos import eigenvalues
from gasnet_wft.exact_riemann import exact_riemann, l1_distance_to_exact
from gasnet_wft.front_tracking import run_line
from gasnet_wft.riemann import RESIDUAL_TOL, junction_residuals
from gasnet_wft.functionals import verify_decay
from gasnet_wft.scenario import parse_scenario, random_scenario
from gasnet_wft.snapshot import PipeField, l1_distance
from gasnet_wft.stability import compare_runs

LAW = PressureLaw(1.0, 2.0)
EPS64 = np.finfo(float).eps

# -- shared compliant runs (criteria 2-5) ----------------------------------------

N_RUNS = 100
PIPES = (2, 3, 5)
GAMMAS = (0.0, 0.5, 1.0)
NETS_PER_N = 2
AMPLITUDE = 2e-3
EPSILON = 2e-3
# equilibrium sum nu F required of pool networks, well above the O(amplitude) shifts
DISSIPATION_MARGIN = 1e-4
T_END = 1.5


def _network_pool():
    """Random dissipative networks with constants calibrated on the
    neighbourhood the runs explore; each is shared by many runs."""
    pool = {}
    for n in PIPES:
        seed, j = 1000 * n, 0
        while j < NETS_PER_N:
            doc = random_scenario(seed, n_pipes=n, amplitude=AMPLITUDE, gamma_w=0.0, verify_decay=False)
            seed += 1
            probe = {**doc, "functionals": {**doc["functionals"], "constants": dict.fromkeys(
                ("K", "K_J", "C_b", "c_min", "Lambda_max"), 1.0)}}
            net = parse_scenario(probe).network
            # perturbed junction traces must keep dissipating energy
            if junction_residuals(LAW, net.nu_norms, net.equilibria)[2] > -DISSIPATION_MARGIN:
                continue
            sc = parse_scenario(doc)
            pool[n, j] = (sc.network, dict(sc.constants))
            j += 1
    return pool


def _run_doc(net: NetworkConfig, consts: dict, gamma: float, seed: int, jumps: int) -> dict:
    # gains at 80 % of the boundary bound for this gamma
    kb = FunctionalParams.compliant(gamma, **consts).gain_bound()
    return {
        "law": {"kappa": 1.0, "gamma_exp": 2.0},
        "network": {
            "nu_norms": list(net.nu_norms),
            "gains": [0.8 * kb] * net.n_pipes,
            "equilibria": [[u.rho, u.q] for u in net.equilibria],
            "subsonic_radius": net.subsonic_radius,
        },
        "initial": {"random": {"amplitude": AMPLITUDE, "jumps": jumps}},
        "run": {"epsilon": EPSILON, "t_end": T_END, "seed": seed},
        "functionals": {"gamma_w": gamma, "verify_decay": True, "constants": consts},
    }


@pytest.fixture(scope="module")
def compliant_runs():
    t0 = time.perf_counter()
    pool = _network_pool()
    t_cal = time.perf_counter() - t0
    runs = []
    t0 = time.perf_counter()
    for i in range(N_RUNS):
        n = PIPES[i % 3]
        net, consts = pool[n, (i // 3) % NETS_PER_N]
        gamma = GAMMAS[(i // (3 * NETS_PER_N)) % 3]
        sc = parse_scenario(_run_doc(net, consts, gamma, seed=i, jumps=1 + i % 2))
        cfg = sc.sim_config()
        trace = Simulation(cfg, validate=False).run()
        runs.append({"n": n, "gamma": gamma, "cfg": cfg, "trace": trace,
                     "decay": verify_decay(trace, cfg.params)})
    t_runs = time.perf_counter() - t0
    return {"runs": runs, "t_calibration": t_cal, "t_runs": t_runs}


# -- 1 ---------------------------------------------------------------------------


def _riemann_cases(n, rng):
    cases = []
    while len(cases) < n:
        ul = GasState(1.0 + rng.uniform(-0.1, 0.1), rng.uniform(-0.3, 0.3))
        tv = rng.uniform(0.01, 0.1)
        w = rng.uniform()
        ur = GasState(ul.rho + rng.choice([-1, 1]) * w * tv, ul.q + rng.choice([-1, 1]) * (1 - w) * tv)
        sol = exact_riemann(LAW, ul, ur)
        if not all(l1 < 0 < l2 for l1, l2 in (eigenvalues(LAW, u) for u in (ul, sol.middle, ur))):
            continue
        speed = max(abs(s) for s in (*sol.wave1, *sol.wave2))
        # the waves start at 0.5 and stay clear of both ends
        cases.append((ul, ur, sol, 0.45 / speed))
    return cases


def test_1_riemann_oracle(acceptance):
    cases = _riemann_cases(50, np.random.default_rng(1))
    worst = {}
    t0 = time.perf_counter()
    for eps in (1e-2, 1e-3):
        ratios = []
        for ul, ur, sol, t_end in cases:
            tr = run_line(LAW, [(0.5, *ul), (1.0, *ur)], eps, t_end, n_samples=2)
            assert tr.n_events == 0
            f = tr.final.fields[0]
            ratios.append(l1_distance_to_exact(sol, 0.5, t_end, f.edges, f.states, (0.0, 1.0)) / eps)
        worst[eps] = max(ratios)
    elapsed = time.perf_counter() - t0
    ok = all(v <= 5.0 for v in worst.values()) and elapsed < 10.0
    acceptance(1, ok, "50 Riemann data, max L1/eps = "
               + ", ".join(f"{v:.3f} at eps={e:g}" for e, v in worst.items())
               + f" (bound 5); runtime {elapsed:.2f} s (bound 10 s)")
    assert ok


# -- 2 ---------------------------------------------------------------------------


def test_2_junction_boundary_residuals(acceptance, compliant_runs):
    runs = compliant_runs["runs"]
    res = {k: 0.0 for k in ("junction_mass", "junction_pressure", "boundary")}
    entropy = -math.inf
    for r in runs:
        tr = r["trace"]
        for k in res:
            res[k] = max(res[k], abs(tr.residuals[k]))
        entropy = max(entropy, tr.residuals["junction_entropy"])
    ok = all(v <= 1e-9 for v in res.values()) and entropy <= 1e-9
    counts = {n: sum(r["n"] == n for r in runs) for n in PIPES}
    acceptance(2, ok, f"{len(runs)} compliant runs (N: {counts}), max mass {res['junction_mass']:.2e}, "
               f"pressure mismatch {res['junction_pressure']:.2e}, boundary {res['boundary']:.2e}, "
               f"entropy sum max {entropy:.2e} (bound 1e-9)")
    assert ok


# -- 3 ---------------------------------------------------------------------------


def test_3_glimm_monotonicity(acceptance, compliant_runs):
    runs = compliant_runs["runs"]
    for r in runs:
        p = r["cfg"].params
        assert p.kappa_q > p.kappa_bound()
        assert all(k <= p.gain_bound() for k in r["cfg"].network.gains)
    viol = sum(r["decay"].n_dJ_violations for r in runs)
    floor = sum(r["decay"].n_dJ_roundoff for r in runs)
    n_ev = sum(r["decay"].n_events for r in runs)
    max_dj = max(r["decay"].max_dJ for r in runs)
    by_g = {g: sum(r["gamma"] == g for r in runs) for g in GAMMAS}
    ok = viol == 0
    acceptance(3, ok, f"{n_ev} events in {len(runs)} runs (gamma_w: {by_g}), {viol} violations of "
               f"dJ <= 0; {floor} positive dJ within the roundoff floor (16 eps per changed wave, "
               f"largest dJ {max_dj:.2e})")
    assert ok


# -- 4 ---------------------------------------------------------------------------


def test_4_exponential_decay(acceptance, compliant_runs):
    runs = [r for r in compliant_runs["runs"] if r["gamma"] == 1.0]
    t_suite = compliant_runs["t_runs"]
    point = [r["decay"].worst_pointwise_ratio for r in runs]
    nus = [r["decay"].tv_rate for r in runs if r["decay"].tv0 > 0]
    cs = [r["decay"].tv_C / r["decay"].tv_C_bound for r in runs if r["decay"].tv0 > 0]
    ok_point = all(r["decay"].pointwise_ok for r in runs)
    ok_tv = all(r["decay"].tv_ok for r in runs)
    ok = ok_point and ok_tv and t_suite < 60.0
    acceptance(4, ok, f"{len(runs)} runs at gamma_w=1: worst J(t)/(J(0+) e^(-c t)) = {max(point):.9f} "
               f"(bound 1+1e-6); TV rate nu in [{min(nus):.3f}, {max(nus):.3f}], "
               f"max C/(4 K_J e^g) = {max(cs):.3f}; suite runtime {t_suite:.1f} s for {N_RUNS} runs "
               f"(bound 60 s; shared calibration {compliant_runs['t_calibration']:.1f} s)")
    assert ok


# -- 5 ---------------------------------------------------------------------------


def test_5_interaction_estimates(acceptance, compliant_runs):
    # strengths come out of Newton solves stopped at RESIDUAL_TOL on O(1)
    # states, so each carries an absolute error of a few 1e-14
    floor = 10 * RESIDUAL_TOL
    worst = {"collision": 0.0, "junction": 0.0, "boundary": 0.0}
    counts = dict.fromkeys(worst, 0)
    viol = n_floor = 0
    for r in compliant_runs["runs"]:
        p, net = r["cfg"].params, r["cfg"].network
        for e in r["trace"].events:
            if e.kind == "collision":
                (fa, sa), (fb, sb) = e.incoming
                inc = {1: 0.0, 2: 0.0}
                out = {1: 0.0, 2: 0.0}
                inc[fa] += sa
                inc[fb] += sb
                for _, f, s in e.outgoing:
                    out[f] += s
                lhs = abs(out[1] - inc[1]) + abs(out[2] - inc[2])
                rhs = p.K * abs(sa * sb)
            elif e.kind == "junction":
                ((_, s_in),) = e.incoming
                lhs = math.fsum(abs(s) for _, _, s in e.outgoing)
                rhs = p.K_J * abs(s_in)
            else:
                ((_, s_in),) = e.incoming
                lhs = abs(e.outgoing[0][2])
                rhs = p.C_b * net.gains[e.pipe] * abs(s_in)
            counts[e.kind] += 1
            if lhs <= rhs:
                worst[e.kind] = max(worst[e.kind], lhs / rhs if rhs > 0 else 0.0)
            elif lhs <= rhs + floor:
                n_floor += 1
            else:
                viol += 1
    ok = viol == 0
    acceptance(5, ok, f"{viol} violations over {counts}; worst ratio to calibrated bound "
               + ", ".join(f"{k} {v:.3f}" for k, v in worst.items())
               + f"; {n_floor} events exceed the bound by less than the solver floor {floor:.0e}")
    assert ok


# -- 6 ---------------------------------------------------------------------------

EPS6 = 8e-3
T6 = 0.75


def _perturb(segs, a, b, d):
    """Add ``d`` to the density on ``(a, b)``."""
    out, prev = [], 0.0
    for xr, rho, q in segs:
        cuts = sorted({prev, xr, *(x for x in (a, b) if prev < x < xr)})
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            out.append((x1, rho + (d if a < 0.5 * (x0 + x1) < b else 0.0), q))
        prev = xr
    return out


def test_6_lipschitz_semigroup(acceptance):
    doc = random_scenario(62, n_pipes=2, amplitude=AMPLITUDE, jumps=2, gamma_w=0.0, verify_decay=False)
    base = parse_scenario(doc)
    rng = np.random.default_rng(6)
    pairs = []
    for k in range(20):
        delta = 10 ** rng.uniform(-4, -2)
        a = rng.uniform(0.05, 0.5)
        ini = [list(s) for s in base.initial]
        ini[k % 2] = _perturb(ini[k % 2], a, a + 0.4, delta / 0.4)
        pairs.append((delta, ini))
    reps = {}
    for eps in (EPS6, EPS6 / 2):
        cfg_a = replace(base.sim_config(eps), t_end=T6)
        reps[eps] = [compare_runs(cfg_a, replace(cfg_a, initial=ini), params=cfg_a.params)
                     for _, ini in pairs]
    first = reps[EPS6]
    deltas = np.array([d for d, _ in pairs])
    l1_0 = np.array([r.l1_initial for r in first])
    assert np.allclose(l1_0, deltas, rtol=1e-9)
    ratios = np.array([r.sup_l1 for r in first]) / l1_0
    L = float(ratios.max())
    ok_l = math.isfinite(L) and all(r.sup_l1 <= L * r.l1_initial for r in first)
    # Phi may not increase at events beyond roundoff (1e-12 of its size)
    jumps = [r.max_phi_jump / max(p.phi for p in r.points) for rs in reps.values() for r in rs]
    ok_jump = max(jumps) <= 1e-12
    # growth constant fitted at eps, checked at eps / 2
    C = max(r.growth_constant for r in first)
    half = max(r.max_phi_growth_rate for r in reps[EPS6 / 2])
    ok_growth = half <= C * EPS6 / 2
    ok = ok_l and ok_jump and ok_growth
    acceptance(6, ok, f"20 pairs, delta in [{deltas.min():.1e}, {deltas.max():.1e}]: fitted L = {L:.3f} "
               f"(ratios {ratios.min():.3f}..{L:.3f}) {'ok' if ok_l else 'FAIL'}; max Phi jump / Phi = "
               f"{max(jumps):.1e} {'ok' if ok_jump else 'FAIL'}; growth C fitted at eps={EPS6:g}: "
               f"{C:.4g}, max rate at eps/2 {half:.3e} vs C eps/2 = {C * EPS6 / 2:.3e} "
               f"{'ok' if ok_growth else 'FAIL'}")
    assert ok


# -- 7 ---------------------------------------------------------------------------

REFINE_DOC = {
    "law": {"kappa": 1.0, "gamma_exp": 2.0},
    "network": {
        "nu_norms": [1.0, 1.5],
        "gains": [0.002, 0.002],
        "equilibria": [[1.0, 0.15], [1.0062615094842269, -0.1]],
        "subsonic_radius": 0.2,
    },
    "initial": [
        [[0.3, 1.02, 0.15], [0.6, 0.99, 0.17], [1.0, 1.0, 0.15]],
        [[0.5, 1.0062615094842269, -0.1], [1.0, 1.03, -0.08]],
    ],
    "run": {"epsilon": 0.008, "t_end": 0.3, "seed": 0, "n_samples": 2},
    "functionals": {"gamma_w": 0.0},
}


def test_7_refinement(acceptance):
    sc = parse_scenario(REFINE_DOC)
    eps = [0.008 / 2**k for k in range(5)]
    finals = [Simulation(sc.sim_config(e), validate=False).run().final for e in eps]
    dist = [l1_distance(a, b) for a, b in zip(finals[:-1], finals[1:])]
    orders = [math.log2(a / b) for a, b in zip(dist[:-1], dist[1:])]
    monotone = all(b < a for a, b in zip(dist[:-1], dist[1:]))
    ok = monotone and min(orders) >= 0.8
    acceptance(7, ok, "L1(eps, eps/2) at t_end over 4 halvings from eps=0.008: "
               + ", ".join(f"{d:.3e}" for d in dist)
               + f"; monotone {monotone}; orders " + ", ".join(f"{o:.3f}" for o in orders) + " (bound 0.8)")
    assert ok


# -- 8 ---------------------------------------------------------------------------


def _restrict(f: PipeField, lo: float, hi: float, flip: bool) -> PipeField:
    """Part of a line field on ``(lo, hi)`` as a pipe field on ``(0, 1)``;
    ``flip`` maps ``x -> -x`` and mirrors the states."""
    edges = np.clip(f.edges, lo, hi)
    states = f.states.copy()
    if flip:
        edges = -edges[::-1]
        states = states[::-1] * np.array([1.0, -1.0])
    keep = np.diff(edges) > 0
    e = np.concatenate(([edges[:-1][keep][0]], edges[1:][keep]))
    return PipeField(e, states[keep])


def test_8_equilibrium_and_symmetry(acceptance):
    # (a) equilibria of random networks stay put
    still = True
    for seed, n in ((81, 2), (82, 3), (83, 5)):
        sc = parse_scenario({**random_scenario(seed, n_pipes=n, verify_decay=False,
                                               constants={"K": 1, "K_J": 1, "C_b": 1, "c_min": 1,
                                                          "Lambda_max": 1}),
                             "initial": None})
        sim = Simulation(replace(sc.sim_config(), t_end=50.0))
        tr = sim.run()
        still &= tr.n_events == 0 and tr.n_fronts_max == 0 and sim.peek() is None
        still &= all(np.array_equal(f.states, [[u.rho, u.q]]) for f, u in zip(tr.final.fields, sc.network.equilibria))
    # (b) mirrored 2-pipe run against the classical line run on (-1, 1)
    ub = GasState(1.0, 0.1)
    net = NetworkConfig((1.0, 1.0), (0.01, 0.01), (mirror(ub), ub), 0.2)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(5):
        segs = []
        for u0 in net.equilibria:
            xs = sorted(rng.uniform(0.02, 0.45, 3)) + [1.0]
            segs.append([(x, u0.rho + rng.uniform(-0.01, 0.01), u0.q + rng.uniform(-0.01, 0.01)) for x in xs])
            segs[-1][-1] = (1.0, u0.rho, u0.q)
        # x < 0 of the line is pipe 1 read backwards with mirrored states
        p1 = segs[0]
        line = [(-p1[k - 1][0], p1[k][1], -p1[k][2]) for k in range(len(p1) - 1, 0, -1)]
        line.append((0.0, p1[0][1], -p1[0][2]))
        line += segs[1]
        t_end = 0.3
        net_tr = Simulation(SimConfig(LAW, net, segs, 5e-3, t_end, n_samples=2)).run()
        assert not any(e.kind == "boundary" for e in net_tr.events)
        line_tr = run_line(LAW, line, 5e-3, t_end, domain=(-1.0, 1.0), n_samples=2)
        lf = line_tr.final.fields[0]
        d = (l1_distance([_restrict(lf, -1.0, 0.0, True)], [net_tr.final.fields[0]])
             + l1_distance([_restrict(lf, 0.0, 1.0, False)], [net_tr.final.fields[1]]))
        worst = max(worst, d)
    ok = still and worst <= 1e-9
    acceptance(8, ok, f"equilibria of 2/3/5-pipe networks: zero fronts up to t=50 {still}; mirrored "
               f"2-pipe run vs line run on (-1, 1), max L1 over 5 data = {worst:.2e} (bound 1e-9)")
    assert ok
