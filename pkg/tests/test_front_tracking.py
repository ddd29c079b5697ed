import math

import numpy as np
import pytest

from gasnet_wft import (
    ConfigError,
    GasState,
    InteractionCapExceeded,
    NetworkConfig,
    PressureLaw,
    SimConfig,
    Simulation,
    WaveFront,
    run,
    run_line,
)
from gasnet_wft.eos import eigenvalues
from gasnet_wft.exact_riemann import exact_riemann, l1_distance_to_exact
from gasnet_wft.front_tracking import discretize_initial, next_event, split_rarefaction
from gasnet_wft.lax_curves import backward_lax_state, lax_state, rarefaction_state, shock_state
from gasnet_wft.riemann import solve_junction

LAW = PressureLaw(1.0, 2.0)
UB = GasState(1.0, 0.0)


def _sym_net(gain=0.0):
    return NetworkConfig((1.0, 1.0), (gain, gain), (UB, UB), 0.2)


def _net_cfg(initial, gain=0.0, **kw):
    kw.setdefault("epsilon", 1e-2)
    kw.setdefault("t_end", 1.0)
    return SimConfig(LAW, _sym_net(gain), initial, **kw)


def _flat():
    return [(1.0, UB.rho, UB.q)]


def _plant(sim, specs):
    """Replace pipe 0's fronts by ``(x, speed)`` pairs of tiny rarefactions."""
    pipe = sim.pipes[0]
    states = [UB]
    fronts = []
    for k, (x, speed) in enumerate(specs):
        nxt = rarefaction_state(LAW, states[-1], 2, 1e-4)
        fronts.append(WaveFront(100 + k, 0, 2, x, 0.0, speed, states[-1], nxt, 1e-4))
        states.append(nxt)
    pipe.states, pipe.fronts = states, fronts
    sim._schedule(0)
    return sim


# -- discretize_initial --------------------------------------------------------


def test_discretize_segments_verbatim():
    segs = [(0.3, 1.0, 0.1), (1.0, 1.2, -0.1)]
    assert discretize_initial(segs, 1e-3) == segs


def test_discretize_constant_is_one_segment():
    out = discretize_initial(lambda x: (1.0, 0.2), 1e-3)
    assert out == [(1.0, 1.0, 0.2)]


def test_discretize_monotone_ramp():
    eps = 1e-3
    out = discretize_initial(lambda x: (1.0 + 0.1 * x, 0.0), eps)
    rho = np.array([s[1] for s in out])
    assert np.all(np.diff(rho) > 0)
    assert rho[-1] - rho[0] <= 0.1
    # L1 error of midpoint sampling of a linear ramp on m cells is 0.1 / (4 m)
    assert 0.1 / (4 * len(out)) < eps


# -- split_rarefaction ---------------------------------------------------------


def test_split_small_is_single_front():
    fr = split_rarefaction(LAW, UB, 2, 0.009, 0.01)
    assert len(fr) == 1 and fr[0].sigma == 0.009


def test_split_two_pieces():
    fr = split_rarefaction(LAW, UB, 1, 0.02, 0.01)
    assert [f.sigma for f in fr] == pytest.approx([0.01, 0.01], abs=1e-15)


@pytest.mark.parametrize("family", [1, 2])
def test_split_chain_matches_curve(family):
    sigma, eps = 0.037, 0.01
    fr = split_rarefaction(LAW, UB, family, sigma, eps)
    assert len(fr) == 4
    end = rarefaction_state(LAW, UB, family, sigma)
    assert abs(fr[-1].right.rho - end.rho) <= 1e-12 and abs(fr[-1].right.q - end.q) <= 1e-12
    for f in fr:
        nxt = rarefaction_state(LAW, f.left, family, f.sigma)
        assert abs(nxt.rho - f.right.rho) <= 1e-12 and abs(nxt.q - f.right.q) <= 1e-12
    for a, b in zip(fr, fr[1:]):
        assert a.right == b.left


def test_split_rejects_nonpositive():
    with pytest.raises(ValueError):
        split_rarefaction(LAW, UB, 1, 0.0, 0.01)


# -- initialize ----------------------------------------------------------------


def test_equilibrium_has_no_fronts():
    sim = Simulation(_net_cfg([_flat(), _flat()], gain=0.01))
    assert sim.fronts_at(0.0) == []
    assert next_event(sim) is None
    tr = sim.run()
    assert tr.n_events == 0
    assert all(s.TV == 0.0 and s.J == 0.0 for s in tr.samples)


def test_pure_shock_jump_gives_one_front():
    ur, _ = shock_state(LAW, UB, 2, -0.05)
    sim = Simulation(SimConfig(LAW, None, [[(0.5, *UB), (1.0, *ur)]], 1e-2, 0.1))
    fr = sim.fronts_at(0.0)
    assert len(fr) == 1
    assert fr[0].family == 2 and fr[0].sigma == pytest.approx(-0.05, abs=1e-12)


def test_rarefaction_jump_splits_into_fan():
    eps = 1e-2
    ur = rarefaction_state(LAW, UB, 2, 3.5 * eps)
    sim = Simulation(SimConfig(LAW, None, [[(0.5, *UB), (1.0, *ur)]], eps, 0.1))
    fr = sim.fronts_at(0.0)
    assert len(fr) == 4
    assert all(0 < f.sigma <= eps for f in fr)
    assert math.fsum(f.sigma for f in fr) == pytest.approx(3.5 * eps, abs=1e-12)


def test_invalid_config_names_field():
    with pytest.raises(ConfigError) as exc:
        Simulation(_net_cfg([_flat(), [(0.5, 1.0, 0.0), (0.4, 1.0, 0.0)]]))
    assert "initial[1]" in str(exc.value)


# -- next_event ----------------------------------------------------------------


def test_next_event_exit_time():
    ur = rarefaction_state(LAW, UB, 2, 5e-3)
    sim = Simulation(SimConfig(LAW, None, [[(0.5, *UB), (1.0, *ur)]], 1e-2, 1.0,
                               rarefaction_speed="left"))
    ev = next_event(sim)
    assert ev.kind == "exit_right"
    assert ev.time == pytest.approx(0.5 / eigenvalues(LAW, UB)[1], rel=1e-14)


def test_next_event_boundary_time():
    sim = _plant(Simulation(_net_cfg([_flat(), _flat()])), [(0.5, 2.0)])
    ev = next_event(sim)
    assert ev.kind == "boundary" and ev.time == pytest.approx(0.25, rel=1e-15)


def test_next_event_collision():
    sim = _plant(Simulation(_net_cfg([_flat(), _flat()])), [(0.2, 2.0), (0.8, -2.0)])
    ev = next_event(sim)
    assert ev.kind == "collision" and ev.time == pytest.approx(0.15, rel=1e-14)
    rec = sim.step()
    assert rec.position == pytest.approx(0.5, abs=1e-14)


def test_next_event_zero_speed_never_hits():
    sim = _plant(Simulation(_net_cfg([_flat(), _flat()])), [(0.5, 0.0)])
    assert next_event(sim) is None


# -- events --------------------------------------------------------------------


def test_junction_hit_matches_direct_solve():
    ul = backward_lax_state(LAW, UB, 1, -0.01)
    sim = Simulation(_net_cfg([[(0.5, *ul), (1.0, *UB)], _flat()]))
    while True:
        ev = next_event(sim)
        if ev.kind == "junction" and ev.pipe == 0:
            break
        sim.step()
    # traces the junction sees once the incoming front is gone
    traces = [sim.pipes[0].states[1], sim.pipes[1].states[0]]
    rec = sim.step()
    (fam, s_in), = rec.incoming
    assert fam == 1
    direct = solve_junction(LAW, (1.0, 1.0), traces)
    got = [s for _, _, s in rec.outgoing]
    assert got == pytest.approx(list(direct.sigmas), abs=1e-13)
    assert sim.trace.residuals["junction_mass"] <= 1e-12
    assert sim.trace.residuals["junction_pressure"] <= 1e-12


def test_zero_gain_boundary_absorbs():
    # a 2-rarefaction piece leaves v1 unchanged at the boundary
    ul = backward_lax_state(LAW, UB, 2, 5e-3)
    sim = Simulation(_net_cfg([[(0.5, *ul), (1.0, *UB)], _flat()], t_end=2.0))
    tr = sim.run()
    hits = [e for e in tr.events if e.kind == "boundary"]
    assert hits
    for e in hits:
        (fam, s_in), = e.incoming
        s_out = e.outgoing[0][2]
        assert fam == 2
        if s_in > 0:
            assert abs(s_out) <= 1e-12
        else:
            # the shock branch leaves v1 at third order
            assert abs(s_out) <= abs(s_in) ** 3
    assert tr.residuals["boundary"] <= 1e-12


@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_single_riemann_matches_exact(eps):
    ul, ur = GasState(1.05, 0.02), GasState(0.98, -0.03)
    t_end = 0.2
    tr = run_line(LAW, [(0.5, *ul), (1.0, *ur)], eps, t_end)
    f = tr.final.fields[0]
    d = l1_distance_to_exact(exact_riemann(LAW, ul, ur), 0.5, t_end, f.edges, f.states, (0.0, 1.0))
    assert d <= 5 * eps


def test_interaction_cap():
    segs = [(0.3, 1.0, 0.05), (0.6, 1.0, -0.05), (1.0, 1.0, 0.05)]
    with pytest.raises(InteractionCapExceeded) as exc:
        run_line(LAW, segs, 1e-2, 1.0, interaction_cap=1)
    assert exc.value.trace.n_events == 1


def test_run_is_deterministic():
    ul = backward_lax_state(LAW, UB, 2, -0.01)
    cfg = _net_cfg([[(0.3, *ul), (1.0, *UB)], [(0.6, 1.01, 0.0), (1.0, *UB)]], gain=0.01)
    a, b = run(cfg), run(cfg)
    key = lambda e: (e.time, e.kind, e.pipe, e.incoming, e.outgoing, e.dJ)  # noqa: E731
    assert [key(e) for e in a.events] == [key(e) for e in b.events]
    assert np.array_equal(a.final.fields[1].states, b.final.fields[1].states)


def test_fronts_stay_consistent():
    ul = backward_lax_state(LAW, UB, 2, -0.01)
    tr = run(_net_cfg([[(0.3, *ul), (1.0, *UB)], [(0.6, 1.01, 0.0), (1.0, *UB)]], gain=0.01))
    assert tr.n_events > 0
    assert tr.residuals["front_consistency"] <= 1e-10
    for f in tr.final.fronts:
        v = lax_state(LAW, f.left, f.family, f.sigma)
        assert abs(v.rho - f.right.rho) <= 1e-10 and abs(v.q - f.right.q) <= 1e-10
