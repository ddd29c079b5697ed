"""Co-evolution of two runs on the same network: L1 distance and the
stability functional Phi along a shared time line."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .front_tracking import SimConfig, Simulation
from .functionals import FunctionalParams, j_gamma, phi_distance
from .snapshot import l1_distance

__all__ = ["ComparePoint", "CompareReport", "compare_runs"]


@dataclass(frozen=True)
class ComparePoint:
    t: float
    # "sample", or "<kind>-" / "<kind>+" for the two limits at an event
    label: str
    run: str
    phi: float
    l1: float


@dataclass
class CompareReport:
    points: list[ComparePoint]
    kappa1: float
    kappa2: float
    epsilon: float
    l1_initial: float
    sup_l1: float
    lipschitz_ratio: float
    max_phi_jump: float
    max_phi_growth_rate: float
    n_events: int
    w_max: float
    # (t1, t2, Phi(t2-) - Phi(t1+)) for every event-free interval
    intervals: list[tuple[float, float, float]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def growth_constant(self) -> float:
        """Largest between-event growth rate of Phi divided by epsilon."""
        return max(self.max_phi_growth_rate, 0.0) / self.epsilon

    def to_dict(self) -> dict:
        d = asdict(self)
        d["growth_constant"] = self.growth_constant
        d.pop("points")
        d.pop("intervals")
        return d


def _a_max(sims) -> float:
    # A never exceeds the total strength of both solutions in one pipe
    tot = 0.0
    for p in range(len(sims[0].pipes)):
        tot = max(tot, sum(abs(f.sigma) for s in sims for f in s.pipes[p].fronts))
    return tot


def compare_runs(
    cfg_a: SimConfig,
    cfg_b: SimConfig,
    kappa2: float = 10.0,
    kappa1: Optional[float] = None,
    params: Optional[FunctionalParams] = None,
    n_samples: int = 21,
    phi_rtol: float = 1e-12,
) -> CompareReport:
    """Evolve two configurations side by side.

    ``Phi`` is evaluated on a uniform grid and at both limits of every event
    of either run.  ``kappa1`` defaults to the value that keeps all weights
    in ``[1, 2]`` at ``t = 0`` (the bound persists because ``A`` and ``J0``
    do not increase).

    Returns
    -------
    CompareReport
        ``max_phi_jump`` is the largest ``Phi(t+) - Phi(t-)`` over events;
        ``max_phi_growth_rate`` the largest ``(Phi(t2-) - Phi(t1+) - tol) /
        (t2 - t1)`` over event-free intervals, where ``tol = phi_rtol * max
        Phi`` discounts roundoff, which would otherwise dominate on very
        short intervals.
    """
    law = cfg_a.law
    if cfg_a.network != cfg_b.network or cfg_a.law != cfg_b.law:
        raise ValueError("runs must share law and network")
    params = params or cfg_a.params or FunctionalParams()
    sims = (Simulation(cfg_a), Simulation(cfg_b))
    t_end = min(cfg_a.t_end, cfg_b.t_end)
    p0 = params.with_gamma(0.0)
    snaps = [s.snapshot(0.0) for s in sims]
    j0 = sum(j_gamma(sn.fronts, p0) for sn in snaps)
    if kappa1 is None:
        denom = _a_max(sims) + kappa2 * j0
        kappa1 = 1.0 / denom if denom > 0 else 1.0
    cache: dict = {}
    pts: list[ComparePoint] = []
    w_max = 1.0

    def measure(t, label, who):
        nonlocal w_max
        a, b = sims[0].snapshot(t), sims[1].snapshot(t)
        phi, w = phi_distance(law, a, b, kappa1, kappa2, params, cache=cache, return_parts=True)
        w_max = max(w_max, w)
        pts.append(ComparePoint(t, label, who, phi, l1_distance(a, b)))

    measure(0.0, "sample", "")
    l1_0 = pts[0].l1
    grid = list(np.linspace(0.0, t_end, max(n_samples, 2))[1:])
    jumps, spans = [], []
    last_t, last_phi = 0.0, pts[0].phi
    n_ev = 0
    while True:
        peeks = [s.peek() for s in sims]
        cand = [(e.time, i) for i, e in enumerate(peeks) if e is not None and e.time <= t_end]
        t_ev, who = min(cand) if cand else (math.inf, -1)
        while grid and grid[0] < t_ev:
            measure(float(grid.pop(0)), "sample", "")
        if who < 0:
            break
        # every event of either run at this instant is resolved before the
        # right limit is measured, so identical runs stay identical
        movers = [i for i, e in enumerate(peeks) if e is not None and e.time == t_ev]
        kind = peeks[who].kind
        name = "".join("ab"[i] for i in movers)
        measure(t_ev, kind + "-", name)
        if t_ev > last_t:
            spans.append((last_t, t_ev, pts[-1].phi - last_phi))
        before = pts[-1].phi
        for i in movers:
            sims[i].step()
            n_ev += 1
            while (e := sims[i].peek()) is not None and e.time == t_ev:
                sims[i].step()
                n_ev += 1
        measure(t_ev, kind + "+", name)
        jumps.append(pts[-1].phi - before)
        last_t, last_phi = t_ev, pts[-1].phi
    if t_end > last_t:
        spans.append((last_t, t_end, pts[-1].phi - last_phi))
    sup_l1 = max(p.l1 for p in pts)
    tol = phi_rtol * max(p.phi for p in pts)
    rates = [(d - tol) / (t2 - t1) for t1, t2, d in spans]
    return CompareReport(
        points=pts,
        kappa1=kappa1,
        kappa2=kappa2,
        epsilon=min(cfg_a.epsilon, cfg_b.epsilon),
        l1_initial=l1_0,
        sup_l1=sup_l1,
        lipschitz_ratio=sup_l1 / l1_0 if l1_0 > 0 else (0.0 if sup_l1 == 0 else math.inf),
        max_phi_jump=max(jumps, default=0.0),
        max_phi_growth_rate=max(rates, default=0.0),
        n_events=n_ev,
        w_max=w_max,
        intervals=spans,
        notes=[f"Phi jumps and interval growth below {phi_rtol:g} * max Phi count as roundoff"],
    )
