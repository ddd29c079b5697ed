"""Exact self-similar solution of a single Riemann problem.

This is deliberately a separate route from :func:`gasnet_wft.riemann.solve_classical`:
the middle density is found by matching velocities along the forward
1-wave curve and the backward 2-wave curve written in density (the usual
gas-dynamics textbook formulation), and fan interiors are evaluated from
the Riemann invariants directly.  It serves as the oracle for the front
tracker and for the refinement study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .eos import GasState, PressureLaw
from .exceptions import OutOfDomainError

__all__ = ["ExactRiemannSolution", "exact_riemann", "l1_distance_to_exact"]


def _shock_jump(law: PressureLaw, rho_a: float, rho_b: float) -> float:
    dp = law.pressure(rho_b) - law.pressure(rho_a)
    return math.sqrt(max(dp * (rho_b - rho_a), 0.0) / (rho_a * rho_b))


def _w_left_curve(law, u_l, rho):
    """Velocity reached from ``u_l`` across a 1-wave ending at density ``rho``."""
    w = u_l.q / u_l.rho
    if rho > u_l.rho:
        return w - _shock_jump(law, u_l.rho, rho)
    return w - (law.h(rho) - law.h(u_l.rho))


def _w_right_curve(law, u_r, rho):
    """Velocity that connects to ``u_r`` across a 2-wave starting at ``rho``."""
    w = u_r.q / u_r.rho
    if rho > u_r.rho:
        return w + _shock_jump(law, u_r.rho, rho)
    return w + (law.h(rho) - law.h(u_r.rho))


@dataclass(frozen=True)
class ExactRiemannSolution:
    law: PressureLaw
    left: GasState
    middle: GasState
    right: GasState
    shock1: bool
    shock2: bool
    # characteristic-speed intervals; a shock has both ends equal
    wave1: tuple[float, float]
    wave2: tuple[float, float]

    def sample(self, xi: float) -> GasState:
        """State at ``x / t == xi``."""
        law = self.law
        a, theta = law.a, law.theta
        if xi < self.wave1[0]:
            return self.left
        if xi < self.wave1[1]:
            # inside the 1-fan: w - a s = xi and w + (a/theta)(s-1) = v1
            v1 = self.left.q / self.left.rho + law.h(self.left.rho)
            s = (v1 + a / theta - xi) / (a + a / theta)
            rho = s ** (1.0 / theta)
            return GasState(rho, rho * (xi + a * s))
        if xi < self.wave2[0]:
            return self.middle
        if xi < self.wave2[1]:
            v2 = self.right.q / self.right.rho - law.h(self.right.rho)
            s = (xi - v2 + a / theta) / (a + a / theta)
            rho = s ** (1.0 / theta)
            return GasState(rho, rho * (xi - a * s))
        return self.right

    def edges(self) -> list[float]:
        return sorted({*self.wave1, *self.wave2})


def exact_riemann(law: PressureLaw, u_l: GasState, u_r: GasState) -> ExactRiemannSolution:
    def mismatch(rho):
        return _w_left_curve(law, u_l, rho) - _w_right_curve(law, u_r, rho)

    lo = 1e-12 * min(u_l.rho, u_r.rho)
    hi = 10.0 * max(u_l.rho, u_r.rho)
    if mismatch(lo) < 0:
        raise OutOfDomainError("exact Riemann solution contains vacuum")
    while mismatch(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise OutOfDomainError("no middle density found")
    rho_m = brentq(mismatch, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    w_m = _w_left_curve(law, u_l, rho_m)
    m = GasState(rho_m, rho_m * w_m)

    c = lambda r: law.a * r**law.theta  # noqa: E731
    shock1 = rho_m > u_l.rho
    if shock1:
        s = (m.q - u_l.q) / (m.rho - u_l.rho)
        wave1 = (s, s)
    else:
        wave1 = (u_l.q / u_l.rho - c(u_l.rho), w_m - c(rho_m))
    shock2 = rho_m > u_r.rho
    if shock2:
        s = (u_r.q - m.q) / (u_r.rho - m.rho)
        wave2 = (s, s)
    else:
        wave2 = (w_m + c(rho_m), u_r.q / u_r.rho + c(u_r.rho))
    return ExactRiemannSolution(law, u_l, m, u_r, shock1, shock2, wave1, wave2)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def l1_distance_to_exact(
    solution: ExactRiemannSolution,
    x0: float,
    t: float,
    breakpoints,
    states,
    domain: tuple[float, float],
) -> float:
    """L1 distance (``|drho| + |dq|``) between a piecewise-constant field and
    the exact solution centred at ``x0`` at time ``t``.

    ``breakpoints`` are the ``n + 1`` cell edges covering ``domain`` and
    ``states`` the ``n`` cell values.
    """
    cuts = set(float(b) for b in breakpoints)
    if t > 0:
        cuts.update(x0 + e * t for e in solution.edges())
    cuts = sorted(c for c in cuts if domain[0] <= c <= domain[1])
    edges = np.asarray(breakpoints, dtype=float)
    total = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        idx = min(max(int(np.searchsorted(edges, mid, side="right")) - 1, 0), len(states) - 1)
        rho_c, q_c = states[idx]
        xs = mid + 0.5 * (b - a) * _GL_X
        acc = 0.0
        for x, w in zip(xs, _GL_W):
            u = solution.sample((x - x0) / t) if t > 0 else (
                solution.left if x < x0 else solution.right
            )
            acc += w * (abs(u.rho - rho_c) + abs(u.q - q_c))
        total.append(0.5 * (b - a) * acc)
    return math.fsum(total)
