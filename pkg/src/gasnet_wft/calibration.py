"""Monte-Carlo estimates of the interaction constants.

The local theory only asserts that ``K``, ``K_J`` and ``C_b`` exist.  Here
each is estimated as the largest amplification ratio over random
elementary interactions near the equilibria, refined by a local search from
the best draws, then inflated by a safety factor.  ``c_min`` and ``Lambda_max`` come from eigenvalue extrema over the
validation balls (sampled including their rims).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass
from functools import partial
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .eos import GasState, PressureLaw, eigenvalues
from .exceptions import ConfigError, DomainError, SolverError
from .lax_curves import backward_lax_state, lax_state
from .network import NetworkConfig
from .riemann import solve_boundary, solve_classical, solve_junction

__all__ = ["CalibratedConstants", "calibrate_constants", "SAFETY", "PROBE_GAIN"]

SAFETY = 1.25
PROBE_GAIN = 1e-3
# local searches per constant and their evaluation budget
N_POLISH = 3
POLISH_EVALS = 200


@dataclass(frozen=True)
class CalibratedConstants:
    K: float
    K_J: float
    C_b: float
    c_min: float
    Lambda_max: float
    n_samples: int
    max_strength: float
    # interaction sampling radius (speeds always use the validation ball)
    radius: float
    # raw maxima before the safety factor
    raw: dict

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("K", "K_J", "C_b", "c_min", "Lambda_max")}

    def to_dict(self) -> dict:
        return asdict(self)


def _ball(ub: GasState, r: float, z0: float, z1: float) -> GasState:
    # area-uniform point of the disc for uniform (z0, z1)
    ang = 2 * np.pi * z0
    rad = r * math.sqrt(min(max(z1, 0.0), 1.0))
    return GasState(ub.rho + rad * math.cos(ang), ub.q + rad * math.sin(ang))


def _strength(z: float, s_max: float) -> float:
    # signed, log-uniform magnitude in [1e-3, 1] * s_max
    w = 2.0 * z - 1.0
    return math.copysign(s_max * 10 ** (-3 * (1 - abs(w))), w)


def _pipe_ratio(law, ub, r, s_max, kind, z) -> float:
    """One approaching pair in the ball around ``ub``:
    ``(sum_i |sigma_i+ - incoming family-i|) / |sigma' sigma''|``."""
    u = _ball(ub, r, z[0], z[1])
    a = _strength(z[2], s_max)
    b = _strength(z[3], s_max)
    if kind == 0:
        # 2-wave on the left meets a 1-wave on the right
        m = lax_state(law, u, 2, a)
        v = lax_state(law, m, 1, b)
        inc = {1: b, 2: a}
    else:
        # same family, at least one shock; the shock must be the faster one
        if a >= 0:
            b = -abs(b)
        m = lax_state(law, u, kind, a)
        v = lax_state(law, m, kind, b)
        inc = {kind: a + b, 3 - kind: 0.0}
    sol = solve_classical(law, u, v)
    d = abs(sol.sigma1 - inc[1]) + abs(sol.sigma2 - inc[2])
    return d / abs(a * b)


def _junction_ratio(law, net, r, s_max, p, z) -> float:
    n = net.n_pipes
    states = [_ball(ub, 0.5 * r, z[2 * i], z[2 * i + 1]) for i, ub in enumerate(net.equilibria)]
    traces = list(solve_junction(law, net.nu_norms, states, entropy_tol=None).traces)
    s = _strength(z[2 * n], s_max)
    # a 1-wave with the trace on its left reaches x = 0
    traces[p] = lax_state(law, traces[p], 1, s)
    out = solve_junction(law, net.nu_norms, traces, entropy_tol=None)
    return math.fsum(abs(x) for x in out.sigmas) / abs(s)


def _boundary_ratio(law, net, r, s_max, p, z) -> float:
    # the ratio has a finite limit as k -> 0, so gainless pipes use a probe
    k = net.gains[p] or PROBE_GAIN
    ub = net.equilibria[p]
    _, u = solve_boundary(law, _ball(ub, 0.5 * r, z[0], z[1]), ub, k)
    s = _strength(z[2], s_max)
    # the incoming 2-wave has the boundary trace on its right
    left = backward_lax_state(law, u, 2, s)
    sig, _ = solve_boundary(law, left, ub, k)
    return abs(sig) / (k * abs(s))


def _safe(f, z) -> float:
    # failed solves (an excursion out of the subsonic region) count as 0
    try:
        v = f(np.clip(z, 0.0, 1.0))
    except (DomainError, SolverError):
        return 0.0
    return v if math.isfinite(v) else 0.0


def _polish(f, z0, maxfev: int) -> float:
    """Local maximum of ``f`` over the unit cube near ``z0`` (bounded
    quasi-Newton with finite-difference gradients)."""
    res = minimize(lambda z: -_safe(f, z), z0, method="L-BFGS-B",
                   bounds=[(0.0, 1.0)] * len(z0),
                   options={"maxfun": maxfev, "eps": 1e-7, "ftol": 1e-12})
    return max(-float(res.fun), _safe(f, res.x))


def calibrate_constants(
    law: PressureLaw,
    network: Union[NetworkConfig, Sequence[NetworkConfig]],
    radius: Optional[float] = None,
    n_samples: int = 400,
    max_strength: Optional[float] = None,
    seed: int = 0,
    safety: float = SAFETY,
    n_polish: int = N_POLISH,
    maxfev: int = POLISH_EVALS,
) -> CalibratedConstants:
    """Estimate ``(K, K_J, C_b, c_min, Lambda_max)``.

    Each ratio is sampled at ``n_samples`` random elementary interactions
    (states in the ball, log-uniform strengths).  The best draw of every
    interaction type and the best ``n_polish`` draws of each constant then
    seed a bounded quasi-Newton search for the local maximum, so the estimate tracks the supremum instead of a sample
    maximum that creeps up with ``n_samples``.

    Parameters
    ----------
    network : NetworkConfig or sequence of NetworkConfig
        Several networks give constants valid for all of them.
    radius : float, optional
        Radius of the neighbourhood of each equilibrium where interactions
        are sampled (defaults to the network's ``subsonic_radius``).  Near
        the sonic line the junction amplification is unbounded, so this
        should match the states a run can reach.  ``c_min`` and
        ``Lambda_max`` always cover the whole validation ball.
    n_samples : int
        Samples per interaction type and per network.
    max_strength : float, optional
        Largest wave strength sampled (defaults to ``radius``).  The
        in-pipe ratio grows with strength, so this should cover the waves
        of the runs the constants are used for.

    Raises
    ------
    ConfigError
        If ``n_samples`` is too small to give any nonzero ratio.
    """
    if n_samples < 1:
        raise ConfigError(f"need at least one sample, got {n_samples!r}", "n_samples")
    nets = [network] if isinstance(network, NetworkConfig) else list(network)
    if not nets:
        raise ConfigError("no network to calibrate", "network")
    rng = np.random.default_rng(seed)
    best = {"K": 0.0, "K_J": 0.0, "C_b": 0.0}
    c_lo, lam_hi = math.inf, 0.0
    for net in nets:
        rv = net.subsonic_radius
        r = rv if radius is None else min(float(radius), rv)
        s_max = r if max_strength is None else float(max_strength)
        n = net.n_pipes
        # speed extrema: rim of each validation ball plus interior draws
        for ub in net.equilibria:
            ang = np.linspace(0, 1, 256, endpoint=False)
            pts = [_ball(ub, rv, a, 1.0) for a in ang]
            pts += [_ball(ub, rv, *rng.uniform(size=2)) for _ in range(n_samples)]
            for u in pts:
                l1, l2 = eigenvalues(law, u)
                c_lo = min(c_lo, -l1, l2)
                lam_hi = max(lam_hi, abs(l1), abs(l2))
        # one objective per interaction type: (constant, objective, cube dimension)
        types = [("K", partial(_pipe_ratio, law, ub, r, s_max, kind), 4)
                 for ub in net.equilibria for kind in (0, 1, 2)]
        types += [("K_J", partial(_junction_ratio, law, net, r, s_max, p), 2 * n + 1) for p in range(n)]
        types += [("C_b", partial(_boundary_ratio, law, net, r, s_max, p), 3) for p in range(n)]
        draws = []
        for _ in range(n_samples):
            for i in (int(rng.integers(3 * n)), 3 * n + int(rng.integers(n)), 4 * n + int(rng.integers(n))):
                z = rng.uniform(size=types[i][2])
                v = _safe(types[i][1], z)
                if v > 0:
                    draws.append((v, len(draws), i, z))
        # local searches start from the best draw of every type and from
        # the best n_polish draws of every constant
        seeds = {}
        for d in sorted(draws, key=lambda d: (-d[0], d[1])):
            name = types[d[2]][0]
            rank = sum(types[i][0] == name for i, _ in seeds)
            if d[2] not in {i for i, _ in seeds} or rank < n_polish:
                seeds[(d[2], d[1])] = d
        for v, _, i, z in seeds.values():
            name, f, _ = types[i]
            best[name] = max(best[name], v, _polish(f, z, maxfev))
    if best["K"] == 0.0:
        raise ConfigError("too few usable samples to estimate the constants", "n_samples")
    raw = {**best, "c_min": c_lo, "Lambda_max": lam_hi}
    return CalibratedConstants(
        K=safety * best["K"],
        K_J=max(1.0, safety * best["K_J"]),
        C_b=safety * best["C_b"] if best["C_b"] > 0 else 1.0,
        c_min=c_lo / safety,
        Lambda_max=safety * lam_hi,
        n_samples=n_samples,
        max_strength=float(s_max),
        radius=float(r),
        raw=raw,
    )
