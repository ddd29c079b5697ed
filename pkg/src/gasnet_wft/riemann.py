"""Riemann solvers: inside a pipe, at the junction, and at the feedback boundary.

All three return wave strengths in the eigenvalue-shift parametrization of
:mod:`gasnet_wft.lax_curves`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .eos import (
    GasState,
    PressureLaw,
    dynamic_pressure,
    eigenvalues,
    energy_flux,
    riemann_invariants,
)
from .exceptions import DomainError, JunctionEntropyError, OutOfDomainError, SolverError
from .lax_curves import backward_lax_state, integral_curve_state, lax_state, lax_state_with_speed
from .roots import bracketed_newton, expand_bracket

__all__ = [
    "WavePattern",
    "ClassicalSolution",
    "JunctionSolution",
    "solve_classical",
    "solve_junction",
    "solve_boundary",
    "boundary_residual",
    "junction_residuals",
]

RESIDUAL_TOL = 1e-13


@dataclass(frozen=True)
class WavePattern:
    """One outgoing wave: ``kind`` is ``"shock"``, ``"rarefaction"`` or ``"none"``.

    Shocks carry their speed; rarefactions the characteristic range
    ``(lam_left, lam_right)``.
    """

    family: int
    kind: str
    speed: Optional[float] = None
    lam_range: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class ClassicalSolution:
    sigma1: float
    sigma2: float
    middle: GasState
    waves: tuple[WavePattern, WavePattern]


def _pattern(law, left, right, family, sigma, speed):
    if sigma == 0.0:
        return WavePattern(family, "none")
    if sigma < 0:
        return WavePattern(family, "shock", speed=speed)
    i = family - 1
    return WavePattern(
        family, "rarefaction", lam_range=(eigenvalues(law, left)[i], eigenvalues(law, right)[i])
    )


def _invariant_guess(law: PressureLaw, u_l: GasState, u_r: GasState) -> tuple[float, float]:
    """Strengths of the two-rarefaction solution (exact when both waves are
    rarefactions, third-order accurate otherwise)."""
    v1l, _ = riemann_invariants(law, u_l)
    _, v2r = riemann_invariants(law, u_r)
    rho_m = law.h_inverse(0.5 * (v1l - v2r))
    m = GasState(rho_m, rho_m * 0.5 * (v1l + v2r))
    lm1, lm2 = eigenvalues(law, m)
    return lm1 - eigenvalues(law, u_l)[0], eigenvalues(law, u_r)[1] - lm2


def solve_classical(
    law: PressureLaw,
    u_l: GasState,
    u_r: GasState,
    sigma_max: Optional[float] = None,
    tol: float = RESIDUAL_TOL,
    maxiter: int = 50,
) -> ClassicalSolution:
    """Strengths ``(sigma1, sigma2)`` with ``u_r = L2(sigma2)(L1(sigma1)(u_l))``.

    Newton on the two strengths, started from the Riemann-invariant
    solution, with a forward-difference Jacobian.
    """
    if u_l == u_r:
        return ClassicalSolution(0.0, 0.0, u_l, (WavePattern(1, "none"), WavePattern(2, "none")))
    try:
        x = np.array(_invariant_guess(law, u_l, u_r))
    except DomainError as exc:
        raise OutOfDomainError(f"states too far apart for a classical solve: {exc}") from exc
    target = np.array(u_r)
    scale = 1.0 + max(abs(u_r.rho), abs(u_r.q))

    last = {}

    def resid(v):
        s1, s2 = float(v[0]), float(v[1])
        m, sp1 = lax_state_with_speed(law, u_l, 1, s1, sigma_max)
        right, sp2 = lax_state_with_speed(law, m, 2, s2, sigma_max)
        last[s1, s2] = (m, sp1, right, sp2)
        return np.array(right) - target

    def ic_resid(v):
        m = integral_curve_state(law, u_l, 1, v[0])
        return np.array(integral_curve_state(law, m, 2, v[1]))

    r = resid(x)
    jac, exact = None, False
    for it in range(maxiter):
        rn = np.max(np.abs(r))
        if rn <= tol * scale:
            break
        if jac is None:
            # integral curves osculate the shock curves, so their closed-form
            # Jacobian is good to O(sigma^2); finite differences of the true
            # map only when that stalls
            jac = np.empty((2, 2))
            try:
                f, r0 = (resid, r) if exact else (ic_resid, ic_resid(x))
                for j in range(2):
                    h = 1e-7 * (1.0 + abs(x[j]))
                    xp = x.copy()
                    # step towards zero keeps the probe inside the curve domain
                    xp[j] -= math.copysign(h, x[j]) if x[j] != 0 else -h
                    jac[:, j] = (f(xp) - r0) / (xp[j] - x[j])
            except DomainError:
                if exact:
                    raise
                exact, jac = True, None
                continue
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular Jacobian in classical solve", x=x, residual=r) from exc
        step = 1.0
        for _ in range(30):
            try:
                r_new = resid(x + step * dx)
            except DomainError:
                step *= 0.5
                continue
            if np.max(np.abs(r_new)) < np.max(np.abs(r)) or step < 1e-6:
                break
            step *= 0.5
        else:
            raise SolverError("classical solve left the curve domain", x=x, residual=r)
        x = x + step * dx
        r = r_new
        # chord steps while they contract well; refresh the Jacobian otherwise
        if step < 1.0 or np.max(np.abs(r)) > 0.1 * rn:
            jac, exact = None, True
    else:
        if np.max(np.abs(r)) > 1e3 * tol * scale:
            raise SolverError(
                "classical Riemann solve did not converge", x=x, residual=r, iterations=maxiter
            )
    s1, s2 = float(x[0]), float(x[1])
    if (s1, s2) not in last:
        resid(x)
    m, sp1, right, sp2 = last[s1, s2]
    waves = (_pattern(law, u_l, m, 1, s1, sp1), _pattern(law, m, right, 2, s2, sp2))
    return ClassicalSolution(s1, s2, m, waves)


# ---------------------------------------------------------------------------
# junction


@dataclass(frozen=True)
class JunctionSolution:
    """Second-family strengths emitted into each pipe, with the traces at 0+.

    ``states[l] == lax_state(traces[l], 2, sigmas[l])``: the trace is the left
    state of the emitted wave and the incoming pipe datum its right state.
    """

    sigmas: tuple[float, ...]
    traces: tuple[GasState, ...]
    p_star: float
    mass_residual: float
    pressure_mismatch: float
    entropy_sum: float


def junction_residuals(law: PressureLaw, nu: Sequence[float], traces: Sequence[GasState]):
    """``(mass residual, max dynamic-pressure mismatch, entropy sum)``."""
    mass = math.fsum(n * u.q for n, u in zip(nu, traces))
    pressures = [dynamic_pressure(law, u) for u in traces]
    mismatch = max(pressures) - min(pressures)
    entropy = math.fsum(n * energy_flux(law, u) for n, u in zip(nu, traces))
    return mass, mismatch, entropy


def _subsonic(law, u):
    l1, l2 = eigenvalues(law, u)
    return l1 < 0.0 < l2


def solve_junction(
    law: PressureLaw,
    nu: Sequence[float],
    states: Sequence[GasState],
    sigma_max: Optional[float] = None,
    entropy_tol: Optional[float] = 1e-10,
    tol: float = RESIDUAL_TOL,
    maxiter: int = 50,
) -> JunctionSolution:
    """Equal-dynamic-pressure junction solver.

    Unknowns are the ``N`` second-family strengths; the residual is the mass
    balance followed by ``P(trace_l) - P(trace_{l+1})``.  Each trace depends
    on its own strength only, so the Jacobian is assembled from ``N``
    central differences.  Iterates that leave the subsonic region are pulled
    back by step halving; persistent failure raises :class:`SolverError`.

    Pass ``entropy_tol=None`` to skip the energy-dissipation check.
    """
    n = len(states)
    if n != len(nu) or n < 2:
        raise ValueError("need matching states and section norms for N >= 2 pipes")
    nu = [float(v) for v in nu]

    def traces_of(sig):
        tr = [backward_lax_state(law, states[i], 2, float(sig[i]), sigma_max) for i in range(n)]
        for u in tr:
            if not _subsonic(law, u):
                raise OutOfDomainError("junction trace left the subsonic region")
        return tr

    def resid(tr):
        r = np.empty(n)
        r[0] = math.fsum(nu[i] * tr[i].q for i in range(n))
        p = [dynamic_pressure(law, u) for u in tr]
        for i in range(n - 1):
            r[i + 1] = p[i] - p[i + 1]
        return r

    sig = np.zeros(n)
    tr = traces_of(sig)
    r = resid(tr)
    scale = 1.0 + max(dynamic_pressure(law, u) for u in states)
    for it in range(maxiter):
        if np.max(np.abs(r)) <= tol * scale:
            break
        dq = np.empty(n)
        dp = np.empty(n)
        for i in range(n):
            h = 1e-7 * (1.0 + abs(sig[i]))
            up = backward_lax_state(law, states[i], 2, sig[i] + h, sigma_max)
            dn = backward_lax_state(law, states[i], 2, sig[i] - h, sigma_max)
            dq[i] = (up.q - dn.q) / (2 * h)
            dp[i] = (dynamic_pressure(law, up) - dynamic_pressure(law, dn)) / (2 * h)
        jac = np.zeros((n, n))
        jac[0, :] = np.asarray(nu) * dq
        for i in range(n - 1):
            jac[i + 1, i] = dp[i]
            jac[i + 1, i + 1] = -dp[i + 1]
        try:
            ds = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular junction Jacobian", sigmas=sig, residual=r) from exc
        step = 1.0
        for _ in range(30):
            try:
                tr_new = traces_of(sig + step * ds)
            except DomainError:
                step *= 0.5
                continue
            r_new = resid(tr_new)
            if np.max(np.abs(r_new)) < np.max(np.abs(r)) or step < 1e-6:
                break
            step *= 0.5
        else:
            raise SolverError(
                "junction iterate stuck outside the subsonic region", sigmas=sig, residual=r
            )
        sig = sig + step * ds
        tr, r = tr_new, r_new
    else:
        if np.max(np.abs(r)) > 1e3 * tol * scale:
            raise SolverError("junction solve did not converge", sigmas=sig, residual=r)
    mass, mismatch, entropy = junction_residuals(law, nu, tr)
    if entropy_tol is not None and entropy > entropy_tol:
        raise JunctionEntropyError(
            f"junction traces produce energy: sum nu F = {entropy:.3e}",
            sigmas=sig,
            entropy_sum=entropy,
        )
    p_star = math.fsum(dynamic_pressure(law, u) for u in tr) / n
    return JunctionSolution(
        tuple(float(s) for s in sig), tuple(tr), p_star, mass, mismatch, entropy
    )


# ---------------------------------------------------------------------------
# feedback boundary


def boundary_residual(law: PressureLaw, trace: GasState, u_bar: GasState, k: float) -> float:
    """``v2(trace) - k v1(trace) + k v1(u_bar) - v2(u_bar)``; zero when the
    feedback law holds."""
    v1, v2 = riemann_invariants(law, trace)
    b1, b2 = riemann_invariants(law, u_bar)
    return (v2 - b2) - k * (v1 - b1)


def solve_boundary(
    law: PressureLaw,
    u_l: GasState,
    u_bar: GasState,
    k: float,
    sigma_max: Optional[float] = None,
    tol: float = RESIDUAL_TOL,
) -> tuple[float, GasState]:
    """First-family strength emitted at ``x = 1`` and the resulting trace.

    Along a 1-rarefaction ``v1`` is constant and ``v2`` grows by
    ``4 sigma / (gamma + 1)``, so the rarefaction branch is solved in closed
    form; the shock branch falls back to a bracketed scalar solve.
    """
    if not 0.0 <= k < 1.0:
        raise DomainError(f"feedback gain must lie in [0, 1), got {k!r}")

    def psi(s):
        return boundary_residual(law, lax_state(law, u_l, 1, s, sigma_max), u_bar, k)

    psi0 = psi(0.0)
    if psi0 == 0.0:
        return 0.0, u_l
    slope = 4.0 / (law.gamma_exp + 1.0)
    if psi0 < 0:
        sigma = -psi0 / slope
    else:
        guess = -psi0 / slope
        lo, hi = expand_bracket(psi, 0.0, -1.0, 1.05 * abs(guess), -(sigma_max or 1e3))
        sigma = bracketed_newton(psi, lo, hi, x0=guess, ftol=tol)
    trace = lax_state(law, u_l, 1, sigma, sigma_max)
    return float(sigma), trace
