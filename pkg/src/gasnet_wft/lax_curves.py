"""Wave curves of the p-system, parametrized by the eigenvalue shift.

A curve of family ``k`` through ``u`` is parametrized so that the state at
parameter ``sigma`` has ``lambda_k`` equal to ``lambda_k(u) + sigma``.
Positive ``sigma`` follows the rarefaction (integral) curve, negative
``sigma`` the Lax-admissible half of the Hugoniot locus.  The base state is
always the *left* state of the jump.
"""

from __future__ import annotations

import math
import sys
from typing import Optional

from .eos import GasState, PressureLaw, eigenvalues
from .exceptions import DomainError, OutOfDomainError
from .roots import bracketed_newton, expand_bracket

__all__ = [
    "integral_curve_state",
    "rarefaction_state",
    "hugoniot_state",
    "shock_state",
    "lax_state",
    "lax_state_with_speed",
    "backward_lax_state",
    "rh_speed",
]

# tighter than the 1e-12 contract: downstream residual checks compound it
LAMBDA_TOL = 1e-14


_EPS = sys.float_info.epsilon


def _check_family(family: int) -> None:
    if family not in (1, 2):
        raise ValueError(f"family must be 1 or 2, got {family!r}")


def _check_radius(sigma: float, sigma_max: Optional[float]) -> None:
    if not math.isfinite(sigma):
        raise DomainError(f"non-finite curve parameter {sigma!r}")
    if sigma_max is not None and abs(sigma) > sigma_max:
        raise OutOfDomainError(
            f"|sigma|={abs(sigma):.6g} exceeds curve-domain radius {sigma_max:.6g}"
        )


def _lam(law: PressureLaw, u: GasState, family: int) -> float:
    return eigenvalues(law, u)[family - 1]


def integral_curve_state(law: PressureLaw, u: GasState, family: int, sigma: float) -> GasState:
    """Point at eigenvalue shift ``sigma`` on the integral curve of ``r_family``.

    Closed form for the gamma-law: ``lambda_k`` is affine in ``rho**theta``
    along the curve, and the ``k``-th Riemann invariant is constant.
    Valid for either sign of ``sigma``.
    """
    theta, a = law.theta, law.a
    s = u.rho**theta
    ds = sigma * theta / (a * (1.0 + theta))
    if family == 1:
        ds = -ds
    s_new = s + ds
    if s_new <= 0.0:
        raise OutOfDomainError(f"integral curve reaches vacuum at sigma={sigma!r}")
    rho = s_new ** (1.0 / theta)
    dw = a / theta * ds
    w = u.q / u.rho + (dw if family == 2 else -dw)
    return GasState(rho, rho * w)


def rarefaction_state(
    law: PressureLaw, u: GasState, family: int, sigma: float, sigma_max: Optional[float] = None
) -> GasState:
    _check_family(family)
    if sigma < 0:
        raise ValueError(f"rarefaction needs sigma >= 0, got {sigma!r}")
    _check_radius(sigma, sigma_max)
    if sigma == 0.0:
        return u
    return integral_curve_state(law, u, family, sigma)


def _hugoniot_velocity(law: PressureLaw, u: GasState, family: int, rho_new: float):
    """Velocity on the ``family`` Hugoniot locus of ``u`` at density ``rho_new``.

    Returns ``(w_new, sqrt_d, dsqrt_d)`` where ``sqrt_d`` is the velocity jump
    magnitude and ``dsqrt_d`` its derivative in ``rho_new``.
    """
    rho = u.rho
    drho = rho_new - rho
    gam = law.gamma_exp
    # p(rho_new) - p(rho) without cancellation
    dp = law.pressure(rho) * math.expm1(gam * math.log1p(drho / rho))
    d = dp * drho / (rho * rho_new)
    sqrt_d = math.sqrt(d) if d > 0 else 0.0
    sgn = 1.0 if drho > 0 else -1.0
    w = u.q / rho
    w_new = w - sgn * sqrt_d if family == 1 else w + sgn * sqrt_d
    if sqrt_d > 0:
        dd = (law.dpressure(rho_new) * drho + dp) / (rho * rho_new) - d / rho_new
        dsqrt = dd / (2.0 * sqrt_d)
    else:
        dsqrt = math.inf
    return w_new, sqrt_d, sgn * dsqrt


def hugoniot_state(
    law: PressureLaw, u: GasState, family: int, sigma: float, sigma_max: Optional[float] = None
) -> GasState:
    """Point at eigenvalue shift ``sigma`` on the Hugoniot locus through ``u``.

    Both branches are available: ``sigma < 0`` is the admissible shock
    branch, ``sigma > 0`` the non-admissible continuation.  Used directly by
    the shock decomposition of the stability functional.
    """
    _check_family(family)
    _check_radius(sigma, sigma_max)
    if sigma == 0.0:
        return u
    lam0 = _lam(law, u, family)
    if abs(sigma) <= 8 * _EPS * (1.0 + abs(lam0)):
        # below the resolution of lambda itself
        return u
    target = lam0 + sigma
    theta, a = law.theta, law.a

    def resid(r):
        w_new = _hugoniot_velocity(law, u, family, r)[0]
        c = a * r**theta
        return (w_new - c if family == 1 else w_new + c) - target

    def dresid(r):
        _, _, dsq = _hugoniot_velocity(law, u, family, r)
        dc = a * theta * r ** (theta - 1.0)
        if not math.isfinite(dsq):
            return 0.0
        # d w_new / d r: family 1 carries a minus sign, family 2 a plus
        return (-dsq - dc) if family == 1 else (dsq + dc)

    # density moves up for 1-shocks / 2-non-admissible, down otherwise
    up = (sigma < 0) if family == 1 else (sigma > 0)
    try:
        guess = integral_curve_state(law, u, family, sigma).rho
    except OutOfDomainError:
        guess = u.rho * (2.0 if up else 0.5)
    if up:
        guess = max(guess, u.rho * (1.0 + 1e-15))
        lo, hi = expand_bracket(resid, u.rho, +1.0, max(guess - u.rho, 1e-14 * u.rho), 1e6 * u.rho)
    else:
        guess = min(guess, u.rho * (1.0 - 1e-15))
        lo, hi = expand_bracket(
            resid, u.rho, -1.0, max(u.rho - guess, 1e-14 * u.rho), u.rho * 1e-12
        )
    rho_new = bracketed_newton(resid, lo, hi, x0=guess, fprime=dresid, ftol=LAMBDA_TOL)
    w_new = _hugoniot_velocity(law, u, family, rho_new)[0]
    return GasState(rho_new, rho_new * w_new)


def rh_speed(u: GasState, v: GasState) -> float:
    """Rankine-Hugoniot speed ``(q_v - q_u) / (rho_v - rho_u)``."""
    return (v.q - u.q) / (v.rho - u.rho)


def shock_state(
    law: PressureLaw, u: GasState, family: int, sigma: float, sigma_max: Optional[float] = None
) -> tuple[GasState, float]:
    """Right state of an admissible ``family``-shock of strength ``sigma < 0``.

    Returns ``(state, speed)`` with the Rankine-Hugoniot speed.
    """
    if sigma >= 0:
        raise ValueError(f"shock needs sigma < 0, got {sigma!r}")
    v = hugoniot_state(law, u, family, sigma, sigma_max)
    if v.rho == u.rho:
        # strength below resolution: speed is the characteristic limit
        return v, _lam(law, u, family)
    return v, rh_speed(u, v)


def lax_state(
    law: PressureLaw, u: GasState, family: int, sigma: float, sigma_max: Optional[float] = None
) -> GasState:
    if sigma >= 0:
        return rarefaction_state(law, u, family, sigma, sigma_max)
    return shock_state(law, u, family, sigma, sigma_max)[0]


def lax_state_with_speed(
    law: PressureLaw, u: GasState, family: int, sigma: float, sigma_max: Optional[float] = None
) -> tuple[GasState, Optional[float]]:
    """Like :func:`lax_state`; the speed is ``None`` on the rarefaction branch."""
    if sigma >= 0:
        return rarefaction_state(law, u, family, sigma, sigma_max), None
    return shock_state(law, u, family, sigma, sigma_max)


def backward_lax_state(
    law: PressureLaw, v: GasState, family: int, sigma: float, sigma_max: Optional[float] = None
) -> GasState:
    """Left state ``u`` such that ``lax_state(u, family, sigma) == v``."""
    _check_family(family)
    _check_radius(sigma, sigma_max)
    if sigma == 0.0:
        return v
    if sigma > 0:
        return integral_curve_state(law, v, family, -sigma)
    # the Hugoniot relation is symmetric; seen from the right state the
    # left state sits on the opposite branch
    return hugoniot_state(law, v, family, -sigma)
