"""Safeguarded scalar root finding.

Newton steps are taken whenever they stay inside the current bracket and
shrink it fast enough; otherwise the step falls back to bisection.  This is
the classic ``rtsafe`` scheme and converges for any continuous function
with a sign change on the bracket.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

from .exceptions import OutOfDomainError, SolverError

__all__ = ["bracketed_newton", "expand_bracket"]


def bracketed_newton(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    x0: Optional[float] = None,
    fprime: Optional[Callable[[float], float]] = None,
    ftol: float = 1e-12,
    xtol: float = 1e-15,
    maxiter: int = 100,
) -> float:
    """Root of ``f`` on ``[lo, hi]``.

    Parameters
    ----------
    f : callable
        Continuous scalar function with ``f(lo) * f(hi) <= 0``.
    lo, hi : float
        Bracket ends.
    x0 : float, optional
        Starting point inside the bracket (midpoint by default).
    fprime : callable, optional
        Derivative of ``f``.  Without it a secant slope through the last two
        iterates is used.
    ftol : float
        Stop once ``|f(x)| <= ftol``.
    xtol : float
        Stop once the bracket is narrower than ``xtol * (1 + |x|)``.

    Raises
    ------
    OutOfDomainError
        If ``f`` does not change sign on the bracket.
    SolverError
        If ``maxiter`` is exhausted.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise OutOfDomainError(
            f"root not bracketed: f({lo!r})={flo!r}, f({hi!r})={fhi!r}"
        )
    # orient so that f(a) < 0 < f(b)
    a, b = (lo, hi) if flo < 0 else (hi, lo)
    if x0 is None or not (min(lo, hi) <= x0 <= max(lo, hi)):
        x0 = 0.5 * (lo + hi)
    x = x0
    fx = flo if x == lo else fhi if x == hi else f(x)
    x_prev, f_prev = (a, flo if a == lo else fhi) if fprime is None else (None, None)
    step_old = abs(hi - lo)
    for it in range(maxiter):
        if abs(fx) <= ftol:
            return x
        if fx < 0:
            a = x
        else:
            b = x
        if abs(b - a) <= xtol * (1.0 + abs(x)):
            return x
        if fprime is not None:
            slope = fprime(x)
        elif x_prev is not None and x != x_prev:
            slope = (fx - f_prev) / (x - x_prev)
        else:
            slope = 0.0
        x_prev, f_prev = x, fx
        newton_ok = slope != 0.0 and math.isfinite(slope)
        if newton_ok:
            x_new = x - fx / slope
            newton_ok = (min(a, b) < x_new < max(a, b)) and abs(x_new - x) < 0.5 * step_old
        if not newton_ok:
            x_new = 0.5 * (a + b)
        step_old = abs(x_new - x)
        x = x_new
        fx = f(x)
    if abs(fx) <= ftol:
        return x
    raise SolverError("bracketed Newton did not converge", x=x, residual=fx, iterations=maxiter)


def expand_bracket(
    f: Callable[[float], float],
    start: float,
    direction: float,
    first_step: float,
    limit: float,
    factor: float = 2.0,
    max_steps: int = 60,
) -> tuple[float, float]:
    """Walk from ``start`` towards ``limit`` until ``f`` changes sign.

    Steps grow geometrically by ``factor`` and are clipped at ``limit``.
    Returns ``(lo, hi)`` with a sign change between them.
    """
    f0 = f(start)
    prev, fprev = start, f0
    step = first_step
    for _ in range(max_steps):
        x = start + direction * step
        if (limit - x) * direction <= 0:
            x = limit
        fx = f(x)
        if fx == 0.0 or fx * fprev < 0:
            return (prev, x) if prev < x else (x, prev)
        if x == limit:
            break
        prev, fprev = x, fx
        step *= factor
    raise OutOfDomainError(
        f"no sign change found between {start!r} and {limit!r}"
    )
