"""Gamma-law pressure and the pointwise quantities of the p-system.

Everything here works on plain floats so it can sit in the inner loops of
the front tracker.  States are ``(rho, q)`` pairs: mass density and linear
momentum density.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .exceptions import ConfigError, DomainError

__all__ = [
    "GasState",
    "PressureLaw",
    "Region",
    "sound_speed",
    "eigenvalues",
    "riemann_invariants",
    "classify_region",
    "dynamic_pressure",
    "energy",
    "energy_flux",
    "mirror",
]


class GasState(NamedTuple):
    rho: float
    q: float

    @property
    def velocity(self) -> float:
        return self.q / self.rho


def mirror(u: GasState) -> GasState:
    """Image of ``u`` under the reflection ``x -> -x``."""
    return GasState(u.rho, -u.q)


@dataclass(frozen=True)
class PressureLaw:
    """``p(rho) = kappa * rho**gamma_exp`` with ``gamma_exp > 1``.

    The isothermal case ``gamma_exp == 1`` is rejected: it has ``p'' = 0``
    and all the local theory needs strict convexity.
    """

    kappa: float = 1.0
    gamma_exp: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ConfigError("must be a positive finite number", "law.kappa")
        if not (math.isfinite(self.gamma_exp) and self.gamma_exp > 1):
            raise ConfigError("must be finite and > 1 (p'' > 0 required)", "law.gamma_exp")

    # -- shorthands used by the closed forms ------------------------------
    @property
    def theta(self) -> float:
        """Exponent ``(gamma_exp - 1) / 2`` of the sound speed."""
        return 0.5 * (self.gamma_exp - 1.0)

    @property
    def a(self) -> float:
        """``sqrt(kappa * gamma_exp)``, i.e. ``c(1)``."""
        return math.sqrt(self.kappa * self.gamma_exp)

    def pressure(self, rho: float) -> float:
        return self.kappa * rho**self.gamma_exp

    def dpressure(self, rho: float) -> float:
        return self.kappa * self.gamma_exp * rho ** (self.gamma_exp - 1.0)

    def h(self, rho: float) -> float:
        """Closed form of the integral of ``c(r)/r`` from 1 to ``rho``."""
        return self.a / self.theta * (rho**self.theta - 1.0)

    def h_inverse(self, value: float) -> float:
        """Density ``rho`` with ``h(rho) == value``."""
        s = 1.0 + self.theta * value / self.a
        if s <= 0.0:
            raise DomainError(f"h^-1({value!r}) is at or below vacuum")
        return s ** (1.0 / self.theta)

    def internal_energy(self, rho: float) -> float:
        """``rho`` times the integral of ``p(r)/r**2`` from 1 to ``rho``."""
        g1 = self.gamma_exp - 1.0
        return rho * self.kappa * (rho**g1 - 1.0) / g1


def _check_rho(rho: float) -> None:
    if not (rho > 0.0 and math.isfinite(rho)):
        raise DomainError(f"density must be positive and finite, got {rho!r}")


def sound_speed(law: PressureLaw, rho: float) -> float:
    _check_rho(rho)
    return math.sqrt(law.dpressure(rho))


def eigenvalues(law: PressureLaw, u: GasState) -> tuple[float, float]:
    c = sound_speed(law, u.rho)
    w = u.q / u.rho
    return w - c, w + c


def riemann_invariants(law: PressureLaw, u: GasState) -> tuple[float, float]:
    """Return ``(v1, v2)``; ``v1`` is constant along 1-rarefactions."""
    _check_rho(u.rho)
    w = u.q / u.rho
    h = law.h(u.rho)
    return w + h, w - h


class Region(enum.Flag):
    """Sonic regions of the state space; ``A0`` is the subsonic set."""

    A_MINUS = enum.auto()
    A0_MINUS = enum.auto()
    A0_PLUS = enum.auto()
    A_PLUS = enum.auto()
    A0 = A0_MINUS | A0_PLUS


def classify_region(law: PressureLaw, u: GasState) -> Region:
    """Membership of ``u`` in the four regions.

    The two subsonic halves overlap on ``q == 0``; both flags are set there.
    """
    lam1, lam2 = eigenvalues(law, u)
    tag = Region(0)
    if lam2 < 0:
        tag |= Region.A_MINUS
    if lam2 >= 0 and u.q <= 0:
        tag |= Region.A0_MINUS
    if lam1 <= 0 and u.q >= 0:
        tag |= Region.A0_PLUS
    if lam1 > 0:
        tag |= Region.A_PLUS
    return tag


def dynamic_pressure(law: PressureLaw, u: GasState) -> float:
    _check_rho(u.rho)
    return u.q * u.q / u.rho + law.pressure(u.rho)


def energy(law: PressureLaw, u: GasState) -> float:
    _check_rho(u.rho)
    return 0.5 * u.q * u.q / u.rho + law.internal_energy(u.rho)


def energy_flux(law: PressureLaw, u: GasState) -> float:
    return u.q / u.rho * (energy(law, u) + law.pressure(u.rho))
