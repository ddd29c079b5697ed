"""Star network description: section norms, feedback gains and the
equilibrium the feedback steers towards."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .eos import GasState, PressureLaw, dynamic_pressure, eigenvalues, energy_flux
from .exceptions import ConfigError

__all__ = [
    "NetworkConfig",
    "subsonic_density",
    "equilibrium_from_flows",
    "random_dissipative_network",
]


@dataclass(frozen=True)
class NetworkConfig:
    """``N`` pipes on ``(0, 1)`` joined at ``x = 0``.

    Parameters
    ----------
    nu_norms : sequence of float
        Section areas ``||nu_l||``.
    gains : sequence of float
        Feedback gains ``k_l`` in ``[0, 1)``.
    equilibria : sequence of GasState
        Subsonic equilibrium ``u_bar_l`` of each pipe.
    subsonic_radius : float
        Radius ``delta_bar`` of the validation ball around each equilibrium;
        the ball must lie in the subsonic region.
    """

    nu_norms: tuple[float, ...]
    gains: tuple[float, ...]
    equilibria: tuple[GasState, ...]
    subsonic_radius: float

    def __post_init__(self):
        object.__setattr__(self, "nu_norms", tuple(float(v) for v in self.nu_norms))
        object.__setattr__(self, "gains", tuple(float(v) for v in self.gains))
        object.__setattr__(
            self, "equilibria", tuple(GasState(float(u[0]), float(u[1])) for u in self.equilibria)
        )

    @property
    def n_pipes(self) -> int:
        return len(self.nu_norms)

    def dissipation(self, law: PressureLaw) -> float:
        """``sum_l ||nu_l|| F(u_bar_l)``; negative for a dissipative junction."""
        return math.fsum(n * energy_flux(law, u) for n, u in zip(self.nu_norms, self.equilibria))

    def validate(
        self, law: PressureLaw, require_dissipative: bool = True, tol: float = 1e-10
    ) -> None:
        """Raise :class:`ConfigError` naming the first violated condition."""
        n = self.n_pipes
        if n < 2:
            raise ConfigError("a star network needs at least 2 pipes", "network.n_pipes")
        if len(self.gains) != n:
            raise ConfigError(f"expected {n} gains, got {len(self.gains)}", "network.gains")
        if len(self.equilibria) != n:
            raise ConfigError(
                f"expected {n} equilibria, got {len(self.equilibria)}", "network.equilibria"
            )
        for i, v in enumerate(self.nu_norms):
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"section norm must be positive, got {v!r}", f"network.nu_norms[{i}]")
        for i, k in enumerate(self.gains):
            if not 0.0 <= k < 1.0:
                raise ConfigError(f"gain must lie in [0, 1), got {k!r}", f"network.gains[{i}]")
        r = self.subsonic_radius
        if not (r > 0 and math.isfinite(r)):
            raise ConfigError(f"radius must be positive, got {r!r}", "network.subsonic_radius")
        for i, u in enumerate(self.equilibria):
            path = f"network.equilibria[{i}]"
            if not (u.rho > 0 and math.isfinite(u.rho) and math.isfinite(u.q)):
                raise ConfigError(f"invalid state {tuple(u)!r}", path)
            # the supersonic sets are unbounded and connected, so a ball
            # around a subsonic centre stays subsonic iff its rim does
            ang = np.linspace(0.0, 2 * np.pi, 256, endpoint=False)
            for rho, q in zip(u.rho + r * np.cos(ang), u.q + r * np.sin(ang)):
                if rho <= 0:
                    raise ConfigError("validation ball reaches vacuum", "network.subsonic_radius")
                l1, l2 = eigenvalues(law, GasState(rho, q))
                if not l1 < 0.0 < l2:
                    raise ConfigError(
                        f"validation ball around pipe {i + 1} leaves the subsonic region",
                        "network.subsonic_radius",
                    )
        scale = 1.0 + max(abs(u.q) * v for u, v in zip(self.equilibria, self.nu_norms))
        mass = math.fsum(v * u.q for v, u in zip(self.nu_norms, self.equilibria))
        if abs(mass) > tol * scale:
            raise ConfigError(f"equilibrium mass balance violated: {mass:.3e}", "network.equilibria")
        pressures = [dynamic_pressure(law, u) for u in self.equilibria]
        if max(pressures) - min(pressures) > tol * (1.0 + max(pressures)):
            raise ConfigError("equilibria have unequal dynamic pressure", "network.equilibria")
        if require_dissipative and not self.dissipation(law) < 0.0:
            raise ConfigError(
                f"equilibria must dissipate energy at the junction: "
                f"sum nu F = {self.dissipation(law):.3e}",
                "network.equilibria",
            )

    def min_density(self) -> float:
        return min(u.rho for u in self.equilibria)


def subsonic_density(law: PressureLaw, q: float, p_star: float) -> float:
    """Density on the subsonic branch with ``P(rho, q) = p_star``.

    ``P`` is increasing in ``rho`` above the sonic density
    ``rho_s = (q^2 / (kappa gamma))^(1 / (gamma + 1))``.
    """
    kg = law.kappa * law.gamma_exp
    rho_s = (q * q / kg) ** (1.0 / (law.gamma_exp + 1.0)) if q != 0.0 else 0.0

    def f(r):
        return q * q / r + law.pressure(r) - p_star

    lo = max(rho_s, 1e-300)
    if f(lo) > 0:
        raise ConfigError(f"no subsonic state with flow {q!r} at dynamic pressure {p_star!r}")
    hi = max(2.0 * lo, 1.0)
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def equilibrium_from_flows(
    law: PressureLaw, nu: Sequence[float], flows: Sequence[float], p_star: float
) -> tuple[GasState, ...]:
    """Subsonic equilibria with prescribed momenta at a common dynamic pressure."""
    return tuple(GasState(subsonic_density(law, q, p_star), float(q)) for q in flows)


def random_dissipative_network(
    law: PressureLaw,
    n_pipes: int,
    rng: np.random.Generator,
    gains: Optional[Sequence[float]] = None,
    flow_scale: float = 0.2,
    p_star: Optional[float] = None,
    radius_fraction: float = 0.5,
) -> NetworkConfig:
    """Draw a network whose equilibria satisfy all junction hypotheses.

    Flows with ``sum nu q = 0`` are drawn and the subsonic densities at a
    common dynamic pressure solved for.  Equal sections would give
    ``sum nu F = 0`` identically, so section norms are random; if the draw
    produces energy at the junction all flows are reversed, which flips the
    sign of ``sum nu F``.
    """
    p_star = law.pressure(1.0) if p_star is None else p_star
    for _ in range(100):
        nu = rng.uniform(0.5, 2.0, n_pipes)
        q = rng.uniform(-flow_scale, flow_scale, n_pipes)
        q -= nu * (nu @ q) / (nu @ nu)
        eq = equilibrium_from_flows(law, nu, q, p_star)
        f = math.fsum(v * energy_flux(law, u) for v, u in zip(nu, eq))
        if f == 0.0:
            continue
        if f > 0:
            eq = equilibrium_from_flows(law, nu, -q, p_star)
        # largest ball that keeps every pipe subsonic, shrunk by the fraction
        radius = radius_fraction * min(_subsonic_margin(law, u) for u in eq)
        k = tuple(gains) if gains is not None else tuple(rng.uniform(0.0, 0.05, n_pipes))
        cfg = NetworkConfig(tuple(nu), k, eq, radius)
        if f != 0.0 and abs(q).max() > 1e-3 * flow_scale:
            return cfg
    raise ConfigError("could not draw a dissipative network")


def _subsonic_margin(law: PressureLaw, u: GasState) -> float:
    """Distance from ``u`` to the sonic curves ``|q| = rho c(rho)``."""
    rhos = np.linspace(max(u.rho * 0.05, 1e-6), u.rho * 4.0, 4000)
    qs = rhos * np.asarray([law.a * r**law.theta for r in rhos])
    d = np.minimum(np.hypot(rhos - u.rho, qs - u.q), np.hypot(rhos - u.rho, -qs - u.q))
    return float(min(d.min(), u.rho))
