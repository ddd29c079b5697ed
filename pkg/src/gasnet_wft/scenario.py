"""Scenario files: load, validate and build simulation configurations.

A scenario is a YAML mapping with the sections ``law``, ``network``,
``initial``, ``run`` and ``functionals``::

    law: {kappa: 1.0, gamma_exp: 2.0}
    network:
      n_pipes: 2
      nu_norms: [1.0, 1.5]
      gains: [0.001, 0.001]
      equilibria: [[1.0, 0.1], [1.02, -0.0667]]
      subsonic_radius: 0.2
    initial:                        # one segment list per pipe
      - [[0.4, 1.001, 0.1], [1.0, 1.0, 0.1]]
      - [[1.0, 1.02, -0.0667]]
    run: {epsilon: 0.002, t_end: 1.5, interaction_cap: 1000000,
          snapshot_times: [0.5], seed: 0}
    functionals: {gamma_w: 1.0, kappa_q: auto, verify_decay: true,
                  constants: auto}

``network`` and ``initial`` may instead be ``{random: {...}}`` blocks that are
drawn from ``run.seed``; the drawn values are written back into the resolved
scenario so that a report can reproduce them.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import yaml

from .calibration import CalibratedConstants, calibrate_constants
from .eos import GasState, PressureLaw
from .exceptions import ConfigError, GasNetError
from .front_tracking import SimConfig
from .functionals import FunctionalParams
from .network import NetworkConfig, random_dissipative_network

__all__ = [
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "random_scenario",
    "random_initial",
    "CONSTANT_NAMES",
]

CONSTANT_NAMES = ("K", "K_J", "C_b", "c_min", "Lambda_max")

_RUN_DEFAULTS = {
    "epsilon": 2e-3,
    "t_end": 1.5,
    "interaction_cap": 10**6,
    "snapshot_times": [],
    "seed": 0,
    "n_samples": 101,
}
_FUNC_DEFAULTS = {
    "gamma_w": 0.0,
    "kappa_q": "auto",
    "verify_decay": False,
    "constants": "auto",
    "calibration_samples": 200,
    "kappa_margin": 1.5,
}


@dataclass
class Scenario:
    """A validated scenario with every random draw resolved."""

    law: PressureLaw
    network: NetworkConfig
    initial: list
    run: dict
    functionals: dict
    # fully resolved document (random blocks replaced by their draws)
    document: dict
    constants: Optional[dict] = None
    calibration: Optional[CalibratedConstants] = None
    source: Optional[str] = None
    notes: list = field(default_factory=list)

    @property
    def seed(self) -> int:
        return int(self.run["seed"])

    def params(self) -> FunctionalParams:
        """Functional parameters, calibrating the constants on first use if
        the scenario asks for ``auto``."""
        f = self.functionals
        if self.constants is None:
            cal = calibrate_constants(
                self.law, self.network, n_samples=int(f["calibration_samples"]),
                radius=self._strength_scale(), max_strength=self._strength_scale(), seed=self.seed,
            )
            self.calibration = cal
            self.constants = cal.as_dict()
        c = self.constants
        g = float(f["gamma_w"])
        if f["kappa_q"] == "auto":
            return FunctionalParams.compliant(g, margin=float(f["kappa_margin"]), **c)
        return FunctionalParams(g, float(f["kappa_q"]), **c)

    def _strength_scale(self) -> float:
        # waves of a run are bounded by a few times the largest initial jump,
        # and states stay near the initial deviation from equilibrium
        jump = dev = 0.0
        for p, segs in enumerate(self.initial):
            ub = self.network.equilibria[p]
            prev = ub
            for _, rho, q in segs:
                jump = max(jump, abs(rho - prev.rho) + abs(q - prev.q))
                dev = max(dev, math.hypot(rho - ub.rho, q - ub.q))
                prev = GasState(rho, q)
        return min(self.network.subsonic_radius, max(4.0 * jump, 2.0 * dev, 1e-6))

    def sim_config(self, epsilon: Optional[float] = None, **overrides) -> SimConfig:
        r = self.run
        verify = bool(self.functionals["verify_decay"])
        kw = dict(
            interaction_cap=int(r["interaction_cap"]),
            params=self.params(),
            snapshot_times=tuple(float(t) for t in r["snapshot_times"]),
            n_samples=int(r["n_samples"]),
            verify_decay=verify,
            seed=self.seed,
        )
        kw.update(overrides)
        cfg = SimConfig(
            self.law, self.network, self.initial,
            float(r["epsilon"] if epsilon is None else epsilon), float(r["t_end"]), **kw,
        )
        cfg.validate()
        return cfg


def _num(doc, key, path, positive=False, default=None):
    v = doc.get(key, default)
    if v is None:
        raise ConfigError("missing value", path)
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {v!r}", path) from None
    if not math.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"expected a {'positive ' if positive else ''}finite number, got {v!r}", path)
    return v


def _mapping(doc, key, path):
    v = doc.get(key)
    if not isinstance(v, dict):
        raise ConfigError("expected a mapping", path)
    return v


def _pair(v, path) -> GasState:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(f"expected a (rho, q) pair, got {v!r}", path)
    try:
        return GasState(float(v[0]), float(v[1]))
    except (TypeError, ValueError):
        raise ConfigError(f"expected numbers, got {v!r}", path) from None


def random_initial(
    network: NetworkConfig, rng: np.random.Generator, amplitude: float, jumps: int = 1,
) -> list:
    """Piecewise-constant data with ``jumps`` interior breakpoints per pipe;
    every state is the equilibrium plus a uniform perturbation of size at
    most ``amplitude`` in each component."""
    out = []
    for ub in network.equilibria:
        xs = sorted(rng.uniform(0.05, 0.95, jumps)) + [1.0]
        out.append([
            (float(x), ub.rho + float(rng.uniform(-amplitude, amplitude)),
             ub.q + float(rng.uniform(-amplitude, amplitude)))
            for x in xs
        ])
    return out


def parse_scenario(doc: Any, seed: Optional[int] = None, source: Optional[str] = None) -> Scenario:
    """Validate a scenario mapping.

    ``seed`` overrides ``run.seed``.  Violations raise :class:`ConfigError`
    with the dotted path of the offending field.
    """
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a mapping", "")
    doc = copy.deepcopy(doc)
    for key in doc:
        if key not in ("law", "network", "initial", "run", "functionals", "name"):
            raise ConfigError("unknown section", str(key))
    law_doc = doc.get("law", {}) or {}
    if not isinstance(law_doc, dict):
        raise ConfigError("expected a mapping", "law")
    try:
        law = PressureLaw(_num(law_doc, "kappa", "law.kappa", default=1.0),
                          _num(law_doc, "gamma_exp", "law.gamma_exp", default=2.0))
    except GasNetError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "law") from None
    doc["law"] = {"kappa": law.kappa, "gamma_exp": law.gamma_exp}

    run = {**_RUN_DEFAULTS, **(doc.get("run") or {})}
    if not isinstance(doc.get("run", {}) or {}, dict):
        raise ConfigError("expected a mapping", "run")
    if seed is not None:
        run["seed"] = int(seed)
    for key in run:
        if key not in _RUN_DEFAULTS:
            raise ConfigError("unknown field", f"run.{key}")
    _num(run, "epsilon", "run.epsilon", positive=True)
    _num(run, "t_end", "run.t_end", positive=True)
    cap = run["interaction_cap"]
    if not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
        raise ConfigError(f"expected a positive integer, got {cap!r}", "run.interaction_cap")
    if not isinstance(run["snapshot_times"], (list, tuple)):
        raise ConfigError("expected a list", "run.snapshot_times")
    for i, t in enumerate(run["snapshot_times"]):
        v = _num({"t": t}, "t", f"run.snapshot_times[{i}]")
        if not 0.0 <= v <= float(run["t_end"]):
            raise ConfigError(f"snapshot time {v!r} outside [0, t_end]", f"run.snapshot_times[{i}]")
    try:
        run["seed"] = int(run["seed"])
    except (TypeError, ValueError):
        raise ConfigError(f"expected an integer, got {run['seed']!r}", "run.seed") from None
    doc["run"] = run
    rng = np.random.default_rng(run["seed"])

    func = {**_FUNC_DEFAULTS, **(doc.get("functionals") or {})}
    for key in func:
        if key not in _FUNC_DEFAULTS:
            raise ConfigError("unknown field", f"functionals.{key}")
    g = _num(func, "gamma_w", "functionals.gamma_w")
    if g < 0:
        raise ConfigError(f"must be non-negative, got {g!r}", "functionals.gamma_w")
    if func["kappa_q"] != "auto":
        _num(func, "kappa_q", "functionals.kappa_q", positive=True)
    consts = func["constants"]
    calibration = None
    if consts == "auto":
        constants = None
    elif isinstance(consts, dict):
        constants = {}
        for name in CONSTANT_NAMES:
            constants[name] = _num(consts, name, f"functionals.constants.{name}", positive=True)
        extra = set(consts) - set(CONSTANT_NAMES)
        if extra:
            raise ConfigError("unknown field", f"functionals.constants.{sorted(extra)[0]}")
    else:
        raise ConfigError("expected 'auto' or a mapping of constants", "functionals.constants")
    doc["functionals"] = func

    net_doc = _mapping(doc, "network", "network")
    if "random" in net_doc:
        spec = net_doc["random"] or {}
        n = int(_num(spec, "n_pipes", "network.random.n_pipes", positive=True, default=2))
        gains = spec.get("gains", "compliant")
        compliant = gains == "compliant"
        if compliant:
            gains = [0.0] * n
        elif not isinstance(gains, (list, tuple)):
            gains = [_num(spec, "gains", "network.random.gains")] * n
        net = random_dissipative_network(
            law, n, rng, gains=gains,
            flow_scale=_num(spec, "flow_scale", "network.random.flow_scale", positive=True, default=0.2),
            radius_fraction=_num(spec, "radius_fraction", "network.random.radius_fraction",
                                 positive=True, default=0.5),
        )
        if compliant:
            # a fraction of the largest gain the boundary corollary allows
            if constants is None:
                calibration = calibrate_constants(
                    law, net, n_samples=int(func["calibration_samples"]),
                    radius=_random_strength(doc, net), max_strength=_random_strength(doc, net),
                    seed=run["seed"],
                )
                constants = calibration.as_dict()
            frac = _num(spec, "gain_fraction", "network.random.gain_fraction", positive=True,
                        default=0.8)
            kb = FunctionalParams.compliant(g, **constants).gain_bound()
            net = NetworkConfig(net.nu_norms, [frac * kb] * n, net.equilibria, net.subsonic_radius)
    else:
        n = net_doc.get("n_pipes")
        nu = net_doc.get("nu_norms")
        gains = net_doc.get("gains")
        eq = net_doc.get("equilibria")
        for key, v in (("nu_norms", nu), ("gains", gains), ("equilibria", eq)):
            if not isinstance(v, (list, tuple)):
                raise ConfigError("expected a list", f"network.{key}")
        if n is not None and int(n) != len(nu):
            raise ConfigError(f"n_pipes = {n} but {len(nu)} section norms given", "network.n_pipes")
        try:
            nu = [float(v) for v in nu]
        except (TypeError, ValueError):
            raise ConfigError("expected numbers", "network.nu_norms") from None
        try:
            gains = [float(v) for v in gains]
        except (TypeError, ValueError):
            raise ConfigError("expected numbers", "network.gains") from None
        eqs = [_pair(v, f"network.equilibria[{i}]") for i, v in enumerate(eq)]
        net = NetworkConfig(nu, gains, eqs,
                            _num(net_doc, "subsonic_radius", "network.subsonic_radius", positive=True))
    verify = bool(func["verify_decay"])
    net.validate(law, require_dissipative=verify)
    doc["network"] = {
        "n_pipes": net.n_pipes,
        "nu_norms": list(net.nu_norms),
        "gains": list(net.gains),
        "equilibria": [[u.rho, u.q] for u in net.equilibria],
        "subsonic_radius": net.subsonic_radius,
    }

    ini = doc.get("initial")
    if isinstance(ini, dict) and "random" in ini:
        spec = ini["random"] or {}
        amp = _num(spec, "amplitude", "initial.random.amplitude", positive=True, default=1e-3)
        if amp * math.sqrt(2.0) > net.subsonic_radius:
            raise ConfigError("amplitude leaves the validation ball", "initial.random.amplitude")
        jumps = int(_num(spec, "jumps", "initial.random.jumps", default=1))
        initial = random_initial(net, rng, amp, jumps)
    elif ini is None:
        initial = [[(1.0, u.rho, u.q)] for u in net.equilibria]
    else:
        if not isinstance(ini, (list, tuple)) or len(ini) != net.n_pipes:
            raise ConfigError(f"expected one segment list per pipe ({net.n_pipes})", "initial")
        initial = []
        for p, segs in enumerate(ini):
            if not isinstance(segs, (list, tuple)) or not segs:
                raise ConfigError("expected a non-empty list of segments", f"initial[{p}]")
            out = []
            for j, s in enumerate(segs):
                if not isinstance(s, (list, tuple)) or len(s) != 3:
                    raise ConfigError("expected (x_right_end, rho, q)", f"initial[{p}][{j}]")
                try:
                    out.append(tuple(float(v) for v in s))
                except (TypeError, ValueError):
                    raise ConfigError("expected numbers", f"initial[{p}][{j}]") from None
            initial.append(out)
    doc["initial"] = [[list(s) for s in segs] for segs in initial]


    if calibration is not None:
        func["constants"] = dict(constants)
    sc = Scenario(law, net, initial, run, func, doc, constants, calibration, source=source)
    # segment and neighbourhood checks live in SimConfig
    SimConfig(law, net, initial, float(run["epsilon"]), float(run["t_end"]),
              interaction_cap=cap, params=None, verify_decay=False).validate()
    return sc


def _random_strength(doc, net) -> float:
    ini = doc.get("initial")
    if isinstance(ini, dict) and "random" in ini:
        amp = float((ini["random"] or {}).get("amplitude", 1e-3))
        return min(net.subsonic_radius, 8.0 * amp)
    return 0.5 * net.subsonic_radius


def load_scenario(path: Union[str, Path], seed: Optional[int] = None) -> Scenario:
    """Read and validate a YAML scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}", str(path)) from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", str(path)) from None
    return parse_scenario(doc, seed=seed, source=str(path))


def random_scenario(
    seed: int,
    n_pipes: int = 2,
    amplitude: float = 2e-3,
    jumps: int = 1,
    gamma_w: float = 1.0,
    epsilon: float = 2e-3,
    t_end: float = 1.5,
    constants: Optional[dict] = None,
    gain_fraction: float = 0.8,
    verify_decay: bool = True,
) -> dict:
    """Scenario document for a compliant randomized run.

    Gains are set to ``gain_fraction`` times the bound implied by
    ``constants`` at ``gamma_w``; ``constants`` defaults to ``auto``.
    """
    doc = {
        "law": {"kappa": 1.0, "gamma_exp": 2.0},
        "network": {"random": {"n_pipes": n_pipes}},
        "initial": {"random": {"amplitude": amplitude, "jumps": jumps}},
        "run": {"epsilon": epsilon, "t_end": t_end, "seed": seed},
        "functionals": {"gamma_w": gamma_w, "verify_decay": verify_decay,
                        "constants": dict(constants) if constants else "auto"},
    }
    doc["network"]["random"]["gain_fraction"] = gain_fraction
    return doc
