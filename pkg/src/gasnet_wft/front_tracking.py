"""Event-driven epsilon-approximate wave-front tracking on a star network.

Each pipe holds an ordered list of states and the fronts separating them
(front ``i`` sits between ``states[i]`` and ``states[i + 1]``).  Fronts move
on straight lines; a front stores its birth point ``(t0, x0)`` and speed so
positions are never integrated.  Every pipe contributes its own earliest
event (adjacent collision, junction hit or boundary hit) to a heap; a
per-pipe version counter invalidates stale heap entries lazily.

The same machinery runs a single open line (``network=None``): fronts that
reach either end simply leave the domain.  This is the classical-problem
reference used by the oracle and symmetry checks.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .eos import GasState, PressureLaw, eigenvalues, sound_speed
from .exceptions import ConfigError, InteractionCapExceeded, SolverError
from .functionals import (
    FrontArrays,
    FunctionalParams,
    FunctionalSample,
    _delta_j,
    j_totals,
)
from .lax_curves import lax_state, rarefaction_state, rh_speed
from .network import NetworkConfig
from .riemann import (
    boundary_residual,
    junction_residuals,
    solve_boundary,
    solve_classical,
    solve_junction,
)
from .snapshot import FrontView, PipeField, Snapshot

__all__ = [
    "WaveFront",
    "Event",
    "EventRecord",
    "SimConfig",
    "SimulationTrace",
    "Simulation",
    "discretize_initial",
    "split_rarefaction",
    "initialize",
    "next_event",
    "run",
    "run_line",
]

log = logging.getLogger(__name__)

Segments = Sequence[tuple[float, float, float]]

MIN_EVENT_SEPARATION = 1e-13


@dataclass(eq=False)
class WaveFront:
    """A straight-line discontinuity ``x(t) = x0 + speed (t - t0)``.

    ``pipe`` is a 0-based index.  ``right == lax_state(left, family, sigma)``
    up to solver tolerance.
    """

    id: int
    pipe: int
    family: int
    x0: float
    t0: float
    speed: float
    left: GasState
    right: GasState
    sigma: float
    origin: str = "initial"

    @property
    def kind(self) -> str:
        return "shock" if self.sigma < 0 else "rarefaction"

    def position(self, t: float) -> float:
        return self.x0 + self.speed * (t - self.t0)

    def view(self, t: float) -> FrontView:
        return FrontView(
            self.id, self.pipe, self.family, self.position(t), self.speed,
            self.sigma, self.left, self.right,
        )


@dataclass(frozen=True)
class Event:
    """``kind`` is ``"collision"``, ``"junction"`` or ``"boundary"``; in line
    mode the two ends report ``"exit_left"`` / ``"exit_right"``."""

    time: float
    kind: str
    pipe: int
    fronts: tuple[int, ...]

    @property
    def key(self):
        return (self.time, self.pipe, min(self.fronts))


@dataclass
class EventRecord:
    index: int
    time: float
    kind: str
    pipe: int
    position: float
    # (family, sigma) of the fronts removed
    incoming: tuple[tuple[int, float], ...]
    # (pipe, family, sigma) of the waves produced, before fan splitting
    outgoing: tuple[tuple[int, int, float], ...]
    before: FunctionalSample
    after: FunctionalSample
    dJ: float


def _speed_rule(rule: str) -> str:
    if rule not in ("mean", "left"):
        raise ConfigError(f"rarefaction speed rule must be 'mean' or 'left', got {rule!r}")
    return rule


def front_speed(law: PressureLaw, family: int, left: GasState, right: GasState, sigma: float,
                rule: str = "mean") -> float:
    """Shocks move at the Rankine-Hugoniot speed.  Rarefaction pieces move
    at ``lambda(left)`` (``rule="left"``) or at the mean of the two
    endpoint eigenvalues (``rule="mean"``, the default), which is within
    ``sigma / 2`` of ``lambda(left)`` and invariant under reflection."""
    i = family - 1
    if sigma < 0:
        if left.rho == right.rho:
            return eigenvalues(law, left)[i]
        return rh_speed(left, right)
    lam_l = eigenvalues(law, left)[i]
    if rule == "left":
        return lam_l
    return 0.5 * (lam_l + eigenvalues(law, right)[i])


def split_rarefaction(
    law: PressureLaw,
    base: GasState,
    family: int,
    sigma: float,
    epsilon: float,
    right: Optional[GasState] = None,
    x: float = 0.0,
    t: float = 0.0,
    pipe: int = 0,
    first_id: int = 0,
    rule: str = "mean",
    origin: str = "initial",
) -> list[WaveFront]:
    """Approximate a rarefaction by ``m = ceil(sigma / epsilon)`` pieces.

    Pieces of equal strength ``sigma / m`` are chained left to right along
    the integral curve from ``base``.  If ``right`` is given it replaces the
    computed end state so the chain closes exactly on existing data.
    """
    if sigma <= 0:
        raise ValueError(f"rarefaction strength must be positive, got {sigma!r}")
    m = max(1, math.ceil(sigma / epsilon - 1e-12))
    piece = sigma / m
    out = []
    left = base
    for k in range(1, m + 1):
        if k == m and right is not None:
            nxt = right
        else:
            nxt = rarefaction_state(law, base, family, sigma * k / m)
        sp = front_speed(law, family, left, nxt, piece, rule)
        out.append(WaveFront(first_id + k - 1, pipe, family, x, t, sp, left, nxt, piece, origin))
        left = nxt
    return out


def discretize_initial(
    data: Union[Segments, Callable[[float], tuple[float, float]]],
    epsilon: float,
    max_cells: int = 1 << 16,
) -> list[tuple[float, float, float]]:
    """Piecewise-constant approximation of one pipe's initial datum.

    A segment list ``[(x_right_end, rho, q), ...]`` is returned verbatim.  A
    callable ``x -> (rho, q)`` is sampled at cell midpoints of a uniform
    grid; point sampling never increases the total variation, and the grid
    is doubled until a fine-quadrature estimate of the L1 error is below
    ``epsilon``.
    """
    if not callable(data):
        return [(float(a), float(b), float(c)) for a, b, c in data]
    xf = (np.arange(64 * 256) + 0.5) / (64 * 256)
    fine = np.array([data(x) for x in xf], dtype=float)
    m = 8
    while True:
        edges = np.linspace(0.0, 1.0, m + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        vals = np.array([data(x) for x in mids], dtype=float)
        idx = np.minimum((xf * m).astype(int), m - 1)
        err = np.abs(fine - vals[idx]).sum(axis=1).mean()
        if err < epsilon or m >= max_cells:
            break
        m *= 2
    if err >= epsilon:
        raise ConfigError(f"could not resolve the initial datum to L1 error {epsilon!r}")
    segs = []
    for k in range(m):
        rho, q = vals[k]
        if segs and segs[-1][1] == rho and segs[-1][2] == q:
            segs[-1] = (float(edges[k + 1]), rho, q)
        else:
            segs.append((float(edges[k + 1]), float(rho), float(q)))
    return segs


@dataclass
class SimConfig:
    """Everything needed for one run.

    ``network=None`` selects line mode: a single pipe on ``domain`` with open
    ends.  ``initial`` holds one segment list per pipe, each an ordered list
    of ``(x_right_end, rho, q)`` (x measured on ``[0, 1]`` for network
    pipes, on ``domain`` in line mode).
    """

    law: PressureLaw
    network: Optional[NetworkConfig]
    initial: Sequence[Segments]
    epsilon: float
    t_end: float
    interaction_cap: int = 10**6
    params: Optional[FunctionalParams] = None
    sigma_max: Optional[float] = None
    snapshot_times: Sequence[float] = ()
    n_samples: int = 101
    rarefaction_speed: str = "mean"
    drop_tol: float = 1e-12
    entropy_tol: Optional[float] = 1e-10
    verify_decay: bool = False
    check_neighborhood: bool = True
    domain: tuple[float, float] = (0.0, 1.0)
    seed: Optional[int] = None

    @property
    def n_pipes(self) -> int:
        return 1 if self.network is None else self.network.n_pipes

    def resolved_sigma_max(self) -> float:
        if self.sigma_max is not None:
            return self.sigma_max
        if self.network is not None:
            return 0.5 * sound_speed(self.law, self.network.min_density())
        rho_min = min(s[1] for segs in self.initial for s in segs)
        return 0.5 * sound_speed(self.law, rho_min)

    def validate(self) -> None:
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}", "run.epsilon")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ConfigError(f"t_end must be positive, got {self.t_end!r}", "run.t_end")
        if int(self.interaction_cap) < 1:
            raise ConfigError("interaction cap must be a positive integer", "run.interaction_cap")
        _speed_rule(self.rarefaction_speed)
        lo, hi = self.domain
        if self.network is not None:
            self.network.validate(self.law, require_dissipative=self.verify_decay)
            if (lo, hi) != (0.0, 1.0):
                raise ConfigError("network pipes live on (0, 1)", "domain")
        elif not lo < hi:
            raise ConfigError("line domain must have positive length", "domain")
        if len(self.initial) != self.n_pipes:
            raise ConfigError(
                f"expected initial data for {self.n_pipes} pipes, got {len(self.initial)}",
                "initial",
            )
        for p, segs in enumerate(self.initial):
            path = f"initial[{p}]"
            if not segs:
                raise ConfigError("empty segment list", path)
            prev = lo
            for j, (xr, rho, q) in enumerate(segs):
                if not (xr > prev):
                    raise ConfigError("segment breakpoints must increase strictly", f"{path}[{j}]")
                if not (rho > 0 and math.isfinite(rho) and math.isfinite(q)):
                    raise ConfigError(f"invalid state ({rho!r}, {q!r})", f"{path}[{j}]")
                prev = xr
            if prev != hi:
                raise ConfigError(f"last segment must end at {hi!r}, got {prev!r}", path)
            if self.network is not None and self.check_neighborhood:
                ub = self.network.equilibria[p]
                r = self.network.subsonic_radius
                for j, (_, rho, q) in enumerate(segs):
                    if math.hypot(rho - ub.rho, q - ub.q) > r:
                        raise ConfigError(
                            "initial state outside the validation ball of the equilibrium",
                            f"{path}[{j}]",
                        )
        if self.verify_decay:
            if self.params is None:
                raise ConfigError("decay verification needs functional parameters", "functionals")
            self.params.check_compliance(self.network.gains if self.network else ())


@dataclass
class SimulationTrace:
    config: SimConfig
    events: list[EventRecord] = field(default_factory=list)
    samples: list[FunctionalSample] = field(default_factory=list)
    snapshots: dict[float, Snapshot] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    initial: Optional[FunctionalSample] = None
    final: Optional[Snapshot] = None
    n_fronts_max: int = 0

    @property
    def n_events(self) -> int:
        return len(self.events)

    def max_dj(self) -> float:
        return max((e.dJ for e in self.events), default=0.0)


class _Pipe:
    __slots__ = ("states", "fronts", "version")

    def __init__(self, states):
        self.states: list[GasState] = states
        self.fronts: list[WaveFront] = []
        self.version = 0


_RESIDUAL_KEYS = ("junction_mass", "junction_pressure", "junction_entropy", "boundary", "front_consistency")


class Simulation:
    """Stateful front-tracking run.

    Use :meth:`run` for a complete evolution, or :meth:`peek` /
    :meth:`step` / :meth:`snapshot` to interleave several runs in time.
    """

    def __init__(self, config: SimConfig, validate: bool = True):
        if validate:
            config.validate()
        self.cfg = config
        self.law = config.law
        self.net = config.network
        self.line = config.network is None
        self.lo, self.hi = config.domain
        self.eps = float(config.epsilon)
        self.sigma_max = config.resolved_sigma_max()
        self.params = config.params or FunctionalParams()
        self.rule = config.rarefaction_speed
        self.t = 0.0
        self._next_id = 0
        self._heap: list = []
        self._cols = None
        self.trace = SimulationTrace(config)
        self.trace.residuals = {k: 0.0 for k in _RESIDUAL_KEYS}
        self.pipes = [
            _Pipe([GasState(float(r), float(q)) for _, r, q in segs]) for segs in config.initial
        ]
        self._pcols: list = [None] * len(self.pipes)
        self._initialize()
        self._cols = None
        self._pcols = [None] * len(self.pipes)

    # -- construction helpers ------------------------------------------

    def _new_id(self) -> int:
        self._next_id += 1
        return self._next_id - 1

    def _make_wave(self, p, family, left, right, sigma, x, origin, split) -> list[WaveFront]:
        """Fronts for one wave ``left -> right``; rarefactions are split into
        pieces of strength at most epsilon when ``split`` is set."""
        if sigma > 0 and split and sigma > self.eps:
            fr = split_rarefaction(
                self.law, left, family, sigma, self.eps, right=right, x=x, t=self.t,
                pipe=p, first_id=self._next_id, rule=self.rule, origin=origin,
            )
            self._next_id += len(fr)
        else:
            sp = front_speed(self.law, family, left, right, sigma, self.rule)
            fr = [WaveFront(self._new_id(), p, family, x, self.t, sp, left, right, sigma, origin)]
            if sigma > 2 * self.eps and not split:
                msg = (f"t={self.t:.6g} pipe {p + 1}: unsplit rarefaction piece of strength "
                       f"{sigma:.3e} exceeds 2*epsilon")
                self.trace.warnings.append(msg)
                log.warning(msg)
        for f in fr:
            self._check_front(f)
        return fr

    def _check_front(self, f: WaveFront) -> None:
        try:
            r = lax_state(self.law, f.left, f.family, f.sigma)
        except Exception:  # noqa: BLE001  (diagnostic only)
            return
        err = max(abs(r.rho - f.right.rho), abs(r.q - f.right.q))
        res = self.trace.residuals
        res["front_consistency"] = max(res["front_consistency"], err)

    def _insert_wave_pair(self, p, i, left, right, sol, x, origin, split):
        """Replace the span ``states[i] .. states[i + 1]`` (currently no front
        between them) by the waves of a classical solution."""
        pipe = self.pipes[p]
        keep1 = abs(sol.sigma1) > self.cfg.drop_tol
        keep2 = abs(sol.sigma2) > self.cfg.drop_tol
        new_fronts: list[WaveFront] = []
        if keep1:
            mid = sol.middle if keep2 else right
            new_fronts += self._make_wave(p, 1, left, mid, sol.sigma1, x, origin, split)
        else:
            mid = left
        if keep2:
            new_fronts += self._make_wave(p, 2, mid, right, sol.sigma2, x, origin, split)
        inner = [f.right for f in new_fronts[:-1]]
        pipe.states[i + 1:i + 1] = inner
        pipe.fronts[i:i] = new_fronts
        return keep1, keep2

    def _junction_emit(self, origin: str):
        law, net = self.law, self.net
        traces_in = [pipe.states[0] for pipe in self.pipes]
        try:
            sol = solve_junction(law, net.nu_norms, traces_in, self.sigma_max, self.cfg.entropy_tol)
        except SolverError as exc:
            raise type(exc)(f"junction at t={self.t:.17g}: {exc}", **exc.diagnostics) from exc
        for p, (pipe, sig, tr) in enumerate(zip(self.pipes, sol.sigmas, sol.traces)):
            if abs(sig) <= self.cfg.drop_tol:
                continue
            fr = self._make_wave(p, 2, tr, pipe.states[0], sig, self.lo, origin, True)
            pipe.states[0:0] = [f.left for f in fr]
            pipe.fronts[0:0] = fr
        return sol.sigmas

    def _boundary_emit(self, p: int, origin: str) -> float:
        pipe = self.pipes[p]
        try:
            sig, tr = solve_boundary(
                self.law, pipe.states[-1], self.net.equilibria[p], self.net.gains[p], self.sigma_max
            )
        except SolverError as exc:
            raise type(exc)(f"boundary of pipe {p + 1} at t={self.t:.17g}: {exc}",
                            **exc.diagnostics) from exc
        if abs(sig) > self.cfg.drop_tol:
            fr = self._make_wave(p, 1, pipe.states[-1], tr, sig, self.hi, origin, True)
            pipe.states.extend(f.right for f in fr)
            pipe.fronts.extend(fr)
        return sig

    def _initialize(self) -> None:
        segs_all = self.cfg.initial
        for p, segs in enumerate(segs_all):
            pipe = self.pipes[p]
            states, pipe.states = pipe.states, [pipe.states[0]]
            for j in range(1, len(states)):
                x = float(segs[j - 1][0])
                left, right = pipe.states[-1], states[j]
                # classical solve between the current rightmost state and the next datum
                sol = self._classical(left, right, p, x)
                i = len(pipe.states) - 1
                pipe.states.append(right)
                self._insert_wave_pair(p, i, left, right, sol, x, "initial", True)
        if not self.line:
            self._junction_emit("junction")
            for p in range(len(self.pipes)):
                self._boundary_emit(p, "boundary")
        self._check_residuals()
        for p in range(len(self.pipes)):
            self._schedule(p)
        s0 = self._measure(0.0, "initial", 0, None)[0]
        self.trace.initial = s0
        self.trace.samples.append(s0)
        self.trace.n_fronts_max = s0.n_fronts

    def _classical(self, left, right, p, x):
        try:
            return solve_classical(self.law, left, right, self.sigma_max)
        except SolverError as exc:
            raise type(exc)(f"pipe {p + 1}, x={x:.17g}, t={self.t:.17g}: {exc}",
                            **exc.diagnostics) from exc

    # -- scheduling ----------------------------------------------------

    def _candidate(self, p: int) -> Optional[Event]:
        fr = self.pipes[p].fronts
        if not fr:
            return None
        best = None
        now = self.t
        for a, b in zip(fr, fr[1:]):
            if a.speed > b.speed:
                t = ((b.x0 - b.speed * b.t0) - (a.x0 - a.speed * a.t0)) / (a.speed - b.speed)
                ev = Event(t, "collision", p, (a.id, b.id))
                if best is None or (ev.time, min(ev.fronts)) < (best.time, min(best.fronts)):
                    best = ev
        f = fr[0]
        if f.speed < 0:
            t = f.t0 + (self.lo - f.x0) / f.speed
            ev = Event(t, "exit_left" if self.line else "junction", p, (f.id,))
            if best is None or (ev.time, f.id) < (best.time, min(best.fronts)):
                best = ev
        f = fr[-1]
        if f.speed > 0:
            t = f.t0 + (self.hi - f.x0) / f.speed
            ev = Event(t, "exit_right" if self.line else "boundary", p, (f.id,))
            if best is None or (ev.time, f.id) < (best.time, min(best.fronts)):
                best = ev
        if best is not None and best.time - now < MIN_EVENT_SEPARATION:
            best = Event(now, best.kind, best.pipe, best.fronts)
        return best

    def _schedule(self, p: int) -> None:
        pipe = self.pipes[p]
        pipe.version += 1
        ev = self._candidate(p)
        if ev is not None:
            heapq.heappush(self._heap, (ev.time, p, min(ev.fronts), pipe.version, ev))

    def peek(self) -> Optional[Event]:
        """Next event without resolving it."""
        heap = self._heap
        while heap:
            _, p, _, ver, ev = heap[0]
            if ver == self.pipes[p].version:
                return ev
            heapq.heappop(heap)
        return None

    # -- views ---------------------------------------------------------

    def fronts_at(self, t: float) -> list[FrontView]:
        return [f.view(t) for pipe in self.pipes for f in pipe.fronts]

    def snapshot(self, t: Optional[float] = None) -> Snapshot:
        """Field at time ``t``, which must not lie beyond the next event."""
        t = self.t if t is None else float(t)
        fields = []
        for pipe in self.pipes:
            xs = np.array([f.position(t) for f in pipe.fronts])
            xs = np.clip(np.maximum.accumulate(xs) if len(xs) else xs, self.lo, self.hi)
            edges = np.concatenate(([self.lo], xs, [self.hi]))
            fields.append(PipeField(edges, np.array(pipe.states, dtype=float).reshape(-1, 2)))
        return Snapshot(t, tuple(fields), tuple(self.fronts_at(t)))

    def _pipe_columns(self, j: int):
        # static data of one pipe, rebuilt only when its fronts change
        c = self._pcols[j]
        if c is None:
            fr = self.pipes[j].fronts
            rows = np.array(
                [(f.pipe, f.family, f.sigma, f.id, f.x0 - f.speed * f.t0, f.speed) for f in fr],
                dtype=float,
            ).reshape(-1, 6)
            # every state jump carries a front, so TV is a sum over fronts
            tv = math.fsum(abs(f.right.rho - f.left.rho) + abs(f.right.q - f.left.q) for f in fr)
            c = self._pcols[j] = (rows, tv)
        return c

    def _columns(self):
        if self._cols is None:
            parts = [self._pipe_columns(j) for j in range(len(self.pipes))]
            rows = np.concatenate([r for r, _ in parts])
            self._cols = (
                rows[:, 0].astype(int),
                rows[:, 1].astype(int),
                rows[:, 2],
                rows[:, 3].astype(int),
                rows[:, 4],
                rows[:, 5],
                math.fsum(tv for _, tv in parts),
            )
        return self._cols

    def _arrays(self, t: float) -> FrontArrays:
        pipe, fam, sig, ids, c0, sp, _ = self._columns()
        return FrontArrays(pipe, fam, c0 + sp * t, sig, ids)

    def _tv(self) -> float:
        return self._columns()[6]

    def _measure(self, t, kind, pipe, dj):
        arr = self._arrays(t)
        tot = j_totals(arr, self.params, ordered=True)
        return tot.sample(t, self._tv(), kind, pipe, dj), arr, tot

    # -- event resolution ----------------------------------------------

    def _check_residuals(self, pipes=None, junction: bool = True) -> None:
        """Fold the junction and boundary residuals into the trace; only
        the listed pipes (default all) can have changed traces."""
        res = self.trace.residuals
        if self.line:
            return
        if junction:
            mass, mism, ent = junction_residuals(
                self.law, self.net.nu_norms, [p.states[0] for p in self.pipes]
            )
            res["junction_mass"] = max(res["junction_mass"], abs(mass))
            res["junction_pressure"] = max(res["junction_pressure"], mism)
            res["junction_entropy"] = max(res["junction_entropy"], ent)
        for p in range(len(self.pipes)) if pipes is None else pipes:
            pipe = self.pipes[p]
            b = boundary_residual(
                self.law, pipe.states[-1], self.net.equilibria[p], self.net.gains[p]
            )
            res["boundary"] = max(res["boundary"], abs(b))

    def step(self) -> Optional[EventRecord]:
        """Resolve the next event; returns its record or ``None`` if idle."""
        ev = self.peek()
        if ev is None:
            return None
        heapq.heappop(self._heap)
        if len(self.trace.events) >= self.cfg.interaction_cap:
            err = InteractionCapExceeded(
                f"interaction cap {self.cfg.interaction_cap} reached at t={ev.time:.17g}"
            )
            err.trace = self.trace
            raise err
        t, p = ev.time, ev.pipe
        s_before, arr_before, tot_before = self._measure(t, ev.kind + "-", p + 1, None)
        self.t = t
        pipe = self.pipes[p]
        touched = {p}
        if ev.kind == "collision":
            i = next(k for k, f in enumerate(pipe.fronts) if f.id == ev.fronts[0])
            a, b = pipe.fronts[i], pipe.fronts[i + 1]
            x = 0.5 * (a.position(t) + b.position(t))
            left, right = pipe.states[i], pipe.states[i + 2]
            del pipe.fronts[i:i + 2]
            del pipe.states[i + 1]
            sol = self._classical(left, right, p, x)
            self._insert_wave_pair(p, i, left, right, sol, x, "interaction", False)
            incoming = ((a.family, a.sigma), (b.family, b.sigma))
            outgoing = ((p, 1, sol.sigma1), (p, 2, sol.sigma2))
        elif ev.kind in ("junction", "exit_left"):
            f = pipe.fronts.pop(0)
            pipe.states.pop(0)
            x = self.lo
            incoming = ((f.family, f.sigma),)
            if self.line:
                outgoing = ()
            else:
                sigmas = self._junction_emit("junction")
                outgoing = tuple((j, 2, s) for j, s in enumerate(sigmas))
                touched = set(range(len(self.pipes)))
        else:
            f = pipe.fronts.pop()
            pipe.states.pop()
            x = self.hi
            incoming = ((f.family, f.sigma),)
            if self.line:
                outgoing = ()
            else:
                outgoing = ((p, 1, self._boundary_emit(p, "boundary")),)
        self._cols = None
        for j in touched:
            self._pcols[j] = None
        self._check_residuals(touched, junction=ev.kind == "junction")
        for j in touched:
            self._schedule(j)
        arr_after = self._arrays(t)
        # only the changed terms are evaluated; they also give the new totals
        d = _delta_j(arr_before, arr_after, self.params, sorted(touched))
        dj = d[0]
        tot_after = tot_before.shifted(d, float(np.abs(arr_after.sigma).sum()), len(arr_after))
        s_after = tot_after.sample(t, self._tv(), ev.kind + "+", p + 1, dj)
        rec = EventRecord(len(self.trace.events), t, ev.kind, p, x, incoming, outgoing,
                          s_before, s_after, dj)
        self.trace.events.append(rec)
        self.trace.samples.extend((s_before, s_after))
        self.trace.n_fronts_max = max(self.trace.n_fronts_max, s_after.n_fronts)
        return rec

    def advance(self, t_stop: float) -> None:
        """Resolve every event with time ``<= t_stop``."""
        while True:
            ev = self.peek()
            if ev is None or ev.time > t_stop:
                break
            self.step()
        self.t = max(self.t, t_stop)

    def run(self) -> SimulationTrace:
        """Evolve to ``t_end`` recording samples, snapshots and events."""
        cfg = self.cfg
        t_end = float(cfg.t_end)
        grid = {float(t) for t in np.linspace(0.0, t_end, max(int(cfg.n_samples), 2))[1:]}
        snap_set = {float(t) for t in cfg.snapshot_times if 0.0 <= t <= t_end}
        pending = sorted(grid | snap_set)
        k = 0
        while True:
            ev = self.peek()
            last = ev is None or ev.time > t_end
            t_next = t_end if last else ev.time
            # sample times equal to an event time see the left limit
            while k < len(pending) and pending[k] <= t_next:
                ts = pending[k]
                if ts in grid:
                    self.trace.samples.append(self._measure(ts, "sample", 0, None)[0])
                if ts in snap_set:
                    self.trace.snapshots[ts] = self.snapshot(ts)
                k += 1
            if last:
                break
            self.step()
        self.t = t_end
        self.trace.final = self.snapshot(t_end)
        return self.trace


def initialize(config: SimConfig) -> Simulation:
    """Validated simulation with all initial, junction and boundary waves
    created and the event queue filled."""
    return Simulation(config)


def next_event(sim: Simulation) -> Optional[Event]:
    return sim.peek()


def run(config: SimConfig) -> SimulationTrace:
    return Simulation(config).run()


def run_line(
    law: PressureLaw,
    segments: Segments,
    epsilon: float,
    t_end: float,
    domain: tuple[float, float] = (0.0, 1.0),
    **kwargs,
) -> SimulationTrace:
    """Front tracking for one open pipe on ``domain`` (no junction, no
    feedback): fronts reaching an end leave the domain."""
    cfg = SimConfig(law, None, [list(segments)], epsilon, t_end, domain=domain, **kwargs)
    return Simulation(cfg).run()
