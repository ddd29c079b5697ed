"""Immutable views of a front-tracking state at a fixed time."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .eos import GasState

__all__ = ["FrontView", "PipeField", "Snapshot", "l1_distance", "field_from_segments"]


@dataclass(frozen=True)
class FrontView:
    id: int
    pipe: int
    family: int
    position: float
    speed: float
    sigma: float
    left: GasState
    right: GasState

    @property
    def kind(self) -> str:
        return "shock" if self.sigma < 0 else "rarefaction"


@dataclass(frozen=True)
class PipeField:
    """Piecewise-constant field on ``[0, 1]``: ``edges`` has one entry more
    than ``states`` (shape ``(n, 2)`` holding ``rho, q``)."""

    edges: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.edges) != len(self.states) + 1:
            raise ValueError("edges must have exactly one more entry than states")

    def value_at(self, x: float) -> GasState:
        i = int(np.searchsorted(self.edges, x, side="right")) - 1
        i = min(max(i, 0), len(self.states) - 1)
        return GasState(float(self.states[i, 0]), float(self.states[i, 1]))

    def jumps(self) -> np.ndarray:
        return np.diff(self.states, axis=0)


def field_from_segments(segments: Sequence[tuple[float, float, float]]) -> PipeField:
    """Build a field from ``(x_right_end, rho, q)`` triples."""
    edges = [0.0] + [float(s[0]) for s in segments]
    states = np.array([[float(s[1]), float(s[2])] for s in segments])
    return PipeField(np.array(edges), states)


@dataclass(frozen=True)
class Snapshot:
    t: float
    fields: tuple[PipeField, ...]
    fronts: tuple[FrontView, ...]

    @property
    def n_pipes(self) -> int:
        return len(self.fields)

    def pipe_fronts(self, pipe: int) -> list[FrontView]:
        """Fronts of one pipe (0-based index), ordered left to right."""
        return [f for f in self.fronts if f.pipe == pipe]


def _pipe_l1(a: PipeField, b: PipeField) -> float:
    cuts = np.union1d(a.edges, b.edges)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    widths = np.diff(cuts)
    ia = np.clip(np.searchsorted(a.edges, mids, side="right") - 1, 0, len(a.states) - 1)
    ib = np.clip(np.searchsorted(b.edges, mids, side="right") - 1, 0, len(b.states) - 1)
    diff = np.abs(a.states[ia] - b.states[ib]).sum(axis=1)
    return math.fsum(diff * widths)


def l1_distance(a, b) -> float:
    """L1 distance ``sum over pipes of int |drho| + |dq| dx``.

    Accepts two :class:`Snapshot` objects or two sequences of
    :class:`PipeField`.
    """
    fa = a.fields if isinstance(a, Snapshot) else a
    fb = b.fields if isinstance(b, Snapshot) else b
    if len(fa) != len(fb):
        raise ValueError("fields live on different networks")
    return math.fsum(_pipe_l1(x, y) for x, y in zip(fa, fb))
