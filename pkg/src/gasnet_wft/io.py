"""CSV and JSON writers.  All floats are written with 17 significant
digits so that a file round-trips to the same doubles; pipes are numbered
from 1 in every file."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .snapshot import Snapshot

__all__ = [
    "SCHEMA_VERSION",
    "SNAPSHOT_HEADER",
    "FUNCTIONALS_HEADER",
    "EVENTS_HEADER",
    "fmt",
    "write_snapshot",
    "write_functionals",
    "write_events",
    "write_json",
    "snapshot_name",
    "PLOT_SCRIPT",
]

SCHEMA_VERSION = "1.0"
SNAPSHOT_HEADER = ("pipe", "x_left", "x_right", "rho", "q")
FUNCTIONALS_HEADER = (
    "t", "event_kind", "pipe", "V", "Q11", "Q22", "Q12", "J", "TV", "strength_sum", "n_fronts", "dJ",
)
EVENTS_HEADER = (
    "index", "t", "kind", "pipe", "x", "incoming", "outgoing", "J_before", "J_after", "dJ",
)


def fmt(v) -> str:
    """Full-precision text for numbers; ``''`` for ``None``."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:.6f}.csv"


def _writer(path: Path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_snapshot(snap: Snapshot, path) -> Path:
    """Piecewise-constant field, rows sorted by ``(pipe, x_left)``."""
    path = Path(path)
    fh, w = _writer(path)
    with fh:
        w.writerow(SNAPSHOT_HEADER)
        for p, field in enumerate(snap.fields):
            for i in range(len(field.states)):
                a, b = field.edges[i], field.edges[i + 1]
                if b <= a:
                    continue
                w.writerow((p + 1, fmt(a), fmt(b), fmt(field.states[i, 0]), fmt(field.states[i, 1])))
    return path


def write_functionals(rows: Iterable, path) -> Path:
    """One row per uniform sample and per event limit (``<kind>-`` /
    ``<kind>+``), in time order; ``dJ`` is set on right-limit rows."""
    path = Path(path)
    fh, w = _writer(path)
    with fh:
        w.writerow(FUNCTIONALS_HEADER)
        for r in rows:
            w.writerow((
                fmt(r.t), r.event_kind, r.pipe, fmt(r.V), fmt(r.Q11), fmt(r.Q22), fmt(r.Q12),
                fmt(r.J), fmt(r.TV), fmt(r.strength_sum), r.n_fronts, fmt(r.dJ),
            ))
    return path


def _waves(items, with_pipe: bool) -> str:
    # "family:sigma" or "pipe:family:sigma" joined by ';'
    if with_pipe:
        return ";".join(f"{p + 1}:{f}:{fmt(s)}" for p, f, s in items)
    return ";".join(f"{f}:{fmt(s)}" for f, s in items)


def write_events(events: Iterable, path) -> Path:
    path = Path(path)
    fh, w = _writer(path)
    with fh:
        w.writerow(EVENTS_HEADER)
        for e in events:
            w.writerow((
                e.index, fmt(e.time), e.kind, e.pipe + 1, fmt(e.position),
                _waves(e.incoming, False), _waves(e.outgoing, True),
                fmt(e.before.J), fmt(e.after.J), fmt(e.dJ),
            ))
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        # JSON has no infinities; keep them readable
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path, schema: Optional[str] = SCHEMA_VERSION) -> Path:
    """JSON with ``schema_version`` first; Python floats already print
    with round-trip precision."""
    path = Path(path)
    doc = {"schema_version": schema, **_clean(obj)} if schema else _clean(obj)
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path


PLOT_SCRIPT = '''"""Plot the data written by a run (needs matplotlib; not a package
dependency).  Usage: python plot_results.py [OUT_DIR]"""

import csv
import glob
import os
import sys

import matplotlib.pyplot as plt

out = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))

rows = list(csv.DictReader(open(os.path.join(out, "functionals.csv"))))
smp = [r for r in rows if r["event_kind"] in ("initial", "sample")]
t = [float(r["t"]) for r in smp]
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
for key in ("J", "V", "TV"):
    ax[0].semilogy(t, [max(float(r[key]), 1e-300) for r in smp], label=key)
ax[0].set_xlabel("t")
ax[0].legend()
ax[0].set_title("functionals")

snaps = sorted(glob.glob(os.path.join(out, "snapshot_t*.csv")))
if snaps:
    data = list(csv.DictReader(open(snaps[-1])))
    for p in sorted({r["pipe"] for r in data}, key=int):
        xs, ys = [], []
        for r in data:
            if r["pipe"] == p:
                xs += [float(r["x_left"]), float(r["x_right"])]
                ys += [float(r["rho"])] * 2
        ax[1].plot(xs, ys, label=f"pipe {p}")
    ax[1].set_xlabel("x")
    ax[1].set_ylabel("rho")
    ax[1].legend()
    ax[1].set_title(os.path.basename(snaps[-1]))
fig.tight_layout()
fig.savefig(os.path.join(out, "results.png"), dpi=120)
print("wrote", os.path.join(out, "results.png"))
'''
