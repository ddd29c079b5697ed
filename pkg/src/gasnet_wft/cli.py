"""Command line entry point: ``gasnet-wft {run,calibrate,refine,compare}``.

Exit codes: 0 success, 1 a verdict failed, 2 invalid configuration,
3 solver failure, 4 interaction cap reached.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .calibration import calibrate_constants
from .exceptions import ConfigError, DomainError, InteractionCapExceeded, SolverError
from .front_tracking import Simulation
from .functionals import verify_decay
from .io import (
    PLOT_SCRIPT,
    fmt,
    snapshot_name,
    write_events,
    write_functionals,
    write_json,
    write_snapshot,
)
from .scenario import CONSTANT_NAMES, Scenario, load_scenario
from .snapshot import l1_distance
from .stability import compare_runs

__all__ = ["main", "cmd_run", "cmd_calibrate", "cmd_refine", "cmd_compare", "RESIDUAL_TOL"]

log = logging.getLogger("gasnet_wft")

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_SOLVER, EXIT_CAP = 0, 1, 2, 3, 4
RESIDUAL_TOL = 1e-9


def _scenario_block(sc: Scenario) -> dict:
    return {
        "source": sc.source,
        "seed": sc.seed,
        "resolved": sc.document,
    }


def _constants_block(sc: Scenario) -> dict:
    out = {"values": dict(sc.constants or {})}
    if sc.calibration is not None:
        out["calibrated"] = True
        out["raw"] = sc.calibration.raw
        out["n_samples"] = sc.calibration.n_samples
    else:
        out["calibrated"] = False
    return out


def _run_one(sc: Scenario, epsilon: Optional[float] = None):
    cfg = sc.sim_config(epsilon)
    sim = Simulation(cfg, validate=False)
    return cfg, sim.run()


def cmd_run(scenario_path, out_dir, seed: Optional[int] = None,
            epsilon: Optional[float] = None) -> int:
    """Run one scenario and write every output file into ``out_dir``."""
    sc = load_scenario(scenario_path, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg, trace = _run_one(sc, epsilon)
    params = cfg.params
    write_functionals(trace.samples, out / "functionals.csv")
    write_events(trace.events, out / "events.csv")
    snaps = dict(trace.snapshots)
    snaps[float(cfg.t_end)] = trace.final
    for t, snap in sorted(snaps.items()):
        write_snapshot(snap, out / snapshot_name(t))
    (out / "plot_results.py").write_text(PLOT_SCRIPT)
    residual_ok = all(v <= RESIDUAL_TOL for v in trace.residuals.values())
    verdicts = {"residuals_ok": residual_ok}
    decay = None
    if cfg.verify_decay:
        decay = verify_decay(trace, params)
        verdicts["decay_ok"] = decay.passed
    passed = all(verdicts.values())
    report = {
        "command": "run",
        "version": __version__,
        "scenario": _scenario_block(sc),
        "epsilon": cfg.epsilon,
        "t_end": cfg.t_end,
        "n_events": trace.n_events,
        "n_fronts_max": trace.n_fronts_max,
        "residuals": trace.residuals,
        "residual_tol": RESIDUAL_TOL,
        "functional_params": {
            "gamma_w": params.gamma_w, "kappa_q": params.kappa_q,
            "kappa_bound": params.kappa_bound(), "gain_bound": params.gain_bound(),
        },
        "constants": _constants_block(sc),
        "decay": decay.to_dict() if decay else None,
        "warnings": trace.warnings,
        "verdicts": verdicts,
        "passed": passed,
    }
    write_json(report, out / "report.json")
    log.info("run: %d events, residual max %.3e, %s", trace.n_events,
             max(trace.residuals.values(), default=0.0), "pass" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VERDICT


def cmd_calibrate(scenario_path, n_samples: int, out_path, seed: Optional[int] = None) -> int:
    """Calibrate the constants and write a ``functionals.constants`` block."""
    if n_samples < 1:
        raise ConfigError(f"need at least one sample, got {n_samples}", "n_samples")
    sc = load_scenario(scenario_path, seed=seed)
    strength = sc._strength_scale()
    cal = calibrate_constants(sc.law, sc.network, n_samples=n_samples, radius=strength,
                              max_strength=strength, seed=sc.seed)
    cal2 = calibrate_constants(sc.law, sc.network, n_samples=2 * n_samples, radius=strength,
                               max_strength=strength, seed=sc.seed)
    change = {k: abs(getattr(cal2, k) - getattr(cal, k)) / abs(getattr(cal, k)) for k in CONSTANT_NAMES}
    worst = max(change.values())
    note = (f"doubling n_samples to {2 * n_samples} changes the constants by at most "
            f"{100 * worst:.2f}% ({'converged' if worst < 0.05 else 'NOT converged'} at 5%)")
    doc = {"functionals": {"constants": {k: float(getattr(cal, k)) for k in CONSTANT_NAMES}}}
    text = (f"# calibrated constants, seed {sc.seed}, n_samples {n_samples}\n"
            f"# {note}\n" + yaml.safe_dump(doc, sort_keys=False))
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    write_json({
        "command": "calibrate", "version": __version__, "scenario": _scenario_block(sc),
        "n_samples": n_samples, "max_strength": strength, "radius": cal.radius, "constants": doc["functionals"]["constants"],
        "raw": cal.raw, "relative_change_on_doubling": change, "converged": worst < 0.05,
    }, out.with_suffix(".json"))
    log.info("calibrate: %s", note)
    return EXIT_OK


def cmd_refine(scenario_path, epsilons: Sequence[float], out_dir, seed: Optional[int] = None) -> int:
    """Run each epsilon and report L1 distances between successive levels
    at ``t_end`` with the observed convergence order."""
    eps = [float(e) for e in epsilons]
    if len(eps) < 2:
        raise ConfigError("refinement needs at least two epsilons", "epsilons")
    if any(not (e > 0 and math.isfinite(e)) for e in eps):
        raise ConfigError("epsilons must be positive", "epsilons")
    sc = load_scenario(scenario_path, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    finals, events = [], []
    for e in eps:
        _, tr = _run_one(sc, e)
        finals.append(tr.final)
        events.append(tr.n_events)
    dist = [l1_distance(a, b) for a, b in zip(finals[:-1], finals[1:])]
    orders = []
    for k in range(len(dist) - 1):
        if dist[k] > 0 and dist[k + 1] > 0 and eps[k] != eps[k + 1]:
            orders.append(math.log(dist[k] / dist[k + 1]) / math.log(eps[k] / eps[k + 1]))
        else:
            orders.append(None)
    monotone = all(b < a for a, b in zip(dist[:-1], dist[1:]))
    lines = ["level,epsilon,n_events,l1_to_next,order"]
    for k, e in enumerate(eps):
        d = dist[k] if k < len(dist) else None
        o = orders[k - 1] if 0 < k <= len(orders) else None
        lines.append(f"{k},{fmt(e)},{events[k]},{fmt(d)},{fmt(o)}")
    (out / "refine.csv").write_text("\n".join(lines) + "\n")
    write_json({
        "command": "refine", "version": __version__, "scenario": _scenario_block(sc),
        "epsilons": eps, "n_events": events, "l1_successive": dist, "orders": orders,
        "monotone": monotone,
        "mean_order": float(np.mean([o for o in orders if o is not None])) if any(
            o is not None for o in orders) else None,
    }, out / "report.json")
    for e, tr_final in zip(eps, finals):
        write_snapshot(tr_final, out / f"final_eps{e:.3e}.csv")
    log.info("refine: distances %s", ", ".join(f"{d:.3e}" for d in dist))
    return EXIT_OK


def cmd_compare(scenario_a, scenario_b, out_path, seed: Optional[int] = None,
                epsilon: Optional[float] = None) -> int:
    """Co-evolve two scenarios and report Phi and L1 along a shared time line."""
    sa = load_scenario(scenario_a, seed=seed)
    sb = load_scenario(scenario_b, seed=seed)
    if sa.network != sb.network or sa.law != sb.law:
        raise ConfigError("scenarios must share law and network", "network")
    sb.constants = sa.constants = sa.constants or sb.constants
    ca, cb = sa.sim_config(epsilon), sb.sim_config(epsilon)
    if cb.epsilon != ca.epsilon or cb.t_end != ca.t_end:
        cb = sb.sim_config(ca.epsilon, params=ca.params)
    rep = compare_runs(ca, cb, params=ca.params)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["t,label,run,phi,l1"]
    lines += [f"{fmt(p.t)},{p.label},{p.run},{fmt(p.phi)},{fmt(p.l1)}" for p in rep.points]
    out.with_suffix(".csv").write_text("\n".join(lines) + "\n")
    phi_tol = 1e-12 * max((p.phi for p in rep.points), default=0.0)
    write_json({
        "command": "compare", "version": __version__,
        "scenario_a": _scenario_block(sa), "scenario_b": _scenario_block(sb),
        **rep.to_dict(),
        "phi_nonincreasing_at_events": rep.max_phi_jump <= phi_tol,
    }, out)
    log.info("compare: sup L1 / L1(0) = %.4g, max Phi growth rate / eps = %.4g",
             rep.lipschitz_ratio, rep.growth_constant)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gasnet-wft", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, eps=True):
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--quiet", action="store_true", help="only errors on stderr")
        if eps:
            p.add_argument("--epsilon", type=float, default=None, help="override run.epsilon")

    p = sub.add_parser("run", help="run a scenario and write CSV/JSON output")
    p.add_argument("scenario")
    p.add_argument("--out", default="out")
    common(p)

    p = sub.add_parser("calibrate", help="estimate the interaction constants")
    p.add_argument("scenario")
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--out", default="constants.yaml")
    common(p, eps=False)

    p = sub.add_parser("refine", help="epsilon-refinement study")
    p.add_argument("scenario")
    p.add_argument("--epsilons", type=float, nargs="+", default=None,
                   help="explicit levels (default: --epsilon or run.epsilon halved 4 times)")
    p.add_argument("--out", default="refine")
    common(p)

    p = sub.add_parser("compare", help="co-evolve two scenarios (L1 and Phi)")
    p.add_argument("scenario")
    p.add_argument("other")
    p.add_argument("--out", default="compare.json")
    common(p)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        if args.verb == "run":
            return cmd_run(args.scenario, args.out, args.seed, args.epsilon)
        if args.verb == "calibrate":
            return cmd_calibrate(args.scenario, args.samples, args.out, args.seed)
        if args.verb == "refine":
            eps = args.epsilons
            if eps is None:
                base = args.epsilon or load_scenario(args.scenario, seed=args.seed).run["epsilon"]
                eps = [base / 2**k for k in range(5)]
            return cmd_refine(args.scenario, eps, args.out, args.seed)
        return cmd_compare(args.scenario, args.other, args.out, args.seed, args.epsilon)
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except InteractionCapExceeded as exc:
        log.error("%s", exc)
        return EXIT_CAP
    except (SolverError, DomainError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
