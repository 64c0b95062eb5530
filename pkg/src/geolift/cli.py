"""Scenario runner: manifold + task list in a TOML config, JSON reports out.

Exit code 0 means every task completed without invariant breaches; negative
mathematical findings (a lift classified as obstructed, a nonproperness
witness) are successful completions. Parse errors, unknown catalog ids and
precondition violations exit nonzero with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import reports
from .connect import (
    connect,
    connect_causal,
    enumerate_multiplicity,
    straighten_homotopy,
)
from .errors import (
    ConeBreachError,
    ConfigurationError,
    GeoliftError,
    NoTimelikeSeedError,
    PreconditionError,
    UnsupportedOperationError,
)
from .integrate import IntegratorOptions, exp_map, integrate_geodesic
from .jacobi import conjugate_scan, dexp
from .lifting import causal_lift, lift_path, polyline_path, straight_path
from .manifolds import catalog_manifold, unit_ray
from .probes import (
    BallSpec,
    ConeSpec,
    ProbeBudgets,
    imprisonment_scan,
    properness_consistency_check,
    properness_probe,
    pseudoconvexity_scan,
)

__all__ = ["Scenario", "load_scenario", "run_scenario", "main"]

TASK_KINDS = (
    "exp",
    "dexp",
    "conjugate_scan",
    "lift",
    "connect",
    "connect_causal",
    "multiplicity",
    "homotopy",
    "probe_proper",
    "probe_imprison",
    "probe_pseudoconvex",
    "probe_consistency",
)

_TOLERANCE_KEYS = ("rel_tol", "abs_tol", "max_steps", "min_step", "domain_margin")


@dataclass
class Scenario:
    manifold: str
    tasks: list[dict]
    output: str = "reports"
    seed: int = 0
    tolerances: dict = field(default_factory=dict)


def load_scenario(config_path: str | Path) -> Scenario:
    path = Path(config_path)
    try:
        doc = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"cannot parse scenario {path}: {e}") from e
    if "manifold" not in doc:
        raise ConfigurationError("scenario must set 'manifold'")
    tasks = doc.get("tasks", [])
    if not isinstance(tasks, list) or not tasks:
        raise ConfigurationError("scenario must declare at least one [[tasks]] entry")
    for t in tasks:
        kind = t.get("kind")
        if kind not in TASK_KINDS:
            raise ConfigurationError(f"unknown task kind {kind!r}; known: {TASK_KINDS}")
    tol = doc.get("tolerances", {})
    unknown = set(tol) - set(_TOLERANCE_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown tolerance keys: {sorted(unknown)}")
    return Scenario(
        manifold=doc["manifold"],
        tasks=tasks,
        output=doc.get("output", "reports"),
        seed=int(doc.get("seed", 0)),
        tolerances=tol,
    )


def _integrator_options(tolerances: dict) -> IntegratorOptions:
    return IntegratorOptions(**tolerances) if tolerances else IntegratorOptions()


def _point(task, key, M):
    if key not in task:
        raise ConfigurationError(f"task {task.get('kind')} needs '{key}'")
    x = np.asarray(task[key], dtype=float)
    if not M.in_domain(x):
        raise PreconditionError(f"point {key}={x.tolist()} violates the domain predicate")
    return x


def _cone(task, M) -> ConeSpec:
    spec = task.get("cone")
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("task needs a cone table with a 'kind'")
    p = spec.get("p")
    if p is not None:
        p = np.asarray(p, dtype=float)
        if not M.in_domain(p):
            raise PreconditionError(f"cone base {p.tolist()} violates the domain predicate")
    return ConeSpec(spec["kind"], p)


def _ball(task) -> BallSpec:
    spec = task.get("ball")
    if not isinstance(spec, dict):
        raise ConfigurationError("task needs a ball table {center, radius}")
    return BallSpec(np.asarray(spec["center"], dtype=float), float(spec["radius"]))


def _budgets(task) -> ProbeBudgets:
    spec = task.get("budgets", {})
    return ProbeBudgets(
        n_rays=int(spec.get("n_rays", 32)),
        n_scale=int(spec.get("n_scale", 192)),
        scale_max=float(spec.get("scale_max", 8.0)),
        doublings=int(spec.get("doublings", 2)),
    )


def _path_from_task(task, M, p):
    if "waypoints" in task:
        pts = [p] + [np.asarray(w, dtype=float) for w in task["waypoints"]]
        return polyline_path(pts, causal_tag=task.get("causal_tag"))
    if "q" in task:
        q = np.asarray(task["q"], dtype=float)
        return straight_path(p, p + M.delta(p, q), causal_tag=task.get("causal_tag"))
    raise ConfigurationError("lift task needs 'q' or 'waypoints'")


def _run_task(M, task, opts, seed, trace):
    kind = task["kind"]
    breach = False

    if kind == "exp":
        p = _point(task, "p", M)
        v = np.asarray(task["v"], dtype=float)
        path = integrate_geodesic(M, p, v, float(task.get("t_max", 1.0)), opts)
        payload = {
            "termination": path.termination,
            "t_end": path.t_end,
            "endpoint": [float(x) for x in path.points[-1]],
            "samples": [
                {"t": float(t), "x": [float(a) for a in x], "xdot": [float(a) for a in xd]}
                for t, x, xd in zip(path.ts, path.points, path.velocities)
            ],
        }
    elif kind == "dexp":
        p = _point(task, "p", M)
        D = dexp(M, p, np.asarray(task["v"], dtype=float), opts)
        payload = {"matrix": [[float(a) for a in row] for row in D.matrix], "det": D.det}
    elif kind == "conjugate_scan":
        p = _point(task, "p", M)
        w = unit_ray(M, p, np.asarray(task["direction"], dtype=float))
        rep = conjugate_scan(
            M, p, w, float(task.get("t_max", 10.0)), int(task.get("n_samples", 200)), opts
        )
        payload = reports.conjugate_payload(rep)
    elif kind == "lift":
        p = _point(task, "p", M)
        path = _path_from_task(task, M, p)
        v0 = np.asarray(task.get("v0", [0.0] * M.dim), dtype=float)
        try:
            res = lift_path(M, p, path, v0, iopts=opts)
            payload = reports.lift_payload(res, trace)
        except ConeBreachError as e:
            breach = True
            payload = {"breach": str(e)}
    elif kind == "connect":
        p = _point(task, "p", M)
        q = _point(task, "q", M)
        res = connect(
            M,
            p,
            q,
            strategy=task.get("strategy", "straight"),
            opts=opts,
            waypoints=[np.asarray(w, dtype=float) for w in task.get("waypoints", [])] or None,
            budget=float(task.get("budget", 10.0)),
            grid_step=float(task.get("grid_step", 1.0)),
            grid_offset=float(task.get("grid_offset", 0.0)),
        )
        payload = reports.connection_payload(res)
    elif kind == "connect_causal":
        p = _point(task, "p", M)
        q = _point(task, "q", M)
        try:
            res = connect_causal(M, p, q, opts=opts, seed_mode=task.get("seed_mode", "auto"))
            payload = reports.connection_payload(res)
        except ConeBreachError as e:
            breach = True
            payload = {"breach": str(e)}
        except NoTimelikeSeedError as e:
            payload = {"solutions": [], "no_seed": str(e)}
    elif kind == "multiplicity":
        p = _point(task, "p", M)
        q = _point(task, "q", M)
        res = enumerate_multiplicity(M, p, q, int(task.get("class_budget", 3)), opts=opts)
        payload = reports.connection_payload(res)
    elif kind == "homotopy":
        p = _point(task, "p", M)
        q = _point(task, "q", M)
        conn = connect_causal(M, p, q, opts=opts)
        if not conn.solutions:
            payload = {"skipped": "no timelike geodesic found", "diagnostics": conn.diagnostics}
        else:
            from .connect import build_timelike_seed

            seed_path = build_timelike_seed(M, p, q)
            lift = causal_lift(M, p, seed_path, iopts=opts)
            H = straighten_homotopy(
                M, p, lift, int(task.get("n_s", 25)), int(task.get("n_t", 25)), opts
            )
            payload = reports.homotopy_payload(H)
            breach = bool(H.breaches)
    elif kind == "probe_proper":
        rep = properness_probe(M, _cone(task, M), _ball(task), _budgets(task), opts, seed)
        payload = reports.probe_payload(rep)
    elif kind == "probe_imprison":
        rep = imprisonment_scan(
            M,
            _cone(task, M),
            n_rays=int(task.get("n_rays", 32)),
            t_horizon=float(task.get("t_horizon", 20.0)),
            bound_radius=float(task.get("bound_radius", 1.0)),
            opts=opts,
            seed=seed,
        )
        payload = reports.probe_payload(rep)
    elif kind == "probe_pseudoconvex":
        rep = pseudoconvexity_scan(
            M,
            _cone(task, M),
            _ball(task),
            n_segments=int(task.get("n_segments", 32)),
            opts=opts,
            seed=seed,
        )
        payload = reports.probe_payload(rep)
    elif kind == "probe_consistency":
        rep = properness_consistency_check(
            M, _cone(task, M), _ball(task), _budgets(task), opts, seed
        )
        payload = reports.consistency_payload(rep)
    else:  # pragma: no cover - guarded by load_scenario
        raise ConfigurationError(f"unknown task kind {kind!r}")

    return payload, breach


def run_scenario(
    config_path: str | Path,
    seed: int | None = None,
    out: str | None = None,
    trace: bool = False,
    parallel: bool = False,
) -> int:
    """Execute a scenario config; returns the process exit code."""
    try:
        scenario = load_scenario(config_path)
        M = catalog_manifold(scenario.manifold)
        opts = _integrator_options(scenario.tolerances)
    except GeoliftError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    run_seed = scenario.seed if seed is None else seed
    out_dir = Path(out if out is not None else scenario.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat()

    def job(idx_task):
        idx, task = idx_task
        return _run_task(M, task, opts, run_seed + idx, trace)

    indexed = list(enumerate(scenario.tasks))
    try:
        if parallel:
            with ThreadPoolExecutor() as pool:
                results = list(pool.map(job, indexed))
        else:
            results = [job(it) for it in indexed]
    except (PreconditionError, ConfigurationError, UnsupportedOperationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    any_breach = False
    summary = []
    for (idx, task), (payload, breach) in zip(indexed, results):
        any_breach = any_breach or breach
        name = f"task_{idx:02d}_{task['kind']}.json"
        reports.write_report(out_dir / name, task, payload, run_seed + idx, stamp)
        summary.append({"index": idx, "kind": task["kind"], "report": name, "breach": breach})
    reports.write_report(
        out_dir / "summary.json",
        {"kind": "summary", "manifold": scenario.manifold, "n_tasks": len(summary)},
        {"tasks": summary},
        run_seed,
        stamp,
    )
    return 1 if any_breach else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="geolift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario config")
    run_p.add_argument("config")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--trace", action="store_true", help="full lift sample traces in reports")
    run_p.add_argument("--parallel", action="store_true", help="run independent tasks concurrently")
    run_p.add_argument("--out", default=None, help="report output directory")

    plot_p = sub.add_parser("plot", help="extract plot-ready CSV from a report")
    plot_p.add_argument("report")
    plot_p.add_argument("--kind", required=True, choices=["det", "lift", "homotopy", "geodesic", "solutions"])
    plot_p.add_argument("--out", default="plots")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run_scenario(
            args.config, seed=args.seed, out=args.out, trace=args.trace, parallel=args.parallel
        )
    if args.command == "plot":
        try:
            doc = reports.read_report(Path(args.report))
            written = reports.emit_plot_data(doc, args.kind, Path(args.out))
        except GeoliftError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        for path in written:
            print(path)
        return 0
    return 2  # pragma: no cover


if __name__ == "__main__":
    raise SystemExit(main())
