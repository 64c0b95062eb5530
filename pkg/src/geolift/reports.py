"""Report serialization: JSON payloads per task kind, lossless re-parsing,
and plot-ready CSV extraction.

Floats pass through Python's repr (shortest exact round-trip, up to 17
significant digits), so a written report re-parses to bit-identical values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .connect import ConnectionResult, HomotopyResult, Solution
from .errors import ConfigurationError
from .jacobi import CausalConjugateReport, ConjugateReport
from .lifting import LiftResult
from .manifolds import CausalCharacter, TangentVector
from .probes import ConsistencyReport, ProbeReport

__all__ = [
    "SCHEMA_VERSION",
    "lift_payload",
    "lift_from_payload",
    "connection_payload",
    "connection_from_payload",
    "conjugate_payload",
    "conjugate_from_payload",
    "probe_payload",
    "probe_from_payload",
    "consistency_payload",
    "consistency_from_payload",
    "homotopy_payload",
    "homotopy_from_payload",
    "write_report",
    "read_report",
    "emit_plot_data",
]

SCHEMA_VERSION = 1


def _arr(x) -> list:
    return [float(a) for a in np.asarray(x).ravel()]


def _character_payload(ch: Optional[CausalCharacter]):
    if ch is None:
        return None
    return {"tag": ch.tag, "orientation": ch.orientation}


def _character_from(d) -> Optional[CausalCharacter]:
    if d is None:
        return None
    return CausalCharacter(d["tag"], d["orientation"])


# -- lift -------------------------------------------------------------------


def lift_payload(res: LiftResult, trace: bool = False) -> dict:
    out = {
        "status": res.status,
        "p": _arr(res.p),
        "reach": res.reach,
        "failure": res.failure,
        "cluster_point": None
        if res.cluster_point is None
        else _arr(res.cluster_point.components),
        "samples": [{"t": float(t), "v": _arr(v)} for t, v in zip(res.ts, res.vs)],
    }
    if trace:
        out["trace"] = {
            "residuals": [float(r) for r in res.diagnostics.get("residuals", [])],
            "dets": [float(d) for d in res.diagnostics.get("dets", [])],
            "newton_iters": list(res.diagnostics.get("newton_iters", [])),
        }
    out["message"] = res.diagnostics.get("message", "")
    return out


def lift_from_payload(d: dict) -> LiftResult:
    p = np.array(d["p"])
    ts = np.array([s["t"] for s in d["samples"]])
    vs = np.array([s["v"] for s in d["samples"]])
    cp = d.get("cluster_point")
    diagnostics = {"message": d.get("message", "")}
    if "trace" in d:
        diagnostics.update(d["trace"])
    return LiftResult(
        status=d["status"],
        p=p,
        ts=ts,
        vs=vs,
        reach=d["reach"],
        failure=d["failure"],
        cluster_point=None if cp is None else TangentVector(p, np.array(cp)),
        diagnostics=diagnostics,
    )


# -- connection -------------------------------------------------------------


def connection_payload(res: ConnectionResult) -> dict:
    return {
        "p": _arr(res.p),
        "q": _arr(res.q),
        "solutions": [
            {
                "v": _arr(s.v.components),
                "class_label": int(s.class_label),
                "character": _character_payload(s.character),
                "h_norm": float(s.h_norm),
            }
            for s in res.solutions
        ],
        "diagnostics": res.diagnostics,
    }


def connection_from_payload(d: dict) -> ConnectionResult:
    p = np.array(d["p"])
    sols = [
        Solution(
            TangentVector(p, np.array(s["v"])),
            s["class_label"],
            _character_from(s["character"]),
            s.get("h_norm", 0.0),
        )
        for s in d["solutions"]
    ]
    return ConnectionResult(p=p, q=np.array(d["q"]), solutions=sols, diagnostics=d["diagnostics"])


# -- conjugate scans --------------------------------------------------------


def conjugate_payload(rep: ConjugateReport) -> dict:
    return {
        "ray": {"base": _arr(rep.ray.base), "components": _arr(rep.ray.components)},
        "conjugate_times": [float(t) for t in rep.conjugate_times],
        "scan_horizon": float(rep.scan_horizon),
        "det_samples": [[float(t), float(v)] for t, v in rep.det_samples],
    }


def conjugate_from_payload(d: dict) -> ConjugateReport:
    return ConjugateReport(
        ray=TangentVector(np.array(d["ray"]["base"]), np.array(d["ray"]["components"])),
        conjugate_times=list(d["conjugate_times"]),
        scan_horizon=d["scan_horizon"],
        det_samples=np.array(d["det_samples"]).reshape(-1, 2),
    )


def causal_certificate_payload(rep: CausalConjugateReport) -> dict:
    return rep.to_jsonable()


# -- probes -----------------------------------------------------------------


def probe_payload(rep: ProbeReport) -> dict:
    return rep.to_jsonable()


def probe_from_payload(d: dict) -> ProbeReport:
    return ProbeReport(
        verdict=d["verdict"],
        witness=d["witness"],
        parameters=d["parameters"],
        history=d["history"],
        seed=d["seed"],
    )


def consistency_payload(rep: ConsistencyReport) -> dict:
    return rep.to_jsonable()


def consistency_from_payload(d: dict) -> ConsistencyReport:
    return ConsistencyReport(
        proper=probe_from_payload(d["proper"]),
        pseudoconvex=probe_from_payload(d["pseudoconvex"]),
        disprisoning=probe_from_payload(d["disprisoning"]),
        consistent=d["consistent"],
        conflicts=d["conflicts"],
    )


# -- homotopy ---------------------------------------------------------------


def homotopy_payload(res: HomotopyResult) -> dict:
    return {
        "s_values": _arr(res.s_values),
        "t_values": _arr(res.t_values),
        "points": [[_arr(x) for x in row] for row in res.points],
        "speed2": [[float(v) for v in row] for row in res.speed2],
        "slice_timelike": list(res.slice_timelike),
        "max_speed2": _arr(res.max_speed2),
        "endpoint_spread": float(res.endpoint_spread),
        "base_spread": float(res.base_spread),
        "breaches": [[int(i), float(v)] for i, v in res.breaches],
    }


def homotopy_from_payload(d: dict) -> HomotopyResult:
    return HomotopyResult(
        s_values=np.array(d["s_values"]),
        t_values=np.array(d["t_values"]),
        points=np.array(d["points"]),
        speed2=np.array(d["speed2"]),
        slice_timelike=[bool(b) for b in d["slice_timelike"]],
        max_speed2=np.array(d["max_speed2"]),
        endpoint_spread=d["endpoint_spread"],
        base_spread=d["base_spread"],
        breaches=[(int(i), float(v)) for i, v in d["breaches"]],
    )


# -- files ------------------------------------------------------------------


def write_report(path: Path, task: dict, result: dict, seed: int, generated_at: str) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "task": task,
        "result": result,
        "seed": seed,
        "generated_at": generated_at,
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def read_report(path: Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported report schema: {doc.get('schema_version')}")
    return doc


# -- CSV extraction ---------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (int, float)) else x for x in row])


def emit_plot_data(report: dict, kind: str, out_dir: Path) -> list[Path]:
    """Write plottable CSV extracted from a task report.

    kinds: "det" (conjugate scans), "lift" (lift trace), "homotopy"
    (long-format grid), "geodesic" (sampled solutions of connect-like
    tasks are not paths, so geodesic extraction applies to exp tasks).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task_kind = report["task"]["kind"]
    result = report["result"]
    written: list[Path] = []

    if kind == "det":
        if task_kind not in ("conjugate_scan",):
            raise ConfigurationError(f"kind 'det' incompatible with task {task_kind!r}")
        path = out_dir / "det_vs_t.csv"
        _write_csv(path, ["t", "det"], result["det_samples"])
        written.append(path)
    elif kind == "lift":
        if task_kind not in ("lift", "connect_causal"):
            raise ConfigurationError(f"kind 'lift' incompatible with task {task_kind!r}")
        lifts = [result] if task_kind == "lift" else result.get("lifts", [])
        for i, lift in enumerate(lifts):
            path = out_dir / f"lift_trace_{i}.csv"
            n = len(lift["samples"][0]["v"])
            res_tr = lift.get("trace", {}).get("residuals")
            rows = []
            for j, s in enumerate(lift["samples"]):
                row = [s["t"], *s["v"]]
                row.append(res_tr[j] if res_tr and j < len(res_tr) else "")
                rows.append(row)
            _write_csv(path, ["t", *[f"v{k}" for k in range(n)], "residual"], rows)
            written.append(path)
    elif kind == "homotopy":
        if task_kind != "homotopy":
            raise ConfigurationError(f"kind 'homotopy' incompatible with task {task_kind!r}")
        path = out_dir / "homotopy_grid.csv"
        s_vals = result["s_values"]
        t_vals = result["t_values"]
        pts = result["points"]
        sp2 = result["speed2"]
        m = len(pts[0][0])
        rows = []
        for i, s in enumerate(s_vals):
            for j, t in enumerate(t_vals):
                g = sp2[i][j] if j < len(sp2[i]) else sp2[i][-1]
                rows.append([s, t, *pts[i][j], g])
        _write_csv(path, ["s", "t", *[f"x{k}" for k in range(m)], "speed2"], rows)
        written.append(path)
    elif kind == "geodesic":
        if task_kind != "exp":
            raise ConfigurationError(f"kind 'geodesic' incompatible with task {task_kind!r}")
        path = out_dir / "geodesic_trace.csv"
        samples = result["samples"]
        m = len(samples[0]["x"])
        rows = [[s["t"], *s["x"], *s["xdot"]] for s in samples]
        _write_csv(
            path,
            ["t", *[f"x{k}" for k in range(m)], *[f"xdot{k}" for k in range(m)]],
            rows,
        )
        written.append(path)
    elif kind == "solutions":
        if task_kind not in ("connect", "connect_causal", "multiplicity"):
            raise ConfigurationError(f"kind 'solutions' incompatible with task {task_kind!r}")
        path = out_dir / "solutions.csv"
        sols = result["solutions"]
        m = len(sols[0]["v"]) if sols else 2
        rows = [
            [
                s["class_label"],
                *s["v"],
                "" if s["character"] is None else s["character"]["tag"],
                s.get("h_norm", ""),
            ]
            for s in sols
        ]
        _write_csv(
            path,
            ["class_label", *[f"v{k}" for k in range(m)], "character", "h_norm"],
            rows,
        )
        written.append(path)
    else:
        raise ConfigurationError(f"unknown plot kind {kind!r}")
    return written
