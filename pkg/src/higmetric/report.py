"""Serialization of analysis and scan results.

Reals are written with 12 significant digits; exact rationals are written
a second time as ``"p/q"`` strings under a ``*_exact`` key.
"""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Any

from .higman import ApproximationReport, ScanReport
from .lengths import LengthFunction, ViolationWitness
from .group import FiniteGroup

SCHEMA_VERSION = "1.0"


def real(x) -> float | None:
    if x is None:
        return None
    return float(f"{float(x):.12g}")


def ratio(x) -> str | None:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return f"{x}/1"
    return None


def put(d: dict, key: str, x) -> None:
    """Store ``x`` under ``key``, plus ``key_exact`` when it is rational."""
    d[key] = real(x)
    r = ratio(x)
    if r is not None:
        d[f"{key}_exact"] = r


def put_list(d: dict, key: str, xs) -> None:
    d[key] = [real(x) for x in xs]
    if xs and all(isinstance(x, Fraction) for x in xs):
        d[f"{key}_exact"] = [ratio(x) for x in xs]


def witness_dict(w: ViolationWitness | None, G: FiniteGroup) -> dict | None:
    if w is None:
        return None
    out = {
        "kind": w.kind,
        "relation": w.relation,
        "elements": list(w.elements),
        "labels": [G.labels[g] for g in w.elements],
    }
    put(out, "lhs", w.lhs)
    put(out, "rhs", w.rhs)
    return out


def status(flag) -> str:
    if flag is None:
        return "unknown"
    return "pass" if flag is True else "fail"


def scan_dict(r: ScanReport, config: dict | None = None, timing: bool = True) -> dict:
    d: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "kind": "higman-scan", "group": r.group,
                         "order": r.order, "metric": r.metric}
    put(d, "epsilon", r.epsilon)
    d.update(
        scanned=r.scanned,
        near_trivial=r.near_trivial,
        large=r.large,
        gap_violation=r.gap_violation,
        defect_too_big=r.defect_too_big,
        forbidden_gap=r.forbidden_gap,
        generating_only=r.generating_only,
        contractive=r.contractive,
        out_of_hypothesis=not r.contractive,
        theorem_holds=r.theorem_holds and r.forbidden_gap == 0,
    )
    ws = []
    for w in r.witnesses:
        item: dict[str, Any] = {"verdict": w.verdict.value, "index": w.index, "tuple": list(w.tuple),
                                "labels": list(w.labels)}
        put_list(item, "lengths", w.lengths)
        put_list(item, "defects", w.defects)
        ws.append(item)
    d["witnesses"] = ws
    d["wall_ms"] = round(r.wall_ms, 3) if timing else None
    if config is not None:
        d["config"] = config
    return d


def approx_dict(r: ApproximationReport) -> dict:
    stages = []
    for s in r.stages:
        item: dict[str, Any] = {"stage": s.stage, "group": s.group, "metric": s.metric,
                                "labels": list(s.labels), "generates": s.generates, "status": s.status}
        put_list(item, "defects", s.defects)
        put(item, "max_defect", s.max_defect)
        put_list(item, "lengths", s.lengths)
        put_list(item, "targets", s.targets)
        stages.append(item)
    d: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "kind": "approx-check",
        "verdict": r.verdict,
        "consistent": r.consistent,
        "refuted_at": r.refuted_at,
        "forced_failure_stage": r.forced_failure_stage,
        "defects_nonincreasing": r.defects_nonincreasing,
        "corollary_constants": {
            "epsilon_bound": ratio(r.corollary_epsilon_bound),
            "target_factor": r.corollary_target_factor,
        },
        "stages": stages,
    }
    return d


def length_summary(lf: LengthFunction) -> dict:
    return {"name": lf.name, "exact": lf.is_exact, "tol": lf.tol, "tags": sorted(lf.tags)}


def dumps(d: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(d, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(d):
            w.writerow([k, v])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def _flatten(d, prefix=""):
    if isinstance(d, dict):
        for k, v in d.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(d, list) and d and isinstance(d[0], dict):
        for i, v in enumerate(d):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], json.dumps(d) if isinstance(d, (list, bool)) or d is None else d
