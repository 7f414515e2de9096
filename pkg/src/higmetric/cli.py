"""Command-line entry point: ``higmetric <command> [options]``.

Exit status is 0 when every checked property holds, 1 when a verification
fails, and 2 for invalid input or out-of-range parameters.
"""
from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import catalog
from .errors import HigmetricError
from .group import FiniteGroup
from .higman import DEFAULT_BUDGET, DEFAULT_EPSILON, approximation_sequence_check, theorem_scan
from .io import group_to_dict, load_stages, resolve_group, resolve_metric
from .lengths import (
    LengthFunction,
    as_fraction,
    attained_values,
    check_distance_lemma,
    check_quotient_lemmas,
    check_two_min_inequality,
    invariants,
    verify_contractive,
    verify_length_axioms,
)
from .nilpotency import corollary_check, nilpotency_class, zassenhaus_check
from .report import approx_dict, dumps, length_summary, put, ratio, real, scan_dict, status, witness_dict

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
ENV_JOBS = "HIGMETRIC_JOBS"
ENV_BUDGET = "HIGMETRIC_BUDGET"


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise HigmetricError(f"{name} must be an integer, got {raw!r}") from None


def _emit(args, d: dict) -> None:
    text = dumps(d, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args) -> tuple[FiniteGroup, LengthFunction | None]:
    G = resolve_group(args.group)
    lf = resolve_metric(G, args.metric, args.tol) if getattr(args, "metric", None) else None
    return G, lf


def _zassenhaus_dict(z) -> dict:
    d: dict[str, Any] = {}
    put(d, "epsilon", z.epsilon)
    d.update(subgroup_order=z.subgroup_order, nil=z.nil_of_G_eps, bound=real(z.bound), ok=z.ok,
             exact=z.exact)
    if z.note:
        d["note"] = z.note
    return d


def _nil(n: int | None):
    return "not nilpotent" if n is None else n


def cmd_analyze(args) -> int:
    G, lf = _load(args)
    report: dict[str, Any] = {
        "schema_version": "1.0",
        "kind": "analyze",
        "group": G.name,
        "order": G.order,
        "class_sizes": sorted(len(c) for c in G.conjugacy_classes()),
        "abelian": G.is_abelian,
        "nilpotency_class": _nil(nilpotency_class(G)),
    }
    ok = True
    if lf is not None:
        report["metric"] = length_summary(lf)
        w = verify_length_axioms(lf)
        report["axioms"] = status(lf.axioms)
        report["axioms_witness"] = witness_dict(w, G)
        ok &= w is None
        if w is None:
            inv = invariants(lf)
            put(report, "delta", inv.delta)
            put(report, "eta", inv.eta)
            report["discrete"] = inv.discrete
            cw = verify_contractive(lf)
            report["contractive"] = status(lf.contractive)
            report["contractive_witness"] = witness_dict(cw, G)
            ok &= cw is None
            report["two_min_inequality"] = status(check_two_min_inequality(lf) is None)
            zs = []
            if cw is None:
                grid = sorted({as_fraction(e) for e in args.epsilon or []} | {
                    v if isinstance(v, Fraction) else as_fraction(real(v))
                    for v in attained_values(lf) if 0 < v < 0.25
                })
                for eps in grid:
                    z = zassenhaus_check(lf, eps)
                    zs.append(_zassenhaus_dict(z))
                    ok &= z.ok
            report["zassenhaus"] = zs
    report["ok"] = bool(ok)
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def _quotient_lemmas_dict(r) -> dict:
    d: dict[str, Any] = {}
    put(d, "epsilon", r.epsilon)
    d.update(
        subgroup_order=r.eps_subgroup_order,
        subgroup_normal=r.eps_subgroup_normal,
        quotient_order=r.quotient_order,
        quotient_gap=r.quotient_gap,
        eta_preserved=r.eta_preserved,
        eta_of_subgroup=r.eta_of_subgroup,
        delta_of_subgroup=r.delta_of_subgroup,
        ok=r.ok,
    )
    put(d, "quotient_delta", r.quotient_delta)
    put(d, "eta_quotient", r.eta_quotient)
    return d


def cmd_verify_lemmas(args) -> int:
    G, lf = _load(args)
    grid = [as_fraction(e) for e in args.epsilon or []]
    if args.attained:
        grid += [v if isinstance(v, Fraction) else as_fraction(real(v)) for v in attained_values(lf)]
    grid = sorted(set(grid))
    contractive = lf.contractive_verified
    report: dict[str, Any] = {
        "schema_version": "1.0",
        "kind": "verify-lemmas",
        "group": G.name,
        "metric": length_summary(lf),
        "axioms": status(lf.axioms),
        "contractive": status(lf.contractive),
        "epsilons": [ratio(e) for e in grid],
    }
    ok = lf.axioms is True
    checks = 0
    per_eps = []
    if ok:
        for eps in grid:
            item = {"quotient_lemmas": _quotient_lemmas_dict(check_quotient_lemmas(lf, eps))}
            checks += 1
            ok &= item["quotient_lemmas"]["ok"]
            if contractive and eps < Fraction(1, 4):
                z = zassenhaus_check(lf, eps)
                item["zassenhaus"] = _zassenhaus_dict(z)
                checks += 1
                ok &= z.ok
            per_eps.append(item)
        if grid and contractive:
            w = check_distance_lemma(lf)
            report["distance_lemma"] = {"ok": w is None, "witness": witness_dict(w, G)}
            c = corollary_check(lf)
            cor: dict[str, Any] = {"applicable": c.applicable, "nil": _nil(c.nil), "bound": real(c.bound),
                                   "ok": c.ok}
            put(cor, "eta", c.eta)
            report["corollary"] = cor
            checks += 2
            ok &= w is None and c.ok
    report["per_epsilon"] = per_eps
    report["checks"] = checks
    report["ok"] = bool(ok)
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_higman_scan(args) -> int:
    G, lf = _load(args)
    eps = as_fraction(args.epsilon) if args.epsilon is not None else DEFAULT_EPSILON
    r = theorem_scan(
        lf,
        eps,
        args.generating_only,
        jobs=args.jobs,
        budget=args.budget,
        allow_noncontractive=args.allow_noncontractive,
    )
    config = {
        "epsilon": ratio(eps),
        "tol": lf.tol,
        "generating_only": args.generating_only,
        "budget": args.budget,
        "allow_noncontractive": args.allow_noncontractive,
    }
    _emit(args, scan_dict(r, config, timing=not args.no_timing))
    if r.contractive and not (r.theorem_holds and r.forbidden_gap == 0):
        return EXIT_FAIL
    return EXIT_OK


def cmd_approx_check(args) -> int:
    stages = load_stages(args.stages, args.tol)
    r = approximation_sequence_check(stages)
    _emit(args, approx_dict(r))
    broken = any(s.status == "contradicts_theorem" for s in r.stages)
    return EXIT_FAIL if broken else EXIT_OK


def cmd_catalog(args) -> int:
    if args.group:
        spec = args.group
        G = resolve_group(spec if spec.startswith("builtin:") else f"builtin:{spec}")
        d = {"name": G.name, "order": G.order, "metrics": catalog.applicable_metrics(G, False)}
    else:
        d = {"schema_version": "1.0", "builtins": catalog.catalog_names(),
             "metrics": sorted(catalog.METRICS), "max_parametric_order": catalog.MAX_PARAM_ORDER}
    _emit(args, d)
    return EXIT_OK


def cmd_export(args) -> int:
    G = resolve_group(args.group)
    _emit(args, group_to_dict(G, "cayley" if args.cayley else None))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="higmetric", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, metric=True):
        sp.add_argument("--group", required=True, help="builtin:<name> or a group file")
        if metric:
            sp.add_argument("--metric", required=True, help="registered metric name or a length file")
        sp.add_argument("--tol", type=float, default=None, help="tolerance for float-valued lengths")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default=None, help="write the report here instead of stdout")

    sp = sub.add_parser("analyze", help="invariants, verifiers and Zassenhaus checks")
    common(sp, metric=False)
    sp.add_argument("--metric", default=None)
    sp.add_argument("--epsilon", action="append", help="extra epsilon for the Zassenhaus grid")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("verify-lemmas", help="quotient, subgroup, distance and nilpotency lemmas")
    common(sp)
    sp.add_argument("--epsilon", action="append", help="epsilon value (repeatable)")
    sp.add_argument("--attained", action="store_true", help="add every attained length value to the grid")
    sp.set_defaults(func=cmd_verify_lemmas)

    sp = sub.add_parser("higman-scan", help="exhaustive Higman tuple scan")
    common(sp)
    sp.add_argument("--epsilon", default=None, help="defect bound, below 1/64 (default 1/100)")
    sp.add_argument("--generating-only", action="store_true")
    sp.add_argument("--allow-noncontractive", action="store_true")
    sp.add_argument("--jobs", type=int, default=None)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--no-timing", action="store_true", help="write wall_ms as null for byte-stable reports")
    sp.set_defaults(func=cmd_higman_scan)

    sp = sub.add_parser("approx-check", help="finite stages of an approximation sequence")
    sp.add_argument("--stages", required=True, help="stage file")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_approx_check)

    sp = sub.add_parser("catalog", help="list builtin groups, or describe one")
    sp.add_argument("--group", default=None)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_catalog)

    sp = sub.add_parser("export", help="write a group definition file")
    sp.add_argument("--group", required=True)
    sp.add_argument("--cayley", action="store_true", help="write the full table")
    sp.add_argument("--format", choices=("json",), default="json")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_export)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "jobs"):
            args.jobs = args.jobs if args.jobs is not None else _env_int(ENV_JOBS, 1)
            args.budget = args.budget if args.budget is not None else _env_int(ENV_BUDGET, DEFAULT_BUDGET)
            if args.jobs < 1:
                raise HigmetricError("--jobs must be at least 1")
        return args.func(args)
    except (HigmetricError, ValueError, ZeroDivisionError) as exc:
        print(f"higmetric: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
