"""Group, length and approximation-stage files (JSON or YAML)."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import catalog
from .errors import HigmetricError, ParseError
from .group import (
    DEFAULT_MATRIX_TOL,
    FiniteGroup,
    build_from_permutations,
    build_from_unitary_matrices,
    relabel,
)
from .higman import ApproximationStage
from .lengths import LengthFunction, as_fraction, class_length, unitary_length


def load_structured(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def _matrix(pairs, dim: int) -> np.ndarray:
    try:
        flat = np.array([complex(float(re), float(im)) for re, im in pairs])
    except (TypeError, ValueError):
        raise ParseError("matrix entries must be [re, im] pairs") from None
    if flat.size != dim * dim:
        raise ParseError(f"expected {dim * dim} entries for a {dim}x{dim} matrix, got {flat.size}")
    return flat.reshape(dim, dim)


def _pairs(m: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def group_from_dict(d: dict) -> FiniteGroup:
    if not isinstance(d, dict) or "type" not in d:
        raise ParseError("group definition needs a 'type' field")
    kind = d["type"]
    name = str(d.get("name", kind))
    cap = int(d.get("cap", 10_000))
    try:
        if kind == "permutation":
            degree = int(d["degree"])
            gens = [str(g) for g in d.get("generators", [])]
            mats = None
            if "matrices" in d:
                dim = int(d.get("dimension", 0)) or int(round(len(d["matrices"][0]) ** 0.5))
                mats = [_matrix(m, dim) for m in d["matrices"]]
            return build_from_permutations(gens, degree, cap=cap, name=name, matrices=mats)
        if kind == "unitary":
            dim = int(d["dimension"])
            gens = [_matrix(m, dim) for m in d.get("generators", [])]
            G = build_from_unitary_matrices(
                gens,
                tol=float(d.get("tol", DEFAULT_MATRIX_TOL)),
                cap=cap,
                name=name,
                generator_names=d.get("generator_names"),
            )
            if "labels" in d:
                labels = [str(x) for x in d["labels"]]
                if len(labels) != G.order:
                    raise ParseError(f"{len(labels)} labels for a group of order {G.order}")
                G = relabel(G, labels)
            return G
        if kind == "cayley":
            return FiniteGroup.from_table(
                d["table"], labels=d.get("labels"), name=name, source={"type": "cayley"}
            )
    except KeyError as exc:
        raise ParseError(f"group definition is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, HigmetricError):
            raise
        raise ParseError(f"bad group definition: {exc}") from None
    raise ParseError(f"unknown group type {kind!r}")


def group_to_dict(G: FiniteGroup, form: str | None = None) -> dict:
    """Serializable definition that rebuilds ``G`` with the same Cayley table.

    ``form`` forces ``"cayley"``; by default the construction recipe is kept.
    """
    src = G.source or {}
    kind = form or src.get("type")
    if kind == "permutation":
        out = {
            "type": "permutation",
            "name": G.name,
            "degree": int(src["degree"]),
            "generators": list(src["generators"]),
        }
        if "matrices" in src:
            out["dimension"] = int(np.asarray(src["matrices"]).shape[-1])
            out["matrices"] = [_pairs(m) for m in src["matrices"]]
        return out
    if kind == "unitary":
        return {
            "type": "unitary",
            "name": G.name,
            "dimension": int(src["dimension"]),
            "generator_names": list(src["names"]),
            "generators": [_pairs(m) for m in src["generators"]],
            "labels": list(G.labels),
        }
    return {
        "type": "cayley",
        "name": G.name,
        "labels": list(G.labels),
        "table": G.mul.tolist(),
    }


def resolve_group(spec: str, base: Path | None = None) -> FiniteGroup:
    """``builtin:<name>`` or a path to a group file."""
    if spec.startswith("builtin:"):
        return catalog.build(spec[len("builtin:"):])
    path = Path(spec)
    if base is not None and not path.is_absolute():
        path = base / path
    return group_from_dict(load_structured(path))


def length_from_dict(G: FiniteGroup, d: dict) -> LengthFunction:
    """Per-label ``values`` or per-class ``class_values``; every element must be covered."""
    if not isinstance(d, dict):
        raise ParseError("length file must be a mapping")
    name = str(d.get("name", "file"))

    def ids(mapping):
        out = {}
        for label, v in mapping.items():
            try:
                g = G.element(str(label))
            except KeyError as exc:
                raise ParseError(str(exc.args[0])) from None
            try:
                out[g] = as_fraction(v)
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad value {v!r} for {label!r}") from None
        return out

    if "values" in d:
        vals = ids(d["values"])
        missing = [G.labels[g] for g in range(G.order) if g not in vals]
        if missing:
            raise ParseError(f"length file has no value for {missing}")
        return LengthFunction(G, [vals[g] for g in range(G.order)], name=name)
    if "class_values" in d:
        try:
            return class_length(G, ids(d["class_values"]), name=name)
        except ValueError as exc:
            raise ParseError(str(exc)) from None
    raise ParseError("length file needs 'values' or 'class_values'")


def length_to_dict(lf: LengthFunction) -> dict:
    G = lf.group
    if lf.is_exact:
        vals = {G.labels[g]: str(v) for g, v in enumerate(lf.exact_values())}
    else:
        vals = {G.labels[g]: repr(float(v)) for g, v in enumerate(lf.values)}
    return {"name": lf.name, "values": vals}


def resolve_metric(G: FiniteGroup, spec: str, tol: float | None = None, base: Path | None = None) -> LengthFunction:
    """A registered metric name (``unitary``, ``clamp:1/2:hamming`` ...) or a length file path."""
    key = spec.strip().lower()
    if key == "unitary" and tol is not None:
        return unitary_length(G, tol=tol)
    path = Path(spec)
    if base is not None and not path.is_absolute():
        path = base / path
    if path.suffix.lower() in (".json", ".yaml", ".yml") or path.exists():
        return length_from_dict(G, load_structured(path))
    return catalog.metric(G, spec)


def load_stages(path: str | Path, tol: float | None = None) -> list[ApproximationStage]:
    path = Path(path)
    data = load_structured(path)
    if isinstance(data, dict):
        data = data.get("stages")
    if not isinstance(data, list):
        raise ParseError("stage file must be a list of stages (or a mapping with 'stages')")
    stages = []
    for k, st in enumerate(data, start=1):
        try:
            G = resolve_group(str(st["group"]), path.parent)
            lf = resolve_metric(G, str(st["metric"]), tol, path.parent)
            labels = [str(x) for x in st["tuple"]]
            targets = [as_fraction(x) for x in st["targets"]]
        except KeyError as exc:
            raise ParseError(f"stage {k} is missing {exc}") from None
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, HigmetricError):
                raise
            raise ParseError(f"stage {k}: {exc}") from None
        if len(labels) != 4 or len(targets) != 4:
            raise ParseError(f"stage {k} needs four element labels and four targets")
        try:
            t = tuple(G.element(s) for s in labels)
        except KeyError as exc:
            raise ParseError(f"stage {k}: {exc.args[0]}") from None
        stages.append(ApproximationStage(lf, t, tuple(targets)))
    return stages

