"""Built-in groups and the metrics registered for them."""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ParseError
from .group import FiniteGroup, build_from_permutations, build_from_unitary_matrices, relabel
from .lengths import (
    LengthFunction,
    class_length,
    clamp_contractive,
    discrete_length,
    hamming_length,
    unitary_length,
)

MAX_PARAM_ORDER = 64


def _cycle(n: int) -> str:
    return "(" + " ".join(str(i) for i in range(1, n + 1)) + ")"


def symmetric_group(n: int) -> FiniteGroup:
    if n < 1:
        raise ValueError("need n >= 1")
    if n == 1:
        gens = []
    elif n == 2:
        gens = ["(1 2)"]
    else:
        gens = ["(1 2)", _cycle(n)]
    return build_from_permutations(gens, n, name=f"s{n}")


def alternating_group(n: int) -> FiniteGroup:
    if n < 3:
        return build_from_permutations([], max(n, 1), name=f"a{n}")
    if n == 3:
        return build_from_permutations(["(1 2 3)"], 3, name="a3")
    # (1 2 3) with an (n-1)- or n-cycle of even parity
    long = _cycle(n) if n % 2 else "(" + " ".join(str(i) for i in range(2, n + 1)) + ")"
    return build_from_permutations(["(1 2 3)", long], n, name=f"a{n}")


def cyclic_group(n: int) -> FiniteGroup:
    """Rotation of ``n`` points, with the faithful character ``k -> exp(2 pi i k / n)``."""
    if not 1 <= n <= MAX_PARAM_ORDER:
        raise ValueError(f"cyclic:{n} outside 1..{MAX_PARAM_ORDER}")
    gens = [_cycle(n)] if n > 1 else []
    mats = [[[cmath.exp(2j * math.pi / n)]]] if n > 1 else []
    return build_from_permutations(gens, n, name=f"cyclic:{n}", matrices=mats)


def dihedral_group(n: int) -> FiniteGroup:
    """Symmetries of the regular ``n``-gon (order ``2n``), with its 2-dimensional representation."""
    if n < 3 or 2 * n > MAX_PARAM_ORDER:
        raise ValueError(f"dihedral:{n} needs 3 <= n and 2n <= {MAX_PARAM_ORDER}")
    rot = _cycle(n)
    refl = "".join(f"({i} {n + 2 - i})" for i in range(2, n // 2 + 2) if i < n + 2 - i)
    t = 2 * math.pi / n
    mats = [
        [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]],
        [[1.0, 0.0], [0.0, -1.0]],
    ]
    return build_from_permutations([rot, refl], n, name=f"dihedral:{n}", matrices=mats)


_Q8_NAMES = {"1": np.eye(2), "i": np.diag([1j, -1j]), "j": np.array([[0, 1], [-1, 0]])}


def quaternion_group() -> FiniteGroup:
    G = build_from_unitary_matrices(
        [_Q8_NAMES["i"], _Q8_NAMES["j"]], generator_names=["i", "j"], name="q8"
    )
    k = _Q8_NAMES["i"] @ _Q8_NAMES["j"]
    named = {"1": np.eye(2), "i": _Q8_NAMES["i"], "j": _Q8_NAMES["j"], "k": k}
    labels = []
    for m in G.matrices:
        for s, ref in named.items():
            if np.allclose(m, ref):
                labels.append(s)
                break
            if np.allclose(m, -ref):
                labels.append("-" + s)
                break
    return relabel(G, labels)


def q8_exact_length(G: FiniteGroup) -> LengthFunction:
    """Class function on Q8: 4/25 on -1 and 1/5 on every element of order 4.

    Contractivity is tight on it: ``l([i,j]) = l(-1) = 4 (1/5)^2``.
    """
    if G.order != 8 or G.is_abelian:
        raise ValueError("q8-exact needs the quaternion group")
    minus = next(g for g in range(8) if g != G.identity and G.element_order(g) == 2)
    vals = {G.identity: 0, minus: Fraction(4, 25)}
    for g in range(8):
        if G.element_order(g) == 4:
            vals[g] = Fraction(1, 5)
    return class_length(G, vals, name="q8-exact")


_FIXED: dict[str, Callable[[], FiniteGroup]] = {
    "trivial": lambda: build_from_permutations([], 1, name="trivial"),
    "s3": lambda: symmetric_group(3),
    "s4": lambda: symmetric_group(4),
    "s5": lambda: symmetric_group(5),
    "s6": lambda: symmetric_group(6),
    "a4": lambda: alternating_group(4),
    "a5": lambda: alternating_group(5),
    "q8": quaternion_group,
}

_PARAM: dict[str, Callable[[int], FiniteGroup]] = {
    "cyclic": cyclic_group,
    "dihedral": dihedral_group,
}


def catalog_names() -> list[str]:
    return ["trivial", "cyclic:n", "dihedral:n", "s3", "s4", "s5", "s6", "a4", "a5", "q8"]


def build(name: str) -> FiniteGroup:
    """Construct a builtin such as ``"q8"`` or ``"dihedral:4"``."""
    name = name.strip().lower()
    if name in _FIXED:
        return _FIXED[name]()
    m = re.fullmatch(r"(cyclic|dihedral):(\d+)", name)
    if m:
        try:
            return _PARAM[m.group(1)](int(m.group(2)))
        except ValueError as exc:
            raise ParseError(str(exc)) from None
    raise ParseError(f"unknown builtin group {name!r}; try one of {catalog_names()}")


def small_catalog(max_order: int) -> list[str]:
    """Every concrete catalog entry of order at most ``max_order``."""
    names = ["trivial"]
    names += [f"cyclic:{n}" for n in range(2, min(max_order, MAX_PARAM_ORDER) + 1)]
    names += [f"dihedral:{n}" for n in range(3, min(max_order, MAX_PARAM_ORDER) // 2 + 1)]
    sizes = {"s3": 6, "s4": 24, "s5": 120, "s6": 720, "a4": 12, "a5": 60, "q8": 8}
    names += [k for k, v in sizes.items() if v <= max_order]
    return names


@dataclass(frozen=True)
class MetricRecipe:
    name: str
    build: Callable[[FiniteGroup], LengthFunction]
    applies: Callable[[FiniteGroup], bool]


METRICS: dict[str, MetricRecipe] = {
    "discrete": MetricRecipe("discrete", discrete_length, lambda G: True),
    "hamming": MetricRecipe("hamming", hamming_length, lambda G: G.perms is not None),
    "clamp:1/2:hamming": MetricRecipe(
        "clamp:1/2:hamming",
        lambda G: clamp_contractive(hamming_length(G), Fraction(1, 2)),
        lambda G: G.perms is not None,
    ),
    "unitary": MetricRecipe(
        "unitary", unitary_length, lambda G: G.matrices is not None or G.perms is not None
    ),
    "q8-exact": MetricRecipe("q8-exact", q8_exact_length, lambda G: G.name == "q8"),
}

CONTRACTIVE_METRICS = ("discrete", "clamp:1/2:hamming", "unitary", "q8-exact")


def metric(G: FiniteGroup, name: str) -> LengthFunction:
    """A registered metric by name; ``clamp:<c>:<base>`` clamps any registered base."""
    key = name.strip().lower()
    m = re.fullmatch(r"clamp:([^:]+):(.+)", key)
    if m and key not in METRICS:
        return clamp_contractive(metric(G, m.group(2)), m.group(1))
    recipe = METRICS.get(key)
    if recipe is None:
        raise ParseError(f"unknown metric {name!r}; registered: {sorted(METRICS)}")
    if not recipe.applies(G):
        raise ParseError(f"metric {name!r} does not apply to {G.name}")
    return recipe.build(G)


def applicable_metrics(G: FiniteGroup, contractive_only: bool = True) -> list[str]:
    names = CONTRACTIVE_METRICS if contractive_only else tuple(METRICS)
    return [n for n in names if METRICS[n].applies(G)]
