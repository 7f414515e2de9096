"""Lower central series and the quantitative Zassenhaus bound."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import EpsilonOutOfRange
from .group import FiniteGroup, Subgroup
from .lengths import (
    LengthFunction,
    Value,
    as_fraction,
    delta,
    epsilon_subgroup,
    eta,
    require_contractive,
)


@dataclass(frozen=True)
class CentralSeries:
    terms: tuple[Subgroup, ...]
    stabilized: bool  # True when the series repeats above the trivial subgroup

    @property
    def orders(self) -> list[int]:
        return [t.order for t in self.terms]


def lower_central_series(G: FiniteGroup) -> CentralSeries:
    """``G = g_0 >= g_1 >= ...`` with ``g_{n+1} = [g_n, G]``, up to the trivial group or a repeat."""
    terms = [G.whole()]
    while not terms[-1].is_trivial:
        nxt = G.subgroup_commutator(terms[-1], terms[0])
        if nxt == terms[-1]:
            return CentralSeries(tuple(terms), True)
        terms.append(nxt)
    return CentralSeries(tuple(terms), False)


def nilpotency_class(G: FiniteGroup) -> int | None:
    """Least ``n`` with trivial ``n``-th term, or None if ``G`` is not nilpotent."""
    series = lower_central_series(G)
    return None if series.stabilized else len(series.terms) - 1


def _bound(d: Value, eps: Value) -> float:
    """``ln(4 delta) / ln(4 eps)`` in floating point; 0 in the limit ``eps -> 0``."""
    if eps == 0:
        return 0.0
    return math.log(4 * float(d)) / math.log(4 * float(eps))


def _nil_within(nil: int, d: Value, eps: Value, lf: LengthFunction) -> bool:
    """``nil <= ln(4 delta)/ln(4 eps)`` for ``delta < 1/4`` and ``0 < eps < 1/4``.

    Both logarithms are negative, so this is ``(4 eps)^nil >= 4 delta``,
    i.e. ``(4 eps)^(nil-1) eps >= delta``; decided exactly for rationals.
    """
    if isinstance(d, Fraction) and isinstance(eps, Fraction):
        return (4 * eps) ** nil >= 4 * d
    return nil <= _bound(d, eps) + lf.tol


@dataclass(frozen=True)
class ZassenhausReport:
    epsilon: Fraction
    delta: Value | None
    subgroup_order: int
    nil_of_G_eps: int | None
    bound: float | None
    ok: bool
    exact: bool
    note: str = ""


def zassenhaus_check(lf: LengthFunction, eps) -> ZassenhausReport:
    """Compare ``nil(G_eps)`` with ``ln(4 delta(G)) / ln(4 eps)`` for ``0 <= eps < 1/4``.

    Equality counts as success.  When ``delta(G) >= 1/4`` the check instead
    requires ``G_eps`` to be trivial.
    """
    eps = as_fraction(eps)
    if not 0 <= eps < Fraction(1, 4):
        raise EpsilonOutOfRange(f"epsilon {eps} outside [0, 1/4)")
    require_contractive(lf)
    G = lf.group
    H = epsilon_subgroup(lf, eps)
    nil = nilpotency_class(H.as_group())
    exact = lf.is_exact
    if G.order == 1:
        return ZassenhausReport(eps, None, 1, 0, None, True, exact, "trivial group")
    d = delta(lf)
    eps_v: Value = eps if exact else float(eps)
    bound = _bound(d, eps_v) if eps > 0 else 0.0
    if d >= Fraction(1, 4):
        return ZassenhausReport(eps, d, H.order, nil, bound, H.is_trivial, exact, "delta >= 1/4")
    if nil is None:
        return ZassenhausReport(eps, d, H.order, None, bound, False, exact, "G_eps not nilpotent")
    if eps == 0 or H.is_trivial:
        return ZassenhausReport(eps, d, H.order, nil, bound, nil == 0, exact)
    return ZassenhausReport(eps, d, H.order, nil, bound, _nil_within(nil, d, eps_v, lf), exact)


@dataclass(frozen=True)
class CorollaryReport:
    applicable: bool
    eta: Value
    delta: Value | None
    nil: int | None
    bound: float | None
    ok: bool


def corollary_check(lf: LengthFunction) -> CorollaryReport:
    """``nil(G) <= ln(4 delta)/ln(4 eta)`` whenever ``eta(G) < 1/4``."""
    require_contractive(lf)
    G = lf.group
    e = eta(lf)
    nil = nilpotency_class(G)
    if G.order == 1:
        return CorollaryReport(True, e, None, 0, None, True)
    d = delta(lf)
    below = e < Fraction(1, 4) if isinstance(e, Fraction) else e < 0.25 - lf.tol
    if not below:
        return CorollaryReport(False, e, d, nil, None, True)
    bound = _bound(d, e)
    ok = nil is not None and _nil_within(nil, d, e, lf)
    return CorollaryReport(True, e, d, nil, bound, ok)
