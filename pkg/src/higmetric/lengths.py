"""Invariant length functions on finite groups and their verifiers.

A length function stores one value per element.  Values given as rationals
are kept exactly: internally they become integer numerators over one common
denominator, so every inequality check reduces to integer arithmetic and
runs with zero tolerance.  Float-valued lengths (from eigenvalues) are
compared with an additive tolerance; a relation ``lhs <= rhs`` is violated
iff ``lhs > rhs + tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Sequence

import numpy as np

from .errors import (
    AxiomsNotVerified,
    InvalidClamp,
    NoMatrixAttachment,
    NotContractive,
    NotNormal,
    SizeMismatch,
    TrivialGroup,
)
from .group import FiniteGroup, QuotientResult, Subgroup

DEFAULT_FLOAT_TOL = 1e-9
_INT64_DEN_LIMIT = 1 << 24

Value = Real  # Fraction for exact lengths, float otherwise


def as_fraction(x) -> Fraction:
    """Exact value of a user-facing number.

    Strings such as ``"1/100"`` or ``"0.16"`` and floats are read as the
    decimal they spell, so ``0.16`` becomes ``4/25``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"not a finite number: {x}")
        return Fraction(repr(float(x)))
    return Fraction(str(x).strip())


@dataclass(frozen=True)
class ViolationWitness:
    kind: str  # "axiom", "contractive" or "lemma"
    relation: str
    elements: tuple[int, ...]
    lhs: Value
    rhs: Value

    def describe(self, group: FiniteGroup | None = None) -> str:
        els = self.elements
        if group is not None:
            els = tuple(group.labels[g] for g in els)
        return f"{self.relation} fails at {els}: {float(self.lhs):.12g} > {float(self.rhs):.12g}"


class LengthFunction:
    """Values in [0, 1] indexed by element id of ``group``.

    ``axioms`` and ``contractive`` hold the verification state: None while
    unchecked, True once passed, or the ViolationWitness that failed.
    """

    def __init__(
        self,
        group: FiniteGroup,
        values,
        *,
        tol: float | None = None,
        name: str = "length",
        tags: Sequence[str] = (),
    ):
        vals = list(values) if not isinstance(values, np.ndarray) else values
        if len(vals) != group.order:
            raise SizeMismatch(f"{len(vals)} values for a group of order {group.order}")
        self.group = group
        self.name = name
        self.tags = frozenset(tags)
        exact = not isinstance(vals, np.ndarray) and all(
            isinstance(v, (Fraction, int, str, np.integer)) for v in vals
        )
        if exact and tol:
            exact = False
        if exact:
            fr = [as_fraction(v) for v in vals]
            den = math.lcm(*(f.denominator for f in fr)) if fr else 1
            dtype = np.int64 if den <= _INT64_DEN_LIMIT else object
            self.num = np.array([int(f * den) for f in fr], dtype=dtype)
            self.den = den
            self.tol = 0.0
        else:
            self.num = np.asarray([float(v) for v in vals] if not isinstance(vals, np.ndarray) else vals, dtype=float)
            self.den = 1
            self.tol = DEFAULT_FLOAT_TOL if tol is None else float(tol)
        self.num.setflags(write=False)
        self.axioms: None | bool | ViolationWitness = None
        self.contractive: None | bool | ViolationWitness = None

    def __repr__(self) -> str:
        kind = "exact" if self.is_exact else f"float tol={self.tol:g}"
        return f"LengthFunction({self.name!r} on {self.group.name}, {kind})"

    @property
    def is_exact(self) -> bool:
        return self.num.dtype != float

    @cached_property
    def values(self) -> np.ndarray:
        v = self.num / self.den if self.is_exact else self.num.copy()
        v = np.asarray(v, dtype=float)
        v.setflags(write=False)
        return v

    def value(self, g) -> Value:
        g = int(g)
        if self.is_exact:
            return Fraction(int(self.num[g]), self.den)
        return float(self.num[g])

    def _value_of_units(self, x) -> Value:
        return Fraction(int(x), self.den) if self.is_exact else float(x)

    def exact_values(self) -> tuple[Fraction, ...] | None:
        if not self.is_exact:
            return None
        return tuple(Fraction(int(x), self.den) for x in self.num)

    # comparisons in numerator units --------------------------------------

    def _over(self, lhs, rhs):
        """Mask of ``lhs > rhs + tol``."""
        if self.is_exact:
            return lhs > rhs
        return lhs > rhs + self.tol

    def _const_cmp(self, x, c):
        c = as_fraction(c)
        x = np.asarray(x)
        if self.is_exact:
            if x.dtype != object and (c.denominator > 1 << 20 or abs(c.numerator) > 1 << 20):
                x = x.astype(object)
            return x * c.denominator, c.numerator * self.den
        return x, float(c)

    def le_const(self, x, c) -> np.ndarray:
        """``x <= c`` for numerators ``x`` and a rational constant ``c``."""
        a, b = self._const_cmp(x, c)
        return a <= b if self.is_exact else a <= b + self.tol

    def lt_const(self, x, c) -> np.ndarray:
        a, b = self._const_cmp(x, c)
        return a < b if self.is_exact else a < b + self.tol

    def ge_const(self, x, c) -> np.ndarray:
        a, b = self._const_cmp(x, c)
        return a >= b if self.is_exact else a >= b - self.tol

    def leq(self, a: Value, b) -> bool:
        """Scalar ``a <= b`` under this length's tolerance."""
        if self.is_exact and not isinstance(a, float):
            return Fraction(a) <= as_fraction(b)
        return float(a) <= float(b) + self.tol

    def lt(self, a: Value, b) -> bool:
        if self.is_exact and not isinstance(a, float):
            return Fraction(a) < as_fraction(b)
        return float(a) < float(b) + self.tol

    def close(self, a: Value, b: Value) -> bool:
        if self.is_exact and isinstance(a, Fraction) and isinstance(b, Fraction):
            return a == b
        return abs(float(a) - float(b)) <= self.tol

    def with_values(self, values, *, name: str | None = None, group: FiniteGroup | None = None, tags=None):
        return LengthFunction(
            self.group if group is None else group,
            values,
            tol=None if self.is_exact else self.tol,
            name=self.name if name is None else name,
            tags=self.tags if tags is None else tags,
        )

    def _as_values(self, nums) -> list | np.ndarray:
        if self.is_exact:
            return [Fraction(int(x), self.den) for x in nums]
        return np.asarray(nums, dtype=float)

    @property
    def axioms_verified(self) -> bool:
        if self.axioms is None:
            verify_length_axioms(self)
        return self.axioms is True

    @property
    def contractive_verified(self) -> bool:
        if self.contractive is None:
            if not self.axioms_verified:
                return False
            verify_contractive(self)
        return self.contractive is True


# verifiers -------------------------------------------------------------


def _first(mask: np.ndarray):
    idx = np.argwhere(mask)
    return None if idx.size == 0 else tuple(int(i) for i in idx[0])


def verify_length_axioms(lf: LengthFunction) -> ViolationWitness | None:
    """Exhaustively check the length axioms; returns None on success.

    Checks run in a fixed order (identity, positivity, range, inversion,
    subadditivity over pairs, conjugation invariance over pairs) and the
    first failing instance in row-major element order is reported.
    """
    G = lf.group
    if lf.num.shape[0] != G.order:
        raise SizeMismatch("values do not match group order")
    n, e = G.order, G.identity
    num = lf.num
    zero = num[e] * 0
    one = lf.den

    def fail(relation, elements, lhs, rhs):
        w = ViolationWitness("axiom", relation, elements, lf._value_of_units(lhs), lf._value_of_units(rhs))
        lf.axioms = w
        return w

    if lf._over(abs(num[e]), zero):
        return fail("l(e) = 0", (e,), abs(num[e]), zero)
    others = np.arange(n) != e
    bad = _first(~lf._over(num, zero) & others)
    if bad is not None:
        (g,) = bad
        return fail("l(g) > 0 for g != e", (g,), zero, num[g])
    bad = _first(lf._over(num, one) | lf._over(-num, zero))
    if bad is not None:
        (g,) = bad
        return fail("0 <= l(g) <= 1", (g,), num[g], one if num[g] > one else zero)
    diff = num - num[G.inv]
    bad = _first(lf._over(abs(diff), zero))
    if bad is not None:
        (g,) = bad
        return fail("l(g^-1) = l(g)", (g, int(G.inv[g])), max(num[g], num[G.inv[g]]), min(num[g], num[G.inv[g]]))
    for g in range(n):
        lhs = num[G.mul[g]]
        rhs = num[g] + num
        bad = _first(lf._over(lhs, rhs))
        if bad is not None:
            (h,) = bad
            return fail("l(gh) <= l(g) + l(h)", (g, h), lhs[h], rhs[h])
    for g in range(n):
        a = num[G.mul[g]]
        b = num[G.mul[:, g]]
        bad = _first(lf._over(abs(a - b), zero))
        if bad is not None:
            (h,) = bad
            return fail("l(gh) = l(hg)", (g, h), max(a[h], b[h]), min(a[h], b[h]))
    lf.axioms = True
    return None


def verify_contractive(lf: LengthFunction) -> ViolationWitness | None:
    """Check ``l([g,h]) <= 4 l(g) l(h)`` over all ordered pairs."""
    if not lf.axioms_verified:
        raise AxiomsNotVerified(f"{lf.name} fails the length axioms: {lf.axioms.describe(lf.group)}")
    G = lf.group
    num = lf.num
    comm = G.comm
    for g in range(G.order):
        lhs = num[comm[g]] * lf.den
        rhs = 4 * num[g] * num
        bad = _first(lf._over(lhs, rhs))
        if bad is not None:
            (h,) = bad
            den2 = lf.den * lf.den if lf.is_exact else 1
            conv = (lambda x: Fraction(int(x), den2)) if lf.is_exact else float
            w = ViolationWitness("contractive", "l([g,h]) <= 4 l(g) l(h)", (g, h), conv(lhs[h]), conv(rhs[h]))
            lf.contractive = w
            return w
    lf.contractive = True
    return None


def require_contractive(lf: LengthFunction) -> None:
    if not lf.contractive_verified:
        why = lf.axioms if lf.axioms is not True else lf.contractive
        raise NotContractive(f"{lf.name} is not commutator-contractive: {why.describe(lf.group)}")


def dist(lf: LengthFunction, g, h) -> Value:
    """Bi-invariant distance ``d(g, h) = l(g h^-1)``."""
    return lf.value(lf.group.mul[g, lf.group.inv[h]])


def check_two_min_inequality(lf: LengthFunction) -> ViolationWitness | None:
    """``l([g,h]) <= 2 min(l(g), l(h))`` over all pairs."""
    G = lf.group
    num = lf.num
    for g in range(G.order):
        lhs = num[G.comm[g]]
        rhs = 2 * np.minimum(num[g], num)
        bad = _first(lf._over(lhs, rhs))
        if bad is not None:
            (h,) = bad
            return ViolationWitness(
                "lemma", "l([g,h]) <= 2 min(l(g), l(h))", (g, h),
                lf._value_of_units(lhs[h]), lf._value_of_units(rhs[h]),
            )
    return None


# constructions ---------------------------------------------------------


def discrete_length(G: FiniteGroup) -> LengthFunction:
    vals = [0 if g == G.identity else 1 for g in range(G.order)]
    return LengthFunction(G, vals, name="discrete", tags=("discrete",))


def hamming_length(G) -> LengthFunction:
    """Normalized Hamming length: fraction of points moved.

    ``G`` is a permutation group, or an integer ``n`` for the full
    symmetric group on ``n`` points.
    """
    if isinstance(G, (int, np.integer)):
        from .catalog import symmetric_group

        G = symmetric_group(int(G))
    if G.perms is None:
        raise NoMatrixAttachment(f"{G.name} carries no permutation action")
    deg = G.perms.shape[1]
    moved = (G.perms != np.arange(deg)[None, :]).sum(axis=1)
    return LengthFunction(G, [Fraction(int(m), deg) for m in moved], name="hamming", tags=("hamming",))


def permutation_matrices(perms: np.ndarray) -> np.ndarray:
    n, deg = perms.shape
    mats = np.zeros((n, deg, deg))
    mats[np.arange(n)[:, None], perms, np.arange(deg)[None, :]] = 1.0
    return mats


def unitary_length(G: FiniteGroup, tol: float = DEFAULT_FLOAT_TOL) -> LengthFunction:
    """Half the operator norm of ``1 - U``, from the eigenvalues of ``U``.

    Uses the attached matrices, or permutation matrices when the group only
    carries a permutation action.
    """
    if G.matrices is not None:
        mats = np.asarray(G.matrices, dtype=complex)
    elif G.perms is not None:
        mats = permutation_matrices(G.perms).astype(complex)
    else:
        raise NoMatrixAttachment(f"{G.name} has no matrices attached")
    dim = mats.shape[-1]
    if np.abs(mats @ np.conj(np.swapaxes(mats, -1, -2)) - np.eye(dim)).max() > tol:
        raise NoMatrixAttachment(f"matrices attached to {G.name} are not unitary")
    eig = np.linalg.eigvals(mats)
    vals = np.clip(np.abs(1 - eig).max(axis=1) / 2, 0.0, 1.0)
    vals[G.identity] = 0.0
    return LengthFunction(G, vals, tol=tol, name="unitary", tags=("unitary", "contractive"))


def clamp_contractive(lf: LengthFunction, c=Fraction(1, 2)) -> LengthFunction:
    """Raise every non-identity value to at least ``c``; needs ``1/2 <= c <= 1``."""
    c = as_fraction(c)
    if not Fraction(1, 2) <= c <= 1:
        raise InvalidClamp(f"clamp level {c} outside [1/2, 1]")
    if not lf.axioms_verified:
        raise AxiomsNotVerified(f"{lf.name} fails the length axioms")
    e = lf.group.identity
    if lf.is_exact:
        vals = [Fraction(0) if g == e else max(v, c) for g, v in enumerate(lf.exact_values())]
    else:
        vals = np.maximum(lf.values, float(c))
        vals[e] = 0.0
    return lf.with_values(vals, name=f"clamp({c},{lf.name})", tags=lf.tags | {"contractive"})


def class_length(G: FiniteGroup, class_values: dict[int, object], name: str = "class") -> LengthFunction:
    """Length constant on conjugacy classes, keyed by any class member."""
    by_class: dict[int, object] = {}
    for rep, v in class_values.items():
        k = int(G.class_of[rep])
        if k in by_class and as_fraction(by_class[k]) != as_fraction(v):
            raise ValueError(f"conflicting values for the class of {G.labels[rep]}")
        by_class[k] = v
    missing = [G.labels[c[0]] for k, c in enumerate(G.conjugacy_classes()) if k not in by_class]
    if missing:
        raise ValueError(f"no value for the classes of {missing}")
    return LengthFunction(G, [by_class[int(G.class_of[g])] for g in range(G.order)], name=name)


def restrict(lf: LengthFunction, H: Subgroup) -> LengthFunction:
    """``lf`` on ``H.as_group()``."""
    if H.group is not lf.group:
        raise ValueError("subgroup belongs to a different group")
    return lf.with_values(lf._as_values(lf.num[H.members_array]), group=H.as_group(), name=f"{lf.name}|H")


def quotient_length(
    lf: LengthFunction, H: Subgroup, quotient: QuotientResult | None = None
) -> LengthFunction:
    """Induced length on ``G/H``: least value over each coset."""
    if not H.is_normal:
        raise NotNormal("quotient length needs a normal subgroup")
    if quotient is None:
        quotient = lf.group.quotient(H)
    proj = quotient.projection
    m = quotient.quotient.order
    if lf.is_exact:
        best = [None] * m
        for g, c in enumerate(proj):
            x = int(lf.num[g])
            if best[c] is None or x < best[c]:
                best[c] = x
        vals = [Fraction(x, lf.den) for x in best]
    else:
        vals = np.full(m, np.inf)
        np.minimum.at(vals, proj, lf.num)
    return lf.with_values(vals, group=quotient.quotient, name=f"{lf.name}/H")


# invariants -------------------------------------------------------------


@dataclass(frozen=True)
class MetricInvariants:
    delta: Value | None
    eta: Value
    discrete: bool


def delta(lf: LengthFunction) -> Value:
    """Least length of a non-identity element."""
    G = lf.group
    if G.order == 1:
        raise TrivialGroup("delta is undefined on the trivial group")
    others = np.delete(lf.num, G.identity)
    return lf._value_of_units(others.min())


def epsilon_mask(lf: LengthFunction, eps) -> np.ndarray:
    return lf.le_const(lf.num, eps)


def epsilon_subgroup(lf: LengthFunction, eps) -> Subgroup:
    """Subgroup generated by the elements of length at most ``eps``."""
    G = lf.group
    return G.generated_subgroup(np.flatnonzero(epsilon_mask(lf, eps)))


def _units_subgroup(lf: LengthFunction, x) -> np.ndarray:
    if lf.is_exact:
        return lf.group.closure_mask(np.flatnonzero(lf.num <= x))
    return lf.group.closure_mask(np.flatnonzero(lf.num <= x + lf.tol))


def eta(lf: LengthFunction) -> Value:
    """Least attained value ``v`` such that the elements of length ``<= v`` generate."""
    G = lf.group
    if G.order == 1:
        return lf._value_of_units(0)
    for x in np.unique(lf.num):
        if _units_subgroup(lf, x).all():
            return lf._value_of_units(x)
    raise AssertionError("the full group is always generated at the largest value")


def attained_values(lf: LengthFunction) -> list[Value]:
    return [lf._value_of_units(x) for x in np.unique(lf.num)]


def invariants(lf: LengthFunction) -> MetricInvariants:
    d = None if lf.group.order == 1 else delta(lf)
    return MetricInvariants(delta=d, eta=eta(lf), discrete=d is not None and lf.close(d, Fraction(1)))


# lemma checks ------------------------------------------------------------


def check_distance_lemma(lf: LengthFunction) -> ViolationWitness | None:
    """``d([g,h],[g,k]) <= 4 d(h,k) l(g)`` over all triples."""
    require_contractive(lf)
    G = lf.group
    num = lf.num
    comm = G.comm
    dhk = num[G.mul[:, G.inv]]  # d(h, k) indexed [h, k]
    for g in range(G.order):
        row = comm[g]
        lhs = num[G.mul[row[:, None], G.inv[row][None, :]]] * lf.den
        rhs = 4 * dhk * num[g]
        bad = _first(lf._over(lhs, rhs))
        if bad is not None:
            h, k = bad
            den2 = lf.den * lf.den if lf.is_exact else 1
            conv = (lambda x: Fraction(int(x), den2)) if lf.is_exact else float
            return ViolationWitness(
                "lemma", "d([g,h],[g,k]) <= 4 d(h,k) l(g)", (g, h, k), conv(lhs[h, k]), conv(rhs[h, k])
            )
    return None


@dataclass(frozen=True)
class QuotientLemmaReport:
    epsilon: Fraction
    eps_subgroup_order: int
    eps_subgroup_normal: bool
    quotient_order: int
    # each check is True/False, or None when its hypothesis does not hold
    quotient_gap: bool
    quotient_delta: Value | None
    eta_preserved: bool | None
    eta_quotient: Value | None
    eta_of_subgroup: bool
    delta_of_subgroup: bool | None

    @property
    def ok(self) -> bool:
        checks = (
            self.eps_subgroup_normal,
            self.quotient_gap,
            self.eta_preserved,
            self.eta_of_subgroup,
            self.delta_of_subgroup,
        )
        return all(c is not False for c in checks)


def check_quotient_lemmas(lf: LengthFunction, eps) -> QuotientLemmaReport:
    """Evaluate the quotient-gap, eta-preservation and subgroup statements at ``eps``.

    * ``delta(G/G_eps) > eps`` unless ``G_eps = G``;
    * ``eta(G/G_eps) = eta(G)`` when ``eta(G) > eps``;
    * ``eta(G_eps) <= eps``, and ``delta(G_eps) = delta(G)`` when ``delta(G) <= eps``,
      with the length restricted to ``G_eps``.
    """
    eps = as_fraction(eps)
    if not lf.axioms_verified:
        raise AxiomsNotVerified(f"{lf.name} fails the length axioms")
    G = lf.group
    H = epsilon_subgroup(lf, eps)
    q = G.quotient(H)
    ql = quotient_length(lf, H, q)

    if H.is_whole:
        gap, qdelta = True, None
    else:
        qdelta = delta(ql)
        gap = not lf.leq(qdelta, eps)

    eta_g = eta(lf)
    if lf.leq(eta_g, eps):
        eta_ok, eta_q = None, None
    else:
        eta_q = eta(ql)
        eta_ok = lf.close(eta_q, eta_g)

    sub = restrict(lf, H)
    eta_sub_ok = lf.leq(eta(sub), eps)
    if G.order == 1:
        delta_ok = None
    else:
        d = delta(lf)
        if lf.leq(d, eps):
            delta_ok = sub.group.order > 1 and lf.close(delta(sub), d)
        else:
            delta_ok = None
    return QuotientLemmaReport(
        epsilon=eps,
        eps_subgroup_order=H.order,
        eps_subgroup_normal=H.is_normal,
        quotient_order=q.quotient.order,
        quotient_gap=gap,
        quotient_delta=qdelta,
        eta_preserved=eta_ok,
        eta_quotient=eta_q,
        eta_of_subgroup=eta_sub_ok,
        delta_of_subgroup=delta_ok,
    )
