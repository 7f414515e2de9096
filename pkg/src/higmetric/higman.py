"""Approximate solutions of Higman's relations ``a_i = [a_{i+1}, a_i]`` (indices mod 4).

The scanner enumerates all ``|G|^4`` tuples in lexicographic order of
element ids.  The tuple index ``((a0 * n + a1) * n + a2) * n + a3`` is the
canonical order used for witnesses, so reports do not depend on how the
enumeration is split across workers.
"""
from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import EpsilonOutOfRange, NotContractive, ScanBudgetExceeded
from .group import FiniteGroup
from .lengths import LengthFunction, Value, as_fraction, require_contractive

EPSILON_LIMIT = Fraction(1, 64)
LARGE_THRESHOLD = Fraction(7, 32)
DEFAULT_EPSILON = Fraction(1, 100)
DEFAULT_BUDGET = 20_000_000
WITNESS_CAP = 100


class VerdictKind(str, enum.Enum):
    NEAR_TRIVIAL = "near_trivial"
    LARGE = "large"
    GAP_VIOLATION = "gap_violation"
    DEFECT_TOO_BIG = "defect_too_big"


VERDICT_ORDER = tuple(VerdictKind)

HigmanTuple = tuple[int, int, int, int]


@dataclass(frozen=True)
class DefectVector:
    d: tuple[Value, Value, Value, Value]

    @property
    def max(self) -> Value:
        return max(self.d)


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    lengths: tuple[Value, ...]
    defects: tuple[Value, ...]


def _defect_elements(G: FiniteGroup) -> np.ndarray:
    """``X[x, y] = x [y, x]^-1`` so that ``l(X[a_i, a_{i+1}])`` is the i-th defect."""
    return G.mul[np.arange(G.order)[:, None], G.inv[G.comm.T]]


def relation_defect(lf: LengthFunction, t: Sequence[int]) -> DefectVector:
    """``d_i = d(a_i, [a_{i+1}, a_i])``."""
    G = lf.group
    a = [int(x) for x in t]
    if len(a) != 4:
        raise ValueError("a Higman tuple has four entries")
    out = []
    for i in range(4):
        nxt = a[(i + 1) % 4]
        c = G.comm[nxt, a[i]]
        out.append(lf.value(G.mul[a[i], G.inv[c]]))
    return DefectVector(tuple(out))


def _check_epsilon(eps) -> Fraction:
    eps = as_fraction(eps)
    if not 0 < eps < EPSILON_LIMIT:
        raise EpsilonOutOfRange(f"epsilon {eps} must lie in (0, 1/64)")
    return eps


def dichotomy_verdict(lengths: Sequence[Value], defects: Sequence[Value], eps, tol: float = 0.0) -> VerdictKind:
    """The verdict rule on plain numbers; ``tol`` widens each comparison in favour of the prediction."""
    eps = as_fraction(eps)

    def exact(a):
        return tol == 0 and not isinstance(a, float)

    def le(a, b):
        return a <= b if exact(a) else float(a) <= float(b) + tol

    def lt(a, b):
        return a < b if exact(a) else float(a) < float(b) + tol

    def ge(a, b):
        return a >= b if exact(a) else float(a) >= float(b) - tol

    if not all(le(d, eps) for d in defects):
        return VerdictKind.DEFECT_TOO_BIG
    if all(lt(x, 4 * eps) for x in lengths):
        return VerdictKind.NEAR_TRIVIAL
    if all(ge(x, LARGE_THRESHOLD) for x in lengths):
        return VerdictKind.LARGE
    return VerdictKind.GAP_VIOLATION


def classify(lf: LengthFunction, t: Sequence[int], eps=DEFAULT_EPSILON) -> Verdict:
    """Place a tuple in the dichotomy for a contractive length and ``eps < 1/64``.

    DefectTooBig when some defect exceeds ``eps``; otherwise NearTrivial if
    every generator length is below ``4 eps``, Large if every one is at least
    ``7/32``, and GapViolation in the remaining case.
    """
    eps = _check_epsilon(eps)
    require_contractive(lf)
    dv = relation_defect(lf, t)
    lengths = tuple(lf.value(a) for a in t)
    return Verdict(dichotomy_verdict(lengths, dv.d, eps, lf.tol), lengths, dv.d)


# generation ------------------------------------------------------------


class JoinTable:
    """``join[s, a]`` = id of the subgroup generated by subgroup ``s`` and element ``a``.

    Subgroup 0 is trivial.  Rows exist for every subgroup generated by at
    most ``depth - 1`` elements, enough to follow ``depth`` successive joins.
    """

    def __init__(self, G: FiniteGroup, depth: int = 4):
        self.group = G
        n = G.order
        ids: dict[bytes, int] = {}
        gens: list[list[int]] = []
        masks: list[np.ndarray] = []

        def intern(mask: np.ndarray, g: list[int]) -> int:
            key = np.packbits(mask).tobytes()
            k = ids.get(key)
            if k is None:
                k = ids[key] = len(masks)
                masks.append(mask)
                gens.append(g)
            return k

        intern(G.closure_mask([]), [])
        rows: dict[int, np.ndarray] = {}
        level = [0]
        for _ in range(depth):
            nxt = []
            for s in level:
                if s in rows:
                    continue
                row = np.empty(n, dtype=np.int64)
                for a in range(n):
                    if masks[s][a]:
                        row[a] = s
                    else:
                        g = gens[s] + [a]
                        row[a] = intern(G.closure_mask(g), g)
                rows[s] = row
                nxt.extend(np.unique(row).tolist())
            level = nxt
        self.table = np.full((len(masks), n), -1, dtype=np.int64)
        for s, row in rows.items():
            self.table[s] = row
        self.orders = np.array([m.sum() for m in masks])
        self.full = [k for k, m in enumerate(masks) if m.all()]
        self.full_id = self.full[0] if self.full else -1

    def generates(self, t: Sequence[int]) -> bool:
        s = 0
        for a in t:
            s = self.table[s, a]
        return s == self.full_id


# scanning ------------------------------------------------------------


@dataclass
class _Partial:
    counts: dict[str, int] = field(default_factory=lambda: {k.value: 0 for k in VerdictKind})
    scanned: int = 0
    forbidden_gap: int = 0
    witnesses: dict[str, list[int]] = field(default_factory=lambda: {k.value: [] for k in VerdictKind})

    def merge(self, other: "_Partial", cap: int) -> "_Partial":
        for k in self.counts:
            self.counts[k] += other.counts[k]
            room = cap - len(self.witnesses[k])
            if room > 0:
                self.witnesses[k].extend(other.witnesses[k][:room])
        self.scanned += other.scanned
        self.forbidden_gap += other.forbidden_gap
        return self


@dataclass(frozen=True)
class Witness:
    verdict: VerdictKind
    index: int
    tuple: HigmanTuple
    labels: tuple[str, ...]
    lengths: tuple[Value, ...]
    defects: tuple[Value, ...]


@dataclass(frozen=True)
class ScanReport:
    group: str
    order: int
    metric: str
    epsilon: Fraction
    exact: bool
    generating_only: bool
    contractive: bool
    scanned: int
    counts: dict[str, int]
    forbidden_gap: int
    witnesses: tuple[Witness, ...]
    wall_ms: float

    @property
    def near_trivial(self) -> int:
        return self.counts[VerdictKind.NEAR_TRIVIAL.value]

    @property
    def large(self) -> int:
        return self.counts[VerdictKind.LARGE.value]

    @property
    def gap_violation(self) -> int:
        return self.counts[VerdictKind.GAP_VIOLATION.value]

    @property
    def defect_too_big(self) -> int:
        return self.counts[VerdictKind.DEFECT_TOO_BIG.value]

    @property
    def theorem_holds(self) -> bool:
        return self.large == 0 and self.gap_violation == 0


class _ScanContext:
    def __init__(self, lf: LengthFunction, eps: Fraction, generating_only: bool, cap: int):
        G = lf.group
        self.n = G.order
        self.cap = cap
        dnum = lf.num[_defect_elements(G)]
        self.within = np.asarray(lf.le_const(dnum, eps), dtype=bool)  # [a_i, a_{i+1}]
        self.small = np.asarray(lf.lt_const(lf.num, 4 * eps), dtype=bool)
        self.big = np.asarray(lf.ge_const(lf.num, LARGE_THRESHOLD), dtype=bool)
        self.in_gap = ~self.small & ~self.big
        self.join = JoinTable(G) if generating_only else None

    def block(self, a0: int) -> _Partial:
        n = self.n
        P = self.within
        ok = P[a0][:, None, None] & P[:, :, None] & P[None, :, :] & P[:, a0][None, None, :]
        if self.join is not None:
            J = self.join.table
            r1 = J[J[0, a0]]
            r3 = J[J[r1]]
            scope = r3 == self.join.full_id
            ok &= scope
        else:
            scope = None
        s, b, g = self.small, self.big, self.in_gap
        near = ok & (s[a0] & s[:, None, None] & s[None, :, None] & s[None, None, :])
        large = ok & ~near & (b[a0] & b[:, None, None] & b[None, :, None] & b[None, None, :])
        gap = ok & ~near & ~large
        too_big = ~ok if scope is None else scope & ~ok
        forbidden = ok & (g[a0] | g[:, None, None] | g[None, :, None] | g[None, None, :])
        part = _Partial()
        part.scanned = n**3 if scope is None else int(scope.sum())
        part.forbidden_gap = int(forbidden.sum())
        base = a0 * n**3
        for kind, mask in (
            (VerdictKind.NEAR_TRIVIAL, near),
            (VerdictKind.LARGE, large),
            (VerdictKind.GAP_VIOLATION, gap),
            (VerdictKind.DEFECT_TOO_BIG, too_big),
        ):
            flat = mask.ravel()
            part.counts[kind.value] = int(np.count_nonzero(flat))
            if part.counts[kind.value]:
                part.witnesses[kind.value] = (np.flatnonzero(flat)[: self.cap] + base).tolist()
        return part

    def run(self, lo: int, hi: int) -> _Partial:
        acc = _Partial()
        for a0 in range(lo, hi):
            acc.merge(self.block(a0), self.cap)
        return acc


def _chunks(n: int, jobs: int) -> list[tuple[int, int]]:
    jobs = max(1, min(jobs, n))
    edges = np.linspace(0, n, jobs + 1).round().astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def decode_index(index: int, n: int) -> HigmanTuple:
    a3 = index % n
    a2 = index // n % n
    a1 = index // n**2 % n
    a0 = index // n**3
    return a0, a1, a2, a3


def theorem_scan(
    lf: LengthFunction,
    eps=DEFAULT_EPSILON,
    generating_only: bool = True,
    *,
    jobs: int = 1,
    budget: int = DEFAULT_BUDGET,
    witness_cap: int = WITNESS_CAP,
    allow_noncontractive: bool = False,
) -> ScanReport:
    """Classify every 4-tuple of ``lf.group`` (or every generating one).

    For a commutator-contractive length the dichotomy and the main theorem
    predict ``large == gap_violation == 0``.  With ``allow_noncontractive``
    the scan also runs on other lengths and the report says so.
    """
    eps = _check_epsilon(eps)
    if allow_noncontractive:
        contractive = lf.contractive_verified
    else:
        require_contractive(lf)
        contractive = True
    G = lf.group
    n = G.order
    if n**4 > budget:
        raise ScanBudgetExceeded(f"{n}^4 = {n**4} tuples exceeds the budget of {budget}")
    start = time.perf_counter()
    ctx = _ScanContext(lf, eps, generating_only, witness_cap)
    ranges = _chunks(n, jobs)
    if len(ranges) == 1:
        parts = [ctx.run(*ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            parts = list(pool.map(lambda r: ctx.run(*r), ranges))
    total = _Partial()
    for p in parts:
        total.merge(p, witness_cap)
    witnesses = []
    for kind in VERDICT_ORDER:
        for idx in total.witnesses[kind.value]:
            t = decode_index(idx, n)
            witnesses.append(
                Witness(
                    verdict=kind,
                    index=idx,
                    tuple=t,
                    labels=tuple(G.labels[a] for a in t),
                    lengths=tuple(lf.value(a) for a in t),
                    defects=relation_defect(lf, t).d,
                )
            )
    wall = (time.perf_counter() - start) * 1000
    return ScanReport(
        group=G.name,
        order=n,
        metric=lf.name,
        epsilon=eps,
        exact=lf.is_exact,
        generating_only=generating_only,
        contractive=contractive,
        scanned=total.scanned,
        counts=dict(total.counts),
        forbidden_gap=total.forbidden_gap,
        witnesses=tuple(witnesses),
        wall_ms=wall,
    )


# exact solutions -------------------------------------------------------


def exact_solutions(G: FiniteGroup) -> list[HigmanTuple]:
    """All tuples with ``a_i = [a_{i+1}, a_i]`` exactly, in canonical order."""
    n = G.order
    # rel[x, y]: x = [y, x]
    rel = G.comm.T == np.arange(n)[:, None]
    succ = [np.flatnonzero(rel[x]).tolist() for x in range(n)]
    out = []
    for a0 in range(n):
        for a1 in succ[a0]:
            for a2 in succ[a1]:
                for a3 in succ[a2]:
                    if rel[a3, a0]:
                        out.append((a0, a1, a2, a3))
    return out


def no_finite_quotients_check(G: FiniteGroup) -> HigmanTuple | None:
    """First exact solution that is not the identity tuple, or None.

    An exact solution would generate a non-trivial finite quotient of
    Higman's group, which has none.
    """
    e = G.identity
    for t in exact_solutions(G):
        if any(a != e for a in t):
            return t
    return None


# approximation sequences ------------------------------------------------


@dataclass(frozen=True)
class ApproximationStage:
    length: LengthFunction
    tuple: HigmanTuple
    targets: tuple[Value, Value, Value, Value]


@dataclass(frozen=True)
class StageResult:
    stage: int  # 1-based
    group: str
    metric: str
    labels: tuple[str, ...]
    defects: tuple[Value, ...]
    max_defect: Value
    lengths: tuple[Value, ...]
    targets: tuple[Fraction, ...]
    generates: bool
    status: str


@dataclass(frozen=True)
class ApproximationReport:
    stages: tuple[StageResult, ...]
    refuted_at: int | None
    forced_failure_stage: int | None
    defects_nonincreasing: bool
    verdict: str
    # constants stated for the non-approximability corollary, recorded as given
    corollary_epsilon_bound: Fraction = Fraction(1, 3000)
    corollary_target_factor: int = 56

    @property
    def consistent(self) -> bool:
        return self.refuted_at is None


STAGE_BELOW_TARGET = "below_target"
STAGE_DEFECT_TOO_LARGE = "defect_too_large"
STAGE_CONTRADICTS_THEOREM = "contradicts_theorem"
STAGE_CONSISTENT = "consistent"


def _stage_status(lf: LengthFunction, lengths, targets, eps_n) -> str:
    """Status of one stage from its generator lengths and largest defect ``eps_n``.

    The theorem applies with any ``eps`` in ``[eps_n, 1/64)``, so it forces
    ``l(a_i) < 4 eps_n`` when ``eps_n > 0`` and ``l(a_i) = 0`` when ``eps_n = 0``.
    """
    if any(not lf.leq(tg, x) for x, tg in zip(lengths, targets)):
        return STAGE_BELOW_TARGET
    if not lf.lt(eps_n, EPSILON_LIMIT):
        return STAGE_DEFECT_TOO_LARGE
    if any(not lf.leq(x, 0) and not lf.lt(x, 4 * eps_n) for x in lengths):
        return STAGE_CONTRADICTS_THEOREM
    return STAGE_CONSISTENT


def _unreachable(lf: LengthFunction, target, eps_n) -> bool:
    """The theorem's bound on generator lengths already rules out ``target``."""
    if lf.leq(eps_n, 0):
        return target > 0
    return lf.leq(4 * eps_n, target)


def approximation_sequence_check(stages: Sequence[ApproximationStage]) -> ApproximationReport:
    """Test finite stages of a would-be approximation of Higman's group.

    Each stage maps the four generators into a group with a contractive
    length.  A stage is inconsistent when some generator length falls below
    its target, or when its largest defect ``eps_n`` is below ``1/64`` while
    some generator length reaches ``4 eps_n`` (excluded by the main theorem,
    applied to the subgroup the tuple generates).  ``forced_failure_stage``
    is the first stage where ``4 eps_n`` is at most some target, so the
    theorem leaves no room for that target to be met.
    """
    results = []
    refuted = forced = None
    for k, st in enumerate(stages, start=1):
        lf = st.length
        try:
            require_contractive(lf)
        except NotContractive as exc:
            raise NotContractive(f"stage {k}: {exc}") from None
        G = lf.group
        t = tuple(int(a) for a in st.tuple)
        dv = relation_defect(lf, t)
        eps_n = dv.max
        lengths = tuple(lf.value(a) for a in t)
        targets = tuple(as_fraction(x) for x in st.targets)
        gen = G.generated_subgroup(t).is_whole
        small = lf.lt(eps_n, EPSILON_LIMIT)
        status = _stage_status(lf, lengths, targets, eps_n)
        if refuted is None and status in (STAGE_BELOW_TARGET, STAGE_CONTRADICTS_THEOREM):
            refuted = k
        if forced is None and small and any(_unreachable(lf, tg, eps_n) for tg in targets):
            forced = k
        results.append(
            StageResult(
                stage=k,
                group=G.name,
                metric=lf.name,
                labels=tuple(G.labels[a] for a in t),
                defects=dv.d,
                max_defect=eps_n,
                lengths=lengths,
                targets=targets,
                generates=gen,
                status=status,
            )
        )
    maxes = [float(r.max_defect) for r in results]
    nonincreasing = all(b <= a for a, b in zip(maxes, maxes[1:]))
    if refuted is not None:
        verdict = f"inconsistent at stage {refuted}"
    elif results and all(r.status == STAGE_DEFECT_TOO_LARGE for r in results):
        verdict = "not yet refuted, defect too large"
    else:
        verdict = "not yet refuted"
    return ApproximationReport(tuple(results), refuted, forced, nonincreasing, verdict)
