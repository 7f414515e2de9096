"""Finite groups as integer Cayley tables.

Every group is stored as an ``order x order`` multiplication table over
element ids ``0 .. order-1``.  Groups built by generator closure enumerate
their elements breadth-first from the identity (id 0), multiplying on the
right by the generators in the order given, so ids are reproducible.
Permutation images and unitary matrices may be attached to the elements but
never take part in group arithmetic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    AmbiguousDeduplication,
    ClosureExceedsCap,
    InvalidGroupTable,
    InvalidPermutation,
    NotNormal,
    NotUnitary,
)

DEFAULT_CAP = 10_000
DEFAULT_MATRIX_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mul: np.ndarray
    inv: np.ndarray
    identity: int
    labels: tuple[str, ...]
    name: str = "group"
    source: dict | None = None
    perms: np.ndarray | None = None
    matrices: np.ndarray | None = None

    @classmethod
    def from_table(
        cls,
        table,
        labels: Sequence[str] | None = None,
        name: str = "group",
        source: dict | None = None,
        perms: np.ndarray | None = None,
        matrices: np.ndarray | None = None,
        check: bool = True,
    ) -> "FiniteGroup":
        """Wrap a multiplication table, locating the identity and inverses.

        With ``check`` the table is validated as a group (associativity is
        tested exhaustively, which costs ``order**3``).
        """
        mul = np.asarray(table, dtype=np.int64)
        if mul.ndim != 2 or mul.shape[0] != mul.shape[1] or mul.shape[0] == 0:
            raise InvalidGroupTable("multiplication table must be a non-empty square matrix")
        n = mul.shape[0]
        if mul.min() < 0 or mul.max() >= n:
            raise InvalidGroupTable("table entries must be element ids in [0, order)")
        ar = np.arange(n)
        units = np.flatnonzero((mul == ar[None, :]).all(axis=1) & (mul == ar[:, None]).all(axis=0))
        if units.size != 1:
            raise InvalidGroupTable("table has no two-sided identity")
        e = int(units[0])
        hits = mul == e
        if not (hits.sum(axis=1) == 1).all():
            raise InvalidGroupTable("some element has no unique inverse")
        inv = hits.argmax(axis=1)
        if not (mul[inv, ar] == e).all():
            raise InvalidGroupTable("left and right inverses differ")
        if labels is None:
            labels = [str(i) for i in range(n)]
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise InvalidGroupTable("need exactly one label per element")
        if len(set(labels)) != n:
            raise InvalidGroupTable("element labels must be distinct")
        group = cls(
            mul=_frozen(mul),
            inv=_frozen(inv.astype(np.int64)),
            identity=e,
            labels=labels,
            name=name,
            source=source,
            perms=None if perms is None else _frozen(np.asarray(perms)),
            matrices=None if matrices is None else _frozen(np.asarray(matrices)),
        )
        if check:
            bad = group.associativity_violation()
            if bad is not None:
                raise InvalidGroupTable(f"table is not associative at {bad}")
        return group

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    def __len__(self) -> int:
        return self.order

    def __repr__(self) -> str:
        return f"FiniteGroup(name={self.name!r}, order={self.order})"

    @cached_property
    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.labels)}

    def element(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise KeyError(f"{self.name} has no element labelled {label!r}") from None

    def multiply(self, g, h):
        return self.mul[g, h]

    def inverse(self, g):
        return self.inv[g]

    def commutator(self, g, h):
        """``[g, h] = g h g^-1 h^-1``; works elementwise on id arrays."""
        return self.mul[self.mul[g, h], self.mul[self.inv[g], self.inv[h]]]

    @cached_property
    def comm(self) -> np.ndarray:
        """Full commutator table, ``comm[g, h] = [g, h]``."""
        ar = np.arange(self.order)
        return _frozen(self.commutator(ar[:, None], ar[None, :]))

    @cached_property
    def is_abelian(self) -> bool:
        return bool((self.mul == self.mul.T).all())

    def associativity_violation(self) -> tuple[int, int, int] | None:
        n = self.order
        mul = self.mul
        for a in range(n):
            left = mul[mul[a]]  # (ab)c, indexed [b, c]
            right = mul[a][mul]  # a(bc)
            bad = np.argwhere(left != right)
            if bad.size:
                b, c = bad[0]
                return a, int(b), int(c)
        return None

    def check_axioms(self) -> bool:
        """Exhaustive unit, inverse and associativity check."""
        ar = np.arange(self.order)
        e = self.identity
        if not ((self.mul[e] == ar).all() and (self.mul[:, e] == ar).all()):
            return False
        if not ((self.mul[ar, self.inv] == e).all() and (self.mul[self.inv, ar] == e).all()):
            return False
        return self.associativity_violation() is None

    def conjugate(self, g, h):
        """``h g h^-1``."""
        return self.mul[self.mul[h, g], self.inv[h]]

    def conjugacy_classes(self) -> list[tuple[int, ...]]:
        """Partition into conjugacy classes, each sorted, ordered by least member."""
        ar = np.arange(self.order)
        seen = np.zeros(self.order, dtype=bool)
        classes = []
        for g in range(self.order):
            if seen[g]:
                continue
            cls = np.unique(self.conjugate(g, ar))
            seen[cls] = True
            classes.append(tuple(int(x) for x in cls))
        return classes

    @cached_property
    def class_of(self) -> np.ndarray:
        out = np.empty(self.order, dtype=np.int64)
        for k, cls in enumerate(self.conjugacy_classes()):
            out[list(cls)] = k
        return _frozen(out)

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = int(self.mul[x, g])
            k += 1
        return k

    # subgroups -----------------------------------------------------------

    def closure_mask(self, gens: Iterable[int]) -> np.ndarray:
        gens = np.unique(np.asarray(list(gens), dtype=np.int64))
        mask = np.zeros(self.order, dtype=bool)
        mask[self.identity] = True
        frontier = np.array([self.identity])
        while frontier.size and gens.size:
            prod = self.mul[np.ix_(frontier, gens)].ravel()
            new = np.unique(prod[~mask[prod]])
            mask[new] = True
            frontier = new
        return mask

    def subgroup_from_mask(self, mask: np.ndarray) -> "Subgroup":
        members = np.flatnonzero(mask)
        return Subgroup(self, tuple(int(x) for x in members), self._normal(members, mask))

    def _normal(self, members: np.ndarray, mask: np.ndarray) -> bool:
        ar = np.arange(self.order)
        conj = self.conjugate(members[None, :], ar[:, None])
        return bool(mask[conj].all())

    def generated_subgroup(self, gens: Iterable[int]) -> "Subgroup":
        return self.subgroup_from_mask(self.closure_mask(gens))

    def whole(self) -> "Subgroup":
        return Subgroup(self, tuple(range(self.order)), True)

    def trivial(self) -> "Subgroup":
        return Subgroup(self, (self.identity,), True)

    def subgroup_commutator(self, a: "Subgroup", b: "Subgroup") -> "Subgroup":
        """The subgroup generated by all ``[x, y]`` with ``x`` in ``a``, ``y`` in ``b``."""
        if a.group is not self or b.group is not self:
            raise ValueError("subgroups belong to a different group")
        comms = self.comm[np.ix_(a.members_array, b.members_array)]
        return self.generated_subgroup(np.unique(comms))

    def quotient(self, h: "Subgroup") -> "QuotientResult":
        """Quotient by a normal subgroup.

        Cosets are numbered in increasing order of their least member.
        """
        if h.group is not self:
            raise ValueError("subgroup belongs to a different group")
        if not h.is_normal:
            raise NotNormal(f"subgroup of order {h.order} is not normal in {self.name}")
        n = self.order
        proj = np.full(n, -1, dtype=np.int64)
        reps = []
        hm = h.members_array
        for g in range(n):
            if proj[g] >= 0:
                continue
            proj[self.mul[g, hm]] = len(reps)
            reps.append(g)
        reps_a = np.array(reps)
        table = proj[self.mul[np.ix_(reps_a, reps_a)]]
        labels = [self.labels[r] if h.order == 1 else f"{self.labels[r]}H" for r in reps]
        q = FiniteGroup.from_table(
            table,
            labels=labels,
            name=f"{self.name}/H{h.order}",
            source={"type": "quotient", "parent": self.name, "kernel_order": h.order},
            check=False,
        )
        return QuotientResult(q, _frozen(proj))


@dataclass(frozen=True, eq=False)
class Subgroup:
    group: FiniteGroup
    members: tuple[int, ...]
    is_normal: bool

    @property
    def order(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return self.order

    def __contains__(self, g) -> bool:
        return bool(self.mask[g])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subgroup):
            return NotImplemented
        return self.group is other.group and self.members == other.members

    def __hash__(self) -> int:
        return hash((id(self.group), self.members))

    def __le__(self, other: "Subgroup") -> bool:
        return bool(other.mask[self.members_array].all())

    def __repr__(self) -> str:
        return f"Subgroup(order={self.order}, normal={self.is_normal}, of={self.group.name!r})"

    @cached_property
    def members_array(self) -> np.ndarray:
        return _frozen(np.array(self.members, dtype=np.int64))

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.group.order, dtype=bool)
        m[list(self.members)] = True
        return _frozen(m)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1

    @property
    def is_whole(self) -> bool:
        return self.order == self.group.order

    def is_closed(self) -> bool:
        m = self.members_array
        return bool(self.mask[self.group.mul[np.ix_(m, m)]].all() and self.mask[self.group.inv[m]].all())

    @cached_property
    def _standalone(self) -> FiniteGroup:
        g = self.group
        m = self.members_array
        pos = np.full(g.order, -1, dtype=np.int64)
        pos[m] = np.arange(m.size)
        return FiniteGroup.from_table(
            pos[g.mul[np.ix_(m, m)]],
            labels=[g.labels[i] for i in m],
            name=f"{g.name}[{m.size}]",
            source={"type": "subgroup", "parent": g.name},
            perms=None if g.perms is None else g.perms[m],
            matrices=None if g.matrices is None else g.matrices[m],
            check=False,
        )

    def as_group(self) -> FiniteGroup:
        """The subgroup as a standalone group; its id ``k`` is ``members[k]``."""
        return self._standalone


@dataclass(frozen=True, eq=False)
class QuotientResult:
    quotient: FiniteGroup
    projection: np.ndarray


# permutations ------------------------------------------------------------

_CYCLE = re.compile(r"\(([^()]*)\)")


def parse_cycles(text: str, degree: int) -> tuple[int, ...]:
    """Parse 1-based cycle notation such as ``"(1 2)(3 4 5)"`` into 0-based images."""
    text = text.strip()
    if _CYCLE.sub("", text).strip():
        raise InvalidPermutation(f"cannot parse cycle notation {text!r}")
    images = list(range(degree))
    seen: set[int] = set()
    for body in _CYCLE.findall(text):
        pts = [p for p in re.split(r"[\s,]+", body.strip()) if p]
        try:
            cyc = [int(p) - 1 for p in pts]
        except ValueError:
            raise InvalidPermutation(f"non-integer point in {text!r}") from None
        for p in cyc:
            if not 0 <= p < degree:
                raise InvalidPermutation(f"point {p + 1} outside 1..{degree}")
            if p in seen:
                raise InvalidPermutation(f"point {p + 1} repeated in {text!r}")
            seen.add(p)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            images[a] = b
    return tuple(images)


def cycle_string(images: Sequence[int]) -> str:
    """1-based cycle notation; fixed points omitted, identity is ``()``."""
    seen = [False] * len(images)
    parts = []
    for start in range(len(images)):
        if seen[start] or images[start] == start:
            continue
        cyc = []
        x = start
        while not seen[x]:
            seen[x] = True
            cyc.append(str(x + 1))
            x = images[x]
        parts.append("(" + " ".join(cyc) + ")")
    return "".join(parts) or "()"


def _check_perm(p, degree: int) -> tuple[int, ...]:
    p = tuple(int(x) for x in p)
    if len(p) != degree or sorted(p) != list(range(degree)):
        raise InvalidPermutation(f"{p} is not a permutation of 0..{degree - 1}")
    return p


def _bfs(identity, gens, multiply: Callable, lookup: Callable, cap: int):
    """Breadth-first closure from the identity by right multiplication.

    ``lookup(x, elements)`` returns the index of ``x`` in ``elements`` or None.
    Returns (elements, parent, gen, right) where ``right[g, s] = g * gens[s]``.
    """
    elements = [identity]
    parent = [-1]
    via = [-1]
    right = []
    i = 0
    while i < len(elements):
        row = []
        for s, gen in enumerate(gens):
            prod = multiply(elements[i], gen)
            j = lookup(prod, elements)
            if j is None:
                if len(elements) >= cap:
                    raise ClosureExceedsCap(f"closure exceeds cap of {cap} elements")
                j = len(elements)
                elements.append(prod)
                parent.append(i)
                via.append(s)
            row.append(j)
        right.append(row)
        i += 1
    return elements, parent, via, np.array(right, dtype=np.int64).reshape(len(elements), len(gens))


def _table_from_tree(parent, via, right) -> np.ndarray:
    n = len(parent)
    mul = np.empty((n, n), dtype=np.int64)
    mul[:, 0] = np.arange(n)
    for h in range(1, n):
        mul[:, h] = right[mul[:, parent[h]], via[h]]
    return mul


def _words(parent, via, names: Sequence[str]) -> list[str]:
    words: list[list[str]] = [[]]
    for h in range(1, len(parent)):
        words.append(words[parent[h]] + [names[via[h]]])
    return ["*".join(w) if w else "e" for w in words]


def _matrix_images(parent, via, right, gen_mats: np.ndarray, tol: float) -> np.ndarray:
    dim = gen_mats.shape[-1]
    mats = np.empty((len(parent), dim, dim), dtype=complex)
    mats[0] = np.eye(dim)
    for h in range(1, len(parent)):
        mats[h] = mats[parent[h]] @ gen_mats[via[h]]
    if right.size:
        want = np.einsum("gij,sjk->gsik", mats, gen_mats)
        got = mats[right]
        if np.abs(want - got).max() > tol:
            raise ValueError("matrices do not define a homomorphism on these generators")
    return mats


def _check_unitary(mats: np.ndarray, tol: float) -> None:
    dim = mats.shape[-1]
    for k, m in enumerate(mats):
        if np.abs(m @ m.conj().T - np.eye(dim)).max() > tol:
            raise NotUnitary(f"generator {k} is not unitary within {tol}")


def build_from_permutations(
    generators: Sequence,
    degree: int | None = None,
    cap: int = DEFAULT_CAP,
    name: str = "perm",
    matrices: Sequence | None = None,
    matrix_tol: float = DEFAULT_MATRIX_TOL,
) -> FiniteGroup:
    """Group generated by permutations of ``degree`` points.

    Generators are cycle strings (1-based) or sequences of 0-based images.
    Products compose right to left: ``(gh)(x) = g(h(x))``.  Optional
    ``matrices`` give unitary images of the generators; they are extended
    along the closure and must define a homomorphism.
    """
    if degree is None:
        lens = [len(g) for g in generators if not isinstance(g, str)]
        if not lens and generators:
            raise InvalidPermutation("degree is required for cycle-notation generators")
        degree = max(lens, default=1)
    gens = [
        parse_cycles(g, degree) if isinstance(g, str) else _check_perm(g, degree)
        for g in generators
    ]
    ident = tuple(range(degree))
    elements, parent, via, right = _perm_bfs(ident, gens, cap)
    mul = _table_from_tree(parent, via, right)
    mats = None
    if matrices is not None:
        gm = np.asarray(matrices, dtype=complex)
        if gm.shape[0] != len(gens):
            raise ValueError("need one matrix per generator")
        _check_unitary(gm, matrix_tol)
        mats = _matrix_images(parent, via, right, gm, matrix_tol)
    source = {
        "type": "permutation",
        "degree": degree,
        "generators": [cycle_string(g) for g in gens],
    }
    if matrices is not None:
        source["matrices"] = np.asarray(matrices, dtype=complex)
    return FiniteGroup.from_table(
        mul,
        labels=[cycle_string(p) for p in elements],
        name=name,
        source=source,
        perms=np.array(elements, dtype=np.int64).reshape(len(elements), degree),
        matrices=mats,
        check=False,
    )


def _perm_bfs(ident, gens, cap):
    index = {ident: 0}

    def lookup(x, els):
        j = index.get(x)
        if j is None:
            index[x] = len(els)
        return j

    return _bfs(ident, gens, lambda p, q: tuple(p[x] for x in q), lookup, cap)


def build_from_unitary_matrices(
    generators: Sequence,
    tol: float = DEFAULT_MATRIX_TOL,
    cap: int = DEFAULT_CAP,
    name: str = "unitary",
    generator_names: Sequence[str] | None = None,
) -> FiniteGroup:
    """Finite group generated by unitary matrices.

    Products are identified when every entry agrees within ``tol``; a
    product whose nearest element lies between ``tol/10`` and ``tol`` raises
    AmbiguousDeduplication.  Labels are generator words such as ``"i*j"``.
    """
    gm = [np.asarray(g, dtype=complex) for g in generators]
    if gm:
        dims = {g.shape for g in gm}
        if len(dims) != 1 or any(len(s) != 2 or s[0] != s[1] for s in dims):
            raise NotUnitary("generators must be square matrices of one size")
        dim = gm[0].shape[0]
        stack = np.stack(gm)
    else:
        dim = 1
        stack = np.zeros((0, 1, 1), dtype=complex)
    _check_unitary(stack, tol)
    names = list(generator_names) if generator_names else [f"g{k}" for k in range(len(gm))]
    store = np.empty((min(cap, 256), dim, dim), dtype=complex)

    def lookup(x, els):
        nonlocal store
        n = len(els)
        dist = np.abs(store[:n] - x).reshape(n, -1).max(axis=1)
        j = int(dist.argmin())
        if dist[j] <= tol / 10:
            return j
        if dist[j] <= tol:
            raise AmbiguousDeduplication(
                f"product lies {dist[j]:.3g} from element {j}, inside the ambiguous band"
            )
        if n >= store.shape[0]:
            store = np.concatenate([store, np.empty_like(store)])
        store[n] = x
        return None

    ident = np.eye(dim, dtype=complex)
    store[0] = ident
    elements, parent, via, right = _bfs(ident, list(stack), lambda a, b: a @ b, lookup, cap)
    mul = _table_from_tree(parent, via, right)
    return FiniteGroup.from_table(
        mul,
        labels=_words(parent, via, names),
        name=name,
        source={"type": "unitary", "dimension": dim, "generators": stack, "names": names},
        matrices=np.stack(elements),
        check=False,
    )


def relabel(group: FiniteGroup, labels: Sequence[str]) -> FiniteGroup:
    return FiniteGroup(
        mul=group.mul,
        inv=group.inv,
        identity=group.identity,
        labels=tuple(labels),
        name=group.name,
        source=group.source,
        perms=group.perms,
        matrices=group.matrices,
    )
