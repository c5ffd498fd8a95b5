"""Finite structures of the five Fraisse classes, embeddings, amalgams and types.

Universes are always ``range(size)``.  Relations are stored per kind:

* ``random-graph``: ``edges``, a frozenset of sorted pairs;
* ``dlo``: ``order``, the rank of each element (``a < b`` iff ``order[a] < order[b]``);
* ``boolean``: ``atoms`` (ambient atom count) and ``elements``, the bitmask of
  each universe element, or ``None`` for the full power set (element ``i`` is
  then the mask ``i``);
* ``urysohn``: ``dist``, a symmetric matrix of :class:`~fractions.Fraction`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

DEFAULT_CAP = 10**6


class StructureError(ValueError):
    """A payload or map violates the invariants of its class."""


class CapExceeded(RuntimeError):
    """An enumeration grew past its configured cap."""


@dataclass(frozen=True)
class ClassKind:
    tag: str
    denominator: int | None = None

    TAGS = ("pure-set", "random-graph", "dlo", "boolean", "urysohn")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise StructureError(f"unknown class kind {self.tag!r}")
        if self.tag == "urysohn":
            if self.denominator is None or self.denominator < 1:
                raise StructureError("urysohn kind needs a denominator >= 1")
        elif self.denominator is not None:
            raise StructureError(f"{self.tag} takes no denominator")

    @property
    def binary(self) -> bool:
        """True for kinds whose signature is (at most) one binary relation."""
        return self.tag != "boolean"

    @property
    def grid(self) -> tuple[Fraction, ...]:
        d = self.denominator
        return tuple(Fraction(k, d) for k in range(d + 1))

    def __str__(self):
        if self.tag == "urysohn":
            return f"urysohn:{self.denominator}"
        return self.tag

    @classmethod
    def parse(cls, text: str) -> "ClassKind":
        aliases = {
            "pure-set": "pure-set", "pureset": "pure-set", "set": "pure-set",
            "random-graph": "random-graph", "graph": "random-graph",
            "dlo": "dlo", "dense-linear-order": "dlo", "order": "dlo",
            "boolean": "boolean", "atomless-boolean": "boolean",
        }
        text = text.strip().lower()
        if text.startswith("urysohn"):
            _, _, den = text.partition(":")
            return cls("urysohn", int(den) if den else 4)
        if text not in aliases:
            raise StructureError(f"unknown class kind {text!r}")
        return cls(aliases[text])


PURE_SET = ClassKind("pure-set")
RANDOM_GRAPH = ClassKind("random-graph")
DLO = ClassKind("dlo")
BOOLEAN = ClassKind("boolean")


def urysohn(denominator: int) -> ClassKind:
    return ClassKind("urysohn", denominator)


def popcount(x: int) -> int:
    return bin(x).count("1")


def _key(x: tuple[int, int]) -> tuple[int, int]:
    return (x[0], x[1]) if x[0] <= x[1] else (x[1], x[0])


@dataclass(frozen=True)
class FiniteStructure:
    kind: ClassKind
    size: int
    edges: frozenset = frozenset()
    order: tuple = ()
    atoms: int = 0
    elements: tuple | None = None
    dist: tuple = ()
    _index: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        tag = self.kind.tag
        n = self.size
        if n < 0:
            raise StructureError("negative size")
        if tag == "random-graph":
            edges = frozenset(_key(e) for e in self.edges)
            for a, b in edges:
                if a == b:
                    raise StructureError(f"loop at {a}")
                if not (0 <= a < n and 0 <= b < n):
                    raise StructureError(f"edge {(a, b)} out of range")
            object.__setattr__(self, "edges", edges)
        elif self.edges:
            raise StructureError("edges given for a non-graph kind")
        if tag == "dlo":
            if sorted(self.order) != list(range(n)):
                raise StructureError("order must be a permutation of ranks")
            object.__setattr__(self, "order", tuple(self.order))
        elif self.order:
            raise StructureError("order given for a non-order kind")
        if tag == "boolean":
            self._check_boolean()
        if tag == "urysohn":
            self._check_metric()

    def _check_boolean(self):
        m = self.atoms
        if m < 1:
            raise StructureError("a Boolean structure needs at least one atom (0 != 1)")
        full = (1 << m) - 1
        if self.elements is None:
            if self.size != 1 << m:
                raise StructureError("full power-set algebra must have 2**atoms elements")
            return
        els = tuple(self.elements)
        object.__setattr__(self, "elements", els)
        if len(els) != self.size:
            raise StructureError("element list does not match size")
        s = set(els)
        if len(s) != len(els):
            raise StructureError("duplicate Boolean elements")
        if any(not (0 <= x <= full) for x in els):
            raise StructureError("element mask outside the ambient algebra")
        if 0 not in s or full not in s:
            raise StructureError("subalgebra must contain 0 and 1")
        for x in els:
            if full ^ x not in s:
                raise StructureError("not closed under complement")
            for y in els:
                if x & y not in s:
                    raise StructureError("not closed under meet")
        object.__setattr__(self, "_index", {x: i for i, x in enumerate(els)})

    def _check_metric(self):
        n, den = self.size, self.kind.denominator
        rows = tuple(tuple(Fraction(v) for v in row) for row in self.dist)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise StructureError("distance matrix must be size x size")
        for i in range(n):
            for j in range(n):
                v = rows[i][j]
                if (v == 0) != (i == j):
                    raise StructureError("d(a,b) = 0 must hold exactly when a = b")
                if v != rows[j][i]:
                    raise StructureError("distance matrix not symmetric")
                if v > 1 or (v * den).denominator != 1:
                    raise StructureError(f"distance {v} is off the 1/{den} grid in [0,1]")
        for i, j, k in itertools.product(range(n), repeat=3):
            if rows[i][k] > rows[i][j] + rows[j][k]:
                raise StructureError("triangle inequality fails")
        object.__setattr__(self, "dist", rows)

    # -- relation access -------------------------------------------------

    def relation(self, a: int, b: int):
        """The binary relation datum between ``a`` and ``b`` (binary kinds)."""
        tag = self.kind.tag
        if tag == "random-graph":
            return _key((a, b)) in self.edges
        if tag == "dlo":
            return self.order[a] < self.order[b]
        if tag == "urysohn":
            return self.dist[a][b]
        if tag == "pure-set":
            return None
        raise StructureError("boolean structures have no binary relation")

    def adjacent(self, a: int, b: int) -> bool:
        return _key((a, b)) in self.edges

    def less(self, a: int, b: int) -> bool:
        return self.order[a] < self.order[b]

    @property
    def full(self) -> int:
        return (1 << self.atoms) - 1

    def mask(self, i: int) -> int:
        if self.elements is None:
            return i
        return self.elements[i]

    def index(self, mask: int) -> int:
        if self.elements is None:
            if not 0 <= mask <= self.full:
                raise StructureError("mask outside the algebra")
            return mask
        if mask not in self._index:
            raise StructureError("mask is not an element of this subalgebra")
        return self._index[mask]

    def masks(self) -> Iterable[int]:
        return range(self.size) if self.elements is None else self.elements

    def own_atoms(self) -> list[int]:
        """Masks of the atoms of this (sub)algebra, in increasing mask order."""
        if self.elements is None:
            return [1 << i for i in range(self.atoms)]
        nonzero = [x for x in self.elements if x]
        return sorted(x for x in nonzero if not any(y != x and y & x == y for y in nonzero))


# -- constructors ----------------------------------------------------------


def pure_set(n: int) -> FiniteStructure:
    return FiniteStructure(PURE_SET, n)


def graph(n: int, edges: Iterable[tuple[int, int]] = ()) -> FiniteStructure:
    return FiniteStructure(RANDOM_GRAPH, n, edges=frozenset(edges))


def linear_order(ranks: Sequence[int]) -> FiniteStructure:
    return FiniteStructure(DLO, len(ranks), order=tuple(ranks))


def chain(n: int) -> FiniteStructure:
    return linear_order(range(n))


def boolean_algebra(atoms: int, elements: Sequence[int] | None = None) -> FiniteStructure:
    if elements is None:
        return FiniteStructure(BOOLEAN, 1 << atoms, atoms=atoms)
    return FiniteStructure(BOOLEAN, len(elements), atoms=atoms, elements=tuple(elements))


def metric_space(dist: Sequence[Sequence], denominator: int) -> FiniteStructure:
    return FiniteStructure(urysohn(denominator), len(dist), dist=tuple(map(tuple, dist)))


def discrete_metric(n: int, denominator: int) -> FiniteStructure:
    return metric_space([[Fraction(int(i != j)) for j in range(n)] for i in range(n)], denominator)


def empty_structure(kind: ClassKind) -> FiniteStructure:
    if kind.tag == "boolean":
        return boolean_algebra(1, (0, 1))
    if kind.tag == "urysohn":
        return metric_space((), kind.denominator)
    return FiniteStructure(kind, 0)


def default_window(kind: ClassKind, n: int) -> FiniteStructure:
    """The relation-free window on ``n`` points (for Boolean: the free algebra of size n)."""
    tag = kind.tag
    if tag == "pure-set":
        return pure_set(n)
    if tag == "random-graph":
        return graph(n)
    if tag == "dlo":
        return chain(n)
    if tag == "urysohn":
        return discrete_metric(n, kind.denominator)
    k = n.bit_length() - 1
    if n < 2 or 1 << k != n:
        raise StructureError("a Boolean window must have 2**k elements, k >= 1")
    return boolean_algebra(k)


# -- embeddings ------------------------------------------------------------


@dataclass(frozen=True)
class Embedding:
    source: FiniteStructure
    target: FiniteStructure
    map: tuple

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(self.map))

    def __call__(self, i: int) -> int:
        return self.map[i]

    def then(self, other: "Embedding") -> "Embedding":
        """``other`` after ``self``."""
        return Embedding(self.source, other.target, tuple(other.map[i] for i in self.map))


def is_embedding(f: Embedding) -> bool:
    s, t, m = f.source, f.target, f.map
    if s.kind != t.kind or len(m) != s.size:
        return False
    if len(set(m)) != len(m) or any(not 0 <= x < t.size for x in m):
        return False
    if s.kind.tag == "boolean":
        return _boolean_hom(s, t, m)
    for a, b in itertools.combinations(range(s.size), 2):
        if s.relation(a, b) != t.relation(m[a], m[b]):
            return False
    return True


def _boolean_hom(s: FiniteStructure, t: FiniteStructure, m: Sequence[int]) -> bool:
    img = {s.mask(i): t.mask(m[i]) for i in range(s.size)}
    if img.get(0) != 0 or img.get(s.full) != t.full:
        return False
    for x, fx in img.items():
        if img[s.full ^ x] != t.full ^ fx:
            return False
        for y, fy in img.items():
            if img[x & y] != fx & fy:
                return False
    return True


def is_isomorphism(f: Embedding) -> bool:
    return f.source.size == f.target.size and is_embedding(f)


def embeddings(s: FiniteStructure, t: FiniteStructure) -> Iterator[Embedding]:
    """All embeddings of ``s`` into ``t``, in lexicographic order of the map."""
    if s.kind != t.kind:
        return
    if s.kind.tag == "boolean":
        yield from _boolean_embeddings(s, t)
        return
    n = s.size
    img: list[int] = []

    def ok(v: int) -> bool:
        a = len(img)
        for b, w in enumerate(img):
            if w == v or s.relation(b, a) != t.relation(w, v):
                return False
        return True

    def rec():
        if len(img) == n:
            yield Embedding(s, t, tuple(img))
            return
        for v in range(t.size):
            if ok(v):
                img.append(v)
                yield from rec()
                img.pop()

    yield from rec()


def _boolean_embeddings(s: FiniteStructure, t: FiniteStructure) -> Iterator[Embedding]:
    src_atoms = s.own_atoms()
    nonzero = sorted(x for x in t.masks() if x)
    seen = set()
    for choice in itertools.product(nonzero, repeat=len(src_atoms)):
        acc = 0
        good = True
        for x in choice:
            if acc & x:
                good = False
                break
            acc |= x
        if not good or acc != t.full:
            continue

        def image(mask: int) -> int:
            out = 0
            for a, x in zip(src_atoms, choice):
                if a & mask:
                    out |= x
            return out

        try:
            m = tuple(t.index(image(s.mask(i))) for i in range(s.size))
        except StructureError:
            continue
        if m not in seen:
            seen.add(m)
            yield Embedding(s, t, m)


def find_isomorphism(s: FiniteStructure, t: FiniteStructure) -> Embedding | None:
    if s.kind != t.kind or s.size != t.size:
        return None
    if s.kind.tag == "boolean":
        if len(s.own_atoms()) != len(t.own_atoms()):
            return None
    for f in embeddings(s, t):
        return f
    return None


def automorphisms(s: FiniteStructure) -> list[Embedding]:
    return list(embeddings(s, s))


# -- substructures ---------------------------------------------------------


def boolean_closure(atoms: int, gens: Iterable[int]) -> list[int]:
    """Subalgebra of the power set of ``atoms`` generated by ``gens`` (fixpoint)."""
    full = (1 << atoms) - 1
    out = {0, full, *gens}
    while True:
        new = set(out)
        for x in out:
            new.add(full ^ x)
            for y in out:
                new.add(x & y)
                new.add(x | y)
        if new == out:
            return sorted(out)
        out = new


def induced_substructure(s: FiniteStructure, subset: Sequence[int]) -> tuple[FiniteStructure, Embedding]:
    subset = list(subset)
    if len(set(subset)) != len(subset):
        raise StructureError("duplicate elements in subset")
    for x in subset:
        if not 0 <= x < s.size:
            raise StructureError(f"element {x} out of range")
    tag = s.kind.tag
    if tag == "boolean":
        els = boolean_closure(s.atoms, (s.mask(i) for i in subset))
        sub = boolean_algebra(s.atoms, els)
        return sub, Embedding(sub, s, tuple(s.index(x) for x in els))
    pos = {x: i for i, x in enumerate(subset)}
    n = len(subset)
    if tag == "pure-set":
        sub = pure_set(n)
    elif tag == "random-graph":
        sub = graph(n, [(pos[a], pos[b]) for a, b in s.edges if a in pos and b in pos])
    elif tag == "dlo":
        ranked = sorted(subset, key=lambda x: s.order[x])
        rank = {x: i for i, x in enumerate(ranked)}
        sub = linear_order([rank[x] for x in subset])
    else:
        sub = metric_space([[s.dist[a][b] for b in subset] for a in subset], s.kind.denominator)
    return sub, Embedding(sub, s, tuple(subset))


# -- one-point extensions ----------------------------------------------------


def one_point_extensions(s: FiniteStructure, fixed: dict | None = None) -> Iterator[FiniteStructure]:
    """Structures on ``size + 1`` points restricting to ``s`` on the first ``size``.

    ``fixed`` maps old elements to the relation datum the new element must
    have with them: edge flag, ``True`` for ``old < new``, or a distance.
    Binary kinds only.
    """
    fixed = fixed or {}
    n = s.size
    tag = s.kind.tag
    if tag == "pure-set":
        yield pure_set(n + 1)
    elif tag == "random-graph":
        free = [e for e in range(n) if e not in fixed]
        forced = [e for e, v in fixed.items() if v]
        for bits in range(1 << len(free)):
            new = [e for k, e in enumerate(free) if bits >> k & 1]
            yield graph(n + 1, list(s.edges) + [(e, n) for e in sorted(forced + new)])
    elif tag == "dlo":
        by_rank = sorted(range(n), key=lambda x: s.order[x])
        for r in range(n + 1):
            below = set(by_rank[:r])
            if any((e in below) != v for e, v in fixed.items()):
                continue
            yield linear_order([o + (o >= r) for o in s.order] + [r])
    elif tag == "urysohn":
        grid = s.kind.grid[1:]
        free = [e for e in range(n) if e not in fixed]
        for vals in itertools.product(grid, repeat=len(free)):
            row = dict(fixed)
            row.update(zip(free, vals))
            if _metric_row_ok(s, row):
                d = [list(r) + [row[i]] for i, r in enumerate(s.dist)]
                d.append([row[i] for i in range(n)] + [Fraction(0)])
                yield FiniteStructure(s.kind, n + 1, dist=tuple(map(tuple, d)))
    else:
        raise StructureError("boolean structures are not extended point by point")


def _metric_row_ok(s: FiniteStructure, row: dict) -> bool:
    n = s.size
    for i in range(n):
        for j in range(i + 1, n):
            dij = s.dist[i][j]
            if row[i] > row[j] + dij or row[j] > row[i] + dij or dij > row[i] + row[j]:
                return False
    return True


@lru_cache(maxsize=None)
def labeled_structures(kind: ClassKind, k: int) -> tuple[FiniteStructure, ...]:
    """Every structure of the class on the labeled universe ``range(k)``."""
    if kind.tag == "boolean":
        raise StructureError("use enumerate_types for Boolean kinds")
    level = [empty_structure(kind)]
    for _ in range(k):
        level = [t for s in level for t in one_point_extensions(s)]
    return tuple(level)


# -- canonical forms and ages ------------------------------------------------


def canonical_form(s: FiniteStructure) -> tuple:
    tag = s.kind.tag
    if tag in ("pure-set", "dlo"):
        return (s.size,)
    if tag == "boolean":
        return (len(s.own_atoms()),)
    n = s.size
    best = None
    for perm in itertools.permutations(range(n)):
        if tag == "random-graph":
            code = tuple(int(s.adjacent(perm[i], perm[j])) for i in range(n) for j in range(i + 1, n))
        else:
            code = tuple(s.dist[perm[i]][perm[j]] for i in range(n) for j in range(i + 1, n))
        if best is None or code < best:
            best = code
    return (n, best)


def enumerate_age(kind: ClassKind, n: int, cap: int = DEFAULT_CAP) -> list[FiniteStructure]:
    """One representative per isomorphism class of members of size <= n."""
    if kind.tag == "boolean":
        out = []
        k = 1
        while 1 << k <= n:
            out.append(boolean_algebra(k))
            k += 1
        return out
    reps: dict[tuple, FiniteStructure] = {}
    level = [empty_structure(kind)]
    reps[canonical_form(level[0])] = level[0]
    seen = 1
    for _ in range(n):
        nxt = {}
        for s in level:
            for t in one_point_extensions(s):
                seen += 1
                if seen > cap:
                    raise CapExceeded(f"more than {cap} candidate structures")
                nxt.setdefault(canonical_form(t), t)
        level = list(nxt.values())
        reps.update(nxt)
    return [reps[k] for k in sorted(reps, key=lambda c: (c[0], c))]


# -- amalgamation ------------------------------------------------------------


def free_amalgam(e1: Embedding, e2: Embedding, policy: str = "a_first") -> tuple[FiniteStructure, Embedding, Embedding]:
    """Glue ``a = e1.target`` and ``b = e2.target`` along their common ``c``.

    The ``policy`` (``"a_first"`` or ``"b_first"``) decides ties between
    unidentified points in the same gap of a linear order; other kinds ignore it.
    """
    c, a, b = e1.source, e1.target, e2.target
    if c != e2.source:
        raise StructureError("e1 and e2 must embed the same structure")
    if a.kind != b.kind:
        raise StructureError("kind mismatch")
    if not (is_embedding(e1) and is_embedding(e2)):
        raise StructureError("inputs must be embeddings")
    if policy not in ("a_first", "b_first"):
        raise StructureError(f"unknown interleaving policy {policy!r}")
    if a.kind.tag == "boolean":
        return _boolean_amalgam(e1, e2)
    glue = {e2.map[z]: e1.map[z] for z in range(c.size)}
    extra = [y for y in range(b.size) if y not in glue]
    f2map = [glue.get(y) for y in range(b.size)]
    for k, y in enumerate(extra):
        f2map[y] = a.size + k
    size = a.size + len(extra)
    tag = a.kind.tag
    if tag == "pure-set":
        d = pure_set(size)
    elif tag == "random-graph":
        edges = set(a.edges) | {(f2map[x], f2map[y]) for x, y in b.edges}
        d = graph(size, edges)
    elif tag == "dlo":
        d = _order_amalgam(a, b, glue, f2map, policy)
    else:
        dist = [[Fraction(0)] * size for _ in range(size)]
        for i in range(a.size):
            for j in range(a.size):
                dist[i][j] = a.dist[i][j]
        for x in range(b.size):
            for y in range(b.size):
                dist[f2map[x]][f2map[y]] = b.dist[x][y]
        for i in range(a.size):
            for y in extra:
                via = [a.dist[i][e1.map[z]] + b.dist[e2.map[z]][y] for z in range(c.size)]
                v = min([Fraction(1)] + via)
                dist[i][f2map[y]] = dist[f2map[y]][i] = v
        d = metric_space(dist, a.kind.denominator)
    return d, Embedding(a, d, tuple(range(a.size))), Embedding(b, d, tuple(f2map))


def _order_amalgam(a, b, glue, f2map, policy):
    a_seq = sorted(range(a.size), key=lambda x: a.order[x])
    b_seq = sorted(range(b.size), key=lambda y: b.order[y])
    merged: list[int] = []
    gap_a: list[int] = []
    gap_b: list[int] = []
    ai = 0

    def flush():
        merged.extend(gap_a + gap_b if policy == "a_first" else gap_b + gap_a)
        gap_a.clear()
        gap_b.clear()

    for y in b_seq:
        if y not in glue:
            gap_b.append(f2map[y])
            continue
        while a_seq[ai] != glue[y]:
            gap_a.append(a_seq[ai])
            ai += 1
        ai += 1
        flush()
        merged.append(glue[y])
    gap_a.extend(a_seq[ai:])
    flush()
    ranks = [0] * len(merged)
    for r, x in enumerate(merged):
        ranks[x] = r
    return linear_order(ranks)


def _boolean_amalgam(e1, e2):
    c, a, b = e1.source, e1.target, e2.target
    a_atoms, b_atoms = a.own_atoms(), b.own_atoms()
    pairs = []
    for g in c.own_atoms():
        ga, gb = a.mask(e1.map[c.index(g)]), b.mask(e2.map[c.index(g)])
        pairs.extend((x, y) for x in a_atoms if x & ga for y in b_atoms if y & gb)
    pairs.sort()
    d = boolean_algebra(len(pairs))

    def lift(mask, side):
        return sum(1 << k for k, pr in enumerate(pairs) if pr[side] & mask)

    f1 = tuple(d.index(lift(a.mask(i), 0)) for i in range(a.size))
    f2 = tuple(d.index(lift(b.mask(i), 1)) for i in range(b.size))
    return d, Embedding(a, d, f1), Embedding(b, d, f2)


# -- types and configurations ------------------------------------------------


@dataclass(frozen=True)
class TypeSpec:
    """A complete quantifier-free type of an ``arity``-tuple.

    ``structure`` is canonical for the tuple: the distinct entries in order of
    first occurrence (binary kinds), or the full algebra on the nonempty Venn
    regions of the tuple, sorted by sign vector (Boolean).  ``labels`` places
    the tuple in ``structure``; two types are equal iff these fields are.
    """

    kind: ClassKind
    arity: int
    structure: FiniteStructure
    labels: tuple

    @property
    def pattern(self) -> tuple:
        """Equality pattern: ``pattern[i] == pattern[j]`` iff entries i, j coincide."""
        first: dict = {}
        return tuple(first.setdefault(x, len(first)) for x in self.labels)

    @property
    def distinct_positions(self) -> tuple[int, ...]:
        seen, out = set(), []
        for i, x in enumerate(self.labels):
            if x not in seen:
                seen.add(x)
                out.append(i)
        return tuple(out)


def venn_regions(s: FiniteStructure, masks: Sequence[int]) -> list[tuple[tuple[int, ...], int]]:
    """Nonempty regions of a tuple of masks, as (sign vector, region mask), sorted."""
    regions = []
    for signs in itertools.product((1, 0), repeat=len(masks)):
        r = s.full
        for sg, x in zip(signs, masks):
            r &= x if sg else s.full ^ x
        if r:
            regions.append((signs, r))
    return regions


def type_of(s: FiniteStructure, labels: Sequence[int]) -> TypeSpec:
    labels = tuple(labels)
    if s.kind.tag == "boolean":
        masks = [s.mask(i) for i in labels]
        regions = venn_regions(s, masks)
        alg = boolean_algebra(len(regions))
        new = tuple(sum(1 << k for k, (sg, _) in enumerate(regions) if sg[t]) for t in range(len(labels)))
        return TypeSpec(s.kind, len(labels), alg, new)
    order: list[int] = []
    for x in labels:
        if x not in order:
            order.append(x)
    sub, _ = induced_substructure(s, order)
    pos = {x: i for i, x in enumerate(order)}
    return TypeSpec(s.kind, len(labels), sub, tuple(pos[x] for x in labels))


def realizes(s: FiniteStructure, labels: Sequence[int], p: TypeSpec) -> bool:
    return type_of(s, labels) == p


def free_type(kind: ClassKind, n: int) -> TypeSpec:
    """The type of n distinct, unrelated points (Boolean: n independent elements)."""
    if kind.tag == "boolean":
        s = boolean_algebra(1 << n)
        return type_of(s, [sum(1 << r for r in range(1 << n) if r >> t & 1) for t in range(n)])
    return type_of(default_window(kind, n), range(n))


def proper_type(kind: ClassKind = BOOLEAN) -> TypeSpec:
    """The 1-type of a Boolean element different from 0 and 1."""
    return free_type(kind, 1)


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length n, lexicographically."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(top + 2):
            yield from rec(prefix + [v], max(top, v))
    yield from rec([], -1)


def enumerate_types(kind: ClassKind, n: int, cap: int = DEFAULT_CAP) -> list[TypeSpec]:
    if kind.tag == "boolean":
        signs = list(itertools.product((1, 0), repeat=n))
        total = (1 << len(signs)) - 1
        if total > cap:
            raise CapExceeded(f"{total} Boolean {n}-types exceed cap {cap}")
        out = []
        for bits in range(1, 1 << len(signs)):
            chosen = [sg for k, sg in enumerate(signs) if bits >> k & 1]
            alg = boolean_algebra(len(chosen))
            labels = tuple(sum(1 << k for k, sg in enumerate(chosen) if sg[t]) for t in range(n))
            out.append(TypeSpec(kind, n, alg, labels))
        return out
    out = []
    for rgs in set_partitions(n):
        k = max(rgs, default=-1) + 1
        for s in labeled_structures(kind, k):
            out.append(TypeSpec(kind, n, s, rgs))
            if len(out) > cap:
                raise CapExceeded(f"more than {cap} types")
    return out


def count_orbits(kind: ClassKind, n: int, cap: int = DEFAULT_CAP) -> int:
    """Number of n-types over the empty set, i.e. orbits on n-tuples."""
    return len(enumerate_types(kind, n, cap))


@dataclass(frozen=True)
class Configuration:
    """A structure carrying two labeled tuples ``a`` (x-variables) and ``b`` (y-variables)."""

    structure: FiniteStructure
    a: tuple
    b: tuple

    @property
    def kind(self) -> ClassKind:
        return self.structure.kind


PairType = Configuration


def enumerate_configurations(p: TypeSpec, q: TypeSpec, cap: int = DEFAULT_CAP) -> list[Configuration]:
    """All configurations realizing ``p(x) & q(y)``, one per labeled isomorphism type.

    Binary kinds: the universe is p's distinct points, then the b-only points.
    Configurations with fewer identifications between the tuples come first.
    """
    if p.kind != q.kind:
        raise StructureError("types of different kinds")
    return list(_configurations(p, q, cap))


@lru_cache(maxsize=256)
def _configurations(p: TypeSpec, q: TypeSpec, cap: int) -> tuple[Configuration, ...]:
    if p.kind.tag == "boolean":
        return _boolean_configurations(p, q, cap)
    base = p.structure
    qs = q.structure
    results: list[tuple[int, Configuration]] = []

    def rec(s: FiniteStructure, pos: list[int], used: frozenset):
        t = len(pos)
        if t == qs.size:
            results.append((len(used), Configuration(s, p.labels, tuple(pos[x] for x in q.labels))))
            if len(results) > cap:
                raise CapExceeded(f"more than {cap} configurations")
            return
        fixed = {pos[u]: _rel_to_new(qs, u, t) for u in range(t)}
        for s2 in one_point_extensions(s, fixed):
            rec(s2, pos + [s.size], used)
        for e in range(base.size):
            if e in used:
                continue
            if all(s.relation(pos[u], e) == qs.relation(u, t) for u in range(t)):
                rec(s, pos + [e], used | {e})

    rec(base, [], frozenset())
    results.sort(key=lambda r: r[0])
    return tuple(c for _, c in results)


def _rel_to_new(qs: FiniteStructure, u: int, t: int):
    if qs.kind.tag == "dlo":
        return qs.less(u, t)
    return qs.relation(u, t)


def _boolean_configurations(p: TypeSpec, q: TypeSpec, cap: int) -> tuple[Configuration, ...]:
    m, n = p.structure.atoms, q.structure.atoms
    cells = [(i, j) for i in range(m) for j in range(n)]
    full_rows, full_cols = (1 << m) - 1, (1 << n) - 1
    out = []
    for bits in range(1, 1 << len(cells)):
        rel = [c for k, c in enumerate(cells) if bits >> k & 1]
        rows = cols = 0
        for i, j in rel:
            rows |= 1 << i
            cols |= 1 << j
        if rows != full_rows or cols != full_cols:
            continue
        out.append(boolean_configuration(p, q, rel))
        if len(out) > cap:
            raise CapExceeded(f"more than {cap} configurations")
    return tuple(out)


def boolean_configuration(p: TypeSpec, q: TypeSpec, relation: Iterable[tuple[int, int]]) -> Configuration:
    """The configuration whose x-atom i meets y-atom j exactly for (i, j) in ``relation``."""
    rel = sorted(set(relation))
    alg = boolean_algebra(len(rel))
    a = tuple(sum(1 << k for k, (i, _) in enumerate(rel) if lab >> i & 1) for lab in p.labels)
    b = tuple(sum(1 << k for k, (_, j) in enumerate(rel) if lab >> j & 1) for lab in q.labels)
    return Configuration(alg, a, b)


def enumerate_pair_types(kind: ClassKind, n: int, base: TypeSpec | None = None,
                         cap: int = DEFAULT_CAP) -> list[Configuration]:
    """Quantifier-free types of pairs of n-windows of two embeddings.

    ``base`` is the type of the window (default :func:`free_type`).  For the
    pure set these are the partial bijections between two n-sets.
    """
    base = base or free_type(kind, n)
    if base.arity != n:
        raise StructureError("base type arity differs from n")
    return enumerate_configurations(base, base, cap)
