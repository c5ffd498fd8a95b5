"""Partial isomorphisms of a finite window and the star semigroup they form.

A :class:`PartialIso` with pairs ``(a, b)`` stands for the element ``x*y`` of
the compactification with ``x(a) = y(b)``.  Products are relational
composition, ``compose(p, q) = {(a, c) : (a, b) in p, (b, c) in q}``, and an
automorphism ``g`` of the window is the element with pairs ``(g(b), b)``, so
that ``compose`` restricted to total elements is composition of maps.

Supports: ``left_support(p)`` is the set of first coordinates and
``right_support(p)`` the set of second coordinates.  ``compose(r, q)`` only
reaches pairs whose second coordinate lies in ``right_support(q)``, so the
Green preorder is governed by right supports.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .structures import (
    PURE_SET, CapExceeded, ClassKind, Embedding, FiniteStructure,
    automorphisms, boolean_closure, default_window, embeddings, free_amalgam, graph,
    induced_substructure, is_embedding, pure_set,
)

DEFAULT_CLOSURE_CAP = 10**5


class SemigroupError(ValueError):
    pass


@dataclass(frozen=True)
class PartialIso:
    kind: ClassKind
    window: int
    pairs: tuple
    context: tuple | None = None

    def __post_init__(self):
        pairs = tuple(sorted((int(a), int(b)) for a, b in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        if self.context is not None:
            object.__setattr__(self, "context", tuple(self.context))
        _validate(self)

    @classmethod
    def _raw(cls, kind, window, pairs, context):
        obj = object.__new__(cls)
        object.__setattr__(obj, "kind", kind)
        object.__setattr__(obj, "window", window)
        object.__setattr__(obj, "pairs", pairs)
        object.__setattr__(obj, "context", context)
        return obj

    def __len__(self):
        return len(self.pairs)

    def left_support(self) -> frozenset:
        return frozenset(a for a, _ in self.pairs)

    def right_support(self) -> frozenset:
        return frozenset(b for _, b in self.pairs)

    def as_map(self) -> dict:
        return dict(self.pairs)

    def is_total(self) -> bool:
        return len(self.pairs) == self.window if self.kind.tag != "boolean" else \
            len(self.pairs) == self.context[0].size

    def __str__(self):
        body = ", ".join(f"{a}->{b}" for a, b in self.pairs)
        return "{" + body + "}"


def _validate(p: PartialIso):
    n = p.window
    lefts = [a for a, _ in p.pairs]
    rights = [b for _, b in p.pairs]
    if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
        raise SemigroupError("graph is not a partial injection")
    if any(not (0 <= v < n) for v in lefts + rights):
        raise SemigroupError("pair outside the window")
    if p.context is None:
        if p.kind != PURE_SET:
            raise SemigroupError(f"{p.kind} partial isomorphisms need a context")
        return
    left, right = p.context
    if left.kind != p.kind or right.kind != p.kind or left.size != n or right.size != n:
        raise SemigroupError("context does not match kind and window")
    if p.kind.tag == "boolean":
        dom = [left.mask(a) for a in lefts]
        if sorted(dom) != boolean_closure(left.atoms, dom):
            raise SemigroupError("domain is not a subalgebra")
        sub, inc = induced_substructure(left, lefts)
        img = dict(p.pairs)
        f = Embedding(sub, right, tuple(img[inc.map[i]] for i in range(sub.size)))
        if not is_embedding(f):
            raise SemigroupError("map is not an isomorphism of subalgebras")
        return
    for (a, b), (a2, b2) in itertools.combinations(p.pairs, 2):
        if left.relation(a, a2) != right.relation(b, b2):
            raise SemigroupError(f"pairs {(a, b)} and {(a2, b2)} break the relations")


# -- constructors ------------------------------------------------------------


def partial_iso(pairs: Iterable, window: int, kind: ClassKind = PURE_SET,
                context: FiniteStructure | tuple | None = None) -> PartialIso:
    if isinstance(context, FiniteStructure):
        context = (context, context)
    return PartialIso(kind, window, tuple(pairs), context)


def identity(window: int, subset: Iterable[int] | None = None, kind: ClassKind = PURE_SET,
             context: FiniteStructure | tuple | None = None) -> PartialIso:
    subset = range(window) if subset is None else subset
    return partial_iso(((a, a) for a in subset), window, kind, context)


def from_permutation(perm: Sequence[int], kind: ClassKind = PURE_SET,
                     context: FiniteStructure | tuple | None = None) -> PartialIso:
    """The total element of the automorphism ``b -> perm[b]``."""
    return partial_iso(((perm[b], b) for b in range(len(perm))), len(perm), kind, context)


def from_embedding(f: Embedding, context: FiniteStructure | tuple | None = None) -> PartialIso:
    """An embedding of a window into a same-size structure, read as an element."""
    return partial_iso(((f.map[b], b) for b in range(f.source.size)), f.target.size, f.target.kind,
                       context)


def empty(p_or_kind, window: int | None = None, context=None) -> PartialIso:
    if isinstance(p_or_kind, PartialIso):
        return PartialIso._raw(p_or_kind.kind, p_or_kind.window, (), p_or_kind.context)
    return partial_iso((), window, p_or_kind, context)


# -- the semigroup law ---------------------------------------------------------


def compose(p: PartialIso, q: PartialIso) -> PartialIso:
    if p.kind != q.kind or p.window != q.window:
        raise SemigroupError("kind/window mismatch")
    if p.context is None:
        if q.context is not None:
            raise SemigroupError("context mismatch")
        ctx = None
    else:
        if q.context is None or p.context[1] != q.context[0]:
            raise SemigroupError("context mismatch")
        ctx = (p.context[0], q.context[1])
    qd = dict(q.pairs)
    return PartialIso._raw(p.kind, p.window, tuple((a, qd[b]) for a, b in p.pairs if b in qd), ctx)


def involution(p: PartialIso) -> PartialIso:
    ctx = None if p.context is None else (p.context[1], p.context[0])
    return PartialIso._raw(p.kind, p.window, tuple(sorted((b, a) for a, b in p.pairs)), ctx)


def is_idempotent(p: PartialIso) -> bool:
    return compose(p, p) == p


def is_partial_identity(p: PartialIso) -> bool:
    return all(a == b for a, b in p.pairs)


# -- tables ------------------------------------------------------------------


@dataclass(frozen=True)
class StarSemigroupTable:
    elements: tuple
    product: tuple
    star: tuple
    generators: tuple = ()

    def __len__(self):
        return len(self.elements)

    @property
    def position(self) -> dict:
        cached = self.__dict__.get("_position")
        if cached is None:
            cached = {e: i for i, e in enumerate(self.elements)}
            object.__setattr__(self, "_position", cached)
        return cached

    def index(self, p: PartialIso) -> int:
        try:
            return self.position[p]
        except KeyError:
            raise SemigroupError(f"{p} is not in the table") from None

    def __contains__(self, p) -> bool:
        return p in self.position

    def mul(self, p: PartialIso, q: PartialIso) -> PartialIso:
        return self.elements[self.product[self.index(p)][self.index(q)]]

    def array(self) -> np.ndarray:
        return np.array(self.product, dtype=np.int32).reshape(len(self), len(self))

    def idempotents(self) -> list[PartialIso]:
        return [e for i, e in enumerate(self.elements) if self.product[i][i] == i]

    def left_ideal(self, q: PartialIso) -> frozenset:
        """Indices of ``{r q : r in table}``."""
        j = self.index(q)
        return frozenset(row[j] for row in self.product)


def build_table(elements: Iterable[PartialIso], generators: Iterable[PartialIso] = ()) -> StarSemigroupTable:
    els = tuple(sorted(set(elements), key=lambda e: e.pairs))
    pos = {e: i for i, e in enumerate(els)}
    try:
        product = tuple(tuple(pos[compose(p, q)] for q in els) for p in els)
        star = tuple(pos[involution(p)] for p in els)
    except KeyError:
        raise SemigroupError("element set is not closed under product and involution") from None
    gens = tuple(pos[g] for g in generators)
    return StarSemigroupTable(els, product, star, gens)


def generate_star_semigroup(gens: Sequence[PartialIso], cap: int = DEFAULT_CLOSURE_CAP) -> StarSemigroupTable:
    gens = list(gens)
    if not gens:
        raise SemigroupError("need at least one generator")
    if len({(g.kind, g.window, g.context) for g in gens}) > 1:
        raise SemigroupError("generators must share kind, window and context")
    seen: set = set()
    order: list[PartialIso] = []
    frontier = []
    for g in gens + [involution(g) for g in gens]:
        if g not in seen:
            seen.add(g)
            order.append(g)
            frontier.append(g)
    while frontier:
        nxt = []
        for p in frontier:
            for q in list(order):
                for r in (compose(p, q), compose(q, p)):
                    if r not in seen:
                        seen.add(r)
                        order.append(r)
                        nxt.append(r)
                        if len(seen) > cap:
                            raise CapExceeded(f"closure exceeds {cap} elements")
            s = involution(p)
            if s not in seen:
                seen.add(s)
                order.append(s)
                nxt.append(s)
        frontier = nxt
    return build_table(order, gens)


def _context_pair(kind: ClassKind, window: int, context) -> tuple | None:
    if kind == PURE_SET and context is None:
        return None
    if context is None:
        context = default_window(kind, window)
    if isinstance(context, FiniteStructure):
        context = (context, context)
    return tuple(context)


def all_partial_isos(kind: ClassKind, window: int, context=None) -> list[PartialIso]:
    return list(window_monoid(kind, window, context).elements)


def window_monoid(kind: ClassKind, window: int, context=None) -> StarSemigroupTable:
    """The inverse monoid of every partial isomorphism of the window (cached)."""
    return _window_monoid(kind, window, _context_pair(kind, window, context))


@lru_cache(maxsize=32)
def _window_monoid(kind, window, ctx) -> StarSemigroupTable:
    left = pure_set(window) if ctx is None else ctx[0]
    right = pure_set(window) if ctx is None else ctx[1]
    out = []
    if kind.tag == "boolean":
        subalgebras = {tuple(boolean_closure(left.atoms, combo))
                       for k in range(left.size + 1)
                       for combo in itertools.combinations(list(left.masks()), k)}
        domains = [[left.index(m) for m in alg] for alg in sorted(subalgebras)]
    else:
        domains = [list(c) for k in range(window + 1) for c in itertools.combinations(range(window), k)]
    for dom in domains:
        sub, inc = induced_substructure(left, dom)
        for f in embeddings(sub, right):
            pairs = tuple(sorted((inc.map[i], f.map[i]) for i in range(sub.size)))
            out.append(PartialIso._raw(kind, window, pairs, ctx))
    return build_table(out)


def window_automorphisms(kind: ClassKind, window: int, context=None) -> list[PartialIso]:
    ctx = _context_pair(kind, window, context)
    s = pure_set(window) if ctx is None else ctx[0]
    if ctx is not None and ctx[0] != ctx[1]:
        raise SemigroupError("automorphisms need equal left and right context")
    return [PartialIso._raw(kind, window, tuple(sorted((f.map[b], b) for b in range(window))), ctx)
            for f in automorphisms(s)]


# -- Green preorder ------------------------------------------------------------


def _universe_for(p: PartialIso, universe):
    if universe is None:
        return window_monoid(p.kind, p.window, p.context)
    return universe


def green_witness(p: PartialIso, q: PartialIso, universe: StarSemigroupTable | None = None) -> PartialIso | None:
    """First ``r`` (in table order) with ``compose(r, q) == p``.

    ``universe=None`` scans the full window monoid; a given table is searched
    with an identity adjoined.
    """
    if p.kind != q.kind or p.window != q.window:
        raise SemigroupError("kind/window mismatch")
    table = _universe_for(p, universe)
    if q in table:
        j = table.index(q)
        for i, row in enumerate(table.product):
            if table.elements[row[j]] == p:
                return table.elements[i]
    else:
        for r in table.elements:
            if compose(r, q) == p:
                return r
    if universe is not None and p == q:
        return identity(p.window, kind=p.kind, context=None if p.context is None else
                        (p.context[0], p.context[0]))
    return None


def green_leq(p: PartialIso, q: PartialIso, universe: StarSemigroupTable | None = None) -> bool:
    if universe is None:
        table = window_monoid(p.kind, p.window, p.context)
        if q in table and p in table:
            return table.index(p) in table.left_ideal(q)
    return green_witness(p, q, universe) is not None


def green_equiv(p: PartialIso, q: PartialIso, universe: StarSemigroupTable | None = None) -> bool:
    return green_leq(p, q, universe) and green_leq(q, p, universe)


def green_predicate(p: PartialIso, q: PartialIso) -> bool:
    """Support inclusion plus the factorization ``p = (p q*) q``."""
    return p.right_support() <= q.right_support() and compose(compose(p, involution(q)), q) == p


def least_idempotent(s: StarSemigroupTable) -> PartialIso:
    if not len(s):
        raise SemigroupError("empty semigroup")
    els = s.elements
    least = [p for p in els if all(green_leq(p, q) for q in els)]
    idem = [e for e in least if is_idempotent(e)]
    if len(idem) != 1:
        raise AssertionError(f"expected a unique least idempotent, found {len(idem)}")
    e = idem[0]
    assert all(green_leq(e, f) for f in s.idempotents())
    return e


# -- idempotents and groups ------------------------------------------------------


def partial_identities(kind: ClassKind, window: int, context=None) -> list[PartialIso]:
    return [p for p in all_partial_isos(kind, window, context) if is_partial_identity(p)]


def is_central(e: PartialIso) -> bool:
    return all(compose(g, e) == compose(e, g) for g in window_automorphisms(e.kind, e.window, e.context))


def central_idempotents(kind: ClassKind, window: int, context=None) -> list[PartialIso]:
    autos = window_automorphisms(kind, window, context)
    return [e for e in partial_identities(kind, window, context)
            if all(compose(g, e) == compose(e, g) for g in autos)]


def maximal_group(e: PartialIso) -> StarSemigroupTable:
    """``H(e)``: elements fixed by ``e`` on both sides with ``p*p = pp* = e``."""
    if not is_idempotent(e):
        raise SemigroupError(f"{e} is not idempotent")
    members = []
    for p in all_partial_isos(e.kind, e.window, e.context):
        if compose(p, e) == p and compose(e, p) == p:
            ps = involution(p)
            if compose(ps, p) == e and compose(p, ps) == e:
                members.append(p)
    return build_table(members)


def restrict_action(e: PartialIso, g: PartialIso) -> PartialIso:
    """The image ``g e`` of an automorphism in the maximal group of a central ``e``."""
    if not is_idempotent(e) or not is_central(e):
        raise SemigroupError(f"{e} is not a central idempotent")
    if g not in window_automorphisms(g.kind, g.window, g.context):
        raise SemigroupError(f"{g} is not an automorphism of the window")
    return compose(g, e)


# -- amalgamation lemma ----------------------------------------------------------


def _lift(p: PartialIso, window: int, ctx) -> PartialIso:
    return PartialIso(p.kind, window, p.pairs, ctx)


def check_amalgamation_lemma(p: PartialIso, x: PartialIso, y: PartialIso, growth: int | None = None):
    """Find ``(w, u, v)`` with ``w* u = w* v = p`` and ``u y = v x`` in an enlarged window.

    ``x`` and ``y`` are automorphisms of the window with ``p x = p y``.  The
    target is the free amalgam of two copies of the window glued along ``p``,
    padded with fresh points; ``w`` is the inclusion of the first copy and
    ``(u, v)`` are searched lexicographically among embeddings.  Returns
    ``None`` if ``growth`` extra points do not suffice (not a refutation).
    """
    if p.kind.tag not in ("pure-set", "random-graph"):
        raise SemigroupError(f"free amalgamation unavailable for {p.kind}")
    if not (p.window == x.window == y.window):
        raise SemigroupError("window mismatch")
    autos = window_automorphisms(p.kind, p.window, p.context)
    if x not in autos or y not in autos:
        raise SemigroupError("x and y must be automorphisms of the window")
    if compose(p, x) != compose(p, y):
        raise SemigroupError("precondition p x = p y fails")
    n = p.window
    growth = n if growth is None else growth
    s = pure_set(n) if p.context is None else p.context[0]
    lefts = [a for a, _ in p.pairs]
    c, inc = induced_substructure(s, lefts)
    e2 = Embedding(c, s, tuple(b for _, b in p.pairs))
    amalgam, _, _ = free_amalgam(inc, e2)
    for big in range(n, n + growth + 1):
        if big < amalgam.size:
            continue
        if s.kind.tag == "pure-set":
            target, ctx = pure_set(big), None
        else:
            target = graph(big, amalgam.edges)
            ctx = (target, target)
        lp, lx, ly = (_lift(t, big, ctx) for t in (p, x, y))
        w = PartialIso(p.kind, big, tuple((b, b) for b in range(n)), ctx)
        ws = involution(w)
        cands = [PartialIso(p.kind, big, tuple((f.map[b], b) for b in range(n)), ctx)
                 for f in embeddings(s, target)]
        good_u = [u for u in cands if compose(ws, u) == lp]
        for u in good_u:
            uy = compose(u, ly)
            for v in good_u:
                if compose(v, lx) == uy:
                    return w, u, v
    return None


# -- Roelcke metric ----------------------------------------------------------------

ROELCKE_CAP = 6


def _inverse(g: Sequence[int]) -> tuple:
    out = [0] * len(g)
    for i, v in enumerate(g):
        out[v] = i
    return tuple(out)


def d_left(g: Sequence[int], h: Sequence[int]) -> Fraction:
    """Normalized Hamming distance between images."""
    n = len(g)
    return Fraction(sum(a != b for a, b in zip(g, h)), n) if n else Fraction(0)


def d_right(g: Sequence[int], h: Sequence[int]) -> Fraction:
    return d_left(_inverse(g), _inverse(h))


def _check_perm(g: Sequence[int], n: int):
    if sorted(g) != list(range(n)):
        raise SemigroupError(f"{list(g)} is not a permutation of range({n})")


def roelcke_metric(g: Sequence[int], h: Sequence[int], cap: int = ROELCKE_CAP) -> Fraction:
    """``min_f max(d_R(g, f), d_L(f, h))`` by exhaustive search over Sym(n)."""
    n = len(g)
    _check_perm(g, n)
    _check_perm(h, n)
    if n > cap:
        raise CapExceeded(f"n = {n} exceeds the brute-force cap {cap}")
    gi = _inverse(g)
    best = Fraction(1)
    for f in itertools.permutations(range(n)):
        v = max(d_left(gi, _inverse(f)), d_left(f, h))
        if v < best:
            best = v
            if not best:
                break
    return best if n else Fraction(0)
