"""Stability of quantifier-free formulas on a pair of complete types.

The decision procedure enumerates every configuration of ``(a, b)`` realizing
``p(x) & q(y)`` and groups them by a stable invariant: the equality pattern
for the classical kinds and the Urysohn grid, the minimal blocks for Boolean
algebras.  A formula is stable iff it is constant on every group.

Instability is certified independently by a half-graph search: tuples
``a^1..a^L`` and ``b^1..b^L`` in one structure of the class with
``phi(a^i, b^j)`` true iff ``i < j`` (or iff ``i > j``).  The search assigns a
pair configuration to every ``(i, j)`` and checks that the assignments glue
into one structure of the class.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .formulas import (
    Bottom, Compl, Eq, Formula, FormulaError, Not, TermEq, Top, TVar, Var, atoms_of, conj, disj, equality_pattern, evaluate_all, evaluator,
    mask_batch,
    join_all, meet_all, term_vars, variables,
)
from .structures import (
    ClassKind, Configuration, FiniteStructure, TypeSpec,
    boolean_algebra, enumerate_configurations, graph, linear_order, metric_space, pure_set, realizes, venn_regions,
)

DEFAULT_LENGTH = 4
DEFAULT_NODE_BUDGET = 200_000
CONFIG_CAP = 10**5


class StabilityError(ValueError):
    pass


class WitnessError(StabilityError):
    pass


@dataclass(frozen=True)
class OrderWitness:
    """Tuples ``a[i]`` and ``b[j]`` in ``structure`` forming a half-graph."""

    length: int
    structure: FiniteStructure
    a: tuple
    b: tuple
    orientation: bool = False

    def configuration(self, i: int, j: int) -> Configuration:
        return Configuration(self.structure, self.a[i], self.b[j])

    def expected(self, i: int, j: int) -> bool:
        return i > j if self.orientation else i < j

    def verify(self, phi: Formula, p: TypeSpec | None = None, q: TypeSpec | None = None) -> bool:
        ev = evaluator(phi)
        L = self.length
        if len(self.a) != L or len(self.b) != L:
            return False
        for i in range(L):
            for j in range(L):
                if ev(self.configuration(i, j)) != self.expected(i, j):
                    return False
        if p is not None and not all(realizes(self.structure, t, p) for t in self.a):
            return False
        if q is not None and not all(realizes(self.structure, t, q) for t in self.b):
            return False
        return True

    def restrict(self, length: int) -> "OrderWitness":
        if not 0 <= length <= self.length:
            raise WitnessError("cannot extend a witness by restriction")
        return OrderWitness(length, self.structure, self.a[:length], self.b[:length], self.orientation)


@dataclass(frozen=True)
class SearchResult:
    witness: OrderWitness | None
    exhausted: bool
    nodes: int


@dataclass(frozen=True)
class StabilityVerdict:
    status: str
    reduct: Formula | None = None
    witness: OrderWitness | None = None
    counterexample: tuple | None = None
    budgets: dict = field(default_factory=dict)

    @property
    def stable(self) -> bool:
        return self.status == "stable"


# -- configurations and invariants ---------------------------------------------


def _check_arities(phi: Formula, p: TypeSpec, q: TypeSpec):
    if p.kind != q.kind:
        raise StabilityError("types of different kinds")
    for v in variables(phi):
        n = p.arity if v.group == "x" else q.arity
        if v.index >= n:
            raise FormulaError(f"variable {v} exceeds arity {n}")


def joint_pattern_of(c: Configuration) -> tuple:
    first: dict = {}
    return tuple(first.setdefault(e, len(first)) for e in c.a + c.b)


def configurations(p: TypeSpec, q: TypeSpec, joint_pattern: Sequence[int] | None = None,
                   cap: int = CONFIG_CAP) -> list[Configuration]:
    cs = enumerate_configurations(p, q, cap)
    if joint_pattern is not None:
        want = tuple(joint_pattern)
        if len(want) != p.arity + q.arity:
            raise StabilityError("joint pattern length differs from p.arity + q.arity")
        cs = [c for c in cs if joint_pattern_of(c) == want]
        if not cs:
            raise StabilityError("joint pattern is inconsistent with p and q")
    return cs


def partition_tuples(c: Configuration) -> tuple[list[int], list[int]]:
    """The atoms generated by each tuple, as region masks sorted by sign vector."""
    if c.kind.tag != "boolean":
        raise StabilityError("partition tuples exist only for Boolean configurations")
    s = c.structure
    xs = [r for _, r in venn_regions(s, [s.mask(e) for e in c.a])]
    ys = [r for _, r in venn_regions(s, [s.mask(e) for e in c.b])]
    for parts in (xs, ys):
        acc = 0
        for r in parts:
            if not r or acc & r:
                raise StabilityError("tuple does not yield a partition of 1")
            acc |= r
        if acc != s.full:
            raise StabilityError("tuple does not yield a partition of 1")
    return xs, ys


def boolean_blocks(c: Configuration) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Minimal blocks ``(I, J)``: components of the relation ``a_i & b_j != 0``."""
    xs, ys = partition_tuples(c)
    m, n = len(xs), len(ys)
    parent = list(range(m + n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for i, j in itertools.product(range(m), range(n)):
        if xs[i] & ys[j]:
            parent[find(i)] = find(m + j)
    comps: dict[int, tuple[list, list]] = {}
    for u in range(m + n):
        comps.setdefault(find(u), ([], []))[0 if u < m else 1].append(u if u < m else u - m)
    return sorted((tuple(I), tuple(J)) for I, J in comps.values())


def _blocks_key(c: Configuration):
    return tuple(boolean_blocks(c))


def invariant(c: Configuration):
    """The stable invariant of a configuration for its kind."""
    if c.kind.tag == "boolean":
        return _blocks_key(c)
    return equality_pattern(c)


# -- stable sublanguage ----------------------------------------------------------


def _side(t) -> set[str]:
    return {v.group for v in term_vars(t)}


def in_stable_sublanguage(phi: Formula, kind: ClassKind) -> bool:
    for atom in atoms_of(phi):
        if isinstance(atom, (Top, Bottom)):
            continue
        if kind.tag == "boolean":
            if not isinstance(atom, TermEq) or len(_side(atom.left)) > 1 or len(_side(atom.right)) > 1:
                return False
        elif not isinstance(atom, Eq):
            return False
    return True


def _classical_group_formula(key, p: TypeSpec, q: TypeSpec) -> Formula:
    block_of = {name: k for k, block in enumerate(key) for name in block}
    lits = []
    for s in p.distinct_positions:
        for t in q.distinct_positions:
            same = block_of[f"x{s}"] == block_of[f"y{t}"]
            atom = Eq(Var("x", s), Var("y", t))
            lits.append(atom if same else Not(atom))
    return conj(lits)


def _atom_term(group: str, spec: TypeSpec, k: int):
    return meet_all([TVar(Var(group, t)) if spec.labels[t] >> k & 1 else Compl(TVar(Var(group, t)))
                     for t in range(spec.arity)])


def _union_term(group: str, spec: TypeSpec, ks) -> object:
    return join_all([_atom_term(group, spec, k) for k in ks])


def _subsets(items):
    items = list(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def _boolean_group_formula(key, p: TypeSpec, q: TypeSpec) -> Formula:
    lits = []
    for I, J in key:
        lits.append(TermEq(_union_term("x", p, I), _union_term("y", q, J)))
        for U in _subsets(I):
            for V in _subsets(J):
                if (U, V) != (I, J):
                    lits.append(Not(TermEq(_union_term("x", p, U), _union_term("y", q, V))))
    return conj(lits)


def _group_formula(key, p, q) -> Formula:
    if p.kind.tag == "boolean":
        return _boolean_group_formula(key, p, q)
    return _classical_group_formula(key, p, q)


# -- decision --------------------------------------------------------------------


@lru_cache(maxsize=64)
def _grouped(p, q, joint_pattern, cap):
    cs = configurations(p, q, joint_pattern, cap)
    groups: dict = {}
    for k, c in enumerate(cs):
        groups.setdefault(invariant(c), []).append(k)
    return cs, groups, mask_batch(cs)


def _split(phi, p, q, joint_pattern, cap):
    jp = None if joint_pattern is None else tuple(joint_pattern)
    cs, groups, batch = _grouped(p, q, jp, cap)
    return cs, groups, evaluate_all(phi, cs, batch), jp


def _discordant(cs, groups, profile):
    for members in groups.values():
        vs = [profile[k] for k in members]
        if len(set(vs)) > 1:
            return cs[members[vs.index(True)]], cs[members[vs.index(False)]]
    return None


_REDUCT_CACHE: dict = {}


def _group_reduct(p, q, cs, groups, profile, jp, cap) -> Formula:
    key = (p, q, jp, cap, profile)
    hit = _REDUCT_CACHE.get(key)
    if hit is not None:
        return hit
    true_keys = [g for g, members in groups.items() if profile[members[0]]]
    if len(true_keys) == len(groups):
        reduct: Formula = Top()
    elif not true_keys:
        reduct = Bottom()
    else:
        reduct = disj(_group_formula(g, p, q) for g in true_keys)
    if evaluate_all(reduct, cs, _grouped(p, q, jp, cap)[2]) != profile:
        raise AssertionError("reduct disagrees with the formula")
    _REDUCT_CACHE[key] = reduct
    return reduct


def _reduct(phi, p, q, cs, groups, profile, jp, cap) -> Formula:
    if jp is None and in_stable_sublanguage(phi, p.kind):
        return phi
    return _group_reduct(p, q, cs, groups, profile, jp, cap)


def classify_stability(phi: Formula, p: TypeSpec, q: TypeSpec, *, joint_pattern: Sequence[int] | None = None,
                       length: int = DEFAULT_LENGTH, node_budget: int = DEFAULT_NODE_BUDGET,
                       time_budget: float | None = None, cap: int = CONFIG_CAP,
                       with_witness: bool = True) -> StabilityVerdict:
    """Decide stability of ``phi`` modulo ``p(x) & q(y)`` (optionally a joint pattern)."""
    _check_arities(phi, p, q)
    cs, groups, profile, jp = _split(phi, p, q, joint_pattern, cap)
    budgets = {"length": length, "node_budget": node_budget, "config_cap": cap, "configurations": len(cs)}
    bad = _discordant(cs, groups, profile)
    if bad is None:
        return StabilityVerdict("stable", reduct=_reduct(phi, p, q, cs, groups, profile, jp, cap), budgets=budgets)
    witness = None
    if with_witness:
        if jp is None:
            witness = find_order_witness(phi, p, q, length, node_budget=node_budget, time_budget=time_budget)
        if witness is None and p.kind.tag == "urysohn" and p.structure.size == q.structure.size == 1:
            witness = simple_increment_witness(phi, p, q, length)
    return StabilityVerdict("unstable", witness=witness, counterexample=bad, budgets=budgets)


def stable_reduct(phi: Formula, p: TypeSpec, q: TypeSpec, *, joint_pattern: Sequence[int] | None = None,
                  cap: int = CONFIG_CAP) -> Formula:
    _check_arities(phi, p, q)
    cs, groups, profile, jp = _split(phi, p, q, joint_pattern, cap)
    if _discordant(cs, groups, profile) is not None:
        raise StabilityError("formula is unstable on these types")
    return _reduct(phi, p, q, cs, groups, profile, jp, cap)


def verify_counterexample(phi: Formula, pair) -> bool:
    c1, c2 = pair
    ev = evaluator(phi)
    return invariant(c1) == invariant(c2) and ev(c1) != ev(c2)


# -- half-graph search -------------------------------------------------------------


class _Budget(Exception):
    pass


class _BinaryGluer:
    """Glue pair configurations into one structure of a binary kind."""

    def __init__(self, p: TypeSpec, q: TypeSpec, L: int, configs):
        self.kind = p.kind
        self.tag = p.kind.tag
        self.P, self.Q, self.L = p.structure.size, q.structure.size, L
        self.p, self.q = p, q
        self.n_slots = L * (self.P + self.Q)
        self.cross = [self._cross(c) for c in configs]
        self.base_distinct = []
        self.base_rel = []
        for i in range(L):
            for e, e2 in itertools.combinations(range(self.P), 2):
                self._internal(p.structure, self.a(i, e), self.a(i, e2), e, e2)
            for u, u2 in itertools.combinations(range(self.Q), 2):
                self._internal(q.structure, self.b(i, u), self.b(i, u2), u, u2)

    def a(self, i, e):
        return i * self.P + e

    def b(self, j, u):
        return self.L * self.P + j * self.Q + u

    def _internal(self, s, x, y, e, e2):
        self.base_distinct.append((x, y))
        if self.tag == "dlo":
            self.base_rel.append((x, y, s.less(e, e2)))
        elif self.tag != "pure-set":
            self.base_rel.append((x, y, s.relation(e, e2)))

    def _cross(self, c: Configuration):
        s = c.structure
        qpos = {}
        for t, u in enumerate(self.q.labels):
            qpos.setdefault(u, c.b[t])
        eqs, neqs, rels = [], [], []
        for e in range(self.P):
            for u in range(self.Q):
                f = qpos[u]
                if f == e:
                    eqs.append((e, u))
                else:
                    neqs.append((e, u))
                    if self.tag == "dlo":
                        rels.append((e, u, s.less(e, f)))
                    elif self.tag != "pure-set":
                        rels.append((e, u, s.relation(e, f)))
        return eqs, neqs, rels

    def glue(self, assigned):
        """Return the glued structure data or ``None`` if inconsistent."""
        parent = list(range(self.n_slots))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        distinct = list(self.base_distinct)
        rel = list(self.base_rel)
        for (i, j), k in assigned:
            eqs, neqs, rels = self.cross[k]
            for e, u in eqs:
                parent[find(self.a(i, e))] = find(self.b(j, u))
            distinct += [(self.a(i, e), self.b(j, u)) for e, u in neqs]
            rel += [(self.a(i, e), self.b(j, u), v) for e, u, v in rels]
        for x, y in distinct:
            if find(x) == find(y):
                return None
        roots = sorted({find(u) for u in range(self.n_slots)})
        cls = {r: k for k, r in enumerate(roots)}
        of = [cls[find(u)] for u in range(self.n_slots)]
        known: dict = {}
        for x, y, v in rel:
            cx, cy = of[x], of[y]
            if self.tag == "dlo":
                if not v:
                    cx, cy = cy, cx
                if known.get((cy, cx)):
                    return None
                known[(cx, cy)] = True
            else:
                key = (cx, cy) if cx < cy else (cy, cx)
                if known.setdefault(key, v) != v:
                    return None
        n = len(roots)
        if self.tag == "dlo":
            ranks = _topological_ranks(n, known)
            if ranks is None:
                return None
            return of, linear_order(ranks)
        if self.tag == "urysohn":
            dist = _metric_completion(n, known)
            if dist is None:
                return None
            return of, metric_space(dist, self.kind.denominator)
        if self.tag == "random-graph":
            return of, graph(n, [k for k, v in known.items() if v])
        return of, pure_set(n)

    def witness(self, assigned, orientation) -> OrderWitness:
        of, s = self.glue(assigned)
        a = tuple(tuple(of[self.a(i, e)] for e in self.p.labels) for i in range(self.L))
        b = tuple(tuple(of[self.b(j, u)] for u in self.q.labels) for j in range(self.L))
        return OrderWitness(self.L, s, a, b, orientation)


def _topological_ranks(n: int, less: dict):
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    for (u, v) in less:
        succ[u].append(v)
        indeg[v] += 1
    ready = [u for u in range(n) if indeg[u] == 0]
    heapq.heapify(ready)
    ranks = [0] * n
    r = 0
    while ready:
        u = heapq.heappop(ready)
        ranks[u] = r
        r += 1
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    return ranks if r == n else None


def _metric_completion(n: int, known: dict):
    one = Fraction(1)
    sp = [[Fraction(0) if i == j else None for j in range(n)] for i in range(n)]
    for (u, v), d in known.items():
        sp[u][v] = sp[v][u] = d
    for k in range(n):
        for i in range(n):
            if sp[i][k] is None:
                continue
            for j in range(n):
                if sp[k][j] is None:
                    continue
                alt = sp[i][k] + sp[k][j]
                if sp[i][j] is None or alt < sp[i][j]:
                    sp[i][j] = alt
    for (u, v), d in known.items():
        if sp[u][v] < d:
            return None
    return [[one if d is None else min(d, one) for d in row] for row in sp]


class _BooleanGluer:
    """Glue pair relations ``R_ij`` into one finite Boolean algebra.

    Atoms of the glued algebra are the vectors ``(k_1..k_L, l_1..l_L)``
    compatible with every assigned relation; gluing succeeds iff every
    assigned pair ``(k, l)`` is the projection of a compatible vector.
    """

    def __init__(self, p: TypeSpec, q: TypeSpec, L: int, configs):
        self.p, self.q, self.L = p, q, L
        self.m, self.n = p.structure.atoms, q.structure.atoms
        self.rels = [frozenset(self._relation(c)) for c in configs]

    def _relation(self, c: Configuration):
        xs, ys = partition_tuples(c)
        return [(i, j) for i in range(len(xs)) for j in range(len(ys)) if xs[i] & ys[j]]

    def _vectors(self, assigned):
        L = self.L
        rel = {ij: self.rels[k] for ij, k in assigned}
        out = []
        for avec in itertools.product(range(self.m), repeat=L):
            bvec = []

            def rec(j):
                if j == L:
                    out.append(avec + tuple(bvec))
                    return
                for l in range(self.n):
                    if all((avec[i], l) in rel[(i, j)] for i in range(L) if (i, j) in rel):
                        bvec.append(l)
                        rec(j + 1)
                        bvec.pop()
            rec(0)
        return out, rel

    def glue(self, assigned):
        vecs, rel = self._vectors(assigned)
        L = self.L
        for (i, j), R in rel.items():
            seen = {(v[i], v[L + j]) for v in vecs}
            if seen != R:
                return None
        return vecs

    def witness(self, assigned, orientation) -> OrderWitness:
        vecs = self.glue(assigned)
        L = self.L
        s = boolean_algebra(len(vecs))

        def element(spec, lab, coord):
            return sum(1 << k for k, v in enumerate(vecs) if lab >> v[coord] & 1)

        a = tuple(tuple(element(self.p, lab, i) for lab in self.p.labels) for i in range(L))
        b = tuple(tuple(element(self.q, lab, L + j) for lab in self.q.labels) for j in range(L))
        return OrderWitness(L, s, a, b, orientation)


_SEARCH_CACHE: dict = {}


def search_order_witness(phi: Formula, p: TypeSpec, q: TypeSpec, length: int = DEFAULT_LENGTH, *,
                         node_budget: int = DEFAULT_NODE_BUDGET, time_budget: float | None = None,
                         cap: int = CONFIG_CAP) -> SearchResult:
    """Backtracking half-graph search; ``exhausted`` means no witness exists."""
    _check_arities(phi, p, q)
    if length < 2:
        raise StabilityError("witness length must be at least 2")
    cs, _, profile, _ = _split(phi, p, q, None, cap)
    key = (p, q, length, profile, node_budget)
    hit = _SEARCH_CACHE.get(key)
    if hit is None or (time_budget is not None and not hit.exhausted and hit.witness is None):
        hit = _search(p, q, length, cs, profile, node_budget, time_budget)
        if hit.witness is not None and not hit.witness.verify(phi, p, q):
            raise AssertionError("search produced an invalid witness")
        _SEARCH_CACHE[key] = hit
    elif hit.witness is not None and not hit.witness.verify(phi):
        raise AssertionError("search produced an invalid witness")
    return hit


def _search(p, q, L, cs, profile, node_budget, time_budget) -> SearchResult:
    gluer = _BooleanGluer(p, q, L, cs) if p.kind.tag == "boolean" else _BinaryGluer(p, q, L, cs)
    by_value = {v: [k for k, val in enumerate(profile) if val == v] for v in (False, True)}
    cells = [(i, j) for i in range(L) for j in range(L)]
    nodes = 0
    deadline = None if time_budget is None else time.monotonic() + time_budget
    exhausted = True
    for orientation in (False, True):
        assigned: list = []

        def rec(t):
            nonlocal nodes
            if t == len(cells):
                return True
            i, j = cells[t]
            want = i > j if orientation else i < j
            for k in by_value[want]:
                nodes += 1
                if nodes > node_budget or (deadline is not None and time.monotonic() > deadline):
                    raise _Budget
                assigned.append(((i, j), k))
                if gluer.glue(assigned) is not None and rec(t + 1):
                    return True
                assigned.pop()
            return False

        try:
            if rec(0):
                return SearchResult(gluer.witness(assigned, orientation), True, nodes)
        except _Budget:
            exhausted = False
            break
    return SearchResult(None, exhausted, nodes)


def find_order_witness(phi: Formula, p: TypeSpec, q: TypeSpec, length: int = DEFAULT_LENGTH, *,
                       node_budget: int = DEFAULT_NODE_BUDGET, time_budget: float | None = None) -> OrderWitness | None:
    return search_order_witness(phi, p, q, length, node_budget=node_budget, time_budget=time_budget).witness


def simple_increment_witness(phi: Formula, p: TypeSpec, q: TypeSpec, length: int = DEFAULT_LENGTH) -> OrderWitness | None:
    """Half-graph for singleton Urysohn types from one simple increment ``f -> f'``.

    With ``r = f`` positive, put ``d(a^k, a^l) = d(b^k, b^l) = r`` and
    ``d(a^k, b^l)`` equal to ``f`` below the diagonal pattern and to
    ``f' = min(2f, 1)`` elsewhere.
    """
    kind = p.kind
    if kind.tag != "urysohn" or p.structure.size != 1 or q.structure.size != 1:
        raise StabilityError("simple increments are implemented for singleton Urysohn types")
    _check_arities(phi, p, q)
    ev = evaluator(phi)
    one = Fraction(1)

    def value(d):
        return ev(Configuration(metric_space([[0, d], [d, 0]], kind.denominator),
                                (0,) * p.arity, (1,) * q.arity))

    L = length
    for f in kind.grid[1:]:
        g = min(2 * f, one)
        if value(f) == value(g):
            continue
        # first L points are a^k, next L are b^l; flip needs one extra index
        ext = L if value(f) else L + 1
        n = 2 * ext
        dist = [[Fraction(0)] * n for _ in range(n)]
        for u, v in itertools.combinations(range(n), 2):
            if (u < ext) == (v < ext):
                d = f
            else:
                k, l = (u, v - ext) if u < ext else (v, u - ext)
                d = f if k < l else g
            dist[u][v] = dist[v][u] = d
        s = metric_space(dist, kind.denominator)
        if value(f):
            w = OrderWitness(L, s, tuple((k,) * p.arity for k in range(L)),
                             tuple((ext + l,) * q.arity for l in range(L)), False)
        else:
            w = OrderWitness(L, s, tuple((k,) * p.arity for k in range(L)),
                             tuple((ext + l + 1,) * q.arity for l in range(L)), True)
        if not w.verify(phi, p, q):
            raise AssertionError("simple increment construction failed verification")
        return w
    return None


def double_limit_table(phi: Formula, w: OrderWitness | None) -> tuple[int, int]:
    """Iterated limits ``(value for i > j, value for i < j)`` of a verified half-graph."""
    if w is None:
        raise WitnessError("no witness to read limits from")
    if not w.verify(phi):
        raise WitnessError("witness does not verify for this formula")
    return (1, 0) if w.orientation else (0, 1)
