"""Quantifier-free formulas in two groups of variables ``x0..`` and ``y0..``.

Text grammar, loosest binding first::

    formula := impl
    impl    := disj ('->' impl)?          (desugared to !a | b)
    disj    := conj ('|' conj)*
    conj    := neg ('&' neg)*
    neg     := '!' neg | primary
    primary := 'true' | 'false' | '(' formula ')' | atom
    atom    := var '=' var | var '<' var | 'E(' var ',' var ')'
             | 'd(' var ',' var ')' ('=' | '<=' | '>=') rational
             | term '=' term                                  (Boolean kind)
    term    := mterm ('v' mterm)* ;  mterm := cterm ('^' cterm)*
    cterm   := '~' cterm | var | '0' | '1' | '(' term ')'
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence, Union

import numpy as np

from .structures import ClassKind, Configuration


class FormulaError(ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    group: str
    index: int

    def __str__(self):
        return f"{self.group}{self.index}"

    @classmethod
    def parse(cls, name: str) -> "Var":
        m = re.fullmatch(r"([xy])(\d+)", name)
        if not m:
            raise FormulaError(f"bad variable name {name!r}")
        return cls(m.group(1), int(m.group(2)))


@dataclass(frozen=True)
class TVar:
    var: Var


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Meet:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Join:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Compl:
    arg: "Term"


Term = Union[TVar, Zero, One, Meet, Join, Compl]


@dataclass(frozen=True)
class Eq:
    left: Var
    right: Var


@dataclass(frozen=True)
class Edge:
    left: Var
    right: Var


@dataclass(frozen=True)
class Less:
    left: Var
    right: Var


@dataclass(frozen=True)
class TermEq:
    left: Term
    right: Term


@dataclass(frozen=True)
class DistCmp:
    left: Var
    right: Var
    rel: str
    value: Fraction

    def __post_init__(self):
        if self.rel not in ("=", "<=", ">="):
            raise FormulaError(f"bad distance comparison {self.rel!r}")
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Atom = Union[Eq, Edge, Less, TermEq, DistCmp]
Formula = Union[Atom, Top, Bottom, Not, And, Or]
ATOMS = (Eq, Edge, Less, TermEq, DistCmp)


def Implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def x(i: int) -> Var:
    return Var("x", i)


def y(i: int) -> Var:
    return Var("y", i)


def conj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return Bottom()
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def join_all(parts) -> Term:
    parts = list(parts)
    if not parts:
        return Zero()
    out = parts[0]
    for p in parts[1:]:
        out = Join(out, p)
    return out


def meet_all(parts) -> Term:
    parts = list(parts)
    if not parts:
        return One()
    out = parts[0]
    for p in parts[1:]:
        out = Meet(out, p)
    return out


# -- traversal ---------------------------------------------------------------


def term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, TVar):
        yield t.var
    elif isinstance(t, (Meet, Join)):
        yield from term_vars(t.left)
        yield from term_vars(t.right)
    elif isinstance(t, Compl):
        yield from term_vars(t.arg)


def atoms_of(f: Formula) -> Iterator[Atom]:
    if isinstance(f, ATOMS):
        yield f
    elif isinstance(f, Not):
        yield from atoms_of(f.arg)
    elif isinstance(f, (And, Or)):
        yield from atoms_of(f.left)
        yield from atoms_of(f.right)


def variables(f: Formula) -> set[Var]:
    out = set()
    for a in atoms_of(f):
        if isinstance(a, TermEq):
            out.update(term_vars(a.left))
            out.update(term_vars(a.right))
        else:
            out.update((a.left, a.right))
    return out


_KIND_ATOMS = {
    "pure-set": (Eq,),
    "random-graph": (Eq, Edge),
    "dlo": (Eq, Less),
    "boolean": (Eq, TermEq),
    "urysohn": (Eq, DistCmp),
}


def check_formula(f: Formula, kind: ClassKind, arities: tuple[int, int]) -> Formula:
    allowed = _KIND_ATOMS[kind.tag]
    for a in atoms_of(f):
        if not isinstance(a, allowed):
            raise FormulaError(f"{type(a).__name__} atom does not belong to kind {kind}")
    for v in variables(f):
        bound = arities[0] if v.group == "x" else arities[1]
        if v.index >= bound:
            raise FormulaError(f"variable {v} exceeds arity {bound}")
    return f


# -- printing ----------------------------------------------------------------


def term_text(t: Term, prec: int = 0) -> str:
    if isinstance(t, TVar):
        return str(t.var)
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, One):
        return "1"
    if isinstance(t, Compl):
        return "~" + term_text(t.arg, 3)
    op, p = (" v ", 1) if isinstance(t, Join) else (" ^ ", 2)
    s = term_text(t.left, p) + op + term_text(t.right, p + 1)
    return f"({s})" if p < prec else s


def to_text(f: Formula, prec: int = 0) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Less):
        return f"{f.left} < {f.right}"
    if isinstance(f, Edge):
        return f"E({f.left},{f.right})"
    if isinstance(f, DistCmp):
        return f"d({f.left},{f.right}) {f.rel} {f.value}"
    if isinstance(f, TermEq):
        return f"{term_text(f.left)} = {term_text(f.right)}"
    if isinstance(f, Not):
        if isinstance(f.arg, (Eq, Less, TermEq, DistCmp)):
            return f"!({to_text(f.arg)})"
        return "!" + to_text(f.arg, 3)
    op, p = (" | ", 1) if isinstance(f, Or) else (" & ", 2)
    s = to_text(f.left, p) + op + to_text(f.right, p + 1)
    return f"({s})" if p < prec else s


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->|<=|>=|[!&|(),=<^~])|(\d+(?:/\d*)?)|([A-Za-z_][A-Za-z0-9_]*))")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("op", m.group(1), start))
        elif m.group(2):
            out.append(("num", m.group(2), start))
        else:
            out.append(("id", m.group(3), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, kind: ClassKind, arities: tuple[int, int]):
        self.toks = tokenize(text)
        self.i = 0
        self.kind = kind
        self.arities = arities

    @property
    def tok(self):
        return self.toks[self.i]

    def at(self, value: str) -> bool:
        return self.tok[0] in ("op", "id") and self.tok[1] == value

    def expect(self, value: str):
        if not self.at(value):
            self.fail(f"expected {value!r}")
        self.i += 1

    def fail(self, msg: str):
        kind, val, pos = self.tok
        got = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"{msg}, got {got}", pos)

    def parse(self) -> Formula:
        f = self.impl()
        if self.tok[0] != "end":
            self.fail("trailing input")
        return f

    def impl(self) -> Formula:
        left = self.disj()
        if self.at("->"):
            self.i += 1
            return Implies(left, self.impl())
        return left

    def disj(self) -> Formula:
        out = self.conj()
        while self.at("|"):
            self.i += 1
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.neg()
        while self.at("&"):
            self.i += 1
            out = And(out, self.neg())
        return out

    def neg(self) -> Formula:
        if self.at("!"):
            self.i += 1
            return Not(self.neg())
        return self.primary()

    def primary(self) -> Formula:
        if self.at("true") or self.at("True"):
            self.i += 1
            return Top()
        if self.at("false") or self.at("False"):
            self.i += 1
            return Bottom()
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                f = self.impl()
                self.expect(")")
                if not (self.kind.tag == "boolean" and (self.at("=") or self.at("^") or self.at("v"))):
                    return f
            except ParseError:
                if self.kind.tag != "boolean":
                    raise
            self.i = save
        return self.atom()

    def var(self) -> Var:
        kind, val, pos = self.tok
        if kind != "id" or not re.fullmatch(r"[xy]\d+", val):
            self.fail("expected a variable x<i> or y<j>")
        v = Var.parse(val)
        bound = self.arities[0] if v.group == "x" else self.arities[1]
        if v.index >= bound:
            raise ParseError(f"variable {v} exceeds arity {bound}", pos)
        self.i += 1
        return v

    def mismatch(self, what: str, pos: int):
        raise ParseError(f"{what} atom does not belong to kind {self.kind}", pos)

    def atom(self) -> Formula:
        kind, val, pos = self.tok
        tag = self.kind.tag
        if kind == "id" and val == "E" and self.toks[self.i + 1][1] == "(":
            if tag != "random-graph":
                self.mismatch("edge", pos)
            self.i += 2
            u = self.var()
            self.expect(",")
            v = self.var()
            self.expect(")")
            return Edge(u, v)
        if kind == "id" and val == "d" and self.toks[self.i + 1][1] == "(":
            if tag != "urysohn":
                self.mismatch("distance", pos)
            self.i += 2
            u = self.var()
            self.expect(",")
            v = self.var()
            self.expect(")")
            rel = self.tok[1]
            if self.tok[0] != "op" or rel not in ("=", "<=", ">="):
                self.fail("expected '=', '<=' or '>='")
            self.i += 1
            return DistCmp(u, v, rel, self.rational())
        if tag == "boolean":
            t = self.term()
            self.expect("=")
            return TermEq(t, self.term())
        u = self.var()
        opk, op, oppos = self.tok
        if op == "=" and opk == "op":
            self.i += 1
            return Eq(u, self.var())
        if op == "<" and opk == "op":
            if tag != "dlo":
                self.mismatch("order", oppos)
            self.i += 1
            return Less(u, self.var())
        self.fail("expected '=' or '<'")

    def rational(self) -> Fraction:
        kind, val, pos = self.tok
        if kind != "num":
            self.fail("expected a rational p/q")
        num, _, den = val.partition("/")
        if "/" in val and (not den or int(den) == 0):
            raise ParseError(f"malformed rational {val!r}", pos)
        self.i += 1
        return Fraction(int(num), int(den) if den else 1)

    def term(self) -> Term:
        out = self.mterm()
        while self.at("v"):
            self.i += 1
            out = Join(out, self.mterm())
        return out

    def mterm(self) -> Term:
        out = self.cterm()
        while self.at("^"):
            self.i += 1
            out = Meet(out, self.cterm())
        return out

    def cterm(self) -> Term:
        kind, val, pos = self.tok
        if self.at("~"):
            self.i += 1
            return Compl(self.cterm())
        if self.at("("):
            self.i += 1
            t = self.term()
            self.expect(")")
            return t
        if kind == "num" and val in ("0", "1"):
            self.i += 1
            return Zero() if val == "0" else One()
        return TVar(self.var())


def parse_formula(text: str, kind: ClassKind, arities: tuple[int, int]) -> Formula:
    return _Parser(text, kind, tuple(arities)).parse()


# -- evaluation --------------------------------------------------------------


def _getter(v: Var) -> Callable[[Configuration], int]:
    i = v.index
    if v.group == "x":
        return lambda c: c.a[i]
    return lambda c: c.b[i]


def _term_fn(t: Term):
    if isinstance(t, TVar):
        g = _getter(t.var)
        return lambda c: c.structure.mask(g(c))
    if isinstance(t, Zero):
        return lambda c: 0
    if isinstance(t, One):
        return lambda c: c.structure.full
    if isinstance(t, Compl):
        f = _term_fn(t.arg)
        return lambda c: c.structure.full ^ f(c)
    lf, rf = _term_fn(t.left), _term_fn(t.right)
    if isinstance(t, Meet):
        return lambda c: lf(c) & rf(c)
    return lambda c: lf(c) | rf(c)


def evaluator(f: Formula) -> Callable[[Configuration], bool]:
    """Compile ``f`` into a predicate on configurations (no arity checks)."""
    if isinstance(f, Top):
        return lambda c: True
    if isinstance(f, Bottom):
        return lambda c: False
    if isinstance(f, Not):
        g = evaluator(f.arg)
        return lambda c: not g(c)
    if isinstance(f, (And, Or)):
        lg, rg = evaluator(f.left), evaluator(f.right)
        if isinstance(f, And):
            return lambda c: lg(c) and rg(c)
        return lambda c: lg(c) or rg(c)
    if isinstance(f, TermEq):
        lt, rt = _term_fn(f.left), _term_fn(f.right)
        return lambda c: lt(c) == rt(c)
    u, v = _getter(f.left), _getter(f.right)
    if isinstance(f, Eq):
        return lambda c: u(c) == v(c)
    if isinstance(f, Edge):
        return lambda c: c.structure.adjacent(u(c), v(c))
    if isinstance(f, Less):
        return lambda c: c.structure.less(u(c), v(c))
    value, rel = f.value, f.rel
    if rel == "=":
        return lambda c: c.structure.dist[u(c)][v(c)] == value
    if rel == "<=":
        return lambda c: c.structure.dist[u(c)][v(c)] <= value
    return lambda c: c.structure.dist[u(c)][v(c)] >= value


@dataclass(frozen=True, eq=False)
class MaskBatch:
    """Boolean configurations as int64 column arrays of element masks."""

    x: tuple
    y: tuple
    full: np.ndarray

    def __len__(self):
        return len(self.full)


def mask_batch(configs: Sequence[Configuration]) -> MaskBatch | None:
    """Column form of Boolean configurations; ``None`` when not applicable."""
    # masks must fit a signed 64-bit word
    if not configs or any(c.kind.tag != "boolean" or c.structure.atoms > 62 for c in configs):
        return None
    m, n = len(configs[0].a), len(configs[0].b)
    if any(len(c.a) != m or len(c.b) != n for c in configs):
        return None

    def column(fn):
        return np.fromiter((fn(c) for c in configs), dtype=np.int64, count=len(configs))

    xs = tuple(column(lambda c, i=i: c.structure.mask(c.a[i])) for i in range(m))
    ys = tuple(column(lambda c, j=j: c.structure.mask(c.b[j])) for j in range(n))
    return MaskBatch(xs, ys, column(lambda c: c.structure.full))


def _term_batch(t: Term, b: MaskBatch) -> np.ndarray:
    if isinstance(t, TVar):
        cols = b.x if t.var.group == "x" else b.y
        if t.var.index >= len(cols):
            raise FormulaError(f"variable {t.var} exceeds configuration arity {len(cols)}")
        return cols[t.var.index]
    if isinstance(t, Zero):
        return np.zeros_like(b.full)
    if isinstance(t, One):
        return b.full
    if isinstance(t, Compl):
        return b.full ^ _term_batch(t.arg, b)
    lv, rv = _term_batch(t.left, b), _term_batch(t.right, b)
    return lv & rv if isinstance(t, Meet) else lv | rv


def evaluate_batch(f: Formula, b: MaskBatch) -> np.ndarray:
    """Truth values of ``f`` on every configuration of the batch."""
    if isinstance(f, Top):
        return np.ones(len(b), dtype=bool)
    if isinstance(f, Bottom):
        return np.zeros(len(b), dtype=bool)
    if isinstance(f, Not):
        return ~evaluate_batch(f.arg, b)
    if isinstance(f, And):
        return evaluate_batch(f.left, b) & evaluate_batch(f.right, b)
    if isinstance(f, Or):
        return evaluate_batch(f.left, b) | evaluate_batch(f.right, b)
    if isinstance(f, TermEq):
        return _term_batch(f.left, b) == _term_batch(f.right, b)
    if isinstance(f, Eq):
        # distinct elements of one algebra have distinct masks
        return _term_batch(TVar(f.left), b) == _term_batch(TVar(f.right), b)
    raise FormulaError(f"{type(f).__name__} atoms do not apply to Boolean configurations")


def evaluate_all(f: Formula, configs: Sequence[Configuration], batch: MaskBatch | None = None) -> tuple:
    """``tuple(evaluate(f, c) for c in configs)``, vectorized for Boolean batches."""
    if batch is not None:
        return tuple(evaluate_batch(f, batch).tolist())
    ev = evaluator(f)
    return tuple(ev(c) for c in configs)


def evaluate(f: Formula, c: Configuration) -> bool:
    for v in variables(f):
        tup = c.a if v.group == "x" else c.b
        if v.index >= len(tup):
            raise FormulaError(f"variable {v} exceeds configuration arity {len(tup)}")
    try:
        return evaluator(f)(c)
    except (AttributeError, TypeError, IndexError) as exc:
        raise FormulaError(f"formula does not fit configuration of kind {c.kind}: {exc}") from exc


def equality_pattern(c: Configuration) -> tuple[tuple[str, ...], ...]:
    """Partition of the tuple positions by coincidence of entries."""
    blocks: dict[int, list[str]] = {}
    for group, tup in (("x", c.a), ("y", c.b)):
        for i, e in enumerate(tup):
            blocks.setdefault(e, []).append(f"{group}{i}")
    return tuple(tuple(b) for b in blocks.values())


# -- JSON AST ----------------------------------------------------------------


def term_to_json(t: Term) -> dict:
    if isinstance(t, TVar):
        return {"op": "var", "name": str(t.var)}
    if isinstance(t, Zero):
        return {"op": "zero"}
    if isinstance(t, One):
        return {"op": "one"}
    if isinstance(t, Compl):
        return {"op": "compl", "args": [term_to_json(t.arg)]}
    name = "meet" if isinstance(t, Meet) else "join"
    return {"op": name, "args": [term_to_json(t.left), term_to_json(t.right)]}


def term_from_json(d: dict) -> Term:
    op = d["op"]
    if op == "var":
        return TVar(Var.parse(d["name"]))
    if op == "zero":
        return Zero()
    if op == "one":
        return One()
    args = [term_from_json(a) for a in d["args"]]
    if op == "compl":
        return Compl(*args)
    return {"meet": Meet, "join": Join}[op](*args)


def to_json(f: Formula) -> dict:
    if isinstance(f, Top):
        return {"op": "true"}
    if isinstance(f, Bottom):
        return {"op": "false"}
    if isinstance(f, Not):
        return {"op": "not", "args": [to_json(f.arg)]}
    if isinstance(f, (And, Or)):
        return {"op": "and" if isinstance(f, And) else "or", "args": [to_json(f.left), to_json(f.right)]}
    if isinstance(f, TermEq):
        return {"op": "term_eq", "args": [term_to_json(f.left), term_to_json(f.right)]}
    out = {"op": {Eq: "eq", Edge: "edge", Less: "less", DistCmp: "dist"}[type(f)],
           "args": [str(f.left), str(f.right)]}
    if isinstance(f, DistCmp):
        out["rel"] = f.rel
        out["value"] = str(f.value)
    return out


def from_json(d: dict) -> Formula:
    op = d["op"]
    if op == "true":
        return Top()
    if op == "false":
        return Bottom()
    if op == "not":
        return Not(from_json(d["args"][0]))
    if op in ("and", "or"):
        l, r = (from_json(a) for a in d["args"])
        return And(l, r) if op == "and" else Or(l, r)
    if op == "term_eq":
        return TermEq(*(term_from_json(a) for a in d["args"]))
    u, v = (Var.parse(a) for a in d["args"])
    if op == "dist":
        return DistCmp(u, v, d["rel"], Fraction(d["value"]))
    try:
        return {"eq": Eq, "edge": Edge, "less": Less}[op](u, v)
    except KeyError:
        raise FormulaError(f"unknown formula node {op!r}") from None


# -- corpora -----------------------------------------------------------------


def all_variables(arities: tuple[int, int]) -> list[Var]:
    return [x(i) for i in range(arities[0])] + [y(j) for j in range(arities[1])]


def atoms_for(kind: ClassKind, arities: tuple[int, int]) -> list[Formula]:
    """Atoms over ordered variable pairs; Boolean atoms on leaf terms only."""
    vs = all_variables(arities)
    pairs = list(itertools.product(vs, repeat=2))
    tag = kind.tag
    if tag == "boolean":
        leaves = [TVar(v) for v in vs] + [Zero(), One()]
        return [TermEq(s, t) for s, t in itertools.product(leaves, repeat=2)]
    out: list[Formula] = [Eq(u, v) for u, v in pairs]
    if tag == "random-graph":
        out += [Edge(u, v) for u, v in pairs]
    elif tag == "dlo":
        out += [Less(u, v) for u, v in pairs]
    elif tag == "urysohn":
        out += [DistCmp(u, v, "<=", g) for u, v in pairs for g in kind.grid]
    return out


def formula_corpus(kind: ClassKind, arities: tuple[int, int], depth: int) -> Iterator[Formula]:
    """Every AST of depth <= ``depth`` over :func:`atoms_for` plus the constants."""
    levels = [[Top(), Bottom()] + atoms_for(kind, arities)]
    for _ in range(depth):
        below = [f for lvl in levels for f in lvl]
        top = levels[-1]
        top_ids = set(map(id, top))
        new: list[Formula] = [Not(f) for f in top]
        for l, r in itertools.product(below, repeat=2):
            if id(l) in top_ids or id(r) in top_ids:
                new.append(And(l, r))
                new.append(Or(l, r))
        levels.append(new)
    for lvl in levels:
        yield from lvl
