from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oligoscope.formulas import (
    And, Bottom, Compl, DistCmp, Edge, Eq, FormulaError, Join, Less, Meet, Not, One, Or, ParseError,
    TermEq, Top, TVar, Zero, equality_pattern, evaluate, evaluate_all, evaluate_batch, formula_corpus,
    from_json, mask_batch, parse_formula,
    to_json, to_text, x, y,
)
from oligoscope.structures import (
    BOOLEAN, DLO, RANDOM_GRAPH, Configuration, boolean_algebra, graph, linear_order, metric_space, urysohn,
)

U4 = urysohn(4)


# -- strategies ---------------------------------------------------------------

def var_st(m, n):
    return st.one_of(st.builds(x, st.integers(0, m - 1)), st.builds(y, st.integers(0, n - 1)))


def term_st(m, n):
    leaf = st.one_of(var_st(m, n).map(TVar), st.just(Zero()), st.just(One()))
    return st.recursive(leaf, lambda t: st.one_of(
        st.builds(Meet, t, t), st.builds(Join, t, t), st.builds(Compl, t)), max_leaves=6)


def atom_st(kind, m, n):
    v = var_st(m, n)
    tag = kind.tag
    if tag == "random-graph":
        return st.one_of(st.builds(Eq, v, v), st.builds(Edge, v, v))
    if tag == "dlo":
        return st.one_of(st.builds(Eq, v, v), st.builds(Less, v, v))
    if tag == "boolean":
        t = term_st(m, n)
        return st.builds(TermEq, t, t)
    grid = st.sampled_from(list(kind.grid))
    return st.one_of(st.builds(Eq, v, v),
                     st.builds(DistCmp, v, v, st.sampled_from(["=", "<=", ">="]), grid))


def formula_st(kind, m=2, n=2):
    base = st.one_of(atom_st(kind, m, n), st.just(Top()), st.just(Bottom()))
    return st.recursive(base, lambda f: st.one_of(
        st.builds(Not, f), st.builds(And, f, f), st.builds(Or, f, f)), max_leaves=8)


KINDS = [RANDOM_GRAPH, DLO, BOOLEAN, U4]


@st.composite
def graph_config(draw, m=2, n=2, size=4):
    k = draw(st.integers(1, size))
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    a = tuple(draw(st.lists(st.integers(0, k - 1), min_size=m, max_size=m)))
    b = tuple(draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n)))
    return Configuration(graph(k, edges), a, b)


@st.composite
def order_config(draw, m=2, n=2, size=4):
    k = draw(st.integers(1, size))
    ranks = draw(st.permutations(range(k)))
    a = tuple(draw(st.lists(st.integers(0, k - 1), min_size=m, max_size=m)))
    b = tuple(draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n)))
    return Configuration(linear_order(ranks), a, b)


def permuted(c: Configuration, perm) -> Configuration:
    s = c.structure
    if s.kind.tag == "random-graph":
        t = graph(s.size, [(perm[u], perm[v]) for u, v in s.edges])
    else:
        ranks = [0] * s.size
        for i in range(s.size):
            ranks[perm[i]] = s.order[i]
        t = linear_order(ranks)
    return Configuration(t, tuple(perm[u] for u in c.a), tuple(perm[u] for u in c.b))


# -- parsing ------------------------------------------------------------------

class TestParse:
    def test_graph_conjunction(self):
        f = parse_formula("E(x0,y0) & !(x0 = y0)", RANDOM_GRAPH, (1, 1))
        assert f == And(Edge(x(0), y(0)), Not(Eq(x(0), y(0))))

    def test_kind_mismatch(self):
        with pytest.raises(FormulaError):
            parse_formula("x0 < y0", RANDOM_GRAPH, (1, 1))

    def test_boolean_precedence(self):
        f = parse_formula("(x0 ^ x1) v ~y0 = 1", BOOLEAN, (2, 1))
        assert f == TermEq(Join(Meet(TVar(x(0)), TVar(x(1))), Compl(TVar(y(0)))), One())

    def test_threshold(self):
        f = parse_formula("d(x0,y0) <= 1/2", U4, (1, 1))
        assert f == DistCmp(x(0), y(0), "<=", Fraction(1, 2))

    def test_implication_desugars(self):
        f = parse_formula("x0 = y0 -> E(x0,y0)", RANDOM_GRAPH, (1, 1))
        assert f == Or(Not(Eq(x(0), y(0))), Edge(x(0), y(0)))

    def test_whitespace_insensitive(self):
        assert parse_formula("E( x0 ,y0 )&x0=y0", RANDOM_GRAPH, (1, 1)) == \
            parse_formula("E(x0,y0) & x0 = y0", RANDOM_GRAPH, (1, 1))

    @pytest.mark.parametrize("text", ["E(x0,y0", "x0 = ", "x0 == y0", "& x0 = y0"])
    def test_syntax_error_has_position(self, text):
        with pytest.raises(ParseError) as exc:
            parse_formula(text, RANDOM_GRAPH, (1, 1))
        assert exc.value.position is not None

    def test_arity_violation(self):
        with pytest.raises(FormulaError):
            parse_formula("x1 = y0", RANDOM_GRAPH, (1, 1))

    def test_bad_rational(self):
        with pytest.raises(FormulaError):
            parse_formula("d(x0,y0) <= 1/0", U4, (1, 1))

    def test_off_grid_threshold_rounds_down(self):
        # on the 1/4 grid, d <= 1/3 and d <= 1/4 agree
        f = parse_formula("d(x0,y0) <= 1/3", U4, (1, 1))
        g = parse_formula("d(x0,y0) <= 1/4", U4, (1, 1))
        for v in (w for w in U4.grid if w > 0):
            s = metric_space([[0, v], [v, 0]], 4)
            c = Configuration(s, (0,), (1,))
            assert evaluate(f, c) == evaluate(g, c)

    @pytest.mark.parametrize("kind", KINDS, ids=str)
    @given(data=st.data())
    @settings(max_examples=80, deadline=None)
    def test_print_parse_round_trip(self, kind, data):
        f = data.draw(formula_st(kind))
        assert parse_formula(to_text(f), kind, (2, 2)) == f

    @pytest.mark.parametrize("kind", KINDS, ids=str)
    @given(data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_json_round_trip(self, kind, data):
        f = data.draw(formula_st(kind))
        assert from_json(to_json(f)) == f


# -- evaluation ---------------------------------------------------------------

class TestEvaluate:
    def test_equal_entries(self):
        c = Configuration(graph(1), (0,), (0,))
        assert evaluate(Eq(x(0), y(0)), c)

    def test_edge_on_k2(self):
        c = Configuration(graph(2, [(0, 1)]), (0,), (1,))
        assert evaluate(Edge(x(0), y(0)), c)

    def test_disjoint_boolean(self):
        s = boolean_algebra(2)
        c = Configuration(s, (s.index(0b01),), (s.index(0b10),))
        assert evaluate(TermEq(Meet(TVar(x(0)), TVar(y(0))), Zero()), c)

    def test_distance_exact(self):
        s = metric_space([[0, Fraction(1, 2)], [Fraction(1, 2), 0]], 4)
        c = Configuration(s, (0,), (1,))
        assert evaluate(DistCmp(x(0), y(0), "<=", Fraction(1, 2)), c)
        assert not evaluate(DistCmp(x(0), y(0), "<=", Fraction(1, 4)), c)
        assert evaluate(DistCmp(x(0), y(0), "=", Fraction(1, 2)), c)

    def test_arity_mismatch(self):
        c = Configuration(graph(1), (0,), (0,))
        with pytest.raises(FormulaError):
            evaluate(Eq(x(1), y(0)), c)

    def test_wrong_kind(self):
        c = Configuration(graph(2), (0,), (1,))
        with pytest.raises(FormulaError):
            evaluate(Less(x(0), y(0)), c)

    @given(f=formula_st(RANDOM_GRAPH), c=graph_config(), data=st.data())
    @settings(max_examples=120, deadline=None)
    def test_graph_isomorphism_invariance(self, f, c, data):
        perm = data.draw(st.permutations(range(c.structure.size)))
        d = permuted(c, perm)
        assert evaluate(f, c) == evaluate(f, d)
        assert equality_pattern(c) == equality_pattern(d)

    @given(f=formula_st(DLO), c=order_config(), data=st.data())
    @settings(max_examples=120, deadline=None)
    def test_order_isomorphism_invariance(self, f, c, data):
        perm = data.draw(st.permutations(range(c.structure.size)))
        d = permuted(c, perm)
        assert evaluate(f, c) == evaluate(f, d)

    @given(f=formula_st(RANDOM_GRAPH), c=graph_config())
    @settings(max_examples=60, deadline=None)
    def test_negation(self, f, c):
        assert evaluate(Not(f), c) != evaluate(f, c)


class TestEqualityPattern:
    def test_single_block(self):
        assert equality_pattern(Configuration(graph(1), (0,), (0,))) == (("x0", "y0"),)

    def test_mixed(self):
        c = Configuration(graph(3), (0, 1), (2, 1))
        assert {frozenset(b) for b in equality_pattern(c)} == {
            frozenset({"x0"}), frozenset({"x1", "y1"}), frozenset({"y0"})}

    def test_discrete(self):
        c = Configuration(graph(4), (0, 1), (2, 3))
        assert all(len(b) == 1 for b in equality_pattern(c))


class TestCorpus:
    def test_depth_zero(self):
        # true, false, and 4 ordered pairs for each of Eq and E
        assert len(list(formula_corpus(RANDOM_GRAPH, (1, 1), 0))) == 2 + 8

    def test_depth_grows(self):
        n0 = len(list(formula_corpus(DLO, (1, 1), 0)))
        n1 = len(list(formula_corpus(DLO, (1, 1), 1)))
        assert n1 == n0 + n0 + 2 * n0 * n0


class TestBatch:
    @given(f=formula_st(BOOLEAN, 1, 2))
    @settings(max_examples=60, deadline=None)
    def test_batch_matches_scalar(self, f):
        from oligoscope.structures import enumerate_configurations, free_type
        cs = enumerate_configurations(free_type(BOOLEAN, 1), free_type(BOOLEAN, 2))
        batch = mask_batch(cs)
        assert batch is not None and len(batch) == len(cs)
        assert evaluate_all(f, cs, batch) == tuple(evaluate(f, c) for c in cs)

    def test_batch_needs_boolean(self):
        assert mask_batch([Configuration(graph(1), (0,), (0,))]) is None

    def test_batch_rejects_foreign_atoms(self):
        s = boolean_algebra(1)
        batch = mask_batch([Configuration(s, (0,), (1,))])
        with pytest.raises(FormulaError):
            evaluate_batch(Less(x(0), y(0)), batch)
