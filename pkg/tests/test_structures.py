import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oligoscope.structures import (
    BOOLEAN, DLO, PURE_SET, RANDOM_GRAPH, ClassKind, Embedding, StructureError, automorphisms,
    boolean_algebra, canonical_form, chain, embeddings, count_orbits, enumerate_age, enumerate_pair_types,
    enumerate_types, find_isomorphism, free_amalgam, free_type, graph, induced_substructure,
    is_embedding, linear_order, metric_space, pure_set, set_partitions, type_of, urysohn,
)

import oracles


def cycle(n):
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


@st.composite
def graphs(draw, max_n=5):
    n = draw(st.integers(0, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return graph(n, chosen)


@st.composite
def relabel(draw, s):
    perm = draw(st.permutations(range(s.size)))
    return graph(s.size, [(perm[a], perm[b]) for a, b in s.edges]), perm


class TestKinds:
    def test_parse_round_trip(self):
        for text in ("pure-set", "random-graph", "dlo", "boolean", "urysohn:4"):
            assert str(ClassKind.parse(text)) == text
        assert ClassKind.parse("graph") == RANDOM_GRAPH

    def test_unknown_kind(self):
        with pytest.raises(StructureError):
            ClassKind.parse("ring")


class TestStructures:
    def test_induced_cycle_path(self):
        sub, emb = induced_substructure(cycle(5), [0, 1, 2])
        assert sub.edges == {(0, 1), (1, 2)}
        assert is_embedding(emb)

    def test_boolean_subalgebra(self):
        big = boolean_algebra(3)
        sub, emb = induced_substructure(big, [0b011])
        assert sub.size == 4
        assert is_embedding(emb)
        # images are 0, a|b, c, 1, found by fixpoint closure independently
        closure = {0b011}
        while True:
            nxt = closure | {x & y for x in closure for y in closure} | {x | y for x in closure for y in closure} \
                | {0b111 ^ x for x in closure}
            if nxt == closure:
                break
            closure = nxt
        assert sorted(big.mask(emb(i)) for i in range(sub.size)) == sorted(closure) == [0, 0b011, 0b100, 0b111]

    def test_path_not_triangle(self):
        p3 = graph(3, [(0, 1), (1, 2)])
        k3 = graph(3, [(0, 1), (1, 2), (0, 2)])
        assert find_isomorphism(p3, k3) is None

    def test_loop_rejected(self):
        with pytest.raises(StructureError):
            graph(2, [(0, 0)])

    def test_metric_triangle_rejected(self):
        with pytest.raises(StructureError):
            metric_space([[0, Fraction(1, 4), 1], [Fraction(1, 4), 0, Fraction(1, 4)],
                          [1, Fraction(1, 4), 0]], 4)

    def test_automorphisms_of_cycle(self):
        assert len(automorphisms(cycle(5))) == 10
        assert len(automorphisms(chain(4))) == 1

    @given(graphs(), st.data())
    @settings(max_examples=60, deadline=None)
    def test_canonical_form_invariant(self, s, data):
        t, _ = data.draw(relabel(s))
        assert canonical_form(s) == canonical_form(t)
        assert find_isomorphism(s, t) is not None

    @given(graphs(), st.data())
    @settings(max_examples=60, deadline=None)
    def test_induced_substructure_embeds(self, s, data):
        subset = data.draw(st.lists(st.integers(0, max(s.size - 1, 0)), unique=True)) if s.size else []
        sub, emb = induced_substructure(s, subset)
        assert is_embedding(emb)
        assert sub.size == len(subset)


class TestAmalgamation:
    def test_two_edges_give_path(self):
        c = graph(1)
        a = graph(2, [(0, 1)])
        b = graph(2, [(0, 1)])
        d, f1, f2 = free_amalgam(Embedding(c, a, (0,)), Embedding(c, b, (0,)))
        assert d.size == 3 and len(d.edges) == 2
        assert find_isomorphism(d, graph(3, [(0, 1), (1, 2)])) is not None
        assert is_embedding(f1) and is_embedding(f2)

    def test_orders_over_point(self):
        c = chain(1)
        a = chain(2)
        b = chain(2)
        d, f1, f2 = free_amalgam(Embedding(c, a, (0,)), Embedding(c, b, (0,)))
        assert d.size == 3
        assert is_embedding(f1) and is_embedding(f2)
        # c is the minimum in both, so both new points lie above it
        assert d.order[f1(0)] == 0

    def test_metric_sum(self):
        c = metric_space([[0]], 10)
        a = metric_space([[0, Fraction(3, 10)], [Fraction(3, 10), 0]], 10)
        b = metric_space([[0, Fraction(4, 10)], [Fraction(4, 10), 0]], 10)
        d, f1, f2 = free_amalgam(Embedding(c, a, (0,)), Embedding(c, b, (0,)))
        assert d.dist[f1(1)][f2(1)] == Fraction(7, 10)

    def test_metric_sum_truncates(self):
        c = metric_space([[0]], 4)
        a = metric_space([[0, Fraction(3, 4)], [Fraction(3, 4), 0]], 4)
        d, f1, f2 = free_amalgam(Embedding(c, a, (0,)), Embedding(c, a, (0,)))
        assert d.dist[f1(1)][f2(1)] == 1

    def test_non_embedding_rejected(self):
        c = graph(2, [(0, 1)])
        a = graph(2)
        with pytest.raises(StructureError):
            free_amalgam(Embedding(c, a, (0, 1)), Embedding(c, c, (0, 1)))

    @given(graphs(4), graphs(4), st.data())
    @settings(max_examples=40, deadline=None)
    def test_amalgam_of_graphs(self, a, b, data):
        # glue along a common induced subgraph of a found by isomorphism into b
        k = data.draw(st.integers(0, min(a.size, b.size)))
        sa = data.draw(st.permutations(range(a.size)))[:k]
        c, ca = induced_substructure(a, sa)
        cb = next((e for e in embeddings(c, b)), None)
        if cb is None:
            return
        d, f1, f2 = free_amalgam(ca, cb)
        assert is_embedding(f1) and is_embedding(f2)
        assert [f1(ca(i)) for i in range(k)] == [f2(cb(i)) for i in range(k)]
        assert d.size == a.size + b.size - k


class TestAge:
    def test_graph_counts(self):
        # graphs on at most 0..4 vertices, cumulative: 1, 2, 4, 8, 19
        sizes = [len(enumerate_age(RANDOM_GRAPH, n)) for n in range(5)]
        assert sizes == [1, 2, 4, 8, 19]

    def test_orders_one_per_size(self):
        assert len(enumerate_age(DLO, 4)) == 5

    def test_age_hereditary(self):
        reps = {canonical_form(s) for s in enumerate_age(RANDOM_GRAPH, 4)}
        for s in enumerate_age(RANDOM_GRAPH, 4):
            for k in range(s.size + 1):
                for subset in itertools.combinations(range(s.size), k):
                    sub, _ = induced_substructure(s, subset)
                    assert canonical_form(sub) in reps

    def test_urysohn_age_small(self):
        # two-point spaces at resolution 1/2: distances 1/2 and 1
        assert len(enumerate_age(urysohn(2), 2)) == 1 + 1 + 2


class TestTypes:
    def test_pure_set_orbits_are_bell(self):
        assert [count_orbits(PURE_SET, n) for n in range(1, 6)] == [oracles.bell(n) for n in range(1, 6)]

    def test_set_partitions(self):
        assert list(set_partitions(3)) == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1), (0, 1, 2)]

    def test_dlo_orbits(self):
        assert [count_orbits(DLO, n) for n in range(1, 4)] == [1, 3, 13]

    def test_graph_orbits(self):
        # pattern {0,1,2}: 1; one pair merged: 3 patterns x 2; all distinct: 8
        assert count_orbits(RANDOM_GRAPH, 3) == 1 + 6 + 8

    def test_pair_types_pure(self):
        assert [len(enumerate_pair_types(PURE_SET, n)) for n in (1, 2, 3)] == [
            oracles.pure_pair_types(n) for n in (1, 2, 3)]

    def test_boolean_one_types(self):
        # 0, 1, proper
        assert len(enumerate_types(BOOLEAN, 1)) == 3

    def test_type_of_orders(self):
        s = linear_order([2, 0, 1])
        assert type_of(s, [0, 1]) == type_of(chain(3), [2, 0])

    def test_free_type_graph(self):
        t = free_type(RANDOM_GRAPH, 3)
        assert t.pattern == (0, 1, 2) and not t.structure.edges

    def test_pure_set_structure(self):
        assert pure_set(3).size == 3
