import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oligoscope.numeric import (
    MarginalError, NotAContraction, NotIdempotent, NumericError, PartitionIdempotent, all_partitions,
    check_projection_lemma, contraction, contraction_adjoint, contraction_compose, coupling,
    coupling_central_idempotents, coupling_compose, coupling_idempotent_scan, coupling_involution,
    from_doubly_stochastic, identity_coupling, independent_coupling, is_coupling_idempotent, norm_bounds,
    operator_norm, partition_join, partitions_commute, permutation_coupling, random_contraction,
    random_coupling, random_projection, random_unitary,
)
from oligoscope.structures import CapExceeded, set_partitions

import oracles

seeds = st.integers(0, 2**32 - 1)


def rng(seed):
    return np.random.default_rng(seed)


class TestCouplingMatrix:
    def test_marginals_enforced(self):
        with pytest.raises(MarginalError):
            coupling([[Fraction(1, 2), 0], [Fraction(1, 4), Fraction(1, 4)]])

    def test_negative_rejected(self):
        with pytest.raises(NumericError):
            coupling([[Fraction(3, 4), Fraction(-1, 4)], [Fraction(-1, 4), Fraction(3, 4)]])

    def test_float_tolerance(self):
        c = coupling([[0.5 + 1e-14, 0.0], [0.0, 0.5]], exact=False)
        assert c.n == 2
        with pytest.raises(MarginalError):
            coupling([[0.5 + 1e-6, 0.0], [0.0, 0.5]], exact=False)

    def test_from_doubly_stochastic(self):
        d = [[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 2), Fraction(1, 2)]]
        assert from_doubly_stochastic(d) == independent_coupling(2)


class TestComposition:
    def test_identity(self):
        b = random_coupling(4, rng(1))
        assert coupling_compose(identity_coupling(4), b) == b == coupling_compose(b, identity_coupling(4))

    @given(seeds, st.integers(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_absorbing(self, seed, n):
        a = random_coupling(n, rng(seed))
        j = independent_coupling(n)
        assert coupling_compose(a, j) == j == coupling_compose(j, a)

    def test_two_block_partition(self):
        e = PartitionIdempotent(((0, 1), (2, 3))).coupling()
        assert coupling_compose(e, e) == e
        assert e.entries[0, 1] == Fraction(1, 8)

    def test_rank_mismatch(self):
        with pytest.raises(NumericError):
            coupling_compose(identity_coupling(2), identity_coupling(3))

    @given(seeds, st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_associative_exact(self, seed, n):
        r = rng(seed)
        a, b, c = (random_coupling(n, r) for _ in range(3))
        assert coupling_compose(coupling_compose(a, b), c) == coupling_compose(a, coupling_compose(b, c))

    @given(seeds, st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_associative_float(self, seed, n):
        r = rng(seed)
        a, b, c = (random_coupling(n, r, exact=False) for _ in range(3))
        lhs = coupling_compose(coupling_compose(a, b), c).entries
        rhs = coupling_compose(a, coupling_compose(b, c)).entries
        assert np.abs(lhs - rhs).max() <= 1e-12

    @given(seeds, st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_matches_fraction_oracle(self, seed, n):
        r = rng(seed)
        a, b = random_coupling(n, r), random_coupling(n, r)
        prod = oracles.frac_matmul(a.entries.tolist(), b.entries.tolist())
        expect = [[n * v for v in row] for row in prod]
        assert coupling_compose(a, b).entries.tolist() == expect

    @given(seeds, st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_marginals_preserved(self, seed, n):
        r = rng(seed)
        c = coupling_compose(random_coupling(n, r), random_coupling(n, r))
        assert all(sum(row) == Fraction(1, n) for row in c.entries.tolist())
        assert all(sum(col) == Fraction(1, n) for col in c.entries.T.tolist())


class TestInvolution:
    def test_identity(self):
        assert coupling_involution(identity_coupling(3)) == identity_coupling(3)

    @given(seeds)
    @settings(max_examples=30, deadline=None)
    def test_involutive_and_anti(self, seed):
        r = rng(seed)
        a, b = random_coupling(5, r), random_coupling(5, r)
        assert coupling_involution(coupling_involution(a)) == a
        assert coupling_involution(coupling_compose(a, b)) == \
            coupling_compose(coupling_involution(b), coupling_involution(a))


class TestIdempotents:
    def test_bell_three(self):
        assert len(coupling_idempotent_scan(3)) == 5

    def test_partition_coupling_matches_oracle(self):
        for labels in set_partitions(4):
            e = PartitionIdempotent.from_labels(labels).coupling()
            assert e.entries.tolist() == oracles.partition_coupling(list(labels))

    def test_injective(self):
        cs = [p.coupling().entries.tolist() for p in all_partitions(5)]
        assert len({str(c) for c in cs}) == oracles.bell(5)

    def test_diagonal(self):
        assert coupling_idempotent_scan(3, [identity_coupling(3)]) == [identity_coupling(3)]

    def test_random_rejected(self):
        c = random_coupling(4, rng(7), terms=4)
        assert not is_coupling_idempotent(c)
        assert coupling_idempotent_scan(4, [c]) == []

    def test_cap(self):
        with pytest.raises(CapExceeded):
            coupling_idempotent_scan(9)

    def test_join(self):
        p = PartitionIdempotent.from_labels((0, 0, 1))
        q = PartitionIdempotent.from_labels((0, 1, 1))
        assert partition_join(p, q) == PartitionIdempotent.from_labels((0, 0, 0))
        for a in all_partitions(4):
            for b in all_partitions(4):
                got = partition_join(a, b)
                ref = PartitionIdempotent.from_labels(
                    oracles.partition_join(_labels(a), _labels(b)))
                assert got == ref

    def test_join_law_for_commuting_pairs(self):
        # e_P e_Q = e_{P v Q} holds when the two conditional expectations commute
        for n in range(1, 5):
            for a in all_partitions(n):
                for b in all_partitions(n):
                    if partitions_commute(a, b):
                        assert coupling_compose(a.coupling(), b.coupling()) == partition_join(a, b).coupling()

    def test_join_law_counterexample(self):
        p = PartitionIdempotent.from_labels((0, 0, 1))
        q = PartitionIdempotent.from_labels((0, 1, 0))
        assert coupling_compose(p.coupling(), q.coupling()) != partition_join(p, q).coupling()


def _labels(p):
    out = [0] * p.n
    for k, b in enumerate(p.blocks):
        for i in b:
            out[i] = k
    return tuple(out)


class TestCentral:
    def test_four(self):
        assert coupling_central_idempotents(4) == [identity_coupling(4), independent_coupling(4)]

    def test_one(self):
        got = coupling_central_idempotents(1)
        assert got == [identity_coupling(1)] and identity_coupling(1) == independent_coupling(1)

    def test_two(self):
        assert coupling_central_idempotents(2) == [identity_coupling(2), independent_coupling(2)]

    def test_permutation_coupling(self):
        g = permutation_coupling([1, 2, 0])
        assert coupling_compose(g, coupling_involution(g)) == identity_coupling(3)


class TestNorms:
    def test_examples(self):
        assert operator_norm(np.eye(3)) == pytest.approx(1, abs=1e-12)
        assert operator_norm(np.zeros((3, 3))) == 0
        assert operator_norm([[0, 2], [0, 0]]) == pytest.approx(2, abs=1e-12)

    @given(seeds, st.integers(1, 8))
    @settings(max_examples=50, deadline=None)
    def test_bounds_bracket_svd(self, seed, n):
        r = rng(seed)
        a = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
        lo, hi = norm_bounds(a)
        s = np.linalg.svd(a, compute_uv=False)[0]
        assert lo - 1e-9 <= s <= hi + 1e-9
        assert hi - lo <= 1e-9 * max(1.0, s)


class TestContractions:
    def test_unitary(self):
        u = random_unitary(4, rng(2))
        prod = contraction_compose(contraction_adjoint(u), u).entries
        assert np.abs(prod - np.eye(4)).max() < 1e-9

    def test_projection_square(self):
        p = random_projection(5, 2, rng(3))
        assert np.abs(contraction_compose(p, p).entries - p).max() < 1e-9

    @given(seeds)
    @settings(max_examples=30, deadline=None)
    def test_submultiplicative(self, seed):
        r = rng(seed)
        a, b = random_contraction(6, r), random_contraction(6, r)
        c = contraction_compose(a, b)
        assert operator_norm(c) <= operator_norm(a) * operator_norm(b) + 1e-9
        s = np.linalg.svd(a @ b, compute_uv=False)[0]
        assert abs(operator_norm(c) - s) < 1e-9

    def test_rank_mismatch(self):
        with pytest.raises(NumericError):
            contraction_compose(np.eye(2), np.eye(3))

    def test_not_contraction(self):
        with pytest.raises(NotAContraction) as exc:
            contraction([[2, 0], [0, 0]])
        assert exc.value.norm == pytest.approx(2, abs=1e-9)


class TestProjectionLemma:
    def test_diagonal(self):
        assert check_projection_lemma(np.diag([1, 0]))

    def test_oblique_rejected(self):
        with pytest.raises(NotAContraction) as exc:
            check_projection_lemma([[1, 1], [0, 0]])
        assert abs(exc.value.norm - math.sqrt(2)) <= 1e-9

    def test_not_idempotent(self):
        with pytest.raises(NotIdempotent):
            check_projection_lemma([[0, 1], [0, 0]])

    @given(seeds, st.integers(2, 8), st.data())
    @settings(max_examples=50, deadline=None)
    def test_random_projections(self, seed, n, data):
        rank = data.draw(st.integers(0, n))
        assert check_projection_lemma(random_projection(n, rank, rng(seed)))

    def test_bad_rank(self):
        with pytest.raises(NumericError):
            random_projection(3, 4, rng(0))
