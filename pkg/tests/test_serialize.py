import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oligoscope import serialize as ser
from oligoscope.numeric import independent_coupling, random_coupling
from oligoscope.semigroup import all_partial_isos, generate_star_semigroup, partial_iso
from oligoscope.stability import classify_stability
from oligoscope.formulas import Edge, Eq, x, y
from oligoscope.structures import (
    BOOLEAN, DLO, RANDOM_GRAPH, boolean_algebra, enumerate_age, enumerate_types, free_type, graph, urysohn,
)


def through_json(doc):
    return json.loads(json.dumps(doc))


@pytest.mark.parametrize("kind", [RANDOM_GRAPH, DLO, urysohn(4)], ids=str)
def test_structure_round_trip(kind):
    for s in enumerate_age(kind, 3):
        assert ser.structure_from_json(through_json(ser.structure_to_json(s))) == s


def test_boolean_structure_round_trip():
    for s in (boolean_algebra(3), boolean_algebra(3, [0, 0b011, 0b100, 0b111])):
        assert ser.structure_from_json(through_json(ser.structure_to_json(s))) == s


@pytest.mark.parametrize("kind", [RANDOM_GRAPH, DLO, BOOLEAN], ids=str)
def test_type_round_trip(kind):
    for t in enumerate_types(kind, 2):
        assert ser.type_from_json(through_json(ser.type_to_json(t))) == t


def test_type_label_mismatch():
    doc = ser.type_to_json(free_type(RANDOM_GRAPH, 2))
    doc["labels"] = [0]
    with pytest.raises(ValueError):
        ser.type_from_json(doc)


def test_partial_iso_round_trip():
    ctx = graph(3, [(0, 1)])
    for p in all_partial_isos(RANDOM_GRAPH, 3, ctx):
        assert ser.partial_iso_from_json(through_json(ser.partial_iso_to_json(p))) == p


def test_table_shape():
    t = generate_star_semigroup([partial_iso([(0, 1), (1, 2)], 3)])
    doc = ser.table_to_json(t)
    n = len(doc["elements"])
    assert len(doc["product"]) == n and all(len(r) == n for r in doc["product"])
    assert len(doc["star"]) == n


def test_verdict_documents():
    g = free_type(RANDOM_GRAPH, 1)
    stable = ser.verdict_to_json(classify_stability(Eq(x(0), y(0)), g, g))
    assert stable["status"] == "Stable" and stable["reduct"]["text"] == "x0 = y0"
    unstable = ser.verdict_to_json(classify_stability(Edge(x(0), y(0)), g, g))
    assert unstable["status"] == "Unstable"
    assert unstable["witness"]["orientation"] in ("i<j", "i>j")
    assert len(unstable["counterexample"]) == 2


@given(st.integers(0, 2**31), st.integers(1, 5))
@settings(max_examples=25, deadline=None)
def test_coupling_json_and_csv(seed, n):
    c = random_coupling(n, np.random.default_rng(seed))
    doc = through_json(ser.coupling_to_json(c))
    assert ser.read_coupling(json.dumps(doc["entries"])) == c


def test_coupling_csv_file(tmp_path):
    c = independent_coupling(3)
    path = tmp_path / "j.csv"
    path.write_text(ser.coupling_to_csv(c))
    assert ser.read_coupling(str(path)) == c


def test_complex_entries():
    m = ser.read_complex('[[[0, 1], 0], ["1j", "1/2"]]')
    assert m[0, 0] == 1j and m[1, 0] == 1j and m[1, 1] == 0.5
    assert ser.complex_to_json(m)[0][0] == [0.0, 1.0]


def test_exact_rejects_floats():
    with pytest.raises(ValueError):
        ser.read_coupling("[[0.5, 0], [0, 0.5]]")


@pytest.mark.parametrize("bad", ["[]", "[[1, 2]]", "[[1, [1, 2, 3]], [0, 0]]"])
def test_bad_matrices(bad):
    with pytest.raises(ValueError):
        ser.read_matrix(bad)


def test_rationals():
    assert ser.rational(Fraction(2, 4)) == "1/2"
    assert ser.parse_rational(" 3/4 ") == Fraction(3, 4)
    with pytest.raises(ValueError):
        ser.parse_rational("1/0")
