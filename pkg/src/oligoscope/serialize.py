"""JSON documents for structures, partial isomorphisms, tables, verdicts and matrices.

Rationals are written as ``"p/q"`` strings (integers without a slash).
Complex matrix entries are ``[re, im]`` pairs.
"""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .formulas import to_json as formula_to_json, to_text
from .numeric import CouplingMatrix, coupling
from .semigroup import PartialIso, StarSemigroupTable
from .stability import OrderWitness, SearchResult, StabilityVerdict
from .structures import ClassKind, Configuration, FiniteStructure, StructureError, TypeSpec


def rational(v) -> str:
    return str(Fraction(v))


def parse_rational(text) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational {text!r}") from exc


# -- structures --------------------------------------------------------------


def structure_to_json(s: FiniteStructure) -> dict:
    doc = {"kind": str(s.kind), "size": s.size}
    tag = s.kind.tag
    if tag == "random-graph":
        doc["edges"] = [list(e) for e in sorted(s.edges)]
    elif tag == "dlo":
        doc["order"] = list(s.order)
    elif tag == "boolean":
        doc["atoms"] = s.atoms
        doc["elements"] = None if s.elements is None else list(s.elements)
    elif tag == "urysohn":
        doc["dist"] = [[rational(v) for v in row] for row in s.dist]
    return doc


def structure_from_json(doc: dict) -> FiniteStructure:
    kind = ClassKind.parse(doc["kind"])
    n = int(doc["size"])
    tag = kind.tag
    if tag == "random-graph":
        return FiniteStructure(kind, n, edges=frozenset(tuple(e) for e in doc.get("edges", [])))
    if tag == "dlo":
        return FiniteStructure(kind, n, order=tuple(doc["order"]))
    if tag == "boolean":
        els = doc.get("elements")
        return FiniteStructure(kind, n, atoms=int(doc["atoms"]), elements=None if els is None else tuple(els))
    if tag == "urysohn":
        return FiniteStructure(kind, n, dist=tuple(tuple(parse_rational(v) for v in row) for row in doc["dist"]))
    return FiniteStructure(kind, n)


def type_to_json(t: TypeSpec) -> dict:
    return {"kind": str(t.kind), "arity": t.arity, "structure": structure_to_json(t.structure),
            "labels": list(t.labels)}


def type_from_json(doc: dict) -> TypeSpec:
    s = structure_from_json(doc["structure"])
    t = TypeSpec(ClassKind.parse(doc["kind"]), int(doc["arity"]), s, tuple(doc["labels"]))
    if len(t.labels) != t.arity:
        raise StructureError("type labels do not match arity")
    return t


def configuration_to_json(c: Configuration) -> dict:
    return {"structure": structure_to_json(c.structure), "a": list(c.a), "b": list(c.b)}


# -- semigroup ---------------------------------------------------------------


def partial_iso_to_json(p: PartialIso) -> dict:
    doc = {"kind": str(p.kind), "window": p.window, "pairs": [list(x) for x in p.pairs]}
    if p.context is not None:
        doc["context"] = [structure_to_json(s) for s in p.context]
    return doc


def partial_iso_from_json(doc: dict) -> PartialIso:
    ctx = doc.get("context")
    if ctx is not None:
        ctx = tuple(structure_from_json(s) for s in ctx)
    return PartialIso(ClassKind.parse(doc["kind"]), int(doc["window"]), tuple(map(tuple, doc["pairs"])), ctx)


def _element_doc(p: PartialIso) -> dict:
    return {"pairs": [list(x) for x in p.pairs]}


def table_to_json(t: StarSemigroupTable) -> dict:
    first = t.elements[0] if t.elements else None
    doc = {
        "elements": [_element_doc(e) for e in t.elements],
        "product": [list(row) for row in t.product],
        "star": list(t.star),
        "generators": list(t.generators),
    }
    if first is not None:
        doc["kind"] = str(first.kind)
        doc["window"] = first.window
    return doc


# -- stability ---------------------------------------------------------------


def witness_to_json(w: OrderWitness) -> dict:
    return {
        "length": w.length,
        "structure": structure_to_json(w.structure),
        "a": [list(t) for t in w.a],
        "b": [list(t) for t in w.b],
        "orientation": "i>j" if w.orientation else "i<j",
    }


def formula_doc(f) -> dict:
    return {"ast": formula_to_json(f), "text": to_text(f)}


def verdict_to_json(v: StabilityVerdict) -> dict:
    doc = {"status": v.status.capitalize(), "budgets": dict(v.budgets)}
    if v.reduct is not None:
        doc["reduct"] = formula_doc(v.reduct)
    if v.status == "unstable":
        doc["witness"] = None if v.witness is None else witness_to_json(v.witness)
        if v.counterexample is not None:
            doc["counterexample"] = [configuration_to_json(c) for c in v.counterexample]
    return doc


def search_to_json(r: SearchResult) -> dict:
    return {"found": r.witness is not None, "exhausted": r.exhausted, "nodes": r.nodes,
            "witness": None if r.witness is None else witness_to_json(r.witness)}


# -- matrices ----------------------------------------------------------------


def coupling_to_json(c: CouplingMatrix) -> dict:
    if c.exact:
        rows = [[rational(v) for v in row] for row in c.entries.tolist()]
    else:
        rows = [[float(v) for v in row] for row in c.entries.tolist()]
    return {"n": c.n, "exact": c.exact, "entries": rows}


def complex_to_json(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def _cell(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex entry must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        s = v.strip()
        if "j" in s:
            return complex(s)
        return parse_rational(s)
    if isinstance(v, (int, float)):
        return v
    raise ValueError(f"bad matrix entry {v!r}")


def read_matrix(source: str) -> list[list]:
    """Rows from inline JSON, a ``.json`` file, or a ``.csv`` file."""
    text = source.strip()
    if text.startswith("["):
        rows = json.loads(text)
    else:
        path = Path(source)
        raw = path.read_text()
        if path.suffix.lower() == ".csv":
            rows = [r for r in csv.reader(io.StringIO(raw)) if r]
        else:
            rows = json.loads(raw)
            if isinstance(rows, dict):
                rows = rows["entries"]
    out = [[_cell(v) for v in row] for row in rows]
    if not out or any(len(r) != len(out) for r in out):
        raise ValueError("matrix must be square and nonempty")
    return out


def read_coupling(source: str, exact: bool = True) -> CouplingMatrix:
    rows = read_matrix(source)
    if exact:
        if any(isinstance(v, (float, complex)) for r in rows for v in r):
            raise ValueError("exact couplings need rational entries")
        return coupling(rows)
    return coupling([[float(v) for v in r] for r in rows], exact=False)


def read_complex(source: str) -> np.ndarray:
    return np.array([[complex(v) for v in r] for r in read_matrix(source)], dtype=complex)


def coupling_to_csv(c: CouplingMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in c.entries.tolist():
        w.writerow([rational(v) if c.exact else repr(float(v)) for v in row])
    return buf.getvalue()
