"""Command-line front end: every subcommand prints one JSON document.

Output is ``{tool_version, command_echo, result, timing_ms}``; domain errors
print ``{tool_version, command_echo, error: {code, message}}`` and exit 1;
usage errors exit 2.  ``timing_ms`` is null unless ``--timing`` is given, so
identical inputs give byte-identical output.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, numeric, semigroup, serialize, stability, structures
from .formulas import parse_formula
from .structures import CapExceeded, ClassKind, StructureError

CONFIG_ENV = "OLIGOSCOPE_CONFIG"


@dataclass
class Settings:
    cap: int = structures.DEFAULT_CAP
    config_cap: int = stability.CONFIG_CAP
    closure_cap: int = semigroup.DEFAULT_CLOSURE_CAP
    node_budget: int = stability.DEFAULT_NODE_BUDGET
    length: int = stability.DEFAULT_LENGTH
    time_budget: float | None = None
    roelcke_cap: int = semigroup.ROELCKE_CAP
    coupling_cap: int = numeric.COUPLING_CAP
    tol: float = 1e-9
    seed: int = 0
    threads: int = 1


def _coerce(field: dataclasses.Field, raw: str):
    text = raw.strip()
    if field.name == "time_budget":
        return None if text.lower() in ("", "none") else float(text)
    return float(text) if field.type in ("float", float) else int(text)


def load_settings(path: str | None) -> Settings:
    s = Settings()
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return s
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string("[settings]\n" + Path(path).read_text())
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    fields = {f.name: f for f in dataclasses.fields(Settings)}
    for key, raw in parser["settings"].items():
        key = key.replace("-", "_")
        if key not in fields:
            raise UsageError(f"unknown config key {key!r}")
        try:
            setattr(s, key, _coerce(fields[key], raw))
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {raw!r}") from exc
    return s


class UsageError(Exception):
    pass


class DomainError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# -- argument parsing helpers ----------------------------------------------------


def _kind(text: str) -> ClassKind:
    try:
        return ClassKind.parse(text)
    except (StructureError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pairs(text: str) -> list[tuple[int, int]]:
    """``"0:1,1:2"`` (also ``0->1``); the empty string is the empty map."""
    text = text.strip().strip("{}")
    if not text:
        return []
    out = []
    for part in text.split(","):
        m = re.fullmatch(r"\s*(\d+)\s*(?::|->)\s*(\d+)\s*", part)
        if not m:
            raise argparse.ArgumentTypeError(f"bad pair {part!r}; use a:b")
        out.append((int(m.group(1)), int(m.group(2))))
    return out


def _load_json(source: str):
    source = source.strip()
    if source.startswith(("{", "[")):
        return json.loads(source)
    return json.loads(Path(source).read_text())


def _context(args):
    if getattr(args, "context", None) is None:
        return None
    doc = _load_json(args.context)
    if isinstance(doc, list):
        return tuple(serialize.structure_from_json(d) for d in doc)
    s = serialize.structure_from_json(doc)
    return (s, s)


def _window_context(args):
    ctx = _context(args)
    if ctx is None and args.kind != structures.PURE_SET:
        w = structures.default_window(args.kind, args.window)
        ctx = (w, w)
    return ctx


def _iso(args, pairs) -> semigroup.PartialIso:
    return semigroup.PartialIso(args.kind, args.window, tuple(pairs), _window_context(args))


def _type(spec: str, kind: ClassKind, arity: int) -> structures.TypeSpec:
    spec = spec.strip()
    name, _, n = spec.partition(":")
    if n:
        arity = int(n)
    if name == "distinct":
        return structures.free_type(kind, arity)
    if name == "proper":
        if kind.tag != "boolean":
            raise DomainError("bad_type", "'proper' types exist only for the boolean kind")
        return structures.proper_type(kind) if arity == 1 else structures.free_type(kind, arity)
    t = serialize.type_from_json(_load_json(spec[1:] if spec.startswith("@") else spec))
    if t.kind != kind:
        raise DomainError("bad_type", f"type of kind {t.kind} given for {kind}")
    return t


# -- subcommands -------------------------------------------------------------------


def cmd_orbits(args, st: Settings):
    return structures.count_orbits(args.kind, args.n, st.cap)


def cmd_pair_types(args, st: Settings):
    cs = structures.enumerate_pair_types(args.kind, args.n, cap=st.cap)
    out = {"count": len(cs)}
    if args.list:
        out["types"] = [serialize.configuration_to_json(c) for c in cs]
    return out


def cmd_compose(args, st: Settings):
    r = semigroup.compose(_iso(args, args.p), _iso(args, args.q))
    return serialize.partial_iso_to_json(r)


def cmd_star_closure(args, st: Settings):
    gens = [_iso(args, g) for g in args.gen]
    return serialize.table_to_json(semigroup.generate_star_semigroup(gens, st.closure_cap))


def cmd_green(args, st: Settings):
    p, q = _iso(args, args.p), _iso(args, args.q)
    w = semigroup.green_witness(p, q)
    return {"leq": w is not None, "predicate": semigroup.green_predicate(p, q),
            "witness": None if w is None else serialize.partial_iso_to_json(w)}


def cmd_idempotents(args, st: Settings):
    table = semigroup.window_monoid(args.kind, args.window, _window_context(args))
    return [serialize.partial_iso_to_json(e) for e in table.idempotents()]


def cmd_central(args, st: Settings):
    es = semigroup.central_idempotents(args.kind, args.window, _window_context(args))
    return [serialize.partial_iso_to_json(e) for e in es]


def cmd_hgroup(args, st: Settings):
    return serialize.table_to_json(semigroup.maximal_group(_iso(args, args.e)))


def cmd_amalgam_check(args, st: Settings):
    p, x, y = _iso(args, args.p), _iso(args, args.x), _iso(args, args.y)
    got = semigroup.check_amalgamation_lemma(p, x, y, args.growth)
    if got is None:
        return {"found": False}
    w, u, v = got
    return {"found": True, "window": w.window,
            **{k: serialize.partial_iso_to_json(t) for k, t in zip("wuv", got)}}


def cmd_roelcke_dist(args, st: Settings):
    for name, perm in (("g", args.g), ("h", args.h)):
        if len(perm) != args.n:
            raise DomainError("bad_permutation", f"--{name} has length {len(perm)}, expected {args.n}")
    d = semigroup.roelcke_metric(args.g, args.h, st.roelcke_cap)
    return {"value": serialize.rational(d), "d_left": serialize.rational(semigroup.d_left(args.g, args.h)),
            "d_right": serialize.rational(semigroup.d_right(args.g, args.h))}


def _stability_inputs(args):
    p = _type(args.type_x, args.kind, args.arity_x)
    q = _type(args.type_y, args.kind, args.arity_y)
    phi = parse_formula(args.formula, args.kind, (p.arity, q.arity))
    return phi, p, q


def cmd_stability(args, st: Settings):
    phi, p, q = _stability_inputs(args)
    v = stability.classify_stability(phi, p, q, joint_pattern=args.joint_pattern, length=args.length or st.length,
                                     node_budget=st.node_budget, time_budget=st.time_budget, cap=st.config_cap)
    return serialize.verdict_to_json(v)


def cmd_reduct(args, st: Settings):
    phi, p, q = _stability_inputs(args)
    r = stability.stable_reduct(phi, p, q, joint_pattern=args.joint_pattern, cap=st.config_cap)
    return serialize.formula_doc(r)


def cmd_witness(args, st: Settings):
    phi, p, q = _stability_inputs(args)
    r = stability.search_order_witness(phi, p, q, args.length or st.length, node_budget=st.node_budget,
                                       time_budget=st.time_budget, cap=st.config_cap)
    out = serialize.search_to_json(r)
    if r.witness is not None:
        out["limits"] = list(stability.double_limit_table(phi, r.witness))
    return out


def cmd_couplings(args, st: Settings):
    exact = not args.float
    n = args.n
    if args.op == "idempotents":
        parts = numeric.all_partitions(n) if n <= st.coupling_cap else None
        es = numeric.coupling_idempotent_scan(n, "partitions", st.coupling_cap)
        return [{"blocks": [list(b) for b in part.blocks], **serialize.coupling_to_json(e)}
                for part, e in zip(parts, es)]
    if args.op == "central":
        return [serialize.coupling_to_json(e) for e in numeric.coupling_central_idempotents(n, st.coupling_cap)]
    if args.op == "compose":
        if not (args.a and args.b):
            raise UsageError("compose needs --a and --b")
        a, b = serialize.read_coupling(args.a, exact), serialize.read_coupling(args.b, exact)
        return serialize.coupling_to_json(numeric.coupling_compose(a, b))
    if args.op == "involution":
        if not args.a:
            raise UsageError("involution needs --a")
        return serialize.coupling_to_json(numeric.coupling_involution(serialize.read_coupling(args.a, exact)))
    if args.op == "random":
        rng = np.random.default_rng(st.seed)
        return [serialize.coupling_to_json(numeric.random_coupling(n, rng, exact=exact)) for _ in range(args.count)]
    # join-law
    if n > st.coupling_cap:
        raise CapExceeded(f"n = {n} exceeds cap {st.coupling_cap}")
    parts = numeric.all_partitions(n)
    failures = []
    for P in parts:
        for Q in parts:
            prod = numeric.coupling_compose(P.coupling(exact), Q.coupling(exact))
            if prod != numeric.partition_join(P, Q).coupling(exact):
                failures.append((P, Q))
    doc = {"pairs": len(parts) ** 2, "failures": len(failures)}
    if failures:
        P, Q = failures[0]
        doc["first_failure"] = {"p": [list(b) for b in P.blocks], "q": [list(b) for b in Q.blocks]}
    return doc


def cmd_contractions(args, st: Settings):
    tol = args.tol if args.tol is not None else st.tol
    if args.op == "random-projections":
        rng = np.random.default_rng(st.seed)
        passed = 0
        for _ in range(args.count):
            n = int(rng.integers(2, 9))
            rank = int(rng.integers(0, n + 1))
            passed += numeric.check_projection_lemma(numeric.random_projection(n, rank, rng), tol)
        return {"checked": args.count, "passed": passed}
    if not args.a:
        raise UsageError(f"{args.op} needs --a")
    a = serialize.read_complex(args.a)
    if args.op == "norm":
        lo, hi = numeric.norm_bounds(a)
        return {"norm": (lo + hi) / 2, "lower": lo, "upper": hi}
    if args.op == "adjoint":
        return {"entries": serialize.complex_to_json(numeric.contraction_adjoint(a, tol).entries)}
    if args.op == "compose":
        if not args.b:
            raise UsageError("compose needs --b")
        b = serialize.read_complex(args.b)
        return {"entries": serialize.complex_to_json(numeric.contraction_compose(a, b, tol).entries)}
    return {"self_adjoint": numeric.check_projection_lemma(a, tol), "norm": numeric.operator_norm(a)}


COMMANDS = {
    "orbits": cmd_orbits,
    "pair-types": cmd_pair_types,
    "compose": cmd_compose,
    "star-closure": cmd_star_closure,
    "green": cmd_green,
    "idempotents": cmd_idempotents,
    "central": cmd_central,
    "hgroup": cmd_hgroup,
    "amalgam-check": cmd_amalgam_check,
    "roelcke-dist": cmd_roelcke_dist,
    "stability": cmd_stability,
    "reduct": cmd_reduct,
    "witness": cmd_witness,
    "couplings": cmd_couplings,
    "contractions": cmd_contractions,
}


def _common(suppress: bool) -> argparse.ArgumentParser:
    extra = {"default": argparse.SUPPRESS} if suppress else {}
    flag = {"default": argparse.SUPPRESS} if suppress else {"default": False}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"key=value settings file (default: ${CONFIG_ENV})", **extra)
    common.add_argument("--seed", type=int, help="seed for randomized scans", **extra)
    common.add_argument("--threads", type=int, help="worker count (results are identical at any count)", **extra)
    common.add_argument("--pretty", action="store_true", help="human-readable rendering instead of JSON", **flag)
    common.add_argument("--timing", action="store_true", help="report wall-clock time in timing_ms", **flag)
    common.add_argument("--output", help="also write the JSON document to this path", **extra)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oligoscope", description=__doc__.splitlines()[0], parents=[_common(False)])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    def window_args(p):
        p.add_argument("--kind", type=_kind, default=structures.PURE_SET)
        p.add_argument("--window", type=int, required=True)
        p.add_argument("--context", help="structure JSON (inline or path) for both sides, or a list of two")

    p = add("orbits", "number of n-types (orbits on n-tuples)")
    p.add_argument("--kind", type=_kind, required=True)
    p.add_argument("--n", type=int, required=True)

    p = add("pair-types", "quantifier-free types of pairs of n-windows")
    p.add_argument("--kind", type=_kind, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--list", action="store_true", help="include the configurations")

    p = add("compose", "product of two partial isomorphisms")
    window_args(p)
    p.add_argument("--p", type=_pairs, required=True, help="pairs a:b meaning x(a) = y(b)")
    p.add_argument("--q", type=_pairs, required=True)

    p = add("star-closure", "star subsemigroup generated by partial isomorphisms")
    window_args(p)
    p.add_argument("--gen", type=_pairs, action="append", required=True)

    p = add("green", "left Green preorder p <=_L q")
    window_args(p)
    p.add_argument("--p", type=_pairs, required=True)
    p.add_argument("--q", type=_pairs, required=True)

    p = add("idempotents", "idempotents of the window monoid")
    window_args(p)

    p = add("central", "central idempotents of the window")
    window_args(p)

    p = add("hgroup", "maximal group of an idempotent")
    window_args(p)
    p.add_argument("--e", type=_pairs, required=True)

    p = add("amalgam-check", "bounded search for the amalgamation triple (w, u, v)")
    window_args(p)
    p.add_argument("--p", type=_pairs, required=True)
    p.add_argument("--x", type=_pairs, required=True)
    p.add_argument("--y", type=_pairs, required=True)
    p.add_argument("--growth", type=int)

    p = add("roelcke-dist", "Roelcke distance between two permutations")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--g", type=_ints, required=True)
    p.add_argument("--h", type=_ints, required=True)

    for name, help_text in (("stability", "classify a formula on p(x) & q(y)"),
                            ("reduct", "stable reduct of a stable formula"),
                            ("witness", "half-graph witness search")):
        p = add(name, help_text)
        p.add_argument("--kind", type=_kind, required=True)
        p.add_argument("--formula", required=True)
        p.add_argument("--type-x", default="distinct", help="distinct[:n], proper, or a type JSON (@path)")
        p.add_argument("--type-y", default="distinct")
        p.add_argument("--arity-x", type=int, default=1)
        p.add_argument("--arity-y", type=int, default=1)
        p.add_argument("--length", type=int)
        p.add_argument("--joint-pattern", type=_ints, help="equality pattern of (x.., y..), e.g. 0,0")

    p = add("couplings", "self-couplings of the uniform n-point space")
    p.add_argument("--op", choices=["idempotents", "central", "compose", "involution", "random", "join-law"],
                   required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--float", action="store_true", help="float mode instead of exact rationals")

    p = add("contractions", "finite-rank contractions")
    p.add_argument("--op", choices=["norm", "adjoint", "compose", "check", "random-projections"], required=True)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--tol", type=float)
    return parser


def _echo(args) -> dict:
    skip = {"config", "pretty", "timing", "output", "command"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip or v is None:
            continue
        if isinstance(v, ClassKind):
            v = str(v)
        elif isinstance(v, list):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        out[k] = v
    return {"command": args.command, "args": out}


def _render(doc, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(doc, dict):
        lines = []
        for k, v in doc.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_render(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
        return "\n".join(lines)
    if isinstance(doc, list):
        if all(not isinstance(v, (dict, list)) for v in doc):
            return pad + " ".join(json.dumps(v) for v in doc)
        out = []
        for v in doc:
            if isinstance(v, list) and all(not isinstance(u, (dict, list)) for u in v):
                out.append(f"{pad}- " + " ".join(json.dumps(u) for u in v))
            elif isinstance(v, (dict, list)):
                out.append(f"{pad}-\n{_render(v, indent + 1)}")
            else:
                out.append(f"{pad}- {json.dumps(v)}")
        return "\n".join(out)
    return pad + json.dumps(doc)


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        st = load_settings(args.config)
    except UsageError as exc:
        print(f"oligoscope: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        st.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            print("oligoscope: --threads must be >= 1", file=sys.stderr)
            return 2
        st.threads = args.threads
    doc = {"tool_version": __version__, "command_echo": _echo(args)}
    start = time.perf_counter()
    code = 0
    try:
        result = COMMANDS[args.command](args, st)
        doc["result"] = result
    except UsageError as exc:
        print(f"oligoscope {args.command}: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        doc["error"] = {"code": exc.code, "message": str(exc)}
        code = 1
    except (ValueError, CapExceeded, OSError, KeyError) as exc:
        message = str(exc)
        if isinstance(exc, numeric.NotAContraction):
            doc["error"] = {"code": "not_a_contraction", "message": message, "norm": exc.norm}
        else:
            doc["error"] = {"code": _error_code(exc), "message": message}
        code = 1
    doc["timing_ms"] = round((time.perf_counter() - start) * 1000, 3) if args.timing else None
    text = json.dumps(doc, indent=2, sort_keys=False)
    if args.output:
        Path(args.output).write_text(text + "\n")
    print(_render(doc) if args.pretty else text)
    return code


if __name__ == "__main__":
    sys.exit(main())
