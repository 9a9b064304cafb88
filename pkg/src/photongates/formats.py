"""JSON circuit files and gate specification files.

Both formats are validated against a JSON schema; violations are reported with
the line and column of the offending value. Output is deterministic: sorted
keys and floats written with 17 significant digits.
"""

from __future__ import annotations

import ast
import json
import math
import operator
import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from json.decoder import scanstring
from typing import Any

import jsonschema

from .elements import BeamSplitter, ModeFilterDetector, ParitySorter, PhaseShift, Relabel
from .engine import BasisRow, Circuit, GateEncoding, HeraldReport, PhotonEncoding
from .fock import MAX_ELL, FockState, Occupation, make_state
from .synth import GateSpec, SynthesisError

FORMAT_VERSION = 1


class FormatError(ValueError):
    """A document that does not parse or does not satisfy its schema."""


# -- deterministic output -------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    if x == 0:
        return "0.0"
    text = format(x, ".17g")
    return text if any(ch in text for ch in ".e") else text + ".0"


def dumps(obj: Any, indent: int | None = 2) -> str:
    """JSON text with sorted keys and floats at 17 significant digits."""

    def enc(o: Any, level: int) -> str:
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _fmt_float(o)
        if isinstance(o, complex):
            return enc({"re": o.real, "im": o.imag}, level)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, Mapping):
            if not o:
                return "{}"
            items = sorted((str(k), v) for k, v in o.items())
            body = ",".join(f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in items)
            return "{" + body + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            body = ",".join(f"{pad}{enc(v, level + 1)}" for v in o)
            return "[" + body + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0)


# -- positions for error messages -----------------------------------------------------------

_WS = re.compile(r"[ \t\n\r]*")
_DECODER = json.JSONDecoder()


def _positions(text: str) -> dict[tuple, int]:
    """Character offset of every value in a JSON document, keyed by its path."""
    pos: dict[tuple, int] = {}

    def ws(i: int) -> int:
        return _WS.match(text, i).end()

    def value(i: int, path: tuple) -> int:
        i = ws(i)
        pos[path] = i
        ch = text[i]
        if ch == "{":
            i = ws(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = scanstring(text, ws(i) + 1)
                i = ws(i) + 1  # colon
                i = ws(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = ws(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = ws(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = _DECODER.raw_decode(text, i)
        return end

    value(0, ())
    return pos


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _load(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None


def _validate(doc: Any, schema: dict, text: str, source: str) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = list(validator.iter_errors(doc))
    if not errors:
        return
    pos = _positions(text)
    located = []
    for err in errors:
        path = tuple(err.absolute_path)
        off = pos.get(path, 0)
        line, col = _line_col(text, off)
        where = "/" + "/".join(map(str, path))
        located.append((off, f"{source}:{line}:{col}: {err.message} (at {where})"))
    located.sort()
    raise FormatError("\n".join(msg for _, msg in located))


def _fail(text: str, source: str, path: tuple, message: str) -> FormatError:
    off = _positions(text).get(path, 0) if text else 0
    line, col = _line_col(text, off) if text else (1, 1)
    return FormatError(f"{source}:{line}:{col}: {message} (at /{'/'.join(map(str, path))})")


# -- circuit files ----------------------------------------------------------------------------

_NAME = {"type": "string", "minLength": 1}
_PAIR = {"type": "array", "items": _NAME, "minItems": 2, "maxItems": 2}
_NUMBER = {"type": "number"}


def _element_schema(tag: str, props: dict, required: list[str]) -> dict:
    return {
        "type": "object",
        "properties": {"type": {"const": tag}, **props},
        "required": ["type", *required],
        "additionalProperties": False,
    }


CIRCUIT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "paths": {"type": "array", "items": _NAME, "uniqueItems": True},
        "max_ell": {"type": "integer", "minimum": 0},
        "elements": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type"],
                "properties": {"type": {"enum": ["ps", "bs", "phase", "relabel", "filter_detector"]}},
                "allOf": [
                    {
                        "if": {"properties": {"type": {"const": "ps"}}},
                        "then": _element_schema(
                            "ps",
                            {"order": {"type": "integer", "minimum": 1}, "inputs": _PAIR, "outputs": _PAIR},
                            ["order", "inputs"],
                        ),
                    },
                    {
                        "if": {"properties": {"type": {"const": "bs"}}},
                        "then": _element_schema("bs", {"inputs": _PAIR, "outputs": _PAIR}, ["inputs"]),
                    },
                    {
                        "if": {"properties": {"type": {"const": "phase"}}},
                        "then": _element_schema(
                            "phase",
                            {
                                "path": _NAME,
                                "phases": {
                                    "type": "object",
                                    "propertyNames": {"pattern": "^[0-9]+$"},
                                    "additionalProperties": _NUMBER,
                                },
                            },
                            ["path", "phases"],
                        ),
                    },
                    {
                        "if": {"properties": {"type": {"const": "relabel"}}},
                        "then": _element_schema(
                            "relabel",
                            {
                                "path": _NAME,
                                "perm": {
                                    "type": "object",
                                    "propertyNames": {"pattern": "^[0-9]+$"},
                                    "additionalProperties": {"type": "integer", "minimum": 0},
                                },
                            },
                            ["path", "perm"],
                        ),
                    },
                    {
                        "if": {"properties": {"type": {"const": "filter_detector"}}},
                        "then": _element_schema(
                            "filter_detector",
                            {
                                "path": _NAME,
                                "detector": _NAME,
                                "filter": {
                                    "type": "array",
                                    "minItems": 1,
                                    "items": {
                                        "type": "object",
                                        "properties": {
                                            "ell": {"type": "integer", "minimum": 0},
                                            "re": _NUMBER,
                                            "im": _NUMBER,
                                        },
                                        "required": ["ell", "re", "im"],
                                        "additionalProperties": False,
                                    },
                                },
                            },
                            ["path", "detector", "filter"],
                        ),
                    },
                ],
            },
        },
        "heralds": {"type": "array", "items": _NAME, "uniqueItems": True},
        "outputs": {"type": "array", "items": _NAME, "uniqueItems": True},
        "input_state": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "occupation": {
                        "type": "object",
                        "additionalProperties": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 0},
                        },
                    },
                    "re": _NUMBER,
                    "im": _NUMBER,
                },
                "required": ["occupation", "re", "im"],
                "additionalProperties": False,
            },
        },
        "detector_policy": {"enum": ["exactly_one", "at_least_one"]},
        "encoding": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": _NAME,
                    "role": {"type": "string"},
                    "dim": {"type": "integer", "minimum": 1},
                    "in_path": _NAME,
                    "out_path": _NAME,
                    "in_modes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "out_modes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                },
                "required": ["name", "role", "dim", "in_path", "out_path", "in_modes", "out_modes"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["version", "paths", "max_ell", "elements", "heralds", "outputs", "input_state"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class CircuitFile:
    circuit: Circuit
    input_state: FockState
    encoding: GateEncoding | None = None


def element_to_json(e) -> dict:
    if isinstance(e, ParitySorter):
        return {"type": "ps", "order": e.order, "inputs": list(e.inputs), "outputs": list(e.outputs)}
    if isinstance(e, BeamSplitter):
        return {"type": "bs", "inputs": list(e.inputs), "outputs": list(e.outputs)}
    if isinstance(e, PhaseShift):
        return {"type": "phase", "path": e.path, "phases": {str(k): v for k, v in e.phases.items()}}
    if isinstance(e, Relabel):
        return {"type": "relabel", "path": e.path, "perm": {str(k): v for k, v in e.perm.items()}}
    if isinstance(e, ModeFilterDetector):
        return {
            "type": "filter_detector",
            "path": e.path,
            "detector": e.detector,
            "filter": [{"ell": k, "re": v.real, "im": v.imag} for k, v in e.filter.items()],
        }
    raise TypeError(f"unknown element {e!r}")


def element_from_json(rec: Mapping) -> Any:
    tag = rec["type"]
    if tag == "ps":
        return ParitySorter(rec["order"], tuple(rec["inputs"]), tuple(rec["outputs"]) if "outputs" in rec else None)
    if tag == "bs":
        return BeamSplitter(tuple(rec["inputs"]), tuple(rec["outputs"]) if "outputs" in rec else None)
    if tag == "phase":
        return PhaseShift(rec["path"], {int(k): v for k, v in rec["phases"].items()})
    if tag == "relabel":
        return Relabel(rec["path"], {int(k): v for k, v in rec["perm"].items()})
    if tag == "filter_detector":
        vec: dict[int, complex] = {}
        for item in rec["filter"]:
            vec[item["ell"]] = vec.get(item["ell"], 0j) + complex(item["re"], item["im"])
        return ModeFilterDetector(rec["path"], vec, rec["detector"])
    raise FormatError(f"unknown element type {tag!r}")


def occupation_to_json(occ: Occupation) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    for (path, ell), n in occ:
        out.setdefault(path, []).extend([ell] * n)
    return out


def state_to_json(state: FockState) -> list[dict]:
    return [
        {"occupation": occupation_to_json(occ), "re": amp.real, "im": amp.imag} for occ, amp in state.terms.items()
    ]


def state_from_json(items: Sequence[Mapping], max_ell: int = MAX_ELL) -> FockState:
    kets = [(item["occupation"], complex(item["re"], item["im"])) for item in items]
    return make_state(kets, max_ell=max_ell, normalize=False, mixed_number=True)


def circuit_to_json(
    circuit: Circuit, input_state: FockState, encoding: GateEncoding | None = None
) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "paths": list(circuit.paths),
        "max_ell": circuit.max_ell,
        "elements": [element_to_json(e) for e in circuit.elements],
        "heralds": list(circuit.heralds),
        "outputs": list(circuit.outputs),
        "input_state": state_to_json(input_state),
    }
    if circuit.detector_policy != "exactly_one":
        doc["detector_policy"] = circuit.detector_policy
    if encoding is not None:
        doc["encoding"] = [
            {
                "name": p.name,
                "role": p.role,
                "dim": p.dim,
                "in_path": p.in_path,
                "out_path": p.out_path,
                "in_modes": list(p.in_modes),
                "out_modes": list(p.out_modes),
            }
            for p in encoding.photons
        ]
    return doc


def parse_circuit(text: str, source: str = "<circuit>") -> CircuitFile:
    doc = _load(text, source)
    _validate(doc, CIRCUIT_SCHEMA, text, source)
    elements = []
    for i, rec in enumerate(doc["elements"]):
        try:
            elements.append(element_from_json(rec))
        except ValueError as exc:
            raise _fail(text, source, ("elements", i), str(exc)) from None
    try:
        circuit = Circuit(
            tuple(doc["paths"]),
            tuple(elements),
            tuple(doc["heralds"]),
            tuple(doc["outputs"]),
            max_ell=doc["max_ell"],
            detector_policy=doc.get("detector_policy", "exactly_one"),
        )
    except ValueError as exc:
        raise _fail(text, source, ("elements",), str(exc)) from None
    try:
        state = state_from_json(doc["input_state"], circuit.max_ell)
    except ValueError as exc:
        raise _fail(text, source, ("input_state",), str(exc)) from None
    encoding = None
    if "encoding" in doc:
        try:
            encoding = GateEncoding(
                tuple(
                    PhotonEncoding(
                        p["name"], p["role"], p["dim"], p["in_path"], p["out_path"],
                        tuple(p["in_modes"]), tuple(p["out_modes"]),
                    )
                    for p in doc["encoding"]
                )
            )
        except ValueError as exc:
            raise _fail(text, source, ("encoding",), str(exc)) from None
    return CircuitFile(circuit, state, encoding)


def read_circuit(path: str) -> CircuitFile:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read(), path)


# -- gate specification files -------------------------------------------------------------------

GATE_KINDS = ("cx", "ccx", "cphase", "general_affine", "table", "shift")

_DIM = {"type": "integer", "minimum": 2}

GATE_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "kind": {"enum": list(GATE_KINDS)},
        "d": {"oneOf": [_DIM, {"type": "array", "items": _DIM, "minItems": 1}]},
        "arity": {"type": "integer", "minimum": 1},
        "names": {"type": "array", "items": _NAME, "uniqueItems": True},
        "parameters": {
            "type": "object",
            "properties": {
                "expr": {"type": "string"},
                "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                "offset": {"type": "array", "items": {"type": "integer"}},
                "rows": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    },
                },
                "s": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "phases": {
            "type": "object",
            "properties": {
                "order": {"type": "integer", "minimum": 1},
                "expr": {"type": "string"},
            },
            "required": ["expr"],
            "additionalProperties": False,
        },
    },
    "required": ["kind", "d", "arity"],
    "additionalProperties": False,
}

_BINOPS: dict[type, Callable[[int, int], int]] = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Mod: operator.mod,
    ast.FloorDiv: operator.floordiv,
    ast.Pow: operator.pow,
}


def compile_expr(text: str, arity: int, d: int) -> Callable[[Sequence[int]], tuple[int, ...]]:
    """Integer expression(s) in ``c1..cN`` and ``d``; ``2c1`` means ``2*c1``.

    Only arithmetic on integers is accepted; anything else is a FormatError.
    """
    src = re.sub(r"(\d)\s*([A-Za-z_(])", r"\1*\2", text)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise FormatError(f"cannot parse expression {text!r}: {exc.msg}") from None
    names = {f"c{i + 1}" for i in range(arity)} | {"d"}

    def check(node: ast.AST) -> None:
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.Tuple):
            for elt in node.elts:
                check(elt)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            pass
        elif isinstance(node, ast.Name) and node.id in names:
            pass
        else:
            raise FormatError(f"unsupported syntax in expression {text!r}: {ast.dump(node)[:60]}")

    check(tree)

    def ev(node: ast.AST, env: Mapping[str, int]) -> Any:
        if isinstance(node, ast.Tuple):
            return tuple(ev(e, env) for e in node.elts)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant):
            return node.value
        return env[node.id]

    def fn(levels: Sequence[int]) -> tuple[int, ...]:
        env = {f"c{i + 1}": int(v) for i, v in enumerate(levels)}
        env["d"] = d
        out = ev(tree.body, env)
        return out if isinstance(out, tuple) else (out,)

    return fn


def _dims(doc: Mapping) -> tuple[int, ...]:
    d = doc["d"]
    dims = tuple(d) if isinstance(d, list) else (d,) * doc["arity"]
    if len(dims) != doc["arity"]:
        raise FormatError(f"d lists {len(dims)} dimensions but arity is {doc['arity']}")
    return dims


def gate_spec_from_doc(doc: Mapping) -> GateSpec:
    kind = doc["kind"]
    dims = _dims(doc)
    params = doc.get("parameters", {})
    arity = doc["arity"]
    required_arity = {"cx": 2, "ccx": 3, "cphase": 2, "shift": 1}
    if kind in required_arity and arity != required_arity[kind]:
        raise FormatError(f"kind {kind!r} needs arity {required_arity[kind]}, got {arity}")
    if kind == "cx":
        if dims[0] != dims[1]:
            raise FormatError("cx needs equal control and target dimensions")
        spec = GateSpec.cx(dims[0])
    elif kind == "ccx":
        if dims[0] != dims[1]:
            raise FormatError("ccx needs equal control dimensions")
        spec = GateSpec.ccx(dims[0], dims[2])
    elif kind == "cphase":
        if dims[0] != dims[1]:
            raise FormatError("cphase needs equal dimensions")
        spec = GateSpec.cphase(dims[0])
    elif kind == "shift":
        if "s" not in params:
            raise FormatError("kind 'shift' needs parameters.s")
        spec = GateSpec.shift(dims[0], params["s"])
    elif kind == "general_affine":
        if len(set(dims)) != 1:
            raise FormatError("general_affine needs a single dimension d")
        if "expr" in params:
            fn = compile_expr(params["expr"], arity, dims[0])
            spec = GateSpec.from_function(
                dims, lambda c: tuple(v % dims[0] for v in fn(c)), kind="general_affine",
                names=tuple(f"c{i + 1}" for i in range(arity)),
            )
        elif "matrix" in params:
            matrix = params["matrix"]
            if len(matrix) != arity or any(len(row) != arity for row in matrix):
                raise FormatError(f"matrix must be {arity}x{arity}")
            spec = GateSpec.affine(dims[0], matrix, params.get("offset"))
        else:
            raise FormatError("kind 'general_affine' needs parameters.expr or parameters.matrix")
    else:
        if "rows" in params:
            table = {tuple(i): tuple(o) for i, o in params["rows"]}
        elif "expr" in params:
            fn = compile_expr(params["expr"], arity, max(dims))
            table = {c: fn(c) for c in GateSpec.from_function(dims, lambda c: c).domain()}
        else:
            raise FormatError("kind 'table' needs parameters.rows or parameters.expr")
        spec = GateSpec(dims, table, kind="table")
    if "phases" in doc:
        ph = doc["phases"]
        pf = compile_expr(ph["expr"], arity, max(dims))
        spec = GateSpec(
            spec.dims,
            spec.table,
            {c: pf(c)[0] for c in spec.domain()},
            kind=spec.kind,
            names=spec.names,
            rewrite=spec.rewrite,
            omega_order=ph.get("order", spec.omega_order),
        )
    if "names" in doc:
        spec = GateSpec(
            spec.dims, spec.table, spec.phase_exponents, spec.kind, tuple(doc["names"]), spec.rewrite,
            spec.omega_order,
        )
    return spec


def parse_gate_spec(text: str, source: str = "<gate spec>") -> GateSpec:
    doc = _load(text, source)
    _validate(doc, GATE_SCHEMA, text, source)
    try:
        return gate_spec_from_doc(doc)
    except (FormatError, SynthesisError) as exc:
        raise _fail(text, source, ("parameters",) if "parameters" in doc else ("kind",), str(exc)) from None


def read_gate_spec(path: str) -> GateSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_gate_spec(fh.read(), path)


# -- reports ----------------------------------------------------------------------------------


def report_to_json(report: HeraldReport, rows: Sequence[BasisRow] | None = None) -> dict:
    doc: dict[str, Any] = {
        "p": report.success_probability,
        "discarded": report.discarded_probability,
        "heralded": report.heralded,
        "conditional_state": state_to_json(report.conditional_state),
        "branch": state_to_json(report.branch),
    }
    if rows is not None:
        doc["basis_table"] = [
            {
                "inputs": list(r.inputs),
                "outputs": list(r.outputs) if r.outputs is not None else None,
                "amplitude": {"re": r.amplitude.real, "im": r.amplitude.imag},
                "p": r.probability,
            }
            for r in rows
        ]
    return doc
