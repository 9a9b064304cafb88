import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photongates.engine import run
from photongates.formats import (
    FormatError,
    circuit_to_json,
    compile_expr,
    dumps,
    parse_circuit,
    parse_gate_spec,
    report_to_json,
)
from photongates.synth import GateSpec
from photongates.verify import designated_circuit, hom_circuit, standard_gates


def test_dumps_sorts_keys_and_fixes_float_format():
    text = dumps({"b": 0.1, "a": [1, 1.0, 2.5e-20, True, None]}, indent=None)
    assert text == '{"a": [1,1.0,2.4999999999999999e-20,true,null],"b": 0.10000000000000001}'
    assert json.loads(text)["b"] == 0.1


@given(st.floats(allow_nan=False, allow_infinity=False))
@settings(max_examples=200)
def test_float_formatting_round_trips(x):
    assert json.loads(dumps([x]))[0] == x


def test_nonfinite_floats_become_strings():
    assert json.loads(dumps([math.inf]))[0] == "inf"


@pytest.mark.parametrize("make", [hom_circuit, lambda: designated_circuit(3, 1, 0)])
def test_circuit_round_trip(make):
    circuit, state = make()
    text = dumps(circuit_to_json(circuit, state))
    cf = parse_circuit(text)
    assert cf.circuit == circuit
    assert dict(cf.input_state.terms) == dict(state.terms)
    assert dumps(report_to_json(run(cf.circuit, cf.input_state))) == dumps(report_to_json(run(circuit, state)))


def test_encoding_round_trip():
    r = standard_gates()["cx3"]
    cf = parse_circuit(dumps(circuit_to_json(r.circuit, r.ancilla, r.encoding)))
    assert cf.encoding == r.encoding


def _doc():
    circuit, state = hom_circuit()
    return circuit_to_json(circuit, state)


def test_unknown_key_is_rejected_with_line():
    doc = _doc()
    doc["colour"] = "blue"
    # an unexpected key is reported at the object that holds it
    with pytest.raises(FormatError, match=r"c\.json:1:1: .*colour"):
        parse_circuit(dumps(doc), "c.json")


def test_bad_element_reports_its_own_line():
    doc = _doc()
    doc["elements"][0]["type"] = "mirror"
    text = dumps(doc)
    line = next(i for i, ln in enumerate(text.splitlines(), 1) if "mirror" in ln)
    with pytest.raises(FormatError) as err:
        parse_circuit(text, "c.json")
    assert f"c.json:{line}:" in str(err.value)
    assert "/elements/0/type" in str(err.value)


def test_element_with_extra_field_is_rejected():
    doc = _doc()
    doc["elements"][0]["order"] = 2
    with pytest.raises(FormatError, match="order"):
        parse_circuit(dumps(doc))


def test_wrong_version_and_invalid_json():
    doc = _doc()
    doc["version"] = 2
    with pytest.raises(FormatError, match="version"):
        parse_circuit(dumps(doc))
    with pytest.raises(FormatError, match=r"<circuit>:2:\d+: invalid JSON"):
        parse_circuit('{\n  "version": 1,,\n}')


def test_semantic_errors_are_located():
    doc = _doc()
    doc["outputs"] = ["p", "zz"]
    with pytest.raises(FormatError, match="not declared"):
        parse_circuit(dumps(doc))


def test_unnormalized_filter_is_reported():
    circuit, state = designated_circuit(3, 1, 0)
    doc = circuit_to_json(circuit, state)
    doc["elements"][1]["filter"][0]["re"] = 2.0
    with pytest.raises(FormatError, match="squared norm"):
        parse_circuit(dumps(doc))


@pytest.mark.parametrize(
    "expr, levels, expected",
    [
        ("(c1+c2)%d,(2c1+c2)%d", (1, 1), (2, 0)),
        ("(c1+c2)%d,(2c1+c2)%d", (2, 2), (1, 0)),
        ("c1*c2", (2, 2), (4,)),
        ("-c1 % d", (1, 0), (2,)),
        ("2(c1+1)", (1, 0), (4,)),
    ],
)
def test_expressions(expr, levels, expected):
    assert compile_expr(expr, 2, 3)(levels) == expected


@pytest.mark.parametrize("expr", ["__import__('os')", "c3", "c1 if c2 else 0", "c1/2", "[c1]", "c1."])
def test_expressions_reject_non_arithmetic(expr):
    with pytest.raises(FormatError):
        compile_expr(expr, 2, 3)


@pytest.mark.parametrize(
    "doc, expected",
    [
        ({"kind": "cx", "d": 3, "arity": 2}, GateSpec.cx(3)),
        ({"kind": "ccx", "d": [2, 2, 4], "arity": 3}, GateSpec.ccx(2, 4)),
        ({"kind": "cphase", "d": 3, "arity": 2}, GateSpec.cphase(3)),
        ({"kind": "shift", "d": 3, "arity": 1, "parameters": {"s": 3}}, GateSpec.shift(3, 3)),
        (
            {"kind": "general_affine", "d": 3, "arity": 2, "parameters": {"matrix": [[1, 1], [2, 1]]}},
            GateSpec.affine(3, [[1, 1], [2, 1]]),
        ),
    ],
)
def test_gate_spec_kinds(doc, expected):
    spec = parse_gate_spec(json.dumps(doc))
    assert spec.table == expected.table
    assert spec.phase_exponents == expected.phase_exponents


def test_affine_expression_matches_matrix():
    doc = {"kind": "general_affine", "d": 3, "arity": 2, "parameters": {"expr": "(c1+c2)%d,(2c1+c2)%d"}}
    assert parse_gate_spec(json.dumps(doc)).table == GateSpec.affine(3, [[1, 1], [2, 1]]).table


def test_table_kind_and_phases():
    rows = [[[0], [1]], [[1], [0]]]
    doc = {"kind": "table", "d": 2, "arity": 1, "parameters": {"rows": rows}, "phases": {"expr": "c1", "order": 2}}
    spec = parse_gate_spec(json.dumps(doc))
    assert spec.table == {(0,): (1,), (1,): (0,)}
    assert spec.phase((1,)) == pytest.approx(-1)


@pytest.mark.parametrize(
    "doc, msg",
    [
        ({"kind": "cx", "d": 3, "arity": 3}, "arity"),
        ({"kind": "shift", "d": 3, "arity": 1}, "parameters.s"),
        ({"kind": "general_affine", "d": 3, "arity": 2}, "expr or parameters.matrix"),
        ({"kind": "toffoli", "d": 3, "arity": 2}, "toffoli"),
        ({"kind": "cx", "d": 3, "arity": 2, "extra": 1}, "extra"),
        ({"kind": "table", "d": 2, "arity": 1, "parameters": {"rows": [[[0], [1]]]}}, "not total"),
        ({"kind": "cx", "d": [2, 3], "arity": 2}, "equal"),
    ],
)
def test_gate_spec_errors(doc, msg):
    with pytest.raises(FormatError, match=msg):
        parse_gate_spec(json.dumps(doc))
