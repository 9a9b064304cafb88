import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photongates.elements import ModeFilterDetector, PhaseShift, Relabel
from photongates.engine import history_oracle, run, run_basis_table
from photongates.fock import fidelity, make_state, occupation, tensor
from photongates.synth import (
    GateSpec,
    SynthesisError,
    build_c2_ancilla,
    build_qnd_stage,
    build_rewrite_stage,
    controlling_state,
    cs_term,
    derive_examination_states,
    gate_residuals,
    rewrite_paths,
    synthesize,
    target_modes,
)
from photongates.verify import standard_gates

# Uniform success probabilities, cross-checked against the history oracle below
# wherever the photon count allows it.
FROZEN_P = {
    "cnot2": 1 / 288,
    "cx3": 1 / 4864,
    "cphase3": 1 / 256,
    "ccx4": 1 / 37888,
    "affine3": 1 / 23658496,
}


def test_gate_spec_validation():
    with pytest.raises(SynthesisError, match="not total"):
        GateSpec((2,), {(0,): (1,)})
    with pytest.raises(SynthesisError, match="outside"):
        GateSpec((2,), {(0,): (1,), (1,): (2,)})
    with pytest.raises(SynthesisError, match=">= 2"):
        GateSpec((1,), {(0,): (0,)})
    with pytest.raises(SynthesisError, match="names"):
        GateSpec((2,), {(0,): (1,), (1,): (0,)}, names=("a", "b"))


def test_non_bijection_is_rejected():
    spec = GateSpec.from_function((2, 2), lambda c: (0, 0))
    with pytest.raises(SynthesisError, match="bijection"):
        synthesize(spec)


@pytest.mark.parametrize("dims", [(5, 5), (2, 2, 2, 2)])
def test_unsupported_shapes(dims):
    spec = GateSpec.from_function(dims, lambda c: c)
    with pytest.raises(SynthesisError):
        synthesize(spec)


def test_target_encoding_is_odd():
    assert target_modes(3) == (1, 3, 5)
    assert target_modes(4) == (1, 3, 5, 7)


@pytest.mark.parametrize(
    "shift, expected",
    [
        (1, [{"a": 3, "b": 0, "c": 0}, {"a": 0, "b": 5, "c": 0}, {"a": 0, "b": 0, "c": 1}]),
        (2, [{"a": 5, "b": 0, "c": 0}, {"a": 0, "b": 1, "c": 0}, {"a": 0, "b": 0, "c": 3}]),
        (3, [{"a": 0, "b": 0, "c": 0}]),
        (0, [{"a": 0, "b": 0, "c": 0}]),
    ],
)
def test_controlling_states_d3(shift, expected):
    cs = controlling_state(3, shift, ("a", "b", "c"))
    assert set(cs.terms) == {occupation(e) for e in expected}
    amps = list(cs.terms.values())
    assert all(a == pytest.approx(amps[0]) and a.imag == 0 for a in amps)


def test_cs_term_lists_each_ancilla_path():
    assert cs_term(3, 1, 0, rewrite_paths("t", 3)) == {"t.r0": 3, "t.r1": 0, "t.r2": 0}


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("shift", [0, 1, 2, 3])
def test_rewrite_stage_shifts_every_level(d, shift):
    stage, cs = build_rewrite_stage(d, shift)
    circuit = stage.circuit()
    enc = target_modes(d)
    amps = []
    for t in range(d):
        data = make_state([({"t": enc[t]}, 1)])
        rep = run(circuit, tensor(data, cs))
        assert list(rep.branch.terms) == [occupation({"t": enc[(t + shift) % d]})]
        amps.append(next(iter(rep.branch.terms.values())))
    # compensating plates: every level gets the same real positive amplitude
    for a in amps:
        assert a.real > 0
        assert a == pytest.approx(amps[0], abs=1e-13)


@pytest.mark.parametrize("d", [2, 3])
def test_bare_rewrite_stage_has_no_plates(d):
    stage, _ = build_rewrite_stage(d, 1, compensate=False)
    assert not any(isinstance(e, PhaseShift) for e in stage.elements)
    assert sum(isinstance(e, ModeFilterDetector) for e in stage.elements) == d


def test_examination_search_d3():
    ex = derive_examination_states(3)
    assert ex.states == ((0, 0), (1, 0), (0, 2))
    assert sorted(ex.filters[0]) == [0, 1]
    assert sorted(ex.filters[1]) == [0, 2]


def test_examination_search_d2():
    ex = derive_examination_states(2)
    assert ex.states == ((0, 0), (1, 0))


def test_examination_d4_is_unsupported():
    with pytest.raises(SynthesisError, match="no examination ket"):
        build_qnd_stage(4)


@pytest.mark.parametrize("j", range(3))
@pytest.mark.parametrize("c", range(3))
def test_qnd_stage_heralds_own_level_only(j, c):
    stage, ex = build_qnd_stage(3, "c")
    e1, e2 = stage.ancilla_paths
    es = make_state([({e1: ex.states[j][0], e2: ex.states[j][1]}, 1)])
    rep = history_oracle(stage.circuit(), tensor(make_state([({"c": c}, 1)]), es))
    if j == c:
        assert list(rep.branch.terms) == [occupation({"c": c})]
    else:
        assert rep.success_probability == 0.0


@pytest.mark.parametrize("name", sorted(FROZEN_P))
def test_standard_gates_are_exact(name):
    result = standard_gates()[name]
    rows = run_basis_table(result.circuit, result.ancilla, result.encoding)
    for r in rows:
        assert r.outputs == result.spec.table[r.inputs]
        assert r.probability == pytest.approx(FROZEN_P[name], rel=1e-12)
    assert gate_residuals(result)["worst"] < 1e-12


@pytest.mark.parametrize("name", ["cnot2", "cx3", "cphase3"])
def test_frozen_probabilities_agree_with_oracle(name):
    result = standard_gates()[name]
    for levels in result.encoding.levels():
        rep = history_oracle(result.circuit, tensor(result.encoding.encode(levels), result.ancilla))
        assert rep.success_probability == pytest.approx(FROZEN_P[name], rel=1e-12)


def test_detector_counts():
    counts = {n: len(r.circuit.heralds) for n, r in standard_gates().items()}
    assert counts == {"cnot2": 4, "cx3": 5, "cphase3": 4, "ccx4": 8, "affine3": 10}
    assert standard_gates()["cx3"].circuit.heralds == ("D1", "D2", "D3", "D4", "D5")


def test_cx3_roles_and_relabels():
    r = standard_gates()["cx3"]
    assert r.examined == (0,) and r.rewritten == (1,)
    assert not any(isinstance(e, Relabel) for e in r.circuit.elements)
    aff = standard_gates()["affine3"]
    assert aff.examined == (0, 1) and aff.rewritten == (0, 1)
    assert sum(isinstance(e, Relabel) for e in aff.circuit.elements) == 4


def test_cphase_needs_no_rewrite():
    r = standard_gates()["cphase3"]
    assert r.rewritten == ()
    omega = cmath.exp(2j * math.pi / 3)
    rows = {x.inputs: x.amplitude for x in run_basis_table(r.circuit, r.ancilla, r.encoding)}
    for (c1, c2), amp in rows.items():
        assert amp / rows[0, 0] == pytest.approx(omega ** (c1 * c2), abs=1e-12)


def test_forced_rewrite_of_identity_shift():
    r = synthesize(GateSpec.shift(3, 3))
    assert list(r.ancilla.terms) == [occupation({"t.r0": 0, "t.r1": 0, "t.r2": 0})]
    assert len(r.circuit.heralds) == 3


def test_ccx_photons_above_oracle_limit_still_consistent():
    r = standard_gates()["ccx4"]
    assert max(r.ancilla.photon_numbers()) + 3 > 8
    rows = run_basis_table(r.circuit, r.ancilla, r.encoding)
    assert len(rows) == 16
    assert all(x.outputs == (x.inputs[0], x.inputs[1], (x.inputs[2] + x.inputs[0] * x.inputs[1]) % 4) for x in rows)


def test_synthesis_of_a_table_gate():
    # swap-like permutation on one qutrit with a level-dependent phase
    spec = GateSpec.from_function((3, 2), lambda c: ((c[0] + c[1]) % 3, c[1]), phase_fn=lambda c: c[0])
    r = synthesize(spec)
    rows = run_basis_table(r.circuit, r.ancilla, r.encoding)
    assert all(x.outputs == spec.table[x.inputs] for x in rows)
    assert gate_residuals(r)["worst"] < 1e-12


def test_w_equivalence_relabeling():
    anc = build_c2_ancilla(3)
    assert anc.w_state.photon_numbers() == {4}
    assert anc.state.photon_numbers() == {4}
    state = anc.state
    from photongates.fock import relabel_modes

    for path, perm in anc.relabeling:
        state = relabel_modes(state, path, perm)
    assert fidelity(state, anc.w_state) == pytest.approx(1.0, abs=1e-12)


betas = st.lists(
    st.complex_numbers(min_magnitude=0.05, max_magnitude=1, allow_nan=False, allow_infinity=False),
    min_size=3,
    max_size=3,
)


@given(betas, st.integers(0, 2))
@settings(max_examples=25, deadline=None)
def test_cx3_is_linear_on_superpositions(beta, t):
    r = standard_gates()["cx3"]
    enc = r.encoding
    data = make_state([({"c": c, "t": enc.photons[1].in_modes[t]}, b) for c, b in enumerate(beta)])
    ideal = make_state([(enc.output_occupation((c, (c + t) % 3)), b) for c, b in enumerate(beta)])
    rep = run(r.circuit, tensor(data, r.ancilla))
    assert fidelity(rep.conditional_state, ideal) == pytest.approx(1.0, abs=1e-9)
    assert rep.success_probability == pytest.approx(FROZEN_P["cx3"], rel=1e-9)
