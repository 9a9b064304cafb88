import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import Network, bs_closed_form, ps_closed_form

from photongates.elements import (
    BS_MATRIX,
    BeamSplitter,
    ModeFilterDetector,
    ParitySorter,
    PhaseShift,
    Relabel,
    apply_element,
    detect,
    override_ps_matrix,
    ps_matrix,
    uniform_filter,
)
from photongates.fock import FockError, make_state, occupation


@pytest.mark.parametrize("order", [1, 2, 3, 4])
@pytest.mark.parametrize("ell", range(0, 11))
def test_ps_matrix_matches_closed_form(order, ell):
    assert np.allclose(ps_matrix(order, ell), ps_closed_form(order, ell), atol=1e-14)


def test_bs_matches_odd_mode_sorter():
    assert np.allclose(BS_MATRIX, bs_closed_form(), atol=1e-15)
    assert np.allclose(BS_MATRIX, ps_matrix(2, 1), atol=1e-15)


@pytest.mark.parametrize(
    "order, ell, transmit",
    [(2, 0, 1.0), (2, 4, 1.0), (2, 8, 1.0), (2, 2, 0.0), (2, 6, 0.0), (2, 10, 0.0)]
    + [(1, ell, 1.0 if ell % 2 == 0 else 0.0) for ell in range(9)],
)
def test_sorter_routes_exactly(order, ell, transmit):
    u = ps_matrix(order, ell)
    # exact zeros, not merely small ones, for multiples of pi/2
    assert abs(u[0, 0]) == transmit
    assert abs(u[1, 0]) == 1 - transmit


@pytest.mark.parametrize("ell", [1, 3, 5, 7])
def test_ps2_splits_odd_modes(ell):
    assert abs(ps_matrix(2, ell)[0, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("order", [0, -1, True, 1.5])
def test_sorter_order_validation(order):
    with pytest.raises(ValueError):
        ps_matrix(order, 0)
    with pytest.raises(ValueError):
        ParitySorter(order, ("a", "b"))


def test_two_port_path_validation():
    with pytest.raises(ValueError):
        ParitySorter(2, ("a", "a"))
    with pytest.raises(ValueError):
        BeamSplitter(("a",))


def test_hom_dip():
    s = make_state([({"p": 1, "q": 1}, 1)])
    out = apply_element(s, BeamSplitter(("p", "q")))
    assert abs(out.amplitude({"p": 1, "q": 1})) < 1e-15
    assert abs(out.amplitude({"p": [1, 1]})) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert out.norm2() == pytest.approx(1.0, abs=1e-15)


def test_odd_mode_pair_bunches_with_sqrt2_factor():
    s = make_state([({"p": 1, "q": 1}, 1)])
    out = apply_element(s, ParitySorter(2, ("p", "q")))
    assert set(out.terms) == {occupation({"p": [1, 1]}), occupation({"q": [1, 1]})}
    for amp in out.terms.values():
        assert abs(amp) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_even_mode_pair_passes_ps2_without_bunching():
    s = make_state([({"p": 0, "q": 0}, 1)])
    out = apply_element(s, ParitySorter(2, ("p", "q")))
    assert list(out.terms) == [occupation({"p": 0, "q": 0})]
    assert out.amplitude({"p": 0, "q": 0}) == pytest.approx(-1)


def test_two_photons_same_slot_normalization():
    s = make_state([({"p": [3, 3]}, 1)])
    out = apply_element(s, ParitySorter(2, ("p", "q")))
    # (a+b)^2/2 expansion: |2,0> and |0,2> get 1/2, |1,1> gets 1/sqrt(2)
    mags = {k: abs(v) for k, v in out.terms.items()}
    assert mags[occupation({"p": [3, 3]})] == pytest.approx(0.5)
    assert mags[occupation({"q": [3, 3]})] == pytest.approx(0.5)
    assert mags[occupation({"p": 3, "q": 3})] == pytest.approx(1 / math.sqrt(2))


def test_phase_shift_and_relabel():
    s = make_state([({"a": 1}, 1), ({"a": 2}, 1)])
    out = apply_element(s, PhaseShift("a", {1: math.pi}))
    assert out.amplitude({"a": 1}) == pytest.approx(-1 / math.sqrt(2))
    out = apply_element(s, Relabel("a", {1: 2, 2: 1}))
    assert out.amplitude({"a": 2}) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(FockError):
        apply_element(s, Relabel("a", {1: 2}))
    with pytest.raises(ValueError):
        Relabel("a", {1: 2, 3: 2})


def test_relabel_above_max_ell_is_rejected():
    s = make_state([({"a": 1}, 1)])
    with pytest.raises(FockError):
        apply_element(s, Relabel("a", {1: 9}))


def test_filter_must_be_normalized():
    with pytest.raises(ValueError):
        ModeFilterDetector("a", {0: 1, 1: 1}, "D")
    assert ModeFilterDetector("a", uniform_filter({0, 3}), "D").filter[3] == pytest.approx(1 / math.sqrt(2))


def test_detect_exactly_one():
    det = ModeFilterDetector("d", uniform_filter({0, 1}), "D1")
    s = make_state([({"d": 1, "x": 0}, 1), ({"d": 2, "x": 1}, 1), ({"d": [0, 0], "x": 0}, 1)], mixed_number=True)
    out = detect(s, det)
    assert dict(out.terms) == {occupation({"x": 0}): pytest.approx(1 / math.sqrt(2) / math.sqrt(3))}


def test_detect_at_least_one_projects_onto_filter_mode():
    f = uniform_filter({0, 1})
    det = ModeFilterDetector("d", f, "D1")
    # |f,f> = (b^dag)^2/sqrt2 |vac> with b^dag = (a0^dag + a1^dag)/sqrt2 puts 1/2 on |0,0>
    s = make_state([({"d": [0, 0]}, 1)])
    out = detect(s, det, "at_least_one")
    assert abs(out.amplitude(())) == pytest.approx(0.5, abs=1e-15)
    assert len(detect(s, det, "exactly_one")) == 0
    with pytest.raises(ValueError):
        detect(s, det, "sometimes")


def test_override_hook_restores():
    with override_ps_matrix(lambda n, ell: np.eye(2, dtype=complex)):
        assert np.allclose(ps_matrix(2, 2), np.eye(2))
    assert abs(ps_matrix(2, 2)[1, 0]) == 1


PATHS = ("p0", "p1", "p2")


@st.composite
def networks(draw):
    elements = []
    for _ in range(draw(st.integers(1, 5))):
        kind = draw(st.sampled_from(["ps", "bs", "phase"]))
        a, b = draw(st.permutations(PATHS))[:2]
        if kind == "ps":
            elements.append(ParitySorter(draw(st.integers(1, 4)), (a, b)))
        elif kind == "bs":
            elements.append(BeamSplitter((a, b)))
        else:
            phases = draw(st.dictionaries(st.integers(0, 5), st.floats(-3.2, 3.2), max_size=3))
            elements.append(PhaseShift(a, phases))
    photons = draw(st.lists(st.tuples(st.sampled_from(PATHS), st.integers(0, 5)), min_size=1, max_size=4))
    return elements, photons


@given(networks())
@settings(max_examples=80, deadline=None)
def test_multiphoton_action_matches_permanents(net):
    elements, photons = net
    state = make_state([(photons, 1)])
    for e in elements:
        state = apply_element(state, e)
    oracle = Network(PATHS, sorted({ell for _, ell in photons}))
    for e in elements:
        if isinstance(e, ParitySorter):
            oracle.ps(e.order, *e.inputs)
        elif isinstance(e, BeamSplitter):
            oracle.bs(*e.inputs)
        else:
            oracle.phase(e.path, e.phases)
    assert state.norm2() == pytest.approx(1.0, abs=1e-12)
    for occ, amp in state.terms.items():
        out = [slot for slot, n in occ for _ in range(n)]
        assert amp == pytest.approx(oracle.amplitude(sorted(photons), out), abs=1e-12)
