import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photongates.fock import (
    FockError,
    FockState,
    fidelity,
    format_occupation,
    inner_product,
    make_state,
    occupation,
    photon_count,
    project,
    relabel_modes,
    tensor,
    tensor_all,
    vacuum,
)


def test_occupation_spellings_agree():
    a = occupation({"a": 3, "b": [0, 0]})
    b = occupation([("b", 0), ("a", 3), ("b", 0)])
    assert a == b == ((("a", 3), 1), (("b", 0), 2))
    assert occupation(a) == a
    assert photon_count(a) == 3


@pytest.mark.parametrize(
    "spec",
    [{"a": -1}, {"a": 9}, {"a": 1.5}, {"a": True}, [("a", 1, 2)]],
)
def test_occupation_rejects_bad_modes(spec):
    with pytest.raises(FockError):
        occupation(spec)


def test_max_ell_is_configurable():
    assert occupation({"a": 12}, max_ell=12) == ((("a", 12), 1),)


def test_make_state_normalizes_and_sums_repeats():
    s = make_state([({"a": 0}, 1), ({"a": 0}, 1), ({"a": 1}, 2)])
    assert s.norm2() == pytest.approx(1.0, abs=1e-15)
    assert s.amplitude({"a": 0}) == pytest.approx(s.amplitude({"a": 1}))


def test_make_state_rejects_empty_and_zero():
    with pytest.raises(FockError):
        make_state([])
    with pytest.raises(FockError):
        make_state([({"a": 0}, 0)])


def test_mixed_photon_number_needs_flag():
    with pytest.raises(FockError):
        make_state([({"a": 0}, 1), ({"a": [0, 0]}, 1)])
    s = make_state([({"a": 0}, 1), ({"a": [0, 0]}, 1)], mixed_number=True)
    assert s.photon_numbers() == {1, 2}


def test_pruning_drops_tiny_amplitudes():
    s = FockState({occupation({"a": 0}): 1.0, occupation({"a": 1}): 1e-15})
    assert len(s) == 1


def test_tensor_requires_disjoint_paths():
    a = make_state([({"a": 0}, 1)])
    with pytest.raises(FockError):
        tensor(a, a)
    b = make_state([({"b": 1}, 1), ({"b": 3}, 1)])
    t = tensor(a, b)
    assert t.amplitude({"a": 0, "b": 3}) == pytest.approx(1 / math.sqrt(2))
    assert tensor_all([]).terms == vacuum().terms


def test_relabel_moves_only_listed_modes():
    s = make_state([({"a": 0, "b": 0}, 1), ({"a": 1, "b": 0}, 1)])
    r = relabel_modes(s, "a", {0: 1, 1: 0})
    assert set(r.terms) == set(s.terms)
    r = relabel_modes(s, "a", {1: 5})
    assert r.amplitude({"a": 5, "b": 0}) == pytest.approx(s.amplitude({"a": 1, "b": 0}))


def test_relabel_collision_is_an_error():
    s = make_state([({"a": 0}, 1), ({"a": 1}, 1)])
    with pytest.raises(FockError):
        relabel_modes(s, "a", {0: 1})


def test_inner_product_and_fidelity():
    s = make_state([({"a": 0}, 1), ({"a": 1}, 1j)])
    t = make_state([({"a": 0}, 1)])
    assert inner_product(t, s) == pytest.approx(1 / math.sqrt(2))
    assert inner_product(s, t) == pytest.approx(1 / math.sqrt(2))
    assert fidelity(s, t) == pytest.approx(0.5)


def test_project_removes_matched_paths():
    s = make_state([({"a": 0, "b": 1}, 1), ({"a": 1, "b": 2}, 1)])
    p = project(s, {"a": 1})
    assert dict(p.terms) == {occupation({"b": 2}): pytest.approx(1 / math.sqrt(2))}
    assert len(project(s, {"a": 4})) == 0


def test_phase_fixed_convention():
    s = make_state([({"a": 0}, 1j), ({"a": 1}, -1)])
    f = s.phase_fixed()
    lead = f.amplitude({"a": 0})
    assert lead.imag == pytest.approx(0) and lead.real > 0
    assert fidelity(s, f) == pytest.approx(1.0)


def test_format_occupation():
    assert format_occupation(occupation({"a": [2, 2], "b": 0})) == "|a:2^2,b:0>"
    assert format_occupation(()) == "|vac>"


amps = st.complex_numbers(min_magnitude=0.1, max_magnitude=2, allow_nan=False, allow_infinity=False)
kets = st.dictionaries(st.integers(0, 6), amps, min_size=1, max_size=5)


@given(kets, kets)
@settings(max_examples=60, deadline=None)
def test_inner_product_is_conjugate_symmetric(x, y):
    s = make_state([({"a": k}, v) for k, v in x.items()])
    t = make_state([({"a": k}, v) for k, v in y.items()])
    assert inner_product(s, t) == pytest.approx(inner_product(t, s).conjugate(), abs=1e-12)
    assert 0 <= fidelity(s, t) <= 1 + 1e-12


@given(kets, st.permutations(range(7)))
@settings(max_examples=60, deadline=None)
def test_relabel_preserves_norm(x, perm):
    s = make_state([({"a": k, "b": 0}, v) for k, v in x.items()])
    r = relabel_modes(s, "a", dict(enumerate(perm)))
    assert r.norm2() == pytest.approx(1.0, abs=1e-12)
    assert sorted(abs(a) for a in r.terms.values()) == pytest.approx(sorted(abs(a) for a in s.terms.values()))
