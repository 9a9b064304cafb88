"""Optical elements and their exact action on Fock states.

Every unitary element acts linearly on single creation operators,
``a^dagger(p, ell) -> sum_k U_kp a^dagger(out_k, ell)``; the multi-photon action is
obtained by expanding the product of transformed operators. Mode numbers are
never mixed by a parity sorter or beam splitter.
"""

from __future__ import annotations

import cmath
import contextlib
import math
from collections import defaultdict
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .fock import FockError, FockState, Occupation, Slot, canonical

DETECTOR_POLICIES = ("exactly_one", "at_least_one")

_EXACT_UNITS = {
    Fraction(0): 1 + 0j,
    Fraction(1, 2): 1j,
    Fraction(1): -1 + 0j,
    Fraction(3, 2): -1j,
}

_ps_override: Callable[[int, int], np.ndarray] | None = None


def unit_phase(turns_of_pi: Fraction) -> complex:
    """exp(i*pi*x), exact for multiples of pi/2."""
    x = turns_of_pi % 2
    if x in _EXACT_UNITS:
        return _EXACT_UNITS[x]
    return cmath.exp(1j * math.pi * float(x))


def interferometer_matrix(e: complex) -> np.ndarray:
    """The 2x2 sorter matrix for phase factor ``e = exp(i*alpha)``.

    Rows are output ports, columns input ports; port 0 is the transmit port.
    """
    return 0.5 * np.array(
        [[1j * (e + 1), 1 - e], [e - 1, 1j * (e + 1)]],
        dtype=complex,
    )


def ps_matrix(order: int, ell: int) -> np.ndarray:
    """Matrix of an order-``order`` parity sorter for mode number ``ell``.

    The internal phase is ``ell*pi/order``: order 2 transmits ell = 0 mod 4,
    reflects ell = 2 mod 4 and splits odd modes evenly; order 1 transmits even
    and reflects odd modes.
    """
    if isinstance(order, bool) or not isinstance(order, int) or order < 1:
        raise ValueError(f"parity sorter order must be a positive integer, got {order!r}")
    if _ps_override is not None:
        return _ps_override(order, ell)
    return interferometer_matrix(unit_phase(Fraction(ell, order)))


@contextlib.contextmanager
def override_ps_matrix(fn: Callable[[int, int], np.ndarray]) -> Iterator[None]:
    """Temporarily replace ``ps_matrix``; a negative-control hook for the verifier."""
    global _ps_override
    previous, _ps_override = _ps_override, fn
    try:
        yield
    finally:
        _ps_override = previous


BS_MATRIX = interferometer_matrix(1j)


def _two_port(inputs, outputs) -> tuple[tuple[str, str], tuple[str, str]]:
    inputs = tuple(str(p) for p in inputs)
    outputs = inputs if outputs is None else tuple(str(p) for p in outputs)
    if len(inputs) != 2 or len(outputs) != 2:
        raise ValueError("two-port elements need exactly two input and two output paths")
    if inputs[0] == inputs[1] or outputs[0] == outputs[1]:
        raise ValueError(f"two-port element uses a path twice: {inputs} -> {outputs}")
    return inputs, outputs


class _TwoPort:
    inputs: tuple[str, str]
    outputs: tuple[str, str]

    @property
    def paths(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.inputs + self.outputs))

    def propagate(self, slot: Slot) -> list[tuple[Slot, complex]] | None:
        path, ell = slot
        if path not in self.inputs:
            return None
        col = self.inputs.index(path)
        u = self.matrix(ell)
        return [((self.outputs[k], ell), complex(u[k, col])) for k in range(2) if u[k, col] != 0]


@dataclass(frozen=True)
class ParitySorter(_TwoPort):
    order: int
    inputs: tuple[str, str]
    outputs: tuple[str, str] | None = None

    tag = "ps"

    def __post_init__(self):
        if isinstance(self.order, bool) or not isinstance(self.order, int) or self.order < 1:
            raise ValueError(f"parity sorter order must be >= 1, got {self.order!r}")
        i, o = _two_port(self.inputs, self.outputs)
        object.__setattr__(self, "inputs", i)
        object.__setattr__(self, "outputs", o)

    def matrix(self, ell: int) -> np.ndarray:
        return ps_matrix(self.order, ell)


@dataclass(frozen=True)
class BeamSplitter(_TwoPort):
    """Mode-independent 50/50 splitter, same convention as a sorter acting on an odd mode."""

    inputs: tuple[str, str]
    outputs: tuple[str, str] | None = None

    tag = "bs"

    def __post_init__(self):
        i, o = _two_port(self.inputs, self.outputs)
        object.__setattr__(self, "inputs", i)
        object.__setattr__(self, "outputs", o)

    def matrix(self, ell: int) -> np.ndarray:
        return BS_MATRIX


@dataclass(frozen=True)
class PhaseShift:
    path: str
    phases: Mapping[int, float] = field(default_factory=dict)

    tag = "phase"

    def __post_init__(self):
        object.__setattr__(self, "phases", {int(k): float(v) for k, v in sorted(dict(self.phases).items())})

    @property
    def paths(self) -> tuple[str, ...]:
        return (self.path,)

    def propagate(self, slot: Slot) -> list[tuple[Slot, complex]] | None:
        if slot[0] != self.path:
            return None
        phi = self.phases.get(slot[1], 0.0)
        return [(slot, cmath.exp(1j * phi) if phi else 1 + 0j)]


@dataclass(frozen=True)
class Relabel:
    """Single-path mode converter; modes missing from ``perm`` are left alone."""

    path: str
    perm: Mapping[int, int] = field(default_factory=dict)

    tag = "relabel"

    def __post_init__(self):
        perm = {int(k): int(v) for k, v in sorted(dict(self.perm).items())}
        if len(set(perm.values())) != len(perm):
            raise ValueError(f"relabel map {perm} is not injective")
        object.__setattr__(self, "perm", perm)

    @property
    def paths(self) -> tuple[str, ...]:
        return (self.path,)

    def propagate(self, slot: Slot) -> list[tuple[Slot, complex]] | None:
        if slot[0] != self.path:
            return None
        return [((self.path, self.perm.get(slot[1], slot[1])), 1 + 0j)]


@dataclass(frozen=True)
class ModeFilterDetector:
    """Single-mode projector onto ``filter`` followed by a photon-number-resolving detector.

    The detected path is consumed; later elements may not touch it.
    """

    path: str
    filter: Mapping[int, complex]
    detector: str

    tag = "filter_detector"

    def __post_init__(self):
        vec = {int(k): complex(v) for k, v in sorted(dict(self.filter).items()) if v != 0}
        norm = math.fsum(abs(v) ** 2 for v in vec.values())
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"filter on {self.path!r} has squared norm {norm}, expected 1")
        object.__setattr__(self, "filter", vec)

    @property
    def paths(self) -> tuple[str, ...]:
        return (self.path,)


Element = Union[ParitySorter, BeamSplitter, PhaseShift, Relabel, ModeFilterDetector]


def uniform_filter(ells) -> dict[int, complex]:
    ells = sorted(set(ells))
    return {ell: 1 / math.sqrt(len(ells)) for ell in ells}


def _expand(
    occ: Occupation, amp: complex, element, max_ell: int
) -> dict[Occupation, complex]:
    fixed: dict[Slot, int] = {}
    moving: list[tuple[list[tuple[Slot, complex]], int]] = []
    scale = amp
    for slot, n in occ:
        images = element.propagate(slot)
        if images is None:
            fixed[slot] = n
        else:
            moving.append((images, n))
            scale /= math.sqrt(math.factorial(n))
    monomials: dict[tuple[Slot, ...], complex] = {(): scale}
    for images, n in moving:
        for _ in range(n):
            nxt: dict[tuple[Slot, ...], complex] = defaultdict(complex)
            for mono, c in monomials.items():
                for out_slot, u in images:
                    nxt[tuple(sorted(mono + (out_slot,)))] += c * u
            monomials = nxt
    result: dict[Occupation, complex] = {}
    for mono, c in monomials.items():
        counts = dict(fixed)
        for s in mono:
            if s[1] > max_ell:
                raise FockError(f"element {element} produced mode {s[1]} above max_ell={max_ell}")
            counts[s] = counts.get(s, 0) + 1
        fock_amp = c
        for s in set(mono):
            fock_amp *= math.sqrt(math.factorial(mono.count(s) + fixed.get(s, 0)))
            if s in fixed:
                # an untouched photon already in this slot: its own 1/sqrt(n!) was never removed
                fock_amp /= math.sqrt(math.factorial(fixed[s]))
        result[canonical(counts)] = fock_amp
    return result


def detect(state: FockState, element: ModeFilterDetector, policy: str = "exactly_one") -> FockState:
    """The unnormalized branch in which ``element`` registers a click.

    ``exactly_one``: the path must hold one photon, weighted by the conjugate filter
    coefficient of its mode. ``at_least_one``: any n >= 1 photons, all of which
    pass the filter (the rank-one projector onto n photons in the filter mode).
    """
    if policy not in DETECTOR_POLICIES:
        raise ValueError(f"unknown detector policy {policy!r}")
    f = element.filter
    kept: dict[Occupation, complex] = defaultdict(complex)
    for occ, amp in state.terms.items():
        here = [(slot[1], n) for slot, n in occ if slot[0] == element.path]
        total = sum(n for _, n in here)
        if total == 0 or (policy == "exactly_one" and total != 1):
            continue
        weight = math.sqrt(math.factorial(total))
        for ell, n in here:
            weight *= f.get(ell, 0j).conjugate() ** n / math.sqrt(math.factorial(n))
        if weight == 0:
            continue
        rest = tuple((slot, n) for slot, n in occ if slot[0] != element.path)
        kept[rest] += amp * weight
    return state._with(kept)


def apply_element(state: FockState, element: Element, policy: str = "exactly_one") -> FockState:
    """Apply one element. For a detector this returns the (unnormalized) clicked branch."""
    if isinstance(element, ModeFilterDetector):
        return detect(state, element, policy)
    if isinstance(element, Relabel):
        present = {
            slot[1] for occ in state.terms for slot, _ in occ if slot[0] == element.path
        }
        images = [element.perm.get(ell, ell) for ell in present]
        if len(set(images)) != len(images):
            raise FockError(f"relabel {element.perm} collides on modes {sorted(present)} of {element.path!r}")
    out: dict[Occupation, complex] = defaultdict(complex)
    for occ, amp in state.terms.items():
        for new_occ, a in _expand(occ, amp, element, state.max_ell).items():
            out[new_occ] += a
    return state._with(out)
