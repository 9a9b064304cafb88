"""Sparse multi-photon states over (path, mode-number) slots.

A basis ket is an occupation: a canonical, sorted tuple of ``((path, ell), count)``
pairs. Kets use the bosonic normalization

    prod_i (a_i^dagger)^{n_i} / sqrt(n_i!) |vac>

so a state with two photons in the same slot carries the usual sqrt(2) factors.
"""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Union

MAX_ELL = 8
PRUNE_EPS = 1e-14
NORM_TOL = 1e-12

Slot = tuple[str, int]
Occupation = tuple[tuple[Slot, int], ...]
OccupationLike = Union[Occupation, Mapping[str, Any], Iterable[Slot]]


class FockError(ValueError):
    """Malformed occupation or an operation outside the finite mode basis."""


def _check_ell(ell: Any, max_ell: int) -> int:
    if isinstance(ell, bool) or not isinstance(ell, int):
        raise FockError(f"mode number must be an integer, got {ell!r}")
    if ell < 0:
        raise FockError(f"mode number must be >= 0, got {ell}")
    if ell > max_ell:
        raise FockError(f"mode number {ell} exceeds max_ell={max_ell}")
    return ell


def canonical(counts: Mapping[Slot, int]) -> Occupation:
    return tuple(sorted((slot, n) for slot, n in counts.items() if n))


def occupation(spec: OccupationLike, max_ell: int = MAX_ELL) -> Occupation:
    """Normalize several occupation spellings into the canonical tuple.

    Accepted forms:
      * ``{"a": 3, "b": [0, 0]}`` - path to one mode number, or to one per photon
      * ``[("a", 3), ("b", 0)]`` - one (path, ell) pair per photon
      * an already canonical ``(((path, ell), count), ...)`` tuple
    """
    counts: dict[Slot, int] = defaultdict(int)
    if isinstance(spec, Mapping):
        for path, ells in spec.items():
            if not isinstance(ells, (list, tuple)):
                ells = [ells]
            for ell in ells:
                counts[(str(path), _check_ell(ell, max_ell))] += 1
        return canonical(counts)

    items = list(spec)
    for item in items:
        if len(item) != 2:
            raise FockError(f"cannot interpret {item!r} as a photon or slot count")
        first, second = item
        if isinstance(first, tuple):
            path, ell = first
            if isinstance(second, bool) or not isinstance(second, int) or second < 0:
                raise FockError(f"photon count must be a non-negative integer, got {second!r}")
            counts[(str(path), _check_ell(ell, max_ell))] += second
        else:
            counts[(str(first), _check_ell(second, max_ell))] += 1
    return canonical(counts)


def _as_occupation(spec: OccupationLike, max_ell: int) -> Occupation:
    if isinstance(spec, tuple) and (not spec or isinstance(spec[0][0], tuple)):
        return spec
    return occupation(spec, max_ell)


def photon_count(occ: Occupation) -> int:
    return sum(n for _, n in occ)


def paths_of(occ: Occupation) -> set[str]:
    return {slot[0] for slot, _ in occ}


def on_path(occ: Occupation, path: str) -> list[tuple[int, int]]:
    """(ell, count) pairs of the photons sitting on ``path``."""
    return [(slot[1], n) for slot, n in occ if slot[0] == path]


def without_paths(occ: Occupation, paths: Iterable[str]) -> Occupation:
    drop = set(paths)
    return tuple((slot, n) for slot, n in occ if slot[0] not in drop)


def format_occupation(occ: Occupation) -> str:
    if not occ:
        return "|vac>"
    parts = []
    for (path, ell), n in occ:
        parts.append(f"{path}:{ell}" if n == 1 else f"{path}:{ell}^{n}")
    return "|" + ",".join(parts) + ">"


@dataclass(frozen=True, eq=False)
class FockState:
    """Immutable sparse superposition of occupations.

    Amplitudes below ``PRUNE_EPS`` are dropped on construction. Unless
    ``mixed_number`` is set, every term must carry the same photon number.
    """

    terms: Mapping[Occupation, complex]
    max_ell: int = MAX_ELL
    mixed_number: bool = False

    def __post_init__(self) -> None:
        clean: dict[Occupation, complex] = {}
        numbers = set()
        for occ, amp in self.terms.items():
            amp = complex(amp)
            if abs(amp) < PRUNE_EPS:
                continue
            for (_, ell), _n in occ:
                _check_ell(ell, self.max_ell)
            clean[occ] = amp
            numbers.add(photon_count(occ))
        if len(numbers) > 1 and not self.mixed_number:
            raise FockError(f"terms carry different photon numbers {sorted(numbers)}")
        object.__setattr__(self, "terms", MappingProxyType(dict(sorted(clean.items()))))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __repr__(self) -> str:
        if not self.terms:
            return "FockState(0)"
        body = " + ".join(
            f"({amp.real:.4g}{amp.imag:+.4g}j){format_occupation(occ)}"
            for occ, amp in self.terms.items()
        )
        return f"FockState({body})"

    def amplitude(self, occ: OccupationLike) -> complex:
        return self.terms.get(_as_occupation(occ, self.max_ell), 0j)

    def norm2(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.terms.values())

    def paths(self) -> set[str]:
        out: set[str] = set()
        for occ in self.terms:
            out |= paths_of(occ)
        return out

    def photon_numbers(self) -> set[int]:
        return {photon_count(occ) for occ in self.terms}

    def scaled(self, factor: complex) -> FockState:
        return self._with({o: a * factor for o, a in self.terms.items()})

    def normalized(self) -> FockState:
        n2 = self.norm2()
        if n2 == 0.0:
            raise FockError("cannot normalize the zero state")
        return self.scaled(1.0 / math.sqrt(n2))

    def phase_fixed(self) -> FockState:
        """Global phase chosen so the smallest occupation has a real, non-negative amplitude."""
        if not self.terms:
            return self
        lead = next(iter(self.terms.values()))
        return self.scaled(abs(lead) / lead)

    def _with(self, terms: Mapping[Occupation, complex], **kw) -> FockState:
        numbers = {photon_count(o) for o in terms}
        kw.setdefault("max_ell", self.max_ell)
        kw.setdefault("mixed_number", self.mixed_number or len(numbers) > 1)
        return FockState(terms, **kw)


def make_state(
    kets: Iterable[tuple[OccupationLike, complex]],
    max_ell: int = MAX_ELL,
    normalize: bool = True,
    mixed_number: bool = False,
) -> FockState:
    """Build a state from ``(occupation, amplitude)`` pairs.

    Repeated occupations are summed. The result is rescaled to unit norm unless
    ``normalize`` is false.
    """
    acc: dict[Occupation, complex] = defaultdict(complex)
    seen = False
    for occ, amp in kets:
        seen = True
        acc[occupation(occ, max_ell)] += complex(amp)
    if not seen:
        raise FockError("make_state needs at least one ket")
    state = FockState(acc, max_ell=max_ell, mixed_number=mixed_number)
    if not state.terms:
        raise FockError("all amplitudes are zero")
    return state.normalized() if normalize else state


def vacuum(max_ell: int = MAX_ELL) -> FockState:
    return FockState({(): 1.0}, max_ell=max_ell)


def tensor(s1: FockState, s2: FockState) -> FockState:
    overlap = s1.paths() & s2.paths()
    if overlap:
        raise FockError(f"tensor product needs disjoint paths, both use {sorted(overlap)}")
    terms: dict[Occupation, complex] = {}
    for o1, a1 in s1.terms.items():
        for o2, a2 in s2.terms.items():
            terms[tuple(sorted(o1 + o2))] = a1 * a2
    return FockState(
        terms,
        max_ell=max(s1.max_ell, s2.max_ell),
        mixed_number=s1.mixed_number or s2.mixed_number,
    )


def tensor_all(states: Iterable[FockState]) -> FockState:
    out = None
    for s in states:
        out = s if out is None else tensor(out, s)
    return out if out is not None else vacuum()


def relabel_modes(s: FockState, path: str, perm: Mapping[int, int]) -> FockState:
    """Rename mode numbers on one path; mode numbers missing from ``perm`` stay put."""
    present = {slot[1] for occ in s.terms for slot, _ in occ if slot[0] == path}
    images = {ell: perm.get(ell, ell) for ell in present}
    if len(set(images.values())) != len(images):
        raise FockError(f"relabeling {dict(perm)} is not injective on modes {sorted(present)} of path {path!r}")
    for ell in images.values():
        _check_ell(ell, s.max_ell)
    terms: dict[Occupation, complex] = {}
    for occ, amp in s.terms.items():
        counts = {
            ((p, images[ell]) if p == path else (p, ell)): n for (p, ell), n in occ
        }
        terms[canonical(counts)] = amp
    return s._with(terms)


def inner_product(s1: FockState, s2: FockState) -> complex:
    """<s1|s2> in the Fock basis."""
    small, big = (s1, s2) if len(s1) <= len(s2) else (s2, s1)
    total = 0j
    for occ, amp in small.terms.items():
        other = big.terms.get(occ)
        if other is not None:
            total += amp.conjugate() * other if small is s1 else other.conjugate() * amp
    return total


def fidelity(s1: FockState, s2: FockState) -> float:
    """Squared overlap of the normalized states."""
    return abs(inner_product(s1.normalized(), s2.normalized())) ** 2


def project(s: FockState, sub: OccupationLike) -> FockState:
    """Partial projection: keep terms whose photons on the paths of ``sub`` match it exactly.

    The matched photons are removed; the result is not renormalized.
    """
    sub_occ = _as_occupation(sub, s.max_ell)
    paths = paths_of(sub_occ)
    terms: dict[Occupation, complex] = {}
    for occ, amp in s.terms.items():
        mine = tuple((slot, n) for slot, n in occ if slot[0] in paths)
        if mine == sub_occ:
            terms[without_paths(occ, paths)] = amp
    return s._with(terms)
