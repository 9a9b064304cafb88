"""Circuit execution with heralding, plus an independent history-sum oracle."""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .elements import (
    DETECTOR_POLICIES,
    Element,
    ModeFilterDetector,
    apply_element,
)
from .fock import (
    MAX_ELL,
    FockError,
    FockState,
    Occupation,
    Slot,
    canonical,
    make_state,
    tensor,
)

ORACLE_MAX_PHOTONS = 8


class CircuitError(ValueError):
    """A circuit that references undeclared or consumed paths, or has inconsistent heralds."""


@dataclass(frozen=True)
class Circuit:
    paths: tuple[str, ...]
    elements: tuple[Element, ...]
    heralds: tuple[str, ...]
    outputs: tuple[str, ...]
    max_ell: int = MAX_ELL
    detector_policy: str = "exactly_one"

    def __post_init__(self):
        for name in ("paths", "elements", "heralds", "outputs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        declared = set(self.paths)
        if len(declared) != len(self.paths):
            raise CircuitError("duplicate path names")
        if self.detector_policy not in DETECTOR_POLICIES:
            raise CircuitError(f"unknown detector policy {self.detector_policy!r}")
        consumed: dict[str, str] = {}
        detectors: list[str] = []
        for i, e in enumerate(self.elements):
            for p in e.paths:
                if p not in declared:
                    raise CircuitError(f"element {i} ({e.tag}) uses undeclared path {p!r}")
                if p in consumed:
                    raise CircuitError(
                        f"element {i} ({e.tag}) uses path {p!r} already consumed by detector {consumed[p]}"
                    )
            if isinstance(e, ModeFilterDetector):
                consumed[e.path] = e.detector
                detectors.append(e.detector)
        if len(set(detectors)) != len(detectors):
            raise CircuitError(f"detector ids are not unique: {detectors}")
        if len(set(self.heralds)) != len(self.heralds):
            raise CircuitError("duplicate herald ids")
        if set(self.heralds) != set(detectors):
            raise CircuitError(
                f"heralds {sorted(self.heralds)} must name exactly the circuit's detectors {sorted(detectors)}"
            )
        if len(set(self.outputs)) != len(self.outputs):
            raise CircuitError("duplicate output paths")
        for p in self.outputs:
            if p not in declared:
                raise CircuitError(f"output path {p!r} is not declared")
            if p in consumed:
                raise CircuitError(f"output path {p!r} is detected by {consumed[p]}")

    @property
    def detectors(self) -> tuple[ModeFilterDetector, ...]:
        return tuple(e for e in self.elements if isinstance(e, ModeFilterDetector))

    @property
    def detector_paths(self) -> tuple[str, ...]:
        return tuple(d.path for d in self.detectors)

    def without_detectors(self) -> tuple[Element, ...]:
        return tuple(e for e in self.elements if not isinstance(e, ModeFilterDetector))


@dataclass(frozen=True)
class HeraldReport:
    """Outcome of running a circuit.

    ``branch`` is the unnormalized heralded state on the output paths;
    ``conditional_state`` is the same state normalized and phase-fixed.
    """

    conditional_state: FockState
    success_probability: float
    discarded_probability: float
    branch: FockState
    raw_amplitude_table: Mapping[Occupation, tuple[Occupation, complex] | None] = field(
        default_factory=dict
    )

    @property
    def heralded(self) -> bool:
        return self.success_probability > 0.0


def _project_outputs(state: FockState, outputs: Sequence[str]) -> FockState:
    keep: dict[Occupation, complex] = {}
    wanted = set(outputs)
    for occ, amp in state.terms.items():
        per_path: dict[str, int] = defaultdict(int)
        for (path, _), n in occ:
            per_path[path] += n
        if set(per_path) == wanted and all(per_path[p] == 1 for p in wanted):
            keep[occ] = amp
    return state._with(keep)


def _finish(branch: FockState, input_norm2: float, lost: float) -> HeraldReport:
    p = branch.norm2() / input_norm2
    if p <= 0.0:
        empty = FockState({}, max_ell=branch.max_ell)
        return HeraldReport(empty, 0.0, 1.0, empty)
    cond = branch.normalized().phase_fixed()
    return HeraldReport(cond, p, lost / input_norm2, branch.scaled(1 / math.sqrt(input_norm2)))


def _check_input(circuit: Circuit, state: FockState) -> float:
    n2 = state.norm2()
    if n2 == 0.0:
        raise FockError("input state is zero")
    unknown = state.paths() - set(circuit.paths)
    if unknown:
        raise CircuitError(f"input occupies undeclared paths {sorted(unknown)}")
    need = len(circuit.heralds) + len(circuit.outputs)
    have = max(state.photon_numbers())
    if have < need:
        raise CircuitError(
            f"input carries {have} photons but the circuit needs {need} "
            f"({len(circuit.heralds)} heralds + {len(circuit.outputs)} outputs)"
        )
    return n2


def propagate(circuit: Circuit, state: FockState) -> tuple[FockState, float]:
    """Apply every element in order; returns the heralded branch and the discarded weight."""
    lost = 0.0
    for e in circuit.elements:
        nxt = apply_element(state, e, circuit.detector_policy)
        if isinstance(e, ModeFilterDetector):
            lost += state.norm2() - nxt.norm2()
        state = nxt
    final = _project_outputs(state, circuit.outputs)
    lost += state.norm2() - final.norm2()
    return final, lost


def run(circuit: Circuit, state: FockState, table: bool = False) -> HeraldReport:
    """Run ``state`` through ``circuit`` and condition on every herald firing.

    Success also requires exactly one photon on each output path and no photon
    anywhere else. With ``table=True`` each input basis ket is additionally run
    on its own and its heralded output recorded, when that output is a single ket.
    """
    n2 = _check_input(circuit, state)
    branch, lost = propagate(circuit, state)
    report = _finish(branch, n2, lost)
    if not table:
        return report
    rows: dict[Occupation, tuple[Occupation, complex] | None] = {}
    for occ, amp in state.terms.items():
        single = FockState({occ: 1.0}, max_ell=state.max_ell)
        out, _ = propagate(circuit, single)
        rows[occ] = next(iter(out.terms.items())) if len(out) == 1 else None
    return HeraldReport(
        report.conditional_state,
        report.success_probability,
        report.discarded_probability,
        report.branch,
        rows,
    )


# -- independent check: explicit single-photon histories, summed at the end --------


def _photon_histories(slot: Slot, elements: Sequence[Element]) -> list[tuple[Slot, complex]]:
    """Every route of one photon through the unitary elements, one entry per history."""
    histories = [(slot, 1 + 0j)]
    for e in elements:
        nxt = []
        for where, amp in histories:
            images = e.propagate(where)
            if images is None:
                nxt.append((where, amp))
            else:
                nxt.extend((w, amp * u) for w, u in images)
        histories = nxt
    return histories


def history_oracle(circuit: Circuit, state: FockState) -> HeraldReport:
    """Recompute ``run`` by summing explicit multi-photon histories.

    Each input ket is expanded into creation operators, every photon is pushed
    through the elements one branch at a time, and the products of single-photon
    histories are summed per final occupation. Detector projections commute to the
    end because a detected path is never touched again.
    """
    n2 = _check_input(circuit, state)
    if max(state.photon_numbers()) > ORACLE_MAX_PHOTONS:
        raise CircuitError(f"history oracle is limited to {ORACLE_MAX_PHOTONS} photons")
    unitary = circuit.without_detectors()
    final: dict[tuple[Slot, ...], complex] = defaultdict(complex)
    cache: dict[Slot, list[tuple[Slot, complex]]] = {}
    for occ, amp in state.terms.items():
        photons: list[Slot] = []
        prefactor = amp
        for slot, n in occ:
            photons.extend([slot] * n)
            prefactor /= math.sqrt(math.factorial(n))
        routes = []
        for ph in photons:
            if ph not in cache:
                cache[ph] = _photon_histories(ph, unitary)
            routes.append(cache[ph])
        for combo in itertools.product(*routes):
            a = prefactor
            for _, u in combo:
                a *= u
            final[tuple(sorted(w for w, _ in combo))] += a

    kept: dict[Occupation, complex] = defaultdict(complex)
    det_paths = {d.path: d for d in circuit.detectors}
    for mono, c in final.items():
        counts: dict[Slot, int] = defaultdict(int)
        for s in mono:
            counts[s] += 1
        amp = c
        for s, n in counts.items():
            amp *= math.sqrt(math.factorial(n))
        for s, n in counts.items():
            if s[1] > circuit.max_ell:
                raise FockError(f"history reaches mode {s[1]} above max_ell")
        weight = 1 + 0j
        ok = True
        for path, det in det_paths.items():
            here = [(s[1], n) for s, n in counts.items() if s[0] == path]
            number = sum(n for _, n in here)
            if number == 0 or (circuit.detector_policy == "exactly_one" and number != 1):
                ok = False
                break
            w = math.sqrt(math.factorial(number))
            for ell, n in here:
                w *= det.filter.get(ell, 0j).conjugate() ** n / math.sqrt(math.factorial(n))
            weight *= w
        if not ok or weight == 0:
            continue
        rest = {s: n for s, n in counts.items() if s[0] not in det_paths}
        per_out: dict[str, int] = defaultdict(int)
        for (path, _), n in rest.items():
            per_out[path] += n
        if set(per_out) != set(circuit.outputs) or any(v != 1 for v in per_out.values()):
            continue
        kept[canonical(rest)] += amp * weight
    branch = FockState(kept, max_ell=circuit.max_ell, mixed_number=True)
    return _finish(branch, n2, n2 - branch.norm2())


def agree_up_to_phase(a: FockState, b: FockState, tol: float = 1e-9) -> bool:
    """Same amplitudes after removing one global phase."""
    keys = set(a.terms) | set(b.terms)
    if not keys:
        return True
    ref = max(keys, key=lambda k: abs(a.terms.get(k, 0j)))
    ra, rb = a.terms.get(ref, 0j), b.terms.get(ref, 0j)
    if abs(ra) < tol or abs(rb) < tol:
        return all(abs(a.terms.get(k, 0j) - b.terms.get(k, 0j)) <= tol for k in keys)
    phase = (rb / abs(rb)) / (ra / abs(ra))
    return all(abs(a.terms.get(k, 0j) * phase - b.terms.get(k, 0j)) <= tol for k in keys)


# -- gate-level helpers -------------------------------------------------------------


@dataclass(frozen=True)
class PhotonEncoding:
    """Where one logical photon enters and leaves, and its level-to-mode maps."""

    name: str
    role: str
    dim: int
    in_path: str
    out_path: str
    in_modes: tuple[int, ...]
    out_modes: tuple[int, ...]

    def __post_init__(self):
        for modes in (self.in_modes, self.out_modes):
            if len(modes) != self.dim or len(set(modes)) != self.dim:
                raise ValueError(f"photon {self.name!r} needs {self.dim} distinct modes, got {modes}")


@dataclass(frozen=True)
class GateEncoding:
    photons: tuple[PhotonEncoding, ...]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(p.dim for p in self.photons)

    def levels(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(d) for d in self.dims)))

    def encode(self, levels: Sequence[int], max_ell: int = MAX_ELL) -> FockState:
        if len(levels) != len(self.photons):
            raise ValueError(f"expected {len(self.photons)} levels, got {len(levels)}")
        occ = {}
        for ph, k in zip(self.photons, levels):
            if not 0 <= k < ph.dim:
                raise ValueError(f"level {k} out of range for photon {ph.name!r} (d={ph.dim})")
            occ[ph.in_path] = ph.in_modes[k]
        return make_state([(occ, 1.0)], max_ell=max_ell)

    def output_occupation(self, levels: Sequence[int]) -> Occupation:
        counts = {(ph.out_path, ph.out_modes[k]): 1 for ph, k in zip(self.photons, levels)}
        return canonical(counts)

    def decode(self, occ: Occupation) -> tuple[int, ...] | None:
        modes = {path: ell for (path, ell), n in occ if n == 1}
        if sum(n for _, n in occ) != len(self.photons):
            return None
        out = []
        for ph in self.photons:
            ell = modes.get(ph.out_path)
            if ell is None or ell not in ph.out_modes:
                return None
            out.append(ph.out_modes.index(ell))
        return tuple(out)


@dataclass(frozen=True)
class BasisRow:
    inputs: tuple[int, ...]
    outputs: tuple[int, ...] | None
    amplitude: complex
    probability: float

    @property
    def is_gate_like(self) -> bool:
        return self.outputs is not None


def run_basis_table(
    circuit: Circuit, ancilla: FockState, encoding: GateEncoding
) -> list[BasisRow]:
    """Heralded output of every computational-basis input, decoded back to levels.

    Rows whose heralded output is not a single decodable ket get ``outputs=None``.
    """
    rows = []
    for levels in encoding.levels():
        data = encoding.encode(levels, circuit.max_ell)
        report = run(circuit, tensor(data, ancilla))
        branch = report.branch
        if len(branch) == 1:
            occ, amp = next(iter(branch.terms.items()))
            rows.append(BasisRow(levels, encoding.decode(occ), amp, report.success_probability))
        else:
            rows.append(BasisRow(levels, None, 0j, report.success_probability))
    return rows


def sample(report: HeraldReport, shots: int, seed: int) -> dict[str, int]:
    """Monte-Carlo draw of heralding outcomes from an exact report (demonstration only).

    Uses numpy's PCG64 stream seeded with ``seed``: one uniform draw decides the
    herald, a second picks the output ket on success.
    """
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))
    keys = list(report.conditional_state.terms)
    probs = np.array([abs(a) ** 2 for a in report.conditional_state.terms.values()])
    counts: dict[str, int] = {"failed": 0}
    for _ in range(shots):
        if rng.random() >= report.success_probability or not keys:
            counts["failed"] += 1
            continue
        k = keys[int(rng.choice(len(keys), p=probs / probs.sum()))]
        label = ",".join(f"{p}:{ell}" for (p, ell), _ in k)
        counts[label] = counts.get(label, 0) + 1
    return counts
