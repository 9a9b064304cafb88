"""Compile qudit gate specifications into heralded parity-sorter circuits.

Two building blocks are composed:

* a *rewrite stage*: the target line meets ``d`` ancilla photons at order-2
  sorters. Each ancilla arm ends in a filtered detector. A controlling state on
  the ancilla decides which shift X^s is applied to the target (odd-mode
  encoding 2k+1).
* a *QND stage*: the examined line crosses an order-1 and an order-2 sorter,
  each shared with one ancilla photon. An examination ket per level makes both
  detectors fire only for that level and leaves the photon in mode k.

The ancilla of a full gate is ``sum_c alpha_c |ES_c> (x) |CS_{s(c)}>``.
Per-mode phase plates inside each rewrite stage make every shift coherent. The
complex ``alpha_c`` absorb the remaining per-control amplitude, so heralded
phases match the requested ones.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

from .elements import (
    Element,
    ModeFilterDetector,
    ParitySorter,
    PhaseShift,
    Relabel,
    apply_element,
    uniform_filter,
)
from .engine import Circuit, GateEncoding, PhotonEncoding, run, run_basis_table
from .fock import (
    MAX_ELL,
    FockState,
    Occupation,
    make_state,
    occupation,
    tensor,
    tensor_all,
)

SUPPORTED_DIMS = (2, 3, 4)
MAX_ARITY = 3
PHASE_TOL = 1e-9


class SynthesisError(ValueError):
    pass


Levels = tuple[int, ...]


def target_modes(d: int) -> tuple[int, ...]:
    return tuple(2 * k + 1 for k in range(d))


def control_modes(d: int) -> tuple[int, ...]:
    return tuple(range(d))


@dataclass(frozen=True)
class GateSpec:
    """A total map on level tuples, with optional phases omega**k (omega = e^{2 pi i / order})."""

    dims: tuple[int, ...]
    table: Mapping[Levels, Levels]
    phase_exponents: Mapping[Levels, int] | None = None
    kind: str = "table"
    names: tuple[str, ...] | None = None
    rewrite: tuple[int, ...] | None = None
    omega_order: int | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise SynthesisError("a gate needs at least one photon")
        if any(d < 2 for d in dims):
            raise SynthesisError(f"every dimension must be >= 2, got {dims}")
        domain = list(itertools.product(*(range(d) for d in dims)))
        table = {tuple(k): tuple(v) for k, v in dict(self.table).items()}
        missing = [c for c in domain if c not in table]
        if missing or len(table) != len(domain):
            raise SynthesisError(f"map is not total on {dims}: missing {missing[:4]}")
        for c, out in table.items():
            if len(out) != len(dims) or any(not 0 <= o < d for o, d in zip(out, dims)):
                raise SynthesisError(f"map sends {c} to {out}, outside the level ranges {dims}")
        object.__setattr__(self, "table", table)
        if self.phase_exponents is not None:
            phases = {tuple(k): int(v) for k, v in dict(self.phase_exponents).items()}
            if set(phases) != set(domain):
                raise SynthesisError("phase exponents must be given for every level tuple")
            object.__setattr__(self, "phase_exponents", phases)
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != len(dims) or len(set(names)) != len(names):
                raise SynthesisError(f"need {len(dims)} distinct photon names, got {names}")
            object.__setattr__(self, "names", names)
        if self.rewrite is not None:
            object.__setattr__(self, "rewrite", tuple(sorted(set(self.rewrite))))

    @property
    def arity(self) -> int:
        return len(self.dims)

    @property
    def d(self) -> int:
        if len(set(self.dims)) != 1:
            raise AttributeError(f"mixed dimensions {self.dims}")
        return self.dims[0]

    @property
    def photon_names(self) -> tuple[str, ...]:
        return self.names or tuple(f"q{i + 1}" for i in range(self.arity))

    @property
    def omega(self) -> complex:
        order = self.omega_order or max(self.dims)
        return cmath.exp(2j * math.pi / order)

    def domain(self) -> list[Levels]:
        return list(itertools.product(*(range(d) for d in self.dims)))

    def is_bijection(self) -> bool:
        return len(set(self.table.values())) == len(self.table)

    def phase(self, levels: Levels) -> complex:
        if self.phase_exponents is None:
            return 1 + 0j
        k = self.phase_exponents[tuple(levels)]
        order = self.omega_order or max(self.dims)
        # exact for the common orders
        return self.omega ** (k % order)

    def expected(self, levels: Levels) -> tuple[Levels, complex]:
        return self.table[tuple(levels)], self.phase(levels)

    # -- constructors -----------------------------------------------------------------

    @classmethod
    def from_function(
        cls,
        dims: Sequence[int],
        fn: Callable[[Levels], Sequence[int]],
        phase_fn: Callable[[Levels], int] | None = None,
        **kw,
    ) -> GateSpec:
        domain = list(itertools.product(*(range(d) for d in dims)))
        table = {c: tuple(fn(c)) for c in domain}
        phases = {c: int(phase_fn(c)) for c in domain} if phase_fn else None
        return cls(tuple(dims), table, phases, **kw)

    @classmethod
    def cx(cls, d: int) -> GateSpec:
        """|c, t> -> |c, (c + t) % d> (also known as CSUM)."""
        return cls.from_function((d, d), lambda c: (c[0], (c[0] + c[1]) % d), kind="cx", names=("c", "t"))

    @classmethod
    def ccx(cls, d_control: int, d_target: int) -> GateSpec:
        return cls.from_function(
            (d_control, d_control, d_target),
            lambda c: (c[0], c[1], (c[2] + c[0] * c[1]) % d_target),
            kind="ccx",
            names=("c1", "c2", "t"),
        )

    @classmethod
    def cphase(cls, d: int) -> GateSpec:
        return cls.from_function(
            (d, d), lambda c: c, phase_fn=lambda c: c[0] * c[1], kind="cphase", names=("c1", "c2"), omega_order=d
        )

    @classmethod
    def affine(cls, d: int, matrix: Sequence[Sequence[int]], offset: Sequence[int] | None = None) -> GateSpec:
        n = len(matrix)
        offset = tuple(offset) if offset is not None else (0,) * n

        def fn(c):
            return tuple((sum(a * x for a, x in zip(row, c)) + b) % d for row, b in zip(matrix, offset))

        return cls.from_function((d,) * n, fn, kind="general_affine", names=tuple(f"c{i + 1}" for i in range(n)))

    @classmethod
    def shift(cls, d: int, s: int) -> GateSpec:
        """Single-photon X^s, always realised with a rewrite stage (even when s % d == 0)."""
        return cls.from_function((d,), lambda c: ((c[0] + s) % d,), kind="shift", names=("t",), rewrite=(0,))


# -- stages -----------------------------------------------------------------------------


def _ids(start: int = 1) -> Iterator[str]:
    return (f"D{i}" for i in itertools.count(start))


@dataclass(frozen=True)
class Stage:
    line: str
    elements: tuple[Element, ...]
    ancilla_paths: tuple[str, ...]
    detectors: tuple[str, ...]

    def circuit(self, max_ell: int = MAX_ELL) -> Circuit:
        return Circuit(
            paths=(self.line,) + self.ancilla_paths,
            elements=self.elements,
            heralds=self.detectors,
            outputs=(self.line,),
            max_ell=max_ell,
        )


def rewrite_paths(line: str, d: int) -> tuple[str, ...]:
    return tuple(f"{line}.r{k}" for k in range(d))


def cs_term(d: int, shift: int, t: int, paths: Sequence[str]) -> dict[str, int]:
    """The controlling-state ket used when the target sits at level ``t``."""
    s = shift % d
    enc = target_modes(d)
    return {p: (enc[(t + s) % d] if (s and k == t) else 0) for k, p in enumerate(paths)}


def controlling_state(d: int, shift: int, paths: Sequence[str], max_ell: int = MAX_ELL) -> FockState:
    if shift % d == 0:
        return make_state([(cs_term(d, 0, 0, paths), 1)], max_ell=max_ell)
    return make_state([(cs_term(d, shift, t, paths), 1) for t in range(d)], max_ell=max_ell)


def _rewrite_elements(
    d: int, line: str, ids: Iterator[str], plates: Mapping[str, Mapping[int, float]] | None
) -> tuple[list[Element], tuple[str, ...], list[str]]:
    paths = rewrite_paths(line, d)
    enc = target_modes(d)
    elements: list[Element] = []
    detectors = []
    if plates and plates.get(line):
        elements.append(PhaseShift(line, plates[line]))
    for k, anc in enumerate(paths):
        if plates and plates.get(anc):
            elements.append(PhaseShift(anc, plates[anc]))
        elements.append(ParitySorter(2, (line, anc)))
        det = next(ids)
        detectors.append(det)
        elements.append(ModeFilterDetector(anc, uniform_filter({0, enc[k]}), det))
    return elements, paths, detectors


def _wrap(phi: float) -> float:
    return math.remainder(phi, 2 * math.pi)


@lru_cache(maxsize=None)
def _rewrite_plates(d: int, max_ell: int) -> tuple[dict[int, float], tuple[dict[int, float], ...]]:
    """Phase plates (target line, then each ancilla arm) that make every shift coherent.

    Found by running the bare stage on every (shift, level) pair and cancelling
    the phase of its single heralded amplitude.
    """
    line = "t"
    elements, paths, dets = _rewrite_elements(d, line, _ids(), None)
    bare = Circuit((line,) + paths, elements, dets, (line,), max_ell=max_ell)
    enc = target_modes(d)
    gamma: dict[tuple[int, int], complex] = {}
    for s in range(d):
        for t in range(d):
            data = make_state([({line: enc[t]}, 1)], max_ell=max_ell)
            anc = make_state([(cs_term(d, s, t, paths), 1)], max_ell=max_ell)
            branch = run(bare, tensor(data, anc)).branch
            want = occupation({line: enc[(t + s) % d]})
            if set(branch.terms) != {want}:
                raise SynthesisError(f"bare rewrite stage d={d} does not map level {t} by shift {s}: {branch}")
            gamma[s, t] = branch.terms[want]
    line_plate = {enc[t]: _wrap(-cmath.phase(gamma[0, t])) for t in range(d)}
    arm_plates = tuple({} for _ in range(d))
    for s in range(1, d):
        for t in range(d):
            arm_plates[t][enc[(t + s) % d]] = _wrap(-cmath.phase(gamma[s, t]) - line_plate[enc[t]])
    return line_plate, arm_plates


def build_rewrite_stage(
    d: int,
    shift: int,
    line: str = "t",
    compensate: bool = True,
    ids: Iterator[str] | None = None,
    max_ell: int = MAX_ELL,
) -> tuple[Stage, FockState]:
    """Rewrite stage acting on ``line`` plus the controlling state for X^shift.

    Detector k carries the filter (|0> + |2k+1>)/sqrt(2). With ``compensate`` the
    stage includes per-mode phase plates so that the heralded map is exactly
    X^shift up to a real positive factor, for every shift.
    """
    if d not in SUPPORTED_DIMS:
        raise SynthesisError(f"rewrite stage supports d in {SUPPORTED_DIMS}, got {d}")
    if target_modes(d)[-1] > max_ell:
        raise SynthesisError(f"d={d} needs mode {target_modes(d)[-1]} > max_ell={max_ell}")
    plates = None
    paths = rewrite_paths(line, d)
    if compensate:
        line_plate, arm_plates = _rewrite_plates(d, max_ell)
        plates = {line: line_plate, **{p: arm_plates[k] for k, p in enumerate(paths)}}
    elements, paths, dets = _rewrite_elements(d, line, ids or _ids(), plates)
    return Stage(line, tuple(elements), paths, tuple(dets)), controlling_state(d, shift, paths, max_ell)


# -- QND stage --------------------------------------------------------------------------


def qnd_paths(line: str) -> tuple[str, str]:
    return f"{line}.e1", f"{line}.e2"


@dataclass(frozen=True)
class Examination:
    """Examination kets per control level and the two detector filters they need."""

    d: int
    states: tuple[tuple[int, int], ...]
    filters: tuple[dict[int, complex], dict[int, complex]]
    searched: int


def _qnd_sorters(line: str) -> tuple[ParitySorter, ParitySorter]:
    e1, e2 = qnd_paths(line)
    return ParitySorter(1, (line, e1)), ParitySorter(2, (line, e2))


@lru_cache(maxsize=None)
def _qnd_patterns(c: int, es: tuple[int, int], max_ell: int) -> frozenset[tuple[int, int, int]]:
    """(mode at D1, mode at D2, output mode) for every one-photon-per-arm outcome."""
    line = "x"
    e1, e2 = qnd_paths(line)
    state = make_state([({line: c, e1: es[0], e2: es[1]}, 1)], max_ell=max_ell)
    for ps in _qnd_sorters(line):
        state = apply_element(state, ps)
    found = set()
    for occ in state.terms:
        photons: dict[str, list[int]] = {}
        for (path, ell), n in occ:
            photons.setdefault(path, []).extend([ell] * n)
        if all(len(photons.get(p, [])) == 1 for p in (e1, e2, line)):
            found.add((photons[e1][0], photons[e2][0], photons[line][0]))
    return frozenset(found)


def _qnd_elements(line: str, filters, ids: Iterator[str]) -> tuple[list[Element], list[str]]:
    ps1, ps2 = _qnd_sorters(line)
    e1, e2 = qnd_paths(line)
    d1, d2 = next(ids), next(ids)
    return [ps1, ModeFilterDetector(e1, filters[0], d1), ps2, ModeFilterDetector(e2, filters[1], d2)], [d1, d2]


def examination_state(es: tuple[int, int], line: str, max_ell: int = MAX_ELL) -> FockState:
    e1, e2 = qnd_paths(line)
    return make_state([({e1: es[0], e2: es[1]}, 1)], max_ell=max_ell)


def _heralds_only_own_level(chosen, filters, d, max_ell) -> bool:
    stage = qnd_stage_from(chosen, filters, "x", max_ell=max_ell)
    circuit = stage.circuit(max_ell)
    for j, es in enumerate(chosen):
        for c in range(d):
            data = make_state([({"x": c}, 1)], max_ell=max_ell)
            branch = run(circuit, tensor(data, examination_state(es, "x", max_ell))).branch
            if j == c:
                if set(branch.terms) != {occupation({"x": c})}:
                    return False
            elif branch.terms:
                return False
    return True


@lru_cache(maxsize=None)
def derive_examination_states(d: int, max_ell: int = MAX_ELL) -> Examination:
    """Exhaustive lexicographic search for one examination ket per control level.

    For level ``c`` the first two-photon ket (l1, l2) with l1, l2 <= max_ell is
    accepted if some outcome leaves exactly one photon on each arm and the output
    in mode ``c``. Filters are the uniform superpositions over the modes such
    outcomes put on each arm. No examination ket chosen so far may then herald a
    different level, and the engine must confirm this with the real filters.
    """
    chosen: list[tuple[int, int]] = []
    arm1: set[int] = set()
    arm2: set[int] = set()
    searched = 0
    candidates = list(itertools.product(range(max_ell + 1), repeat=2))
    for c in range(d):
        for es in candidates:
            searched += 1
            good = [p for p in _qnd_patterns(c, es, max_ell) if p[2] == c]
            if not good:
                continue
            b1 = arm1 | {p[0] for p in good}
            b2 = arm2 | {p[1] for p in good}
            trial = chosen + [es]
            if not _pattern_consistent(trial, b1, b2, d, max_ell):
                continue
            filters = (uniform_filter(b1), uniform_filter(b2))
            if not _heralds_only_own_level(trial, filters, d, max_ell):
                continue
            chosen.append(es)
            arm1, arm2 = b1, b2
            break
        else:
            raise SynthesisError(
                f"no examination ket for level {c} (d={d}) among all two-photon kets "
                f"with modes 0..{max_ell} ({len(candidates)} candidates), given {chosen}"
            )
    return Examination(d, tuple(chosen), (uniform_filter(arm1), uniform_filter(arm2)), searched)


def _pattern_consistent(trial, b1, b2, d, max_ell) -> bool:
    for j, es in enumerate(trial):
        for c in range(d):
            hits = [p for p in _qnd_patterns(c, es, max_ell) if p[0] in b1 and p[1] in b2]
            if j == c:
                if not hits or any(p[2] != c for p in hits):
                    return False
            elif hits:
                return False
    return True


def qnd_stage_from(chosen, filters, line: str, ids: Iterator[str] | None = None, max_ell: int = MAX_ELL) -> Stage:
    elements, dets = _qnd_elements(line, filters, ids or _ids())
    return Stage(line, tuple(elements), qnd_paths(line), tuple(dets))


def build_qnd_stage(d: int, line: str = "c", ids: Iterator[str] | None = None, max_ell: int = MAX_ELL) -> tuple[Stage, Examination]:
    ex = derive_examination_states(d, max_ell)
    return qnd_stage_from(ex.states, ex.filters, line, ids, max_ell), ex


# -- full synthesis ---------------------------------------------------------------------


@dataclass(frozen=True)
class SynthesisResult:
    spec: GateSpec
    circuit: Circuit
    ancilla: FockState
    encoding: GateEncoding
    examined: tuple[int, ...]
    rewritten: tuple[int, ...]
    coefficients: Mapping[Levels, complex]
    examinations: Mapping[int, Examination] = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def _shift_fn(spec: GateSpec, j: int) -> Callable[[Levels], int]:
    d = spec.dims[j]
    return lambda c: (spec.table[c][j] - c[j]) % d


def _depends_on(fn: Callable[[Levels], object], spec: GateSpec, k: int) -> bool:
    for c in spec.domain():
        for v in range(spec.dims[k]):
            other = c[:k] + (v,) + c[k + 1 :]
            if fn(c) != fn(other):
                return True
    return False


def _fmt(occ: Mapping[str, int]) -> str:
    return "|" + ",".join(str(v) for v in occ.values()) + ">"


def synthesize(spec: GateSpec, max_ell: int = MAX_ELL, check: bool = True) -> SynthesisResult:
    """Build circuit and ancilla for ``spec``.

    A photon is examined (QND stage) when a shift or phase depends on its level.
    It is rewritten (rewrite stage) when its shift is not identically zero.
    Examined photons that are also rewritten are converted to the odd-mode
    encoding before their rewrite stage and back afterwards.
    """
    dims = spec.dims
    if spec.arity > MAX_ARITY:
        raise SynthesisError(f"arity {spec.arity} > {MAX_ARITY} is not supported")
    if any(d not in SUPPORTED_DIMS for d in dims):
        raise SynthesisError(f"dimensions must be in {SUPPORTED_DIMS}, got {dims}")
    if not spec.is_bijection():
        raise SynthesisError("map is not a bijection, so no unitary gate realises it")

    names = spec.photon_names
    shifts = [_shift_fn(spec, j) for j in range(spec.arity)]
    phase_fn = (lambda c: spec.phase_exponents[c] % (spec.omega_order or max(dims))) if spec.phase_exponents else None
    examined = tuple(
        k
        for k in range(spec.arity)
        if any(_depends_on(fn, spec, k) for fn in shifts) or (phase_fn and _depends_on(phase_fn, spec, k))
    )
    if spec.rewrite is not None:
        rewritten = spec.rewrite
    else:
        rewritten = tuple(j for j in range(spec.arity) if any(shifts[j](c) for c in spec.domain()))

    notes: list[str] = [f"gate {spec.kind} dims={dims} photons={names}"]
    ids = _ids()
    elements: list[Element] = []
    paths: list[str] = list(names)
    examinations: dict[int, Examination] = {}

    for k in examined:
        stage, ex = build_qnd_stage(dims[k], names[k], ids, max_ell)
        examinations[k] = ex
        elements += stage.elements
        paths += stage.ancilla_paths
        kets = ", ".join(f"{c}: |{a},{b}>" for c, (a, b) in enumerate(ex.states))
        notes.append(
            f"{names[k]}: QND stage {stage.detectors} on {stage.ancilla_paths}; examination kets {kets}; "
            f"filters {sorted(ex.filters[0])} / {sorted(ex.filters[1])}"
        )

    for j in rewritten:
        line, d = names[j], dims[j]
        if j in examined:
            elements.append(Relabel(line, dict(zip(control_modes(d), target_modes(d)))))
        stage, _ = build_rewrite_stage(d, 0, line, ids=ids, max_ell=max_ell)
        elements += stage.elements
        paths += stage.ancilla_paths
        if j in examined:
            elements.append(Relabel(line, dict(zip(target_modes(d), control_modes(d)))))
        plates = [e for e in stage.elements if isinstance(e, PhaseShift)]
        notes.append(f"{line}: rewrite stage d={d} {stage.detectors} on {stage.ancilla_paths}; {len(plates)} phase plates")

    photons = []
    for j, (name, d) in enumerate(zip(names, dims)):
        odd = j in rewritten and j not in examined
        modes = target_modes(d) if odd else control_modes(d)
        role = {
            (True, False): "control",
            (False, True): "target",
            (True, True): "examined_target",
            (False, False): "spectator",
        }[(j in examined, j in rewritten)]
        photons.append(PhotonEncoding(name, role, d, name, name, modes, modes))
    encoding = GateEncoding(tuple(photons))
    heralds = tuple(e.detector for e in elements if isinstance(e, ModeFilterDetector))
    circuit = Circuit(tuple(paths), tuple(elements), heralds, tuple(names), max_ell=max_ell)

    # one ancilla term per assignment of the examined levels
    terms: dict[Levels, FockState] = {}
    gammas: dict[Levels, complex] = {}
    for c_e in itertools.product(*(range(dims[k]) for k in examined)):
        rep = [0] * spec.arity
        for k, v in zip(examined, c_e):
            rep[k] = v
        rep = tuple(rep)
        parts = [examination_state(examinations[k].states[v], names[k], max_ell) for k, v in zip(examined, c_e)]
        for j in rewritten:
            parts.append(controlling_state(dims[j], shifts[j](rep), rewrite_paths(names[j], dims[j]), max_ell))
        term = tensor_all(parts)
        branch = run(circuit, tensor(encoding.encode(rep, max_ell), term)).branch
        want = encoding.output_occupation(spec.table[rep])
        if set(branch.terms) != {want}:
            raise SynthesisError(f"examined levels {c_e} do not herald the expected output: {branch}")
        terms[c_e] = term
        gammas[c_e] = branch.terms[want]

    raw = {c_e: spec.phase(_rep(c_e, examined, spec.arity)) / g for c_e, g in gammas.items()}
    norm = math.sqrt(math.fsum(abs(a) ** 2 for a in raw.values()))
    coefficients = {c_e: _snap(a / norm) for c_e, a in raw.items()}
    acc: dict[Occupation, complex] = {}
    for c_e, term in terms.items():
        for occ, amp in term.terms.items():
            acc[occ] = acc.get(occ, 0j) + coefficients[c_e] * amp
    ancilla = FockState(acc, max_ell=max_ell)
    for c_e, a in coefficients.items():
        notes.append(f"alpha{c_e} = {a.real:+.6f}{a.imag:+.6f}j")

    result = SynthesisResult(
        spec, circuit, ancilla, encoding, examined, tuple(rewritten), coefficients, examinations, tuple(notes)
    )
    if check:
        residuals = gate_residuals(result)
        if residuals["worst"] > PHASE_TOL:
            raise SynthesisError(f"phase compensation failed, residuals {residuals}")
    return result


def _snap(z: complex, eps: float = 1e-15) -> complex:
    """Zero out rounding residue so that real coefficients print as real."""
    return complex(z.real if abs(z.real) > eps else 0.0, z.imag if abs(z.imag) > eps else 0.0)


def _rep(c_e: Levels, examined: Sequence[int], arity: int) -> Levels:
    rep = [0] * arity
    for k, v in zip(examined, c_e):
        rep[k] = v
    return tuple(rep)


def gate_residuals(result: SynthesisResult) -> dict[str, float]:
    """Largest deviations of the heralded basis map from ``result.spec``.

    ``mapping`` counts rows with the wrong (or no) output ket, ``probability`` is
    the spread of success probabilities, ``phase`` the worst error of the
    relative amplitude against the requested phase.
    """
    spec = result.spec
    rows = run_basis_table(result.circuit, result.ancilla, result.encoding)
    bad = sum(1 for r in rows if r.outputs != spec.table[r.inputs])
    probs = [r.probability for r in rows]
    ref = rows[0]
    ref_phase = spec.phase(ref.inputs)
    phase_err = 0.0
    for r in rows:
        if r.amplitude == 0:
            phase_err = math.inf
            continue
        rel = (r.amplitude / ref.amplitude) * (ref_phase / spec.phase(r.inputs))
        phase_err = max(phase_err, abs(rel - 1))
    spread = max(probs) - min(probs)
    return {
        "mapping": float(bad),
        "probability": spread,
        "phase": phase_err,
        "worst": max(float(bad), spread, phase_err),
    }


# -- ancilla for 2-dimensional control ----------------------------------------------------


@dataclass(frozen=True)
class C2Ancilla:
    state: FockState
    relabeling: tuple[tuple[str, dict[int, int]], ...]
    w_state: FockState


def _letters(n: int) -> tuple[str, ...]:
    return tuple(chr(ord("a") + i) for i in range(n))


def w_state(paths: Sequence[str], max_ell: int = MAX_ELL) -> FockState:
    kets = []
    for k in range(len(paths)):
        kets.append(({p: (1 if i == k else 0) for i, p in enumerate(paths)}, 1))
    return make_state(kets, max_ell=max_ell)


def build_c2_ancilla(d_target: int = 3, max_ell: int = MAX_ELL) -> C2Ancilla:
    """Ancilla for a two-level control and ``d_target``-level X target on paths a, b, c, ...

    (|0,0,...,0> + |1>_a (x) sum_t |CS_t>) / sqrt(d+1), with the per-path mode
    relabeling that turns it into a (d+1)-photon W state.
    """
    if d_target not in SUPPORTED_DIMS:
        raise SynthesisError(f"d_target must be in {SUPPORTED_DIMS}")
    paths = _letters(d_target + 1)
    kets = [({p: 0 for p in paths}, 1)]
    for t in range(d_target):
        kets.append(({paths[0]: 1, **cs_term(d_target, 1, t, paths[1:])}, 1))
    state = make_state(kets, max_ell=max_ell)
    enc = target_modes(d_target)
    relabeling = [(paths[0], {0: 1, 1: 0})]
    for t in range(d_target):
        relabeling.append((paths[1 + t], {enc[(t + 1) % d_target]: 1}))
    return C2Ancilla(state, tuple(relabeling), w_state(paths, max_ell))
