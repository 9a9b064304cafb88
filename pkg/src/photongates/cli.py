"""Command-line front end: ``photongates run | synth | verify | table``.

Exit codes: 0 success, 1 error (bad input or failed claim), 2 when the circuit
never heralds (p = 0).
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

import numpy as np

from .elements import interferometer_matrix, override_ps_matrix, unit_phase
from .engine import GateEncoding, HeraldReport, run, run_basis_table, sample
from .fock import FockError, FockState, tensor
from .formats import (
    CircuitFile,
    FormatError,
    circuit_to_json,
    dumps,
    read_circuit,
    read_gate_spec,
    report_to_json,
)
from .synth import SynthesisError, SynthesisResult, synthesize
from .verify import ClaimResult, run_suite

log = logging.getLogger("photongates")

EXIT_OK, EXIT_ERROR, EXIT_NO_HERALD = 0, 1, 2


def _data_state(encoding: GateEncoding, levels: Sequence[int] | None, max_ell: int) -> FockState:
    levels = tuple(levels) if levels is not None else (0,) * len(encoding.photons)
    return encoding.encode(levels, max_ell)


def full_input(cf: CircuitFile, levels: Sequence[int] | None = None) -> FockState:
    """The file's input state, with data photons added from ``levels`` when it only holds an ancilla."""
    state = cf.input_state
    if cf.encoding is None:
        if levels is not None:
            raise FormatError("--levels needs a circuit file with an 'encoding' section")
        return state
    data_paths = {p.in_path for p in cf.encoding.photons}
    if data_paths & state.paths():
        if levels is not None:
            raise FormatError("input_state already holds the data photons; drop --levels")
        return state
    return tensor(_data_state(cf.encoding, levels, cf.circuit.max_ell), state)


def run_document(
    cf: CircuitFile,
    levels: Sequence[int] | None = None,
    basis_table: bool = False,
    shots: int | None = None,
    seed: int | None = None,
) -> tuple[dict, HeraldReport]:
    report = run(cf.circuit, full_input(cf, levels))
    rows = None
    if basis_table:
        if cf.encoding is None:
            raise FormatError("--basis-table needs a circuit file with an 'encoding' section")
        rows = run_basis_table(cf.circuit, cf.input_state, cf.encoding)
    doc = report_to_json(report, rows)
    if shots is not None:
        doc["samples"] = {"seed": seed or 0, "shots": shots, "counts": sample(report, shots, seed or 0)}
    return doc, report


def synth_document(result: SynthesisResult) -> dict:
    return circuit_to_json(result.circuit, result.ancilla, result.encoding)


def _levels(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise FormatError(f"--levels expects comma-separated integers, got {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    cf = read_circuit(args.circuit)
    doc, report = run_document(cf, _levels(args.levels), args.basis_table, args.shots, args.seed)
    _emit(dumps(doc), args.output)
    return EXIT_OK if report.heralded else EXIT_NO_HERALD


def cmd_table(args: argparse.Namespace) -> int:
    cf = read_circuit(args.circuit)
    if cf.encoding is None:
        raise FormatError(f"{args.circuit}: 'table' needs a circuit file with an 'encoding' section")
    rows = run_basis_table(cf.circuit, cf.input_state, cf.encoding)
    if args.json:
        _emit(dumps(report_to_json(run(cf.circuit, full_input(cf)), rows)["basis_table"]), args.output)
    else:
        lines = [f"{'input':>10}  {'output':>10}  {'p':>24}  phase/pi"]
        ref = next((r.amplitude for r in rows if r.amplitude), 1)
        for r in rows:
            out = ",".join(map(str, r.outputs)) if r.outputs is not None else "-"
            phase = np.angle(r.amplitude / ref) / np.pi if r.amplitude else float("nan")
            lines.append(f"{','.join(map(str, r.inputs)):>10}  {out:>10}  {r.probability:>24.17g}  {phase:+.6f}")
        _emit("\n".join(lines), args.output)
    return EXIT_OK if all(r.probability > 0 for r in rows) else EXIT_NO_HERALD


def cmd_synth(args: argparse.Namespace) -> int:
    spec = read_gate_spec(args.spec)
    result = synthesize(spec)
    for note in result.notes:
        log.info(note)
    for occ, amp in result.ancilla.terms.items():
        log.info("ancilla %s  %+.6f%+.6fj", "".join(f"{p}:{e} " for (p, e), _ in occ).strip(), amp.real, amp.imag)
    _emit(dumps(synth_document(result)), args.output)
    return EXIT_OK


def _corrupted_ps(order: int, ell: int) -> np.ndarray:
    from fractions import Fraction

    u = interferometer_matrix(unit_phase(Fraction(ell, order)))
    u[0, 0] *= 1.01
    return u


def _claim_table(claims: Sequence[ClaimResult]) -> str:
    width = max(len(c.claim_id) for c in claims)
    lines = []
    for c in claims:
        status = "PASS" if c.passed else "FAIL"
        obs = str(c.observed)
        obs = obs if len(obs) <= 60 else obs[:57] + "..."
        lines.append(f"{status}  {c.claim_id:<{width}}  [{c.provenance}]  {obs}")
    failed = sum(not c.passed for c in claims)
    lines.append(f"{len(claims) - failed}/{len(claims)} claims passed")
    return "\n".join(lines)


def cmd_verify(args: argparse.Namespace) -> int:
    if args.corrupt_ps:
        with override_ps_matrix(_corrupted_ps):
            claims = run_suite(args.suite)
    else:
        claims = run_suite(args.suite)
    if args.json:
        doc = {"suite": args.suite, "passed": all(c.passed for c in claims), "claims": [c.to_dict() for c in claims]}
        _emit(dumps(doc), args.output)
    else:
        _emit(_claim_table(claims), args.output)
    return EXIT_OK if all(c.passed for c in claims) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photongates", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a circuit file and print its herald report")
    p.add_argument("circuit")
    p.add_argument("--basis-table", action="store_true", help="also run every computational-basis input")
    p.add_argument("--levels", help="data levels for files with an encoding, e.g. 1,2")
    p.add_argument("--shots", type=int, help="draw this many Monte-Carlo samples from the exact report")
    p.add_argument("--seed", type=int, help="seed for --shots")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="synthesize a circuit from a gate specification file")
    p.add_argument("spec")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="check every quantitative claim")
    p.add_argument("--suite", choices=("paper", "all"), default="all")
    p.add_argument("--json", action="store_true")
    p.add_argument("--corrupt-ps", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", help="print the basis truth table of a synthesized circuit")
    p.add_argument("circuit")
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose or args.command == "synth" else logging.WARNING)
    try:
        return args.func(args)
    except (FormatError, SynthesisError, FockError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
