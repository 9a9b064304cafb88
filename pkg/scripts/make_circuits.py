"""Regenerate the sample gate specifications and circuit files under circuits/."""

from pathlib import Path

from photongates.cli import synth_document
from photongates.formats import circuit_to_json, dumps, read_gate_spec
from photongates.synth import synthesize
from photongates.verify import designated_circuit, hom_circuit, identity_circuit

OUT = Path(__file__).resolve().parent.parent / "circuits"

SPECS = {
    "cx3.spec.json": {"kind": "cx", "d": 3, "arity": 2},
    "cnot.spec.json": {"kind": "cx", "d": 2, "arity": 2},
    "ccx4.spec.json": {"kind": "ccx", "d": [2, 2, 4], "arity": 3},
    "cphase3.spec.json": {"kind": "cphase", "d": 3, "arity": 2},
    "affine3.spec.json": {
        "kind": "general_affine",
        "d": 3,
        "arity": 2,
        "parameters": {"expr": "(c1+c2)%d,(2c1+c2)%d"},
    },
    "identity.spec.json": {"kind": "shift", "d": 3, "arity": 1, "parameters": {"s": 3}},
    "shift1.spec.json": {"kind": "shift", "d": 3, "arity": 1, "parameters": {"s": 1}},
}


def write(name: str, doc: dict) -> None:
    (OUT / name).write_text(dumps(doc) + "\n", encoding="utf-8")


def main() -> None:
    OUT.mkdir(exist_ok=True)
    for name, doc in SPECS.items():
        write(name, {"version": 1, **doc})
    write("empty.json", circuit_to_json(*identity_circuit()))
    write("hom.json", circuit_to_json(*hom_circuit()))
    write("rewrite_pattern.json", circuit_to_json(*designated_circuit(3, 1, 0)))
    write("cx3.json", synth_document(synthesize(read_gate_spec(str(OUT / "cx3.spec.json")))))


if __name__ == "__main__":
    main()
