"""JSON description of staged ancilla circuits.

A document looks like::

    {
      "input": {"squeeze": 0.2, "displacement": [0.3, -0.1]},
      "stages": [
        {"gates": [{"gate": "beamsplit", "modes": [0, 1], "params": [0.785, 0.0]}],
         "photons": 1, "outcome": 0.3,
         "feedforward": [{"gate": "displacement", "params": [0, 0], "gain": [0.0, 0.5]}]}
      ]
    }

Stage gates act on the data mode 0 and the stage's ancilla, mode 1; the
ancilla is measured unless ``measure`` says otherwise. Feedforward gates act
on the surviving mode; ``gain`` adds ``gain * outcome`` to the parameters.
"""
from __future__ import annotations

import json
import math
from typing import Any

import jsonschema
import numpy as np

from .fock_circuit import Stage, StagedCircuit
from .gaussian_core import Gate, GaussianState, apply_symplectic, displacement, squeeze, vacuum
from .gaussian_core import phase as phase_gate

GATE_NAMES = ["squeeze", "phase", "beamsplit", "sum", "displacement", "two_mode_squeeze"]

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}

GATE_SCHEMA = {
    "type": "object",
    "required": ["gate"],
    "additionalProperties": False,
    "properties": {
        "gate": {"enum": GATE_NAMES},
        "modes": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1, "maxItems": 2},
        "params": _NUMBER_LIST,
        "gain": _NUMBER_LIST,
    },
}

CIRCUIT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["stages"],
    "additionalProperties": False,
    "properties": {
        "input": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "squeeze": {"type": "number"},
                "phase": {"type": "number"},
                "displacement": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
        "stages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["photons", "outcome"],
                "additionalProperties": False,
                "properties": {
                    "gates": {"type": "array", "items": GATE_SCHEMA},
                    "photons": {"type": "integer", "minimum": 0},
                    "outcome": {"type": "number"},
                    "measure": {"type": "integer", "minimum": 0, "maximum": 1},
                    "feedforward": {"type": "array", "items": GATE_SCHEMA},
                },
            },
        },
        "seed": {"type": "integer"},
    },
}


class CircuitSpecError(ValueError):
    """The circuit document is malformed; the message names the offending field."""


def _default_modes(name: str) -> tuple[int, ...]:
    return (0, 1) if name in ("beamsplit", "sum", "two_mode_squeeze") else (0,)


def _gate(entry: dict, outcome: float | None = None) -> Gate:
    name = entry["gate"]
    params = list(entry.get("params", []))
    if "gain" in entry:
        if outcome is None:
            raise CircuitSpecError(f"'gain' is only allowed on feedforward gates ({name})")
        gain = entry["gain"]
        if len(gain) != len(params):
            raise CircuitSpecError(f"gain of {name} has {len(gain)} entries, params has {len(params)}")
        params = [p + g * outcome for p, g in zip(params, gain)]
    try:
        return Gate(name, tuple(entry.get("modes", _default_modes(name))), tuple(params))
    except (ValueError, IndexError) as exc:
        raise CircuitSpecError(f"gate {name}: {exc}") from None


def validate(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(CIRCUIT_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        lines = []
        for err in errors:
            where = "/".join(str(p) for p in err.path) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise CircuitSpecError("invalid circuit document:\n  " + "\n  ".join(lines))


def input_state(doc: dict) -> GaussianState:
    spec = doc.get("input", {})
    gates = []
    if spec.get("squeeze"):
        gates.append(squeeze(spec["squeeze"]))
    if spec.get("phase"):
        gates.append(phase_gate(spec["phase"]))
    if "displacement" in spec:
        gates.append(displacement(*spec["displacement"]))
    return apply_symplectic(vacuum(1), gates) if gates else vacuum(1)


def circuit_from_dict(doc: dict) -> tuple[StagedCircuit, GaussianState]:
    validate(doc)
    stages = []
    for k, st in enumerate(doc["stages"]):
        gates = [_gate(g) for g in st.get("gates", [])]
        for g in gates:
            if max(g.modes) > 1:
                raise CircuitSpecError(f"stages/{k}: gate {g.name} addresses mode {max(g.modes)}; only 0 and 1 exist")
        ff = st.get("feedforward")
        feedforward = None
        if ff:
            feedforward = (lambda entries: (lambda y: [_gate(e, y) for e in entries]))(ff)
            for e in ff:
                if any(m > 0 for m in e.get("modes", [0])):
                    raise CircuitSpecError(f"stages/{k}/feedforward: only mode 0 survives the measurement")
        stages.append(Stage(tuple(gates), st["photons"], float(st["outcome"]), st.get("measure"), feedforward))
    return StagedCircuit(tuple(stages), 1), input_state(doc)


def parse_circuit(text: str) -> tuple[StagedCircuit, GaussianState]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitSpecError(f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return circuit_from_dict(doc)


def load_circuit(path) -> tuple[StagedCircuit, GaussianState]:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def random_circuit(seed: int, max_ancillae: int = 2, max_photons: int = 3, max_squeeze: float = 0.5) -> dict:
    """A seeded random circuit document (one data mode, 1..max_ancillae stages)."""
    rng = np.random.default_rng(seed)
    r = lambda: float(np.round(rng.uniform(-max_squeeze, max_squeeze), 6))  # noqa: E731
    ang = lambda: float(np.round(rng.uniform(0, math.pi), 6))  # noqa: E731
    doc = {
        "seed": int(seed),
        "input": {"squeeze": r(), "displacement": [float(np.round(v, 6)) for v in rng.uniform(-0.5, 0.5, 2)]},
        "stages": [],
    }
    for _ in range(int(rng.integers(1, max_ancillae + 1))):
        gates = [
            {"gate": "squeeze", "modes": [1], "params": [r()]},
            {"gate": "beamsplit", "modes": [0, 1], "params": [float(np.round(rng.uniform(0.2, 1.3), 6)), ang()]},
            {"gate": "phase", "modes": [0], "params": [ang()]},
        ]
        if rng.random() < 0.5:
            gates.append({"gate": "two_mode_squeeze", "modes": [0, 1], "params": [r()]})
        if rng.random() < 0.5:
            gates.append({"gate": "squeeze", "modes": [0], "params": [r()]})
        stage = {
            "gates": gates,
            "photons": int(rng.integers(0, max_photons + 1)),
            "outcome": float(np.round(rng.uniform(-1, 1), 6)),
        }
        if rng.random() < 0.5:
            stage["feedforward"] = [{"gate": "displacement", "params": [0.0, 0.0], "gain": [float(np.round(rng.uniform(-0.5, 0.5), 6)), 0.0]}]
        doc["stages"].append(stage)
    return doc
