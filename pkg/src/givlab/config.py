"""Experiment configuration files: JSON schema, angle parsing, system construction."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import arrow
from .engine import GivSystem, VariableSpec
from .errors import GivError, InvalidConfig

EXPERIMENTS = (
    "probability_table",
    "defect_scan",
    "interference",
    "collapse_report",
    "sample",
    "spin_half",
    "isotropy_scan",
)
FUNCTION_NAMES = sorted(arrow.BUILTIN_FUNCTIONS)

_ANGLE = {
    "oneOf": [
        {"type": "number"},
        {"type": "string", "pattern": r"^\s*[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?\s*(deg|rad)\s*$"},
    ]
}
_FNAME = {"type": "string", "enum": FUNCTION_NAMES}
_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"type": "string", "enum": list(EXPERIMENTS)},
        "system": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "directions"],
                    "properties": {
                        "type": {"const": "arrow"},
                        "directions": {
                            "type": "object",
                            "minProperties": 1,
                            "additionalProperties": _ANGLE,
                        },
                        "symmetry_level": {
                            "type": "string",
                            "enum": [lvl.value for lvl in arrow.SymmetryLevel],
                        },
                        "f": {
                            "oneOf": [
                                _FNAME,
                                {
                                    "type": "object",
                                    "additionalProperties": {
                                        "oneOf": [
                                            _FNAME,
                                            {
                                                "type": "object",
                                                "additionalProperties": False,
                                                "required": ["plus", "minus"],
                                                "properties": {"plus": _FNAME, "minus": _FNAME},
                                            },
                                        ]
                                    },
                                },
                            ]
                        },
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "variables", "embeddings"],
                    "properties": {
                        "type": {"const": "explicit"},
                        "variables": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["id", "outcomes"],
                                "properties": {
                                    "id": {"type": "string"},
                                    "outcomes": {
                                        "type": "array",
                                        "items": {"type": "string"},
                                        "minItems": 2,
                                    },
                                    "eigenvalues": {"type": "array", "items": _COMPLEX},
                                },
                            },
                        },
                        "embeddings": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["from", "to", "matrix"],
                                "properties": {
                                    "from": {"type": "string"},
                                    "to": {"type": "string"},
                                    "matrix": {
                                        "type": "array",
                                        "items": {"type": "array", "items": _COMPLEX},
                                    },
                                },
                            },
                        },
                    },
                },
            ]
        },
        "grid": {"type": "integer", "minimum": 2, "maximum": 100000},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"type": "string", "enum": ["csv", "json"]},
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "orientation": _ANGLE,
                "range": {"type": "array", "items": _ANGLE, "minItems": 2, "maxItems": 2},
                "variable": {"type": "string"},
                "via": {"type": "string"},
                "target": {"type": "string"},
                "prepare": {
                    "oneOf": [
                        {"const": "grid"},
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["orientation"],
                            "properties": {"orientation": _ANGLE},
                        },
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["eigenstate"],
                            "properties": {
                                "eigenstate": {
                                    "type": "object",
                                    "additionalProperties": False,
                                    "required": ["variable", "index"],
                                    "properties": {
                                        "variable": {"type": "string"},
                                        "index": {"type": "integer", "minimum": 0},
                                    },
                                }
                            },
                        },
                    ]
                },
                "sweep": {"type": "boolean"},
                "candidates": {"type": "array", "items": _FNAME, "minItems": 1},
                "pairs": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["plus", "minus"],
                        "properties": {"plus": _FNAME, "minus": _FNAME},
                    },
                },
            },
        },
    },
}


def parse_angle(value, degrees: bool = False) -> float:
    """Radians from a number (radians, or degrees when ``degrees``) or a suffixed string like ``"90deg"``."""
    if isinstance(value, str):
        m = re.fullmatch(r"\s*(.*?)\s*(deg|rad)\s*", value)
        if not m:
            raise InvalidConfig(f"angle {value!r} needs a 'deg' or 'rad' suffix")
        x = float(m.group(1))
        return math.radians(x) if m.group(2) == "deg" else x
    x = float(value)
    return math.radians(x) if degrees else x


def _complex(value) -> complex:
    return complex(value[0], value[1]) if isinstance(value, list) else complex(value)


@dataclass
class ExperimentConfig:
    experiment: str
    raw: dict
    system: dict | None = None
    grid: int | None = None
    trials: int | None = None
    seed: int | None = None
    output_path: str | None = None
    output_format: str = "csv"
    params: dict = field(default_factory=dict)
    degrees: bool = False

    def angle(self, value) -> float:
        return parse_angle(value, self.degrees)

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidConfig(f"{where}: {exc.message}") from None


def load_config(path: str | Path | None, experiment: str, degrees: bool = False) -> ExperimentConfig:
    """Read and validate a config file; ``path=None`` gives an empty config for ``experiment``."""
    raw: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise InvalidConfig("config must be a JSON object")
    validate(raw)
    if "experiment" in raw and raw["experiment"] != experiment:
        raise InvalidConfig(
            f"config is for experiment {raw['experiment']!r} but {experiment!r} was requested"
        )
    out = raw.get("output", {})
    return ExperimentConfig(
        experiment=experiment,
        raw=raw,
        system=raw.get("system"),
        grid=raw.get("grid"),
        trials=raw.get("trials"),
        seed=raw.get("seed"),
        output_path=out.get("path"),
        output_format=out.get("format", "csv"),
        params=dict(raw.get("params", {})),
        degrees=degrees,
    )


def build_system(desc: dict, degrees: bool = False) -> GivSystem:
    """Construct an Arrow or explicit system from its (already schema-valid) description."""
    try:
        if desc["type"] == "arrow":
            return _arrow_system(desc, degrees)
        return _explicit_system(desc)
    except GivError as exc:
        if isinstance(exc, InvalidConfig):
            raise
        raise InvalidConfig(f"system: {exc}") from exc
    except ValueError as exc:
        raise InvalidConfig(f"system: {exc}") from exc


def _arrow_system(desc: dict, degrees: bool) -> arrow.ArrowSystem:
    dirs = {k: parse_angle(v, degrees) for k, v in desc["directions"].items()}
    level = desc.get("symmetry_level", "isotropic")
    fspec = desc.get("f", "cosine_squared")
    funcs = {}
    for v in dirs:
        entry = fspec if isinstance(fspec, str) else fspec.get(v)
        if entry is None:
            raise InvalidConfig(f"system/f: no probability function for variable {v!r}")
        if isinstance(entry, str):
            f = arrow.named_function(entry)
            funcs[v] = (f, f)
        else:
            funcs[v] = (arrow.named_function(entry["plus"]), arrow.named_function(entry["minus"]))
    if not isinstance(fspec, str):
        extra = set(fspec) - set(dirs)
        if extra:
            raise InvalidConfig(f"system/f: functions for unknown variables {sorted(extra)}")
    return arrow.build_arrow_system(arrow.ArrowConfig(dirs, funcs, level))


def _explicit_system(desc: dict) -> GivSystem:
    variables = [
        VariableSpec(
            v["id"],
            tuple(v["outcomes"]),
            tuple(_complex(x) for x in v.get("eigenvalues", [])),
        )
        for v in desc["variables"]
    ]
    embeddings = {}
    for e in desc["embeddings"]:
        m = np.array([[_complex(x) for x in row] for row in e["matrix"]], dtype=complex)
        embeddings[(e["from"], e["to"])] = m
    return GivSystem(variables, embeddings)
