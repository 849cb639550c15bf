"""Experiment configuration: a versioned JSON document.

Example::

    {
      "schema_version": 1,
      "experiment": "l2_decay",
      "curve": {"name": "moment", "d": 2},
      "grid": {"n_x": 512, "n_s": 129, "n_t": 65},
      "sweep": {"k": [4, 5, 6, 7, 8]},
      "seed": 0
    }

Unknown keys are rejected at every level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..curves import CURVE_REGISTRY, Curve, make_curve
from ..errors import InvalidArgument

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "l2_decay",
    "witness",
    "decoupling",
    "schedule",
    "cover_check",
    "recursion_check",
    "kernel_check",
    "class_check",
)

CURVES = tuple(CURVE_REGISTRY)

_num = {"type": "number"}
_int = {"type": "integer"}


def _list(item):
    return {"type": "array", "items": item, "minItems": 1}


SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "experiment"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "curve": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": list(CURVES)},
                "d": {"type": "integer", "minimum": 2},
                "exponents": _list({"type": "integer", "minimum": 1}),
                "eps": _num,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_x": {"type": "integer", "minimum": 2},
                "n_s": {"type": "integer", "minimum": 3},
                "n_t": {"type": "integer", "minimum": 3},
                "period": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": _list(_int),
                "lambda": _list({"type": "integer", "minimum": 8}),
                "p": _list({"type": "number", "exclusiveMinimum": 0}),
                "alpha": _list(_num),
                "N": _list({"type": "integer", "minimum": 1}),
                "delta": _list({"type": "number", "exclusiveMinimum": 0}),
                "delta0": {"type": "number", "exclusiveMinimum": 0},
                "delta1": {"type": "number", "exclusiveMinimum": 0},
                "rho": {"type": "number", "exclusiveMinimum": 0},
                "C0": {"type": "number", "exclusiveMinimum": 0},
                "B": {"type": "number", "minimum": 1},
                "family": {"enum": ["focusing", "random_phase", "finite_type"]},
                "quantity": {"enum": ["norm_f", "norm_Rf"]},
                "n_samples": {"type": "integer", "minimum": 1},
                "n_draws": {"type": "integer", "minimum": 1},
                "tolerance": {"type": "number", "minimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description.

    ``sweep`` keeps the raw mapping; experiment runners read the keys they
    need and fall back to documented defaults.
    """

    experiment: str
    curve: dict = field(default_factory=lambda: {"name": "moment", "d": 2})
    grid: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    seed: int = 0
    output: str = "out"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise InvalidArgument(f"config error at {where}: {exc.message}") from None
        cfg = cls(
            experiment=raw["experiment"],
            curve=dict(raw.get("curve", {"name": "moment", "d": 2})),
            grid=dict(raw.get("grid", {})),
            sweep=dict(raw.get("sweep", {})),
            seed=int(raw.get("seed", 0)),
            output=str(raw.get("output", "out")),
        )
        cfg.build_curve()  # names must resolve
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(Path(path), encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidArgument(f"{path}: not valid JSON ({exc.msg})") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "curve": self.curve,
            "grid": self.grid,
            "sweep": self.sweep,
            "seed": self.seed,
            "output": self.output,
        }

    def build_curve(self) -> Curve:
        return curve_from_spec(self.curve)

    def rng(self, stream: int) -> np.random.Generator:
        """Independent generator for component ``stream`` (see :func:`stream_rng`)."""
        return stream_rng(self.seed, stream)


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based split: stream ``i`` is seeded by the entropy pair ``(seed, i)``."""
    return np.random.default_rng([int(seed), int(stream)])


def curve_from_spec(spec: dict) -> Curve:
    """Resolve a curve by registered name; remaining keys are constructor parameters."""
    params = {k: v for k, v in spec.items() if k != "name"}
    if spec.get("name") == "finite_type" and "exponents" not in params:
        raise InvalidArgument("finite_type needs 'exponents'")
    return make_curve(spec.get("name"), **params)
