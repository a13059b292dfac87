"""Experiment configurations: schema, validation, fingerprints, and the
builtin config catalogue used by the CLI and the regression suite."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import jsonschema

from . import geometry as geo
from . import gibbs as gb
from . import groups as gr
from . import walk as wk

EXPERIMENTS = [
    "inequality", "pressure-covariance", "parabolic-distortion",
    "deviation-tail", "green-decay", "mc-green", "shadow-bands",
    "phi-trend", "geometry-identities", "bump-fake-drift",
]

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "experiment", "action", "measure", "seed"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "experiment": {"enum": EXPERIMENTS},
        "action": {"enum": sorted(gr.BUILTIN_ACTIONS)},
        "measure": {
            "type": "array", "minItems": 2,
            "items": {
                "type": "array", "minItems": 2, "maxItems": 2,
                "prefixItems": [
                    {"type": "string"},
                    {"type": "number", "exclusiveMinimum": 0},
                ],
            },
        },
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["zero", "constant", "plane-bump"]},
                "c": {"type": "number"},
                "amplitude": {"type": "number", "exclusiveMinimum": 0},
                "rep_radius": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "params": {"type": "object"},
        "expect": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description with a canonical fingerprint."""

    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as e:
            path = "$" + "".join("[%r]" % p for p in e.absolute_path)
            raise ConfigError("config invalid at %s: %s" % (path, e.message))
        return cls(raw=data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError("config is not valid JSON: %s" % e)
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def experiment(self) -> str:
        return self.raw["experiment"]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def params(self) -> dict:
        return dict(self.raw.get("params", {}))

    @property
    def expect(self) -> dict:
        return dict(self.raw.get("expect", {}))

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True,
                          separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def build_action(self) -> gr.GroupAction:
        return gr.BUILTIN_ACTIONS[self.raw["action"]]()

    def build_measure(self, action: gr.GroupAction | None = None) -> wk.WalkMeasure:
        act = action or self.build_action()
        return wk.make_measure(act, [(w, float(p)) for w, p in self.raw["measure"]])

    def build_potential(self, action: gr.GroupAction | None = None) -> gb.Potential:
        spec = self.raw.get("potential", {"name": "zero"})
        name = spec["name"]
        if name == "zero":
            return gb.Zero()
        if name == "constant":
            return gb.Constant(float(spec.get("c", 1.0)))
        act = action or self.build_action()
        if act.model != "plane":
            raise ConfigError("plane-bump potential needs a plane action")
        F = gb.PlaneBump(act, amplitude=float(spec.get("amplitude", 0.2)),
                         rep_radius=float(spec.get("rep_radius", 6.0)))
        if "c" in spec:
            F = F.shifted(float(spec["c"]))
        return F


def _uniform(letters: str) -> list:
    return [[c, 1.0] for c in letters]


BUILTIN_CONFIGS: dict = {}


def _register(cfg: dict) -> None:
    BUILTIN_CONFIGS[cfg["name"]] = cfg


_register({
    "name": "f2-uniform-equality",
    "experiment": "inequality",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "potential": {"name": "zero"},
    "params": {"n": 10000, "batch": 1000, "radius": 12, "window": [4, 12],
               "conv_n": 12},
    "expect": {"verdict": "equality-consistent"},
    "seed": 2024,
})

_register({
    "name": "f3-uniform-equality",
    "experiment": "inequality",
    "action": "free-3",
    "measure": _uniform("aAbBcC"),
    "potential": {"name": "zero"},
    "params": {"n": 10000, "batch": 1000, "radius": 8, "window": [3, 8],
               "conv_n": 9},
    "expect": {"verdict": "equality-consistent"},
    "seed": 2025,
})

_register({
    "name": "f2-constant-shift",
    "experiment": "inequality",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "potential": {"name": "constant", "c": 1.0},
    "params": {"n": 10000, "batch": 1000, "radius": 12, "window": [4, 12],
               "conv_n": 12},
    "expect": {"verdict": "equality-consistent"},
    "seed": 2026,
})

_register({
    "name": "modular-strict",
    "experiment": "inequality",
    "action": "modular",
    "measure": _uniform("sStT"),
    "potential": {"name": "zero"},
    "params": {"n": 5000, "batch": 500, "radius": 14, "window": [6, 14],
               "conv_n": 20},
    "expect": {"verdict": "strictly-less"},
    "seed": 2027,
})

_register({
    "name": "pressure-covariance-f2",
    "experiment": "pressure-covariance",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "params": {"radius": 12, "window": [4, 12], "shifts": [-1.0, 0.5, 1.0],
               "tol": 0.02},
    "expect": {"pass": True},
    "seed": 2028,
})

_register({
    "name": "pressure-covariance-schottky",
    "experiment": "pressure-covariance",
    "action": "schottky",
    "measure": _uniform("aAbB"),
    "params": {"radius": 16, "window": [4, 16], "shifts": [-1.0, 0.5, 1.0],
               "tol": 0.02},
    "expect": {"pass": True},
    "seed": 2029,
})

_register({
    "name": "modular-parabolic-distortion",
    "experiment": "parabolic-distortion",
    "action": "modular",
    "measure": _uniform("sStT"),
    "params": {"N": 60, "fit_lo": 8, "log_c_band": [0.45, 0.55]},
    "expect": {"pass": True},
    "seed": 2030,
})

_register({
    "name": "f2-deviation-tail",
    "experiment": "deviation-tail",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "params": {"k": 100, "n": 200, "batch": 10000,
               "a_grid": [0, 1, 2, 3, 4, 5, 6], "max_slope": -0.3},
    "expect": {"pass": True},
    "seed": 2031,
})

_register({
    "name": "schottky-deviation-tail",
    "experiment": "deviation-tail",
    "action": "schottky",
    "measure": _uniform("aAbB"),
    "params": {"k": 200, "n": 400, "batch": 10000,
               "a_grid": [1, 2, 3, 4, 5, 6], "max_slope": -0.3},
    "expect": {"pass": True},
    "seed": 2032,
})

_register({
    "name": "f2-biased-greendecay",
    "experiment": "green-decay",
    "action": "free-2",
    "measure": [["a", 0.4], ["A", 0.2], ["b", 0.2], ["B", 0.2]],
    "params": {"radius": 6, "band": [0.3, 3.5],
               "method": "truncated-convolution"},
    "expect": {"pass": True},
    "seed": 2033,
})

_register({
    "name": "f2-mc-green",
    "experiment": "mc-green",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "params": {"words": ["a", "ab", "aba", "abA", "abab", "aBaB", "ababa",
                         "abaBa", "ababab", "aBaBaB"],
               "paths": 200000, "horizon": 200, "sigmas": 4.0},
    "expect": {"pass": True},
    "seed": 2034,
})

_register({
    "name": "f2-shadow-bands",
    "experiment": "shadow-bands",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "params": {"radius": 12, "window": [4, 12], "max_norm": 6,
               "horizon": 160, "batch": 50000, "band_factor": 10.0},
    "expect": {"pass": True},
    "seed": 2035,
})

_register({
    "name": "f2-phin-trend",
    "experiment": "phi-trend",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "params": {"n_grid": [20, 40, 80], "batch": 200, "radius": 12,
               "trend": "stable", "min_p_half": 0.9},
    "expect": {"pass": True},
    "seed": 2036,
})

_register({
    "name": "modular-phin-trend",
    "experiment": "phi-trend",
    "action": "modular",
    "measure": _uniform("sStT"),
    "params": {"n_grid": [20, 40, 80], "batch": 200, "radius": 12,
               "window": [5, 12], "trend": "decreasing"},
    "expect": {"pass": True},
    "seed": 2037,
})

_register({
    "name": "geometry-identities",
    "experiment": "geometry-identities",
    "action": "free-2",
    "measure": _uniform("aAbB"),
    "params": {"samples": 10000},
    "expect": {"pass": True},
    "seed": 2038,
})

_register({
    "name": "modular-bump-fakedrift",
    "experiment": "bump-fake-drift",
    "action": "modular",
    "measure": [["s", 2.0], ["t", 1.0], ["T", 1.0]],
    "potential": {"name": "plane-bump", "amplitude": 1.0, "rep_radius": 6.0},
    "params": {"n": 100, "batch": 200},
    "expect": {"pass": True},
    "seed": 2039,
})

for _name, _cfg in BUILTIN_CONFIGS.items():
    # catalogue entries obey the published schema
    jsonschema.validate(_cfg, SCHEMA)
