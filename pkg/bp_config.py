#!/usr/bin/env python3
"""
Experiment Configuration

Resolves an experiment description from four layers, later layers winning:
    defaults (bp_presets.json) -> named preset -> --config file -> CLI flags

Environment Variables:
    BP_DEFAULT_JOBS    Worker threads when a config sets no "jobs" (default: CPU count)
    BP_OUTPUT_DIR      Output directory when a config sets no "out" (default: bp_results)
    BP_PRESETS_FILE    Versioned defaults/presets file (default: bp_presets.json next to this module)

Config file schema (JSON):
    {
      "command": "bp" | "algebra-audit" | "transform" | "sections" | "intersection-test",
      "d": 1 | 2 | 4 | 8,              block size (R, C, H, O)
      "n": int >= 2,                    number of blocks, N = d * n
      "seed": int in [0, 2^64),         mandatory
      "bodies": {
        "K": {"kind": "ball" | "block_lp" | "harmonic" | "cigar", ...parameters,
              "chirality": "left" | "right",
              "perturbations": [{"eps": float, "degree": int, "coefficient": float, "axis": [N floats]}],
              "scale": float},
        "L": {...}
      },
      "grid": {"theta_points": int,
               "quadrature": {"kind": "deterministic" | "monte-carlo", "resolution": int, "samples": int}},
      "schedule": {"eps0": float, "eps_min": float, "factor": float},
      "tolerances": {"sigma": float, "relative_floor": float, "band_multiplier": float, "volume_samples": int},
      "params": {...command specific...},
      "jobs": int,
      "out": "directory"
    }

Every validation failure raises ConfigError naming the file and line of the
offending key (or "<command line>" for flags).
"""

import json
import os
import re
from copy import deepcopy
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from bp_bodies import StarBody, body_from_spec
from bp_sphere import QuadratureRule, sphere_quadrature, theta_grid

load_dotenv()

# ==================== Configuration ====================
BP_DEFAULT_JOBS = int(os.getenv("BP_DEFAULT_JOBS", str(os.cpu_count() or 1)))
BP_OUTPUT_DIR = os.getenv("BP_OUTPUT_DIR", "bp_results")
BP_PRESETS_FILE = os.getenv(
    "BP_PRESETS_FILE", os.path.join(os.path.dirname(os.path.abspath(__file__)), "bp_presets.json")
)

COMMANDS = ("algebra-audit", "bp", "transform", "sections", "intersection-test")
BODY_KINDS = ("ball", "block_lp", "harmonic", "cigar")
SEED_LIMIT = 2**64
FLAGS_SOURCE = "<command line>"


class ConfigError(ValueError):
    """Configuration problem located at filename:line."""

    def __init__(self, message: str, filename: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.filename = filename
        self.line = line
        where = filename or FLAGS_SOURCE
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


@dataclass
class ExperimentConfig:
    command: str
    d: int
    n: int
    seed: int
    bodies: Dict[str, Dict] = field(default_factory=dict)
    grid: Dict = field(default_factory=dict)
    schedule: Dict = field(default_factory=dict)
    tolerances: Dict = field(default_factory=dict)
    params: Dict = field(default_factory=dict)
    jobs: int = 1
    out: str = BP_OUTPUT_DIR
    preset: Optional[str] = None

    @property
    def N(self) -> int:
        return self.d * self.n

    def body(self, name: str) -> StarBody:
        if name not in self.bodies:
            raise ValueError(f"config has no body {name!r} (have {sorted(self.bodies)})")
        return body_from_spec(self.bodies[name], self.d, self.n)

    def thetas(self) -> np.ndarray:
        return theta_grid(self.N, int(self.grid.get("theta_points", 1024)), self.seed)

    def quadrature(self) -> Optional[QuadratureRule]:
        """Rule from grid.quadrature; None lets each routine pick its exact 1-D or product rule."""
        spec = self.grid.get("quadrature")
        if not spec:
            return None
        kind = spec.get("kind", "deterministic")
        if kind == "deterministic" and self.N > 4:
            return None
        return sphere_quadrature(self.N, kind, int(spec.get("resolution", 16)), seed=self.seed,
                                 samples=int(spec.get("samples", 100_000)))

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "preset": self.preset,
            "d": self.d,
            "n": self.n,
            "N": self.N,
            "seed": self.seed,
            "bodies": self.bodies,
            "grid": self.grid,
            "schedule": self.schedule,
            "tolerances": self.tolerances,
            "params": self.params,
        }


# ==================== Loading ====================

def _key_line(text: str, key: str) -> Optional[int]:
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def load_json_document(filename: str) -> Tuple[Dict, str]:
    """(document, raw text); syntax errors carry the JSON decoder's line."""
    try:
        with open(filename, "r", encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError:
        raise ConfigError("file not found", filename)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", filename, e.lineno)
    if not isinstance(document, dict):
        raise ConfigError("top level must be a JSON object", filename, 1)
    return document, text


def load_presets(filename: Optional[str] = None) -> Tuple[Dict, str]:
    filename = filename or BP_PRESETS_FILE
    document, text = load_json_document(filename)
    if "version" not in document:
        raise ConfigError('presets file must carry a "version"', filename, 1)
    for key in ("defaults", "presets"):
        if not isinstance(document.get(key), dict):
            raise ConfigError(f'presets file needs an object "{key}"', filename, _key_line(text, key) or 1)
    return document, text


def list_presets(filename: Optional[str] = None) -> List[Dict[str, str]]:
    document, _ = load_presets(filename)
    return [{"name": name, "command": preset.get("command", ""), "description": preset.get("description", "")}
            for name, preset in document["presets"].items()]


def _merge(base: Dict, update: Dict) -> Dict:
    merged = deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


class _Sources:
    """Which layer last set each top-level key, for line-precise errors."""

    def __init__(self):
        self.origin: Dict[str, Tuple[Optional[str], Optional[str]]] = {}

    def record(self, layer: Dict, filename: Optional[str], text: Optional[str]) -> None:
        for key in layer:
            self.origin[key] = (filename, text)

    def error(self, message: str, top: str, key: Optional[str] = None) -> ConfigError:
        filename, text = self.origin.get(top, (None, None))
        line = None
        if text is not None:
            line = _key_line(text, key or top) or _key_line(text, top)
        return ConfigError(message, filename if filename is not None else FLAGS_SOURCE, line)


# ==================== Validation ====================

def _validate(raw: Dict, sources: _Sources) -> None:
    command = raw.get("command")
    if command not in COMMANDS:
        raise sources.error(f"command must be one of {', '.join(COMMANDS)}, got {command!r}", "command")

    if "seed" not in raw or raw["seed"] is None:
        raise ConfigError("seed is mandatory (pass --seed U64 or set \"seed\" in the config)", FLAGS_SOURCE)
    seed = raw["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < SEED_LIMIT:
        raise sources.error(f"seed must be an unsigned 64-bit integer, got {seed!r}", "seed")

    d = raw.get("d")
    if d not in (1, 2, 4, 8):
        raise sources.error(f"d must be one of {{1, 2, 4, 8}} (parallelizable spheres S^0, S^1, S^3, S^7), "
                            f"got {d!r}", "d")
    n = raw.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise sources.error(f"n must be an integer >= 2, got {n!r}", "n")

    for name, spec in raw.get("bodies", {}).items():
        if not isinstance(spec, dict):
            raise sources.error(f"body {name} must be an object", "bodies", name)
        if spec.get("kind") not in BODY_KINDS:
            raise sources.error(f"body {name}: kind must be one of {', '.join(BODY_KINDS)}, "
                                f"got {spec.get('kind')!r}", "bodies", name)
        if "N" in spec and spec["N"] != d * n:
            raise sources.error(f"body {name}: N = {spec['N']} but d * n = {d * n}", "bodies", name)
        for pert in spec.get("perturbations", []):
            axis = pert.get("axis")
            if axis is not None and len(axis) != d * n:
                raise sources.error(f"body {name}: perturbation axis needs {d * n} components, got {len(axis)}",
                                    "bodies", "axis")
        for term in spec.get("terms", []) + spec.get("perturbations", []):
            degree = term.get("degree", 0)
            if isinstance(degree, bool) or not isinstance(degree, int) or degree < 0 or degree % 2:
                raise sources.error(f"body {name}: harmonic degree must be an even integer >= 0, got {degree!r}",
                                    "bodies", "degree")

    grid = raw.get("grid", {})
    points = grid.get("theta_points", 1)
    if not isinstance(points, int) or points < 1:
        raise sources.error(f"grid.theta_points must be a positive integer, got {points!r}", "grid", "theta_points")
    quad = grid.get("quadrature", {})
    for key in ("resolution", "samples"):
        value = quad.get(key, 1)
        if not isinstance(value, int) or value < 1:
            raise sources.error(f"grid.quadrature.{key} must be a positive integer, got {value!r}", "grid", key)
    if quad.get("kind", "deterministic") not in ("deterministic", "monte-carlo"):
        raise sources.error(f"grid.quadrature.kind must be deterministic or monte-carlo, got {quad.get('kind')!r}",
                            "grid", "kind")

    schedule = raw.get("schedule", {})
    eps0, eps_min, factor = schedule.get("eps0", 0.2), schedule.get("eps_min", 1e-4), schedule.get("factor", 0.5)
    if not (eps0 >= eps_min > 0 and 0 < factor < 1):
        raise sources.error(f"schedule must be monotone: need eps0 >= eps_min > 0 and 0 < factor < 1, "
                            f"got eps0={eps0}, eps_min={eps_min}, factor={factor}", "schedule")

    for key, value in raw.get("tolerances", {}).items():
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
            raise sources.error(f"tolerance {key} must be a nonnegative number, got {value!r}", "tolerances", key)

    jobs = raw.get("jobs")
    if jobs is not None and (not isinstance(jobs, int) or jobs < 1):
        raise sources.error(f"jobs must be a positive integer, got {jobs!r}", "jobs")


def resolve_config(command: Optional[str] = None, preset: Optional[str] = None, config_path: Optional[str] = None,
                   flags: Optional[Dict[str, Any]] = None, presets_file: Optional[str] = None) -> ExperimentConfig:
    """Merge defaults, preset, config file and flags, then validate."""
    presets_file = presets_file or BP_PRESETS_FILE
    document, presets_text = load_presets(presets_file)
    sources = _Sources()

    raw = deepcopy(document["defaults"])
    sources.record(raw, presets_file, presets_text)

    if preset is not None:
        if preset not in document["presets"]:
            raise ConfigError(f"unknown preset {preset!r} (have {', '.join(sorted(document['presets']))})",
                              FLAGS_SOURCE)
        layer = {k: v for k, v in document["presets"][preset].items() if k != "description"}
        raw = _merge(raw, layer)
        sources.record(layer, presets_file, presets_text)

    if config_path is not None:
        layer, text = load_json_document(config_path)
        raw = _merge(raw, layer)
        sources.record(layer, config_path, text)

    layer = {k: v for k, v in (flags or {}).items() if v is not None}
    if command is not None:
        if preset is not None and raw.get("command") not in (None, command):
            raise ConfigError(f"preset {preset!r} belongs to command {raw['command']!r}, not {command!r}",
                              FLAGS_SOURCE)
        layer["command"] = command
    raw = _merge(raw, layer)
    sources.record(layer, None, None)

    _validate(raw, sources)
    return ExperimentConfig(
        command=raw["command"],
        d=raw["d"],
        n=raw["n"],
        seed=raw["seed"],
        bodies=raw.get("bodies", {}),
        grid=raw.get("grid", {}),
        schedule=raw.get("schedule", {}),
        tolerances=raw.get("tolerances", {}),
        params=raw.get("params", {}),
        jobs=raw.get("jobs") or BP_DEFAULT_JOBS,
        out=raw.get("out") or BP_OUTPUT_DIR,
        preset=preset,
    )
