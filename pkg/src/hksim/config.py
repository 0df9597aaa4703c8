"""JSON run configuration: parsing, validation, and scenario materialization.

Validation is strict: unknown keys are rejected, and every error message
carries the JSON path of the offending entry so a bad config pinpoints
itself. Exactly one opinion source must be given: explicit ``opinions``
(optionally with ``weights``), a piecewise-constant ``density`` with ``n``
and a ``sampling`` rule, or a ``preset`` name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .continuum import DensitySpec, discretize
from .core import OpinionState, SimParams
from .experiments import PRESET_NAMES


class ConfigError(ValueError):
    """Invalid run configuration. ``path`` locates the bad entry."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class OutputSpec:
    out_dir: str = "."
    trajectory: bool = True
    summary: bool = True


@dataclass(frozen=True)
class RunConfig:
    """Validated run description.

    ``kind`` is one of "opinions", "density", "preset"; the matching payload
    fields are set and the rest are None.
    """

    kind: str
    opinions: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    density: Optional[DensitySpec] = None
    n: Optional[int] = None
    sampling: str = "quantile"
    preset: Optional[str] = None
    params: SimParams = field(default_factory=SimParams)
    seed: Optional[int] = None
    outputs: OutputSpec = field(default_factory=OutputSpec)


def _expect_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, "expected an object")
    return value


def _expect_number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, "expected a number")
    v = float(value)
    if not np.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _expect_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, "expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return value


def _expect_bool(value, path):
    if not isinstance(value, bool):
        raise ConfigError(path, "expected true or false")
    return value


def _expect_str(value, path):
    if not isinstance(value, str):
        raise ConfigError(path, "expected a string")
    return value


def _number_list(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a non-empty array of numbers")
    return np.array([_expect_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _reject_unknown(doc, allowed, path):
    for key in doc:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(where, "unknown key")


def _parse_density(doc, path) -> DensitySpec:
    _expect_mapping(doc, path)
    _reject_unknown(doc, {"pieces"}, path)
    if "pieces" not in doc:
        raise ConfigError(path, "missing required key 'pieces'")
    raw = doc["pieces"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}.pieces", "expected a non-empty array")
    pieces = []
    for i, item in enumerate(raw):
        ppath = f"{path}.pieces[{i}]"
        _expect_mapping(item, ppath)
        _reject_unknown(item, {"interval", "height"}, ppath)
        for key in ("interval", "height"):
            if key not in item:
                raise ConfigError(ppath, f"missing required key '{key}'")
        iv = item["interval"]
        if not isinstance(iv, list) or len(iv) != 2:
            raise ConfigError(f"{ppath}.interval", "expected [start, end]")
        a = _expect_number(iv[0], f"{ppath}.interval[0]")
        b = _expect_number(iv[1], f"{ppath}.interval[1]")
        h = _expect_number(item["height"], f"{ppath}.height")
        pieces.append((a, b, h))
    try:
        return DensitySpec.from_pieces(pieces)
    except ValueError as exc:
        raise ConfigError(f"{path}.pieces", str(exc)) from exc


def _parse_params(doc, path) -> SimParams:
    _expect_mapping(doc, path)
    allowed = {"max_steps", "fixed_point_tol", "record_every"}
    _reject_unknown(doc, allowed, path)
    kwargs = {}
    if "max_steps" in doc:
        kwargs["max_steps"] = _expect_int(doc["max_steps"], f"{path}.max_steps", minimum=0)
    if "fixed_point_tol" in doc:
        tol = _expect_number(doc["fixed_point_tol"], f"{path}.fixed_point_tol")
        if tol < 0.0:
            raise ConfigError(f"{path}.fixed_point_tol", "must be >= 0")
        kwargs["fixed_point_tol"] = tol
    if "record_every" in doc:
        kwargs["record_every"] = _expect_int(doc["record_every"], f"{path}.record_every", minimum=1)
    return SimParams(**kwargs)


def _parse_outputs(doc, path) -> OutputSpec:
    _expect_mapping(doc, path)
    allowed = {"out_dir", "trajectory", "summary"}
    _reject_unknown(doc, allowed, path)
    kwargs = {}
    if "out_dir" in doc:
        kwargs["out_dir"] = _expect_str(doc["out_dir"], f"{path}.out_dir")
    if "trajectory" in doc:
        kwargs["trajectory"] = _expect_bool(doc["trajectory"], f"{path}.trajectory")
    if "summary" in doc:
        kwargs["summary"] = _expect_bool(doc["summary"], f"{path}.summary")
    return OutputSpec(**kwargs)


_ROOT_KEYS = {
    "opinions",
    "weights",
    "density",
    "n",
    "sampling",
    "preset",
    "params",
    "seed",
    "outputs",
}


def parse_config(doc: dict) -> RunConfig:
    """Validate a parsed JSON document and return a RunConfig."""
    _expect_mapping(doc, "")
    _reject_unknown(doc, _ROOT_KEYS, "")

    sources = [k for k in ("opinions", "density", "preset") if k in doc]
    if len(sources) != 1:
        raise ConfigError(
            "", "exactly one of 'opinions', 'density', 'preset' must be given"
        )
    kind = sources[0]

    params = _parse_params(doc["params"], "params") if "params" in doc else SimParams()
    outputs = _parse_outputs(doc["outputs"], "outputs") if "outputs" in doc else OutputSpec()
    seed = _expect_int(doc["seed"], "seed", minimum=0) if "seed" in doc else None

    if kind == "opinions":
        for bad in ("n", "sampling"):
            if bad in doc:
                raise ConfigError(bad, "only valid with a 'density' source")
        opinions = _number_list(doc["opinions"], "opinions")
        weights = None
        if "weights" in doc:
            weights = _number_list(doc["weights"], "weights")
            if weights.size != opinions.size:
                raise ConfigError("weights", "length must match 'opinions'")
            if np.any(weights <= 0.0):
                raise ConfigError("weights", "must be positive")
        return RunConfig(
            kind, opinions=opinions, weights=weights, params=params, seed=seed, outputs=outputs
        )

    if "weights" in doc:
        raise ConfigError("weights", "only valid with an 'opinions' source")

    if kind == "density":
        density = _parse_density(doc["density"], "density")
        if "n" not in doc:
            raise ConfigError("", "'density' requires 'n'")
        n = _expect_int(doc["n"], "n", minimum=1)
        sampling = "quantile"
        if "sampling" in doc:
            sampling = _expect_str(doc["sampling"], "sampling")
            if sampling not in ("quantile", "random"):
                raise ConfigError("sampling", "expected 'quantile' or 'random'")
        if sampling == "random" and seed is None:
            raise ConfigError("seed", "required when sampling is 'random'")
        return RunConfig(
            kind, density=density, n=n, sampling=sampling, params=params, seed=seed, outputs=outputs
        )

    for bad in ("n", "sampling"):
        if bad in doc:
            raise ConfigError(bad, "only valid with a 'density' source")
    name = _expect_str(doc["preset"], "preset")
    if name not in PRESET_NAMES:
        raise ConfigError("preset", f"unknown preset; choose from {', '.join(PRESET_NAMES)}")
    return RunConfig(kind, preset=name, params=params, seed=seed, outputs=outputs)


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from exc
    return parse_config(doc)


def seeded_generator(seed: Optional[int]) -> np.random.Generator:
    """The package-wide RNG: numpy's default_rng (PCG64), fully seed-determined."""
    return np.random.default_rng(seed)


def initial_state(config: RunConfig) -> OpinionState:
    """Materialize the opinion profile described by an 'opinions' or 'density'
    config. Preset configs run whole experiments and are dispatched elsewhere."""
    if config.kind == "opinions":
        return OpinionState.from_values(config.opinions, config.weights)
    if config.kind == "density":
        if config.sampling == "quantile":
            return discretize(config.density, config.n)
        rng = seeded_generator(config.seed)
        x = np.sort(config.density.quantile(rng.random(config.n)))
        return OpinionState(x, np.full(config.n, 1.0 / config.n))
    raise ValueError("preset configs do not define a single initial state")
