"""JSON scenario files.

A config is a JSON object. Top-level keys are the model parameter names
(``p``, ``SA``, ``RA``, ``SO`` or ``SO_min``/``SO_max``, ``Dep_t``, ``D_w``,
``D_d``, ``proj_a``, ``proj_r``, ``L_w``, ``L_d``, ``G_*``, ``S_*``) plus the
blocks below. ``null`` or ``"-"`` disables a parameter. An optional ``preset``
key names a base scenario that the remaining keys override.

    {"preset": "square-mst", "G_max": 25, "run": {"steps": 3000}}
"""
from __future__ import annotations

import json
from dataclasses import replace
from typing import Any

from .params import PARAM_KEYS, ConfigError, ModelParams
from .scenarios import DEFAULT_OUTPUT, Scenario, preset

BLOCK_KEYS = {
    "lattice": {"width", "height"},
    "layout": {"pointset", "points", "polarity", "activation", "contact", "contact_radius", "node_radius"},
    "region": {"kind", "radius"},
    "illumination": {"mode"},
    "inoculation": {"kind", "centre", "radius", "thickness", "site", "polygon", "edges"},
    "run": {"steps", "early_stop", "gmax_schedule", "sweep", "count_self", "trail_warmup"},
    "output": set(DEFAULT_OUTPUT),
}
TOP_KEYS = {"preset", "name"} | set(PARAM_KEYS) | set(BLOCK_KEYS)
DISABLED = "-"


def _load(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          "config") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", "config")
    return data


def _check_block(name: str, value: Any) -> None:
    if value is None:
        if name in ("region", "illumination"):
            return
        raise ConfigError(f"block {name!r} cannot be null", name)
    if not isinstance(value, dict):
        raise ConfigError(f"block {name!r} must be an object", name)
    unknown = set(value) - BLOCK_KEYS[name]
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {name!r}", f"{name}.{sorted(unknown)[0]}")


def parse_and_validate(text: str) -> Scenario:
    """Parse config text into a validated :class:`Scenario`."""
    data = _load(text)
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", sorted(unknown)[0])
    for name in BLOCK_KEYS:
        if name in data:
            _check_block(name, data[name])

    if "preset" in data:
        base = preset(data["preset"])
    else:
        missing = [k for k in ("SA", "RA", "D_w", "D_d", "Dep_t") if k not in data]
        if missing:
            raise ConfigError(f"config without a preset must set {missing}", missing[0])
        base = Scenario(name=data.get("name", "custom"), params=ModelParams())

    overrides = {k: (None if data[k] == DISABLED else data[k]) for k in PARAM_KEYS if k in data}
    params = base.params.with_overrides(**overrides) if overrides else base.params
    params.validate()

    lattice = data.get("lattice", {})
    run = data.get("run", {})
    changes: dict[str, Any] = {"params": params, "name": data.get("name", base.name)}
    for key in ("width", "height"):
        if key in lattice:
            changes[key] = _int(lattice[key], f"lattice.{key}")
    for key in ("layout", "inoculation"):
        if key in data:
            changes[key] = dict(data[key])
    for key in ("region", "illumination"):
        if key in data:
            changes[key] = None if data[key] is None else dict(data[key])
    if "output" in data:
        changes["output"] = {**base.output, **data["output"]}
    if "steps" in run:
        changes["steps"] = _int(run["steps"], "run.steps")
    if "early_stop" in run:
        changes["early_stop"] = bool(run["early_stop"])
    if "trail_warmup" in run:
        changes["trail_warmup"] = _int(run["trail_warmup"], "run.trail_warmup")
    if "count_self" in run:
        changes["count_self"] = bool(run["count_self"])
    if "gmax_schedule" in run:
        changes["gmax_schedule"] = [[_int(s, "run.gmax_schedule"), _int(v, "run.gmax_schedule")]
                                    for s, v in run["gmax_schedule"]]
    if "sweep" in run:
        changes["sweep"] = None if run["sweep"] is None else dict(run["sweep"])
    scenario = replace(base, **changes)
    return scenario.validate()


def _int(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError("expected an integer", field)
    return int(value)


def to_config(scenario: Scenario) -> dict:
    """A complete, preset-free config dict for ``scenario``."""
    params = {k: (DISABLED if v is None else v) for k, v in scenario.params.to_dict().items()}
    return {
        "name": scenario.name,
        **params,
        "lattice": {"width": scenario.width, "height": scenario.height},
        "layout": scenario.layout,
        "region": scenario.region,
        "illumination": scenario.illumination,
        "inoculation": scenario.inoculation,
        "run": {"steps": scenario.steps, "early_stop": scenario.early_stop,
                "gmax_schedule": [list(e) for e in scenario.gmax_schedule],
                "sweep": scenario.sweep, "count_self": scenario.count_self,
                "trail_warmup": scenario.trail_warmup},
        "output": scenario.output,
    }


def serialise(scenario: Scenario) -> str:
    return json.dumps(to_config(scenario), indent=2, sort_keys=False)


def parse_assignment(text: str) -> tuple[str, Any]:
    """Parse a ``key=value`` override. Values are JSON, falling back to strings."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value", "--set")
    key, raw = text.split("=", 1)
    key = key.strip()
    if key not in PARAM_KEYS:
        raise ConfigError(f"unknown parameter {key!r}", key)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw.strip()
    return key, value


def apply_overrides(scenario: Scenario, assignments: list[str]) -> Scenario:
    if not assignments:
        return scenario
    changes = {}
    for text in assignments:
        key, value = parse_assignment(text)
        changes[key] = None if value == DISABLED else value
    params = scenario.params.with_overrides(**changes)
    params.validate()
    return replace(scenario, params=params).validate()
