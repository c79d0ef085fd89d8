"""Scenario documents: parsing, validation and emission.

A scenario is a YAML (or JSON) mapping::

    schema_version: 1
    meta: {name: douglas-fir-high, description: ...}
    yield: {a: 120.0, m: 0.0157, c: 1.73, label: high}
    econ:
      stumpage_price: 500.0          # $/MBF
      establishment_cost: 1000.0     # $/acre
      bare_land_value: 1000.0        # $/acre; optional for labels high/low
      annual_overhead: 0.0           # $/acre/year; optional
    plan:                            # optional
      rotation: 40.0
      response: {model: constant, delta: 0.0}   # or {model: decaying, decay: 0.1}
      thinnings: [{time: 20.0, removed: 5.0}]
    price_process: {u0: 1.0, rho: 1.02, z: 1.0, t0: 0.0}   # optional
    sweep: {price_multipliers: [0.5, 1, 2], expense_multipliers: [0.5, 1, 2]}  # optional

Unknown keys are rejected. When ``bare_land_value`` is omitted it defaults to
the establishment cost for label ``high`` and half of it for label ``low``.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .accounting import EconParams
from .errors import DomainError, ScenarioError
from .growth import (
    ConstantResponse,
    DecayingResponse,
    ManagementPlan,
    ThinningEvent,
    YieldParams,
)
from .prices import PriceProcess

SCHEMA_VERSION = 1
BUNDLED = ("douglas_fir_high", "douglas_fir_low")
_LAND_SHARE = {"high": 1.0, "low": 0.5}


@dataclass(frozen=True)
class Sweep:
    price_multipliers: tuple[float, ...] = (0.5, 1.0, 2.0)
    expense_multipliers: tuple[float, ...] = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class Scenario:
    yield_params: YieldParams
    econ: EconParams
    plan: ManagementPlan | None = None
    price_process: PriceProcess | None = None
    sweep: Sweep | None = None
    name: str = ""
    description: str = ""


def _mapping(doc: Any, path: str, required: set[str], optional: set[str]) -> dict:
    if not isinstance(doc, dict):
        raise ScenarioError("expected a mapping", path)
    for key in doc:
        if key not in required and key not in optional:
            where = f"{path}.{key}" if path else str(key)
            raise ScenarioError(f"unknown field {key!r}", where)
    for key in sorted(required):
        if key not in doc:
            where = f"{path}.{key}" if path else key
            raise ScenarioError("missing required field", where)
    return doc


def _number(doc: dict, key: str, path: str, default: float | None = None) -> float:
    if key not in doc:
        if default is None:
            raise ScenarioError("missing required field", f"{path}.{key}")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a number, got {value!r}", f"{path}.{key}")
    return float(value)


def _text(doc: dict, key: str, path: str) -> str:
    value = doc.get(key, "")
    if not isinstance(value, str):
        raise ScenarioError(f"expected a string, got {value!r}", f"{path}.{key}")
    return value


def _build(path: str, factory, *args):
    try:
        return factory(*args)
    except DomainError as exc:
        raise ScenarioError(f"constraint violated: {exc}", path) from None


def _parse_response(doc: Any, path: str):
    doc = _mapping(doc, path, {"model"}, {"delta", "decay"})
    model = doc["model"]
    if model == "constant":
        _mapping(doc, path, {"model"}, {"delta"})
        return _build(path, ConstantResponse, _number(doc, "delta", path, 0.0))
    if model == "decaying":
        _mapping(doc, path, {"model", "decay"}, set())
        return _build(path, DecayingResponse, _number(doc, "decay", path))
    raise ScenarioError(f"unknown response model {model!r}; expected constant or decaying", f"{path}.model")


def _parse_plan(doc: Any) -> ManagementPlan:
    path = "plan"
    doc = _mapping(doc, path, {"rotation"}, {"thinnings", "response"})
    rotation = _number(doc, "rotation", path)
    if not rotation > 0:
        raise ScenarioError("constraint violated: rotation must be > 0", f"{path}.rotation")
    response = _parse_response(doc["response"], f"{path}.response") if "response" in doc else ConstantResponse()
    raw = doc.get("thinnings", []) or []
    if not isinstance(raw, list):
        raise ScenarioError("expected a list", f"{path}.thinnings")
    events = []
    previous = 0.0
    for i, item in enumerate(raw):
        where = f"{path}.thinnings[{i}]"
        item = _mapping(item, where, {"time", "removed"}, set())
        event = _build(where, ThinningEvent, _number(item, "time", where), _number(item, "removed", where))
        if event.time >= rotation:
            raise ScenarioError(
                f"constraint violated: thinning age {event.time} must be before rotation {rotation}",
                f"{where}.time",
            )
        if event.time <= previous:
            raise ScenarioError("constraint violated: thinning ages must be strictly increasing", f"{where}.time")
        previous = event.time
        events.append(event)
    return _build(path, ManagementPlan, rotation, tuple(events), response)


def _multipliers(doc: dict, key: str, path: str) -> tuple[float, ...]:
    values = doc.get(key, [0.5, 1.0, 2.0])
    if not isinstance(values, list) or not values:
        raise ScenarioError("expected a non-empty list of numbers", f"{path}.{key}")
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioError(f"expected a number, got {v!r}", f"{path}.{key}[{i}]")
        if not v > 0:
            raise ScenarioError("constraint violated: multipliers must be > 0", f"{path}.{key}[{i}]")
        out.append(float(v))
    return tuple(out)


def scenario_from_dict(doc: Any) -> Scenario:
    doc = _mapping(
        doc, "", {"schema_version", "yield", "econ"}, {"meta", "plan", "price_process", "sweep"}
    )
    version = doc["schema_version"]
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema version {version!r}; expected {SCHEMA_VERSION}", "schema_version")

    meta = _mapping(doc.get("meta", {}) or {}, "meta", set(), {"name", "description"})
    y = _mapping(doc["yield"], "yield", {"a", "m", "c"}, {"label"})
    label = _text(y, "label", "yield")
    yield_params = _build(
        "yield", YieldParams, _number(y, "a", "yield"), _number(y, "m", "yield"), _number(y, "c", "yield"), label
    )

    e = _mapping(
        doc["econ"], "econ", {"stumpage_price", "establishment_cost"}, {"bare_land_value", "annual_overhead"}
    )
    cost = _number(e, "establishment_cost", "econ")
    if "bare_land_value" in e:
        land = _number(e, "bare_land_value", "econ")
    elif label in _LAND_SHARE:
        land = _LAND_SHARE[label] * cost
    else:
        raise ScenarioError(
            "missing required field (only labels 'high' and 'low' have a default)", "econ.bare_land_value"
        )
    econ = _build(
        "econ", EconParams, _number(e, "stumpage_price", "econ"), cost, land,
        _number(e, "annual_overhead", "econ", 0.0),
    )

    plan = _parse_plan(doc["plan"]) if doc.get("plan") is not None else None

    process = None
    if doc.get("price_process") is not None:
        pp = _mapping(doc["price_process"], "price_process", {"u0", "rho"}, {"z", "t0"})
        process = _build(
            "price_process", PriceProcess,
            _number(pp, "u0", "price_process"), _number(pp, "rho", "price_process"),
            _number(pp, "z", "price_process", 1.0), _number(pp, "t0", "price_process", 0.0),
        )

    sweep = None
    if doc.get("sweep") is not None:
        sw = _mapping(doc["sweep"], "sweep", set(), {"price_multipliers", "expense_multipliers"})
        sweep = Sweep(_multipliers(sw, "price_multipliers", "sweep"), _multipliers(sw, "expense_multipliers", "sweep"))

    return Scenario(
        yield_params, econ, plan, process, sweep,
        _text(meta, "name", "meta"), _text(meta, "description", "meta"),
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises
    ------
    ScenarioError
        With ``path`` set to the offending field.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed document: {exc}") from None
    return scenario_from_dict(doc)


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def bundled_scenario_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled scenario {name!r}; choose from {BUNDLED}")
    return resources.files("forest_return").joinpath("scenarios", f"{name}.yaml").read_text(encoding="utf-8")


def bundled_scenario(name: str) -> Scenario:
    return parse_scenario(bundled_scenario_text(name))


def scenario_to_dict(scenario: Scenario) -> dict:
    y, e = scenario.yield_params, scenario.econ
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "meta": {"name": scenario.name, "description": scenario.description},
        "yield": {"a": y.a, "m": y.m, "c": y.c, "label": y.label},
        "econ": {
            "stumpage_price": e.stumpage_price,
            "establishment_cost": e.establishment_cost,
            "bare_land_value": e.bare_land_value,
            "annual_overhead": e.annual_overhead,
        },
    }
    if scenario.plan is not None:
        r = scenario.plan.response
        response = (
            {"model": "constant", "delta": r.delta}
            if isinstance(r, ConstantResponse)
            else {"model": "decaying", "decay": r.decay}
        )
        doc["plan"] = {
            "rotation": scenario.plan.rotation,
            "response": response,
            "thinnings": [{"time": ev.time, "removed": ev.removed} for ev in scenario.plan.thinnings],
        }
    if scenario.price_process is not None:
        p = scenario.price_process
        doc["price_process"] = {"u0": p.u0, "rho": p.rho, "z": p.z, "t0": p.t0}
    if scenario.sweep is not None:
        doc["sweep"] = {
            "price_multipliers": list(scenario.sweep.price_multipliers),
            "expense_multipliers": list(scenario.sweep.expense_multipliers),
        }
    return doc


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False)
