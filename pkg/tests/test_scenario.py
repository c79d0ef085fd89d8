import json

import pytest

from forest_return import ScenarioError, bundled_scenario, parse_scenario
from forest_return.scenario import BUNDLED, dump_scenario, load_scenario

MINIMAL = """
schema_version: 1
yield: {a: 100, m: 0.02, c: 2.0, label: high}
econ: {stumpage_price: 400, establishment_cost: 800}
"""


def test_minimal_document_uses_defaults():
    sc = parse_scenario(MINIMAL)
    assert sc.plan is None and sc.price_process is None and sc.sweep is None
    assert sc.econ.bare_land_value == 800.0
    assert sc.econ.annual_overhead == 0.0


def test_low_label_defaults_land_to_half_cost():
    sc = parse_scenario(MINIMAL.replace("label: high", "label: low"))
    assert sc.econ.bare_land_value == 400.0


def test_custom_label_requires_land_value():
    with pytest.raises(ScenarioError) as info:
        parse_scenario(MINIMAL.replace("label: high", "label: mixed"))
    assert info.value.path == "econ.bare_land_value"


def test_json_documents_are_accepted():
    doc = {
        "schema_version": 1,
        "yield": {"a": 100, "m": 0.02, "c": 2.0},
        "econ": {"stumpage_price": 400, "establishment_cost": 800, "bare_land_value": 10},
    }
    assert parse_scenario(json.dumps(doc)).econ.bare_land_value == 10.0


@pytest.mark.parametrize(
    "text,path",
    [
        (MINIMAL + "colour: red\n", "colour"),
        (MINIMAL.replace("c: 2.0", "c: 2.0, d: 1"), "yield.d"),
        (MINIMAL.replace("a: 100", "a: '100'"), "yield.a"),
        (MINIMAL.replace("a: 100", "a: -1"), "yield"),
        (MINIMAL.replace("schema_version: 1", "schema_version: 2"), "schema_version"),
        (MINIMAL.replace("yield: {a: 100, m: 0.02, c: 2.0, label: high}\n", ""), "yield"),
        (MINIMAL + "plan: {rotation: 30, thinnings: [{time: 30, removed: 1}]}\n", "plan.thinnings[0].time"),
        (MINIMAL + "plan: {rotation: 30, thinnings: [{time: 10, removed: 1}, {time: 5, removed: 1}]}\n",
         "plan.thinnings[1].time"),
        (MINIMAL + "plan: {rotation: 30, response: {model: fancy}}\n", "plan.response.model"),
        (MINIMAL + "plan: {rotation: 30, response: {model: decaying, delta: 1}}\n", "plan.response.delta"),
        (MINIMAL + "price_process: {u0: 1, rho: -2}\n", "price_process"),
        (MINIMAL + "sweep: {price_multipliers: [1, 0]}\n", "sweep.price_multipliers[1]"),
        ("- just\n- a list\n", ""),
    ],
)
def test_invalid_documents_name_the_field(text, path):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    assert info.value.path == path


def test_constraint_messages_say_so():
    with pytest.raises(ScenarioError, match="constraint violated"):
        parse_scenario(MINIMAL + "plan: {rotation: 30, thinnings: [{time: 40, removed: 1}]}\n")


def test_malformed_yaml():
    with pytest.raises(ScenarioError, match="malformed"):
        parse_scenario("yield: [1,\n")


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_round_trip(name):
    sc = bundled_scenario(name)
    assert parse_scenario(dump_scenario(sc)) == sc


def test_full_round_trip(tmp_path):
    text = MINIMAL + (
        "plan:\n  rotation: 40\n  response: {model: decaying, decay: 0.2}\n"
        "  thinnings: [{time: 12, removed: 3.5}, {time: 25, removed: 2}]\n"
        "price_process: {u0: 2, rho: 0.95, z: 0.5, t0: 1}\n"
        "sweep: {price_multipliers: [1, 3], expense_multipliers: [0.25]}\n"
        "meta: {name: demo, description: two thinnings}\n"
    )
    sc = parse_scenario(text)
    path = tmp_path / "s.yaml"
    path.write_text(dump_scenario(sc))
    assert load_scenario(path) == sc


def test_unknown_bundled_name():
    with pytest.raises(KeyError):
        bundled_scenario("spruce")
