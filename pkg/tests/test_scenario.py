import pytest

from comfix.errors import InputError, ScenarioError
from comfix.maps import Compose, Expr, Iterate
from comfix.scenario import load_scenario, loads_scenario, shipped_scenarios

from .conftest import pair_toml

SHIPPED = {
    "banach_cos", "chain_powers", "divergent", "example1", "example2_as_printed",
    "example2_corrected", "expansive", "linear_pair", "noncommuting", "powers_reduction",
    "proposition_powers",
}


def test_shipped_list():
    assert set(shipped_scenarios()) == SHIPPED


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_load(name):
    sc = load_scenario(name)
    assert sc.name == name
    sc.settings().validate()


def test_example1_fields():
    sc = load_scenario("example1")
    assert (sc.problem.contractor, sc.problem.dominator) == ("f", "g")
    assert sc.map_sources["f"] == "x^2" and sc.map_sources["g"] == "x^3"
    assert sc.domain.lower == (1.0,) and sc.domain.upper == (10.0,)
    assert sc.x0 == (1.0,)
    assert sc.space.upper == (float("inf"),)


def test_combinator_maps():
    sc = load_scenario("powers_reduction")
    assert sc.maps["g2"] == Iterate("g", 2)
    assert isinstance(sc.maps["g"], Expr)
    sc = load_scenario("proposition_powers")
    assert isinstance(sc.maps[sc.problem.contractor], Compose)


def test_missing_x0():
    text = pair_toml("x/2", "x", 0.0, 1.0, 0.0).replace("x0 = [0.0]\n", "")
    with pytest.raises(ScenarioError, match="x0"):
        loads_scenario(text)


def test_x0_outside_domain():
    with pytest.raises(ScenarioError, match="x0"):
        loads_scenario(pair_toml("x/2", "x", 0.0, 1.0, 2.0))


def test_cycle():
    extra = 'a = { compose = ["b", "g"] }\nb = { compose = ["a", "g"] }\n'
    with pytest.raises(InputError, match="cyclic"):
        loads_scenario(pair_toml("x/2", "x", 0.0, 1.0, 0.0, extra_maps=extra))


def test_toml_error_line():
    text = pair_toml("x/2", "x", 0.0, 1.0, 0.0).replace("[maps]", "[maps\n")
    with pytest.raises(ScenarioError) as info:
        loads_scenario(text)
    assert info.value.line == 8  # the `[maps` header


def test_unknown_field_named():
    text = pair_toml("x/2", "x", 0.0, 1.0, 0.0, numerics="tolerance = 1e-6")
    with pytest.raises(ScenarioError, match="tolerance"):
        loads_scenario(text)


def test_tol_order_enforced():
    with pytest.raises(InputError):
        loads_scenario(pair_toml("x/2", "x", 0.0, 1.0, 0.0, numerics="tol = 1e-6\ntol_cert = 1e-7"))


def test_parse_error_in_map_is_input_error():
    with pytest.raises(InputError, match="unknown identifier `e`"):
        loads_scenario(pair_toml("x*e^(2*x+1)", "x", 0.0, 1.0, 0.0))


def test_undefined_problem_map():
    text = pair_toml("x/2", "x", 0.0, 1.0, 0.0).replace('contractor = "g"', 'contractor = "q"')
    with pytest.raises(ScenarioError, match="undefined map"):
        loads_scenario(text)


def test_resolved_defaults_scale_with_diameter():
    s = load_scenario("example1").settings()
    assert s.slack == pytest.approx(9e-9)
    assert s.radius_cap == pytest.approx(9e6)


def test_missing_file():
    with pytest.raises(InputError):
        load_scenario("/nonexistent/scenario.toml")
