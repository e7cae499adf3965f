import json
from pathlib import Path

import pytest

from velsel import config
from velsel.physics import RB85
from velsel.potential import find_well_geometry

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
K = RB85.k_B


def base_doc():
    return {"cloud": {"temperature": "26uK", "rms_radius": "160um"},
            "potential": {"gradient": "3G/cm", "well_depth": "8uK"}}


@pytest.mark.parametrize("name", ["beta023.json", "beta17.json", "lowbeta.json"])
def test_bundled_scenarios_resolve(name):
    doc = config.load(SCENARIOS / name)
    s = config.resolve(doc)
    assert s.cloud.temperature == pytest.approx(26e-6)
    assert find_well_geometry(s.potential).exists
    assert len(config.sweep_spec(doc).depths) >= 4


def test_defaults_and_units():
    s = config.resolve(base_doc())
    assert s.cloud.count == 100_000 and s.seed == 0
    assert s.hold_time == 20e-3 and s.integrator.dt == 1e-6
    assert s.potential.U_prime == pytest.approx(RB85.mu_B * 0.03)
    assert find_well_geometry(s.potential).U0 == pytest.approx(8e-6 * K, rel=1e-9)
    s2 = config.resolve(base_doc(), seed=5, atoms=10)
    assert s2.seed == 5 and s2.cloud.count == 10


def test_round_trip_through_resolved_document():
    doc = base_doc()
    doc["timing"] = {"hold": "15ms", "tof": ["2ms", "4ms"], "dt": "0.5us"}
    s = config.resolve(doc, seed=3)
    spec = config.SweepSpec((1e-29, 2e-29, 3e-29, 4e-29), 2)
    out = config.scenario_to_config(s, "x", spec)
    again = json.loads(json.dumps(out))
    assert config.resolve(again) == s
    assert config.sweep_spec(again) == spec


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d["cloud"].__setitem__("rms_radius", 5), "/cloud/rms_radius"),
    (lambda d: d["cloud"].__setitem__("temperature", "26 parsecs"), "/cloud/temperature"),
    (lambda d: d["potential"].__setitem__("gradient", "3uK"), "/potential/gradient"),
    (lambda d: d["potential"].__setitem__("barrier_height", "9uK"), "/potential"),
    (lambda d: d["potential"].pop("well_depth"), "/potential"),
    (lambda d: d.__setitem__("colour", "blue"), "/"),
    (lambda d: d.__setitem__("timing", {"tof": ["5ms", "5 m"]}), "/timing/tof/1"),
    (lambda d: d["cloud"].__setitem__("temperature", "-1uK"), "/cloud"),
])
def test_errors_carry_field_paths(mutate, path):
    doc = base_doc()
    mutate(doc)
    with pytest.raises(config.ConfigError) as err:
        config.resolve(doc)
    assert err.value.path == path


def test_sweep_section_checks():
    doc = base_doc()
    with pytest.raises(config.ConfigError, match="no sweep"):
        config.sweep_spec(doc)
    doc["sweep"] = {"depths": ["1uK"]}
    with pytest.raises(config.ConfigError, match="at least 4"):
        config.sweep_spec(doc)
    doc["sweep"] = {"depths": ["1uK", "3uK", "2uK", "4uK"]}
    with pytest.raises(config.ConfigError, match="increasing"):
        config.sweep_spec(doc)
    doc["sweep"] = {"depth_min": "1uK", "points": 5}
    with pytest.raises(config.ConfigError):
        config.sweep_spec(doc)


def test_load_rejects_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(config.ConfigError):
        config.load(p)
