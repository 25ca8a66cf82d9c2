"""Tests for reading model, point and pseudo-orbit files."""

import json

import pytest

from thermoflow.battery import full_shift, golden_mean, unit_roof
from thermoflow.errors import InvalidModel, ParseError
from thermoflow.factors import BlockCode
from thermoflow.flows import FiberPotential, SuspensionFlow
from thermoflow.modelfile import load_point, load_points, load_pseudo_orbit, parse_model
from thermoflow.potentials import Potential
from thermoflow.shift import Sft

GOLDEN = {"states": ["0", "1"], "edges": [["0", "0"], ["0", "1"], ["1", "0"]]}


def _write(tmp_path, name, data) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return str(path)


def _point(past, future, fiber=0.0, core=()):
    return {"past": list(past), "core": list(core), "future": list(future), "fiber": fiber}


class TestParseModel:
    def test_graph(self, tmp_path):
        g = parse_model(_write(tmp_path, "golden.json", GOLDEN))
        assert isinstance(g, Sft)
        assert len(g.states) == 2
        assert len(g.edges) == 3

    def test_flow(self, tmp_path):
        data = {**GOLDEN, "roof": {"window": 1, "table": {"0": 1.0, "1": 2.0}}}
        flow = parse_model(_write(tmp_path, "flow.json", data))
        assert isinstance(flow, SuspensionFlow)
        assert flow.roof.at(("1",)) == 2.0

    def test_zero_roof_is_invalid(self, tmp_path):
        data = {**GOLDEN, "roof": {"window": 1, "table": {"0": 1.0, "1": 0.0}}}
        with pytest.raises(InvalidModel) as info:
            parse_model(_write(tmp_path, "flow.json", data))
        assert info.value.code == "ValidationError"
        assert info.value.cause.code == "NonpositiveRoof"

    def test_stranded_state_is_invalid(self, tmp_path):
        data = {"states": ["a", "b"], "edges": [["a", "a"], ["a", "b"]]}
        with pytest.raises(InvalidModel, match="StrandedState"):
            parse_model(_write(tmp_path, "g.json", data))

    def test_unknown_field(self, tmp_path):
        with pytest.raises(ParseError, match="'colour'"):
            parse_model(_write(tmp_path, "g.json", {**GOLDEN, "colour": "red"}))

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "states": ["0"],\n  "edges": [\n}\n')
        with pytest.raises(ParseError, match="line 4"):
            parse_model(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            parse_model(str(tmp_path / "nowhere.json"))

    def test_unrecognized_shape(self, tmp_path):
        with pytest.raises(ParseError, match="cannot tell"):
            parse_model(_write(tmp_path, "x.json", {"colour": "red"}))

    def test_potential_against_base(self, tmp_path):
        data = {"window": 2, "table": {"0 0": 0.5, "0 1": -1.0, "1 0": 2.0}}
        f = parse_model(_write(tmp_path, "f.json", data), base=golden_mean())
        assert isinstance(f, Potential)
        assert f.at(("0", "1")) == -1.0

    def test_potential_missing_entry(self, tmp_path):
        data = {"window": 2, "table": {"0 0": 0.5, "0 1": -1.0}}
        with pytest.raises(InvalidModel) as info:
            parse_model(_write(tmp_path, "f.json", data), base=golden_mean())
        assert info.value.cause.code == "WindowMismatch"

    def test_fiber_potential(self, tmp_path):
        data = [
            {"degree": 0, "potential": {"window": 1, "table": {"0": 1.0, "1": 0.0}}},
            {"degree": 1, "potential": {"window": 1, "table": {"0": 0.5, "1": 0.5}}},
        ]
        f = parse_model(_write(tmp_path, "fib.json", data), base=golden_mean())
        assert isinstance(f, FiberPotential)
        assert f.value(("0",), 2.0) == 2.0

    def test_code(self, tmp_path):
        data = {"window": 2, "map": {"0 0": "0", "0 1": "1", "1 0": "1", "1 1": "0"}}
        path = _write(tmp_path, "xor.json", data)
        code = parse_model(path, base=full_shift(2))
        assert isinstance(code, BlockCode)
        assert code.image_word(("0", "1", "1")) == ("1", "0")
        with pytest.raises(ParseError, match="source"):
            parse_model(path)

    def test_builtins(self):
        assert isinstance(parse_model("builtin:golden-roof-12"), SuspensionFlow)
        assert isinstance(parse_model("builtin:xor"), BlockCode)
        with pytest.raises(ParseError, match="unknown built-in"):
            parse_model("builtin:nope")


class TestPoints:
    def test_point(self, tmp_path):
        flow = unit_roof(full_shift(2))
        p = load_point(_write(tmp_path, "p.json", _point(["0"], ["0", "1"], 0.5)), flow)
        assert p.fiber == 0.5
        assert p.base_point.window(-2, 4) == ("0", "0", "0", "1", "0", "1")

    def test_fiber_outside_roof(self, tmp_path):
        flow = unit_roof(full_shift(2))
        with pytest.raises(InvalidModel):
            load_point(_write(tmp_path, "p.json", _point(["0"], ["1"], 1.5)), flow)

    def test_inadmissible_point(self, tmp_path):
        flow = unit_roof(golden_mean())
        with pytest.raises(InvalidModel, match="InadmissibleWord"):
            load_point(_write(tmp_path, "p.json", _point(["1"], ["1"])), flow)

    def test_point_list(self, tmp_path):
        flow = unit_roof(full_shift(2))
        data = [_point(["0", "1"], ["0", "1"], 0.2), _point(["1"], ["1"], 0.3)]
        points = load_points(_write(tmp_path, "pts.json", data), flow)
        assert [p.fiber for p in points] == [0.2, 0.3]


class TestPseudoOrbitFile:
    def test_defaults_from_entries(self, tmp_path):
        flow = unit_roof(full_shift(2))
        data = [
            {"point": _point(["0"], ["0"]), "duration": 3.0},
            {"point": _point(["0"], ["0"], core=["0", "0", "1"]), "duration": 2.0},
        ]
        po = load_pseudo_orbit(_write(tmp_path, "po.json", data), flow)
        assert po.t_min == 2.0
        assert 0.0 < po.delta < 0.2
        assert not po.periodic

    def test_explicit_fields(self, tmp_path):
        flow = unit_roof(full_shift(2))
        data = {
            "entries": [{"point": _point(["0", "1"], ["0", "1"]), "duration": 2.0}],
            "periodic": True,
            "delta": 0.01,
            "t_min": 1.0,
        }
        po = load_pseudo_orbit(_write(tmp_path, "po.json", data), flow)
        assert po.periodic
        assert po.delta == 0.01
        assert po.period == 2.0

    def test_empty(self, tmp_path):
        flow = unit_roof(full_shift(2))
        with pytest.raises(ParseError, match="no entries"):
            load_pseudo_orbit(_write(tmp_path, "po.json", []), flow)

    def test_short_segment(self, tmp_path):
        flow = unit_roof(full_shift(2))
        data = {
            "entries": [
                {"point": _point(["0"], ["0"]), "duration": 0.5},
                {"point": _point(["0"], ["0"]), "duration": 2.0},
            ],
            "t_min": 1.0,
        }
        with pytest.raises(InvalidModel, match="HorizonTooShort"):
            load_pseudo_orbit(_write(tmp_path, "po.json", data), flow)
