"""Tests for settings and tolerance overrides."""

import pytest
from pydantic import ValidationError

from thermoflow.cli import RunConfig
from thermoflow.config import Settings, Tolerances, settings


class TestSettings:
    def test_defaults(self, monkeypatch):
        for key in ("THERMOFLOW_TOL", "THERMOFLOW_MAX_BLOCK", "THERMOFLOW_LOG_LEVEL"):
            monkeypatch.delenv(key, raising=False)
        s = Settings(_env_file=None)
        assert s.tol == Tolerances()
        assert s.max_block == 12
        assert s.max_block_states == 4096
        assert s.horizon_cap == 128.0
        assert s.log_level == "WARNING"

    def test_tolerance_json_override(self, monkeypatch):
        monkeypatch.setenv("THERMOFLOW_TOL", '{"bowen": 1e-12}')
        s = Settings(_env_file=None)
        assert s.tol.bowen == 1e-12
        assert s.tol.ell == 1e-12
        assert s.tol.cylinder == 1e-6

    def test_nested_override(self, monkeypatch):
        monkeypatch.setenv("THERMOFLOW_TOL__DENSITY", "1e-6")
        monkeypatch.setenv("THERMOFLOW_MAX_BLOCK", "8")
        s = Settings(_env_file=None)
        assert s.tol.density == 1e-6
        assert s.max_block == 8

    def test_unknown_tolerance_rejected(self, monkeypatch):
        monkeypatch.setenv("THERMOFLOW_TOL", '{"nope": 1.0}')
        with pytest.raises(ValidationError):
            Settings(_env_file=None)

    def test_tolerances_are_frozen(self):
        with pytest.raises(ValidationError):
            Tolerances().bowen = 0.0


class TestRunTolerances:
    def test_no_overrides_uses_settings(self):
        config = RunConfig(command="pressure", model_path="builtin:golden-mean")
        assert config.tolerances is settings.tol

    def test_overrides_merge(self):
        config = RunConfig(
            command="verify-b",
            model_path="builtin:golden-roof-12",
            tol={"cylinder": 1e-3, "density": 1e-4},
        )
        tol = config.tolerances
        assert tol.cylinder == 1e-3
        assert tol.density == 1e-4
        assert tol.bowen == settings.tol.bowen

    def test_bad_override_rejected(self):
        config = RunConfig(command="pressure", model_path="builtin:golden-mean", tol={"x": 1.0})
        with pytest.raises(ValidationError):
            config.tolerances
