from pathlib import Path

import pytest

from qgreg.config import ConfigError, parse_config, resolve_config


class TestParseConfig:
    def test_sections_and_comments(self):
        text = """
        # run
        [general]
        seed = 7          ; trailing comment
        [solver]
        alpha = 0.3
        n = 64
        """
        values = parse_config(text)
        assert values["seed"] == (7, 4)
        assert values["alpha"] == (0.3, 6)
        assert values["n"] == (64, 7)

    def test_flat_without_sections(self):
        assert parse_config("alpha = 0.4\ndelta = 0.3\n")["delta"] == (0.3, 2)

    def test_type_mismatch_line(self):
        with pytest.raises(ConfigError, match="line 3: type mismatch for 'alpha'") as info:
            parse_config("[solver]\nn = 64\nalpha = abc\n")
        assert info.value.line == 3

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="line 2: unknown key 'viscosity'"):
            parse_config("[solver]\nviscosity = 1\n")

    def test_key_in_wrong_section(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("[verify]\nalpha = 0.3\n")

    def test_unknown_section_and_garbage(self):
        with pytest.raises(ConfigError, match="line 1: unknown section"):
            parse_config("[physics]\n")
        with pytest.raises(ConfigError, match="line 2: expected"):
            parse_config("alpha = 0.3\njust words\n")

    def test_booleans(self):
        assert parse_config("monitor = yes")["monitor"][0] is True
        with pytest.raises(ConfigError):
            parse_config("monitor = maybe")


class TestResolve:
    def test_flags_only(self):
        cfg = resolve_config(
            "simulate", {}, {"kappa": "0.1", "alpha": "0.3", "n": "64", "dt": "1e-3", "t_end": "1"}
        )
        assert cfg.solver.n_steps == 1000
        assert cfg.initial_condition == ("single_mode", {})

    def test_flags_override_file(self):
        cfg = resolve_config("bootstrap", parse_config("alpha = 0.3\ndelta = 0.5\np = 20\n"), {"alpha": "0.4"})
        assert cfg["alpha"] == 0.4 and cfg["delta"] == 0.5

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required key.*delta"):
            resolve_config("bootstrap", {}, {"alpha": "0.4", "p": "50"})

    def test_mode_from_file(self):
        cfg = resolve_config(None, parse_config("mode = verify\n"), {})
        assert cfg.mode == "verify"
        with pytest.raises(ConfigError):
            resolve_config(None, {}, {})

    def test_layered_validation(self):
        # the parser accepts alpha = 0.6; the bootstrap invariant rejects it
        cfg = resolve_config("bootstrap", parse_config("alpha = 0.6\ndelta = 0.9\np = 50\n"), {})
        assert cfg["alpha"] == 0.6
        from qgreg.monitor import BootstrapParams

        with pytest.raises(ValueError, match="supercritical range"):
            BootstrapParams(cfg["alpha"], cfg["delta"], cfg["p"])

    def test_solver_error_carries_line(self):
        text = "kappa = 0.1\nalpha = 0.3\nn = 48\ndt = 1e-3\nt_end = 1\n"
        cfg = resolve_config("simulate", parse_config(text), {})
        with pytest.raises(ConfigError, match="line 3"):
            cfg.solver

    def test_output_dir_env(self, monkeypatch):
        monkeypatch.setenv("QG_OUTPUT_DIR", "/tmp/qg-env")
        assert resolve_config("verify", {}, {}).output_dir == Path("/tmp/qg-env")
        assert resolve_config("verify", {}, {"output_dir": "here"}).output_dir == Path("here")

    def test_ic_params(self):
        solver = {"kappa": "0", "alpha": "0.3", "n": "64", "dt": "0.1", "t_end": "1"}
        cfg = resolve_config("simulate", parse_config("ic = weierstrass\nic_delta = 0.4\nseed = 3\n"), solver)
        assert cfg.initial_condition == ("weierstrass", {"delta": 0.4, "seed": 3})
        bad = resolve_config("simulate", parse_config("ic = two_mode\nic_k1 = 3\n"), solver)
        with pytest.raises(ConfigError, match="line 2"):
            bad.initial_condition
