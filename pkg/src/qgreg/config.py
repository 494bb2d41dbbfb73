"""Flat ``key = value`` run configuration with optional ``[section]`` headers.

Keys are globally unique; a section header only scopes which keys may
follow it. ``#`` and ``;`` start comments. Unknown keys, type mismatches and
missing required keys are hard errors that carry the offending line number
when there is one.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .monitor import WindowPolicy
from .solver import SolverConfig
from .spectral import PhysParams

__all__ = ["ConfigError", "RunConfig", "KEYS", "MODES", "parse_config", "resolve_config"]

MODES = ("simulate", "analyze", "bootstrap", "verify")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (section, type)
KEYS = {
    "mode": ("general", str),
    "output_dir": ("general", str),
    "seed": ("general", int),
    "kappa": ("solver", float),
    "alpha": ("solver", float),
    "n": ("solver", int),
    "dt": ("solver", float),
    "t_end": ("solver", float),
    "cfl_safety": ("solver", float),
    "diag_interval": ("solver", int),
    "checkpoint_interval": ("solver", int),
    "ic": ("initial_condition", str),
    "ic_amplitude": ("initial_condition", float),
    "ic_k1": ("initial_condition", int),
    "ic_k2": ("initial_condition", int),
    "ic_kmax": ("initial_condition", float),
    "ic_slope": ("initial_condition", float),
    "ic_delta": ("initial_condition", float),
    "ic_j_lo": ("initial_condition", int),
    "ic_j_hi": ("initial_condition", int),
    "monitor": ("monitor", _bool),
    "drop_low": ("monitor", int),
    "drop_high": ("monitor", int),
    "delta": ("bootstrap", float),
    "p": ("bootstrap", float),
    "snapshot": ("analyze", str),
    "suite": ("verify", str),
    "corpus_size": ("verify", int),
    "verify_n": ("verify", int),
}

SECTIONS = {section for section, _ in KEYS.values()}

DEFAULTS = {
    "seed": 0,
    "cfl_safety": 0.5,
    "diag_interval": 1,
    "checkpoint_interval": 0,
    "ic": "single_mode",
    "monitor": False,
    "drop_low": 1,
    "drop_high": 2,
    "suite": "all",
    "corpus_size": 60,
    "verify_n": 128,
}

REQUIRED = {
    "simulate": ("kappa", "alpha", "n", "dt", "t_end"),
    "analyze": ("snapshot", "alpha"),
    "bootstrap": ("alpha", "delta", "p"),
    "verify": (),
}

# ic_* keys forwarded to the initial-condition factories
IC_PARAMS = {
    "single_mode": {"ic_k1": "k1", "ic_k2": "k2", "ic_amplitude": "amplitude"},
    "two_mode": {"ic_amplitude": "amplitude"},
    "random": {"ic_kmax": "kmax", "ic_slope": "slope", "ic_amplitude": "amplitude"},
    "weierstrass": {"ic_delta": "delta", "ic_j_lo": "j_lo", "ic_j_hi": "j_hi", "ic_amplitude": "amplitude"},
}


def _convert(key: str, raw, line: int | None):
    kind = KEYS[key][1]
    if not isinstance(raw, str):
        return raw
    try:
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(
            f"type mismatch for {key!r}: expected {kind.__name__ if kind is not _bool else 'bool'}, got {raw.strip()!r}",
            line,
        ) from None


def parse_config(text: str) -> dict:
    """Parse config text into ``{key: (value, line)}``."""
    values: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if section is not None and KEYS[key][0] != section:
            raise ConfigError(f"key {key!r} does not belong in section [{section}]", lineno)
        values[key] = (_convert(key, value, lineno), lineno)
    return values


@dataclass
class RunConfig:
    mode: str
    values: dict
    output_dir: Path
    seed: int = 0
    lines: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def _wrap(self, keys, build):
        try:
            return build()
        except ValueError as err:
            line = next((self.lines[k] for k in keys if k in self.lines), None)
            raise ConfigError(str(err), line) from None

    @property
    def phys(self) -> PhysParams:
        return self._wrap(("kappa", "alpha"), lambda: PhysParams(self["kappa"], self["alpha"]))

    @property
    def solver(self) -> SolverConfig:
        keys = ("n", "dt", "t_end", "cfl_safety", "diag_interval", "checkpoint_interval")
        return self._wrap(
            keys,
            lambda: SolverConfig(
                self.phys,
                self["n"],
                self["dt"],
                self["t_end"],
                self["cfl_safety"],
                self["diag_interval"],
                self["checkpoint_interval"],
            ),
        )

    @property
    def window(self) -> WindowPolicy:
        return self._wrap(("drop_low", "drop_high"), lambda: WindowPolicy(self["drop_low"], self["drop_high"]))

    @property
    def initial_condition(self) -> tuple[str, dict]:
        name = self["ic"]
        if name not in IC_PARAMS:
            raise ConfigError(
                f"unknown initial condition {name!r}; choose from {sorted(IC_PARAMS)}",
                self.lines.get("ic"),
            )
        params = {}
        for key, value in self.values.items():
            if not key.startswith("ic_"):
                continue
            if key not in IC_PARAMS[name]:
                raise ConfigError(f"{key!r} does not apply to initial condition {name!r}", self.lines.get(key))
            params[IC_PARAMS[name][key]] = value
        if name in ("random", "weierstrass"):
            params["seed"] = self.seed
        return name, params

    def resolved(self) -> dict:
        """Plain dict of every resolved value, for the run manifest."""
        out = {"mode": self.mode, "output_dir": str(self.output_dir)}
        out.update({k: v for k, v in sorted(self.values.items()) if k not in out})
        return out


def resolve_config(mode: str | None, file_values: dict, overrides: dict) -> RunConfig:
    """Merge file values, flag overrides and defaults; check required keys.

    ``file_values`` comes from :func:`parse_config`; ``overrides`` maps keys
    to raw flag strings (or already-typed values). Flags win over the file.
    """
    values = {key: value for key, (value, _) in file_values.items()}
    lines = {key: line for key, (_, line) in file_values.items()}
    for key, raw in overrides.items():
        if raw is None:
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, raw, None)
        lines.pop(key, None)
    file_mode = values.pop("mode", None)
    mode = mode or file_mode
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}", lines.get("mode"))
    for key, default in DEFAULTS.items():
        values.setdefault(key, default)
    missing = [k for k in REQUIRED[mode] if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s) for mode {mode}: {', '.join(missing)}")
    output_dir = values.pop("output_dir", None) or os.environ.get("QG_OUTPUT_DIR") or "qg_output"
    return RunConfig(mode, values, Path(output_dir), int(values["seed"]), lines)
