"""``qg <mode> [--config FILE] [flags...]`` command-line entry point.

Exit status is 0 on success, 2 when a simulation halts on the blow-up flag
and 1 for configuration or tooling errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import MODES, ConfigError, RunConfig, parse_config, resolve_config
from .inequalities import SUITES, TestCorpus
from .littlewood_paley import build_decomposition, shell_spectrum
from .monitor import (
    BootstrapParams,
    analyze_snapshot,
    bootstrap,
    fit_to_dict,
    monitor_csv,
)
from .solver import diagnostics_csv, make_initial_condition, simulate, write_checkpoint
from .spectral import SnapshotError, read_snapshot

__all__ = ["main", "run", "build_parser", "load_config"]

logger = logging.getLogger("qgreg")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2

# flag name -> config key
FLAGS = {
    "alpha": "alpha",
    "kappa": "kappa",
    "n": "n",
    "dt": "dt",
    "t-end": "t_end",
    "ic": "ic",
    "delta": "delta",
    "p": "p",
    "seed": "seed",
    "suite": "suite",
    "snapshot": "snapshot",
    "output-dir": "output_dir",
    "cfl-safety": "cfl_safety",
    "diag-interval": "diag_interval",
    "checkpoint-interval": "checkpoint_interval",
    "corpus-size": "corpus_size",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qg", description="Dissipative SQG solver and regularity diagnostics")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    for flag, key in FLAGS.items():
        # values stay strings here so the config layer reports type errors uniformly
        parser.add_argument(f"--{flag}", dest=key, metavar=key.upper())
    parser.add_argument("--monitor", dest="monitor", action="store_const", const="true",
                        help="run the regularity monitor on every diagnostic sample")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args: argparse.Namespace) -> tuple[RunConfig, str]:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from None
    overrides = {key: getattr(args, key) for key in list(FLAGS.values()) + ["monitor"]}
    return resolve_config(args.mode, parse_config(text), overrides), text


def _git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _write_manifest(cfg: RunConfig, config_text: str, extra_inputs: bytes, artifacts: list[Path], status: str):
    resolved = cfg.resolved()
    # where the outputs go is not an input
    hashed = {k: v for k, v in resolved.items() if k != "output_dir"}
    payload = json.dumps(hashed, sort_keys=True).encode() + b"\n" + config_text.encode() + extra_inputs
    manifest = {
        "tool": "qg",
        "version": __version__,
        "mode": cfg.mode,
        "status": status,
        "config": resolved,
        "input_hash": _git_blob_sha1(payload),
        "artifacts": sorted(p.name for p in artifacts),
    }
    _write(cfg.output_dir / "manifest.json", _json(manifest))


def _run_simulate(cfg: RunConfig) -> tuple[int, list[Path], bytes]:
    solver_cfg = cfg.solver
    name, params = cfg.initial_condition
    try:
        theta0 = make_initial_condition(name, solver_cfg.grid, **params)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"initial condition {name!r}: {err}", cfg.lines.get("ic")) from None

    out = cfg.output_dir
    checkpoints: list[Path] = []
    samples = []

    def on_checkpoint(state):
        checkpoints.append(write_checkpoint(out, state, solver_cfg))

    def on_diagnostic(state, rec):
        if cfg["monitor"]:
            samples.append((state.time, state.theta))

    result = simulate(theta0, solver_cfg, on_diagnostic=on_diagnostic, on_checkpoint=on_checkpoint)
    artifacts = [_write(out / "diagnostics.csv", diagnostics_csv(result.records))]
    artifacts += checkpoints + [p.with_suffix(".json") for p in checkpoints]
    if cfg["monitor"]:
        decomp = build_decomposition(solver_cfg.grid)
        records = [
            analyze_snapshot(theta, decomp, solver_cfg.phys.alpha, t, cfg.window) for t, theta in samples
        ]
        artifacts.append(_write(out / "monitor.csv", monitor_csv(records)))
    final = result.records[-1]
    print(f"status={result.status} t={final['time']:.6g} l2={final['l2']:.12g} linf={final['linf']:.12g}")
    if result.blew_up:
        logger.error("%s", result.message)
        return EXIT_BLOWUP, artifacts, b""
    return EXIT_OK, artifacts, b""


def _run_analyze(cfg: RunConfig) -> tuple[int, list[Path], bytes]:
    path = Path(cfg["snapshot"])
    try:
        raw = path.read_bytes()
    except OSError as err:
        raise ConfigError(f"cannot read snapshot {path}: {err}", cfg.lines.get("snapshot")) from None
    theta, time = read_snapshot(path)
    decomp = build_decomposition(theta.grid)
    spectrum = shell_spectrum(decomp, theta, np.inf)
    record = analyze_snapshot(theta, decomp, cfg["alpha"], time, cfg.window)
    report = {
        "snapshot": str(path),
        "time": time,
        "n": theta.grid.n,
        "alpha": cfg["alpha"],
        "status": record.status,
        "fit": fit_to_dict(record.fit) if record.fit else None,
        "criterion": (
            {"holds": record.criterion.holds, "margin": record.criterion.margin} if record.criterion else None
        ),
        "p_used": record.p_used,
        "bootstrap": record.trace.to_dict() if record.trace else None,
    }
    out = cfg.output_dir
    artifacts = [
        _write(out / "shell_spectrum.csv", spectrum.to_csv()),
        _write(out / "analysis.json", _json(report)),
    ]
    print(f"status={record.status}" + (f" delta_est={record.fit.delta_est:.6g}" if record.fit else ""))
    return EXIT_OK, artifacts, raw


def _run_bootstrap(cfg: RunConfig) -> tuple[int, list[Path], bytes]:
    params = cfg._wrap(("alpha", "delta", "p"), lambda: BootstrapParams(cfg["alpha"], cfg["delta"], cfg["p"]))
    trace = bootstrap(params)
    text = trace.to_json() + "\n"
    print(text, end="")
    return EXIT_OK, [_write(cfg.output_dir / "bootstrap.json", text)], b""


def _run_verify(cfg: RunConfig) -> tuple[int, list[Path], bytes]:
    suite = cfg["suite"]
    names = list(SUITES) if suite == "all" else [s.strip() for s in suite.split(",")]
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)} or 'all'", cfg.lines.get("suite"))
    corpus = cfg._wrap(("corpus_size", "verify_n"), lambda: TestCorpus(cfg.seed, cfg["verify_n"], cfg["corpus_size"]))
    reports = []
    for name in names:
        reports.extend(SUITES[name](corpus))
    rows = ["name,params,trials,violations,min_ratio,max_ratio"]
    for rep in reports:
        params = ";".join(f"{k}={v}" for k, v in rep.params.items())
        rows.append(f"{rep.name},{params},{rep.trials},{rep.violations},{rep.min_ratio:.17g},{rep.max_ratio:.17g}")
        print(f"{rep.name} [{params}] trials={rep.trials} violations={rep.violations}")
    out = cfg.output_dir
    artifacts = [
        _write(out / "verify_report.json", _json([rep.to_dict() for rep in reports])),
        _write(out / "verify_summary.csv", "\n".join(rows) + "\n"),
    ]
    return EXIT_OK, artifacts, b""


RUNNERS = {
    "simulate": _run_simulate,
    "analyze": _run_analyze,
    "bootstrap": _run_bootstrap,
    "verify": _run_verify,
}


def run(cfg: RunConfig, config_text: str = "") -> int:
    """Execute one configured run and write its artifacts plus ``manifest.json``."""
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"output directory {cfg.output_dir} is not writable: {err}") from None
    code, artifacts, extra = RUNNERS[cfg.mode](cfg)
    status = {EXIT_OK: "ok", EXIT_BLOWUP: "resolution_exceeded"}.get(code, "error")
    _write_manifest(cfg, config_text, extra, artifacts, status)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg, text = load_config(args)
        return run(cfg, text)
    except (ConfigError, SnapshotError, ValueError, OSError) as err:
        print(f"qg: error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
