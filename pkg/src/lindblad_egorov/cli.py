"""Command-line front end: ``lindblad-egorov {run,sweep,egorov,validate,corrector}``.

Configs are JSON documents checked against :data:`CONFIG_SCHEMA`.  Every
command that computes something writes ``<command>.csv`` and
``<command>.json`` into ``--out``.  The CSV header is fixed::

    t,hs_distance,envelope,trace_defect,herm_defect,l2_classical,hs_quantum

with one row per recorded time (or one row per sweep point, taken at ``t = T``).
Exit codes: 0 success, 1 invariant or I/O failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema

from . import __version__
from .correspondence import (ISOMETRY_TOL, MODES, CorrespondenceReport, ExperimentConfig,
                             IsometryError, duhamel_corrector, run_experiment, scaling_sweep)
from .lindblad import StabilityError
from .presets import BOX_FLOOR, CertificationError, preset_names
from .validation import run_suite

__all__ = ["CONFIG_SCHEMA", "CSV_HEADER", "ConfigError", "RunManifest", "parse_config",
           "emit_report", "main"]

CSV_HEADER = ("t", "hs_distance", "envelope", "trace_defect", "herm_defect",
              "l2_classical", "hs_quantum")
CONSERVATION_TOL = 1e-8
THREADS_ENV = "LINDBLAD_EGOROV_THREADS"

_positive = {"type": "number", "exclusiveMinimum": 0}
CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lindblad-egorov experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["preset"],
    "properties": {
        "mode": {"enum": list(MODES)},
        "preset": {"type": "string"},
        "h": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "gamma": {"type": "number", "minimum": 0},
        "T": {"type": "number", "minimum": 0},
        "dt": _positive,
        "n_points": {"type": "integer", "minimum": 16, "multipleOf": 2},
        "x_halfwidth": _positive,
        "z0": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "samples": {"type": "integer", "minimum": 1},
        "C0": {"type": "number", "minimum": 0},
        "box_floor": _positive,
        "fit_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "h_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                              "maximum": 1}, "minItems": 1},
        "gamma_list": {"type": "array", "items": {"type": "number", "minimum": 0},
                       "minItems": 1},
        "measure_floor": {"type": "boolean"},
    },
}


class ConfigError(ValueError):
    """Invalid or unreadable configuration (exit code 2)."""


@dataclass
class RunManifest:
    command: str
    config: dict | None
    code_version: str = __version__
    phases: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    seed: int | None = None
    threads: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(**d)


def _policy(cfg: ExperimentConfig | None) -> dict:
    return {
        "C0": cfg.C0 if cfg else 1.0,
        "box_floor": cfg.box_floor if cfg else BOX_FLOOR,
        "isometry_tol": ISOMETRY_TOL,
        "conservation_tol": CONSERVATION_TOL,
        "envelope_inflation_max": 2.0,
    }


def _schema_message(err: jsonschema.ValidationError) -> str:
    name = ".".join(str(p) for p in err.absolute_path) or "config"
    kind, val = err.validator, err.validator_value
    if kind == "minimum":
        return f"{name} must be ≥ {val:g}"
    if kind == "exclusiveMinimum":
        return f"{name} must be > {val:g}"
    if kind == "maximum":
        return f"{name} must be ≤ {val:g}"
    if kind == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema["properties"]))
        return f"unknown key(s): {', '.join(extra)}"
    if kind == "required":
        return err.message
    if kind == "enum":
        return f"{name} must be one of {', '.join(map(str, val))}"
    if kind == "type":
        return f"{name} must be of type {val}"
    return f"{name}: {err.message}"


def config_from_dict(doc) -> ExperimentConfig:
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(doc),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError("schema violation: " + _schema_message(errors[0]))
    if doc["preset"] not in preset_names():
        raise ConfigError(f"unknown preset {doc['preset']!r}; available: "
                          f"{', '.join(preset_names())}")
    try:
        return ExperimentConfig(**doc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON config; unknown keys are rejected."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc
    return config_from_dict(doc)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def emit_report(report: CorrespondenceReport, out_dir, stem: str,
                manifest: RunManifest | None = None) -> dict:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns the paths written."""
    out = Path(out_dir)
    paths = {"csv": str(out / f"{stem}.csv"), "json": str(out / f"{stem}.json")}
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(paths["csv"], "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in report.rows():
                writer.writerow([_fmt(v) for v in row])
        if manifest is not None:
            manifest.outputs.update(paths)
            manifest.phases["emit"] = time.perf_counter() - start
        doc = {"report": report.to_dict(),
               "manifest": manifest.to_dict() if manifest is not None else None}
        with open(paths["json"], "w") as fh:
            json.dump(doc, fh, indent=1, allow_nan=True)
    except OSError as exc:
        raise OSError(f"cannot write report to {exc.filename or out}: {exc.strerror}") from exc
    return paths


def _invariant_failures(report: CorrespondenceReport) -> list[str]:
    failures = []
    tr = max(report.trace_defect.max(initial=0.0),
             report.diagnostics.get("max_trace_defect_all_steps", 0.0))
    hd = max(report.herm_defect.max(initial=0.0),
             report.diagnostics.get("max_herm_defect_all_steps", 0.0))
    if tr >= CONSERVATION_TOL:
        failures.append(f"trace defect {tr:.3g} exceeds {CONSERVATION_TOL:g}")
    if hd >= CONSERVATION_TOL:
        failures.append(f"hermiticity defect {hd:.3g} exceeds {CONSERVATION_TOL:g}")
    return failures


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}")
    return 1


def _compute(command: str, cfg: ExperimentConfig, threads: int) -> CorrespondenceReport:
    if command == "run":
        return run_experiment(cfg)
    if command == "egorov":
        return run_experiment(cfg.replace(mode="egorov"))
    if command == "corrector":
        return duhamel_corrector(cfg.replace(mode="corrector"))[1]
    if command == "sweep":
        values = cfg.h_list if cfg.h_list is not None else cfg.gamma_list
        if values is None or len(values) < 3:
            raise ConfigError("sweep needs h_list or gamma_list with at least 3 values")
        if cfg.h_list is not None and cfg.gamma_list is not None:
            raise ConfigError("sweep takes h_list or gamma_list, not both")
        return scaling_sweep(cfg, threads=threads)
    raise ConfigError(f"unknown command {command!r}")


def _validate(args, manifest: RunManifest) -> int:
    checks = run_suite(seed=args.seed if args.seed is not None else 0)
    width = max(len(c.name) for c in checks)
    print(f"{'check'.ljust(width)}  {'value':>10}  {'limit':>8}  result")
    for c in checks:
        print(f"{c.name.ljust(width)}  {c.value:10.3e}  {c.threshold:8.0e}  "
              f"{'pass' if c.ok else 'FAIL'}" + (f"  ({c.error})" if c.error else ""))
    manifest.failures += [c.name for c in checks if not c.ok]
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            path = out / "validate.json"
            manifest.outputs["json"] = str(path)
            path.write_text(json.dumps({"checks": [asdict(c) | {"ok": c.ok} for c in checks],
                                        "manifest": manifest.to_dict()}, indent=1))
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return 1
    return 1 if manifest.failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lindblad-egorov",
                                     description="Compare Lindblad and Fokker-Planck evolutions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"run": "one experiment in the config's mode",
             "sweep": "h or gamma sweep with log-log slope fit",
             "egorov": "gamma = 0 study against the transported symbol",
             "validate": "run the invariant suite and print a pass/fail table",
             "corrector": "first Duhamel corrector study"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON experiment config", required=name != "validate")
        p.add_argument("--out", default=None if name == "validate" else "out",
                       help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help=f"sweep worker threads (fallback: ${THREADS_ENV})")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = RunManifest(command=args.command, config=None, seed=args.seed)
    clock = time.perf_counter()
    try:
        manifest.threads = _threads(args.threads)
        if args.command == "validate":
            manifest.policy = _policy(None)
            code = _validate(args, manifest)
            return code
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    manifest.config = cfg.to_dict()
    manifest.policy = _policy(cfg)
    manifest.phases["parse"] = time.perf_counter() - clock
    try:
        t0 = time.perf_counter()
        report = _compute(args.command, cfg, manifest.threads)
        manifest.phases["compute"] = time.perf_counter() - t0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IsometryError, StabilityError, CertificationError, ValueError) as exc:
        manifest.failures.append(f"{type(exc).__name__}: {exc}")
        print(f"invariant failure: {exc}", file=sys.stderr)
        _try_emit_manifest(args.out, args.command, manifest)
        return 1
    manifest.failures += _invariant_failures(report)
    if not report.audit.get("box_ok", True):
        manifest.warnings.append("evolved state exceeds the box floor at the boundary")
    try:
        emit_report(report, args.out, args.command, manifest)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for w in manifest.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for f in manifest.failures:
        print(f"invariant failure: {f}", file=sys.stderr)
    print(f"{args.command}: {len(report.times)} rows, max hs_distance "
          f"{report.hs_distance.max():.6g} -> {manifest.outputs.get('csv')}")
    return 1 if manifest.failures else 0


def _try_emit_manifest(out, command, manifest):
    try:
        Path(out).mkdir(parents=True, exist_ok=True)
        path = Path(out) / f"{command}.json"
        manifest.outputs["json"] = str(path)
        path.write_text(json.dumps({"report": None, "manifest": manifest.to_dict()}, indent=1))
    except OSError:
        traceback.print_exc()


if __name__ == "__main__":
    sys.exit(main())
