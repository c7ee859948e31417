"""Command-line front end.

Usage::

    fermiqpe <compile|phase-est|exact|scan|gate-count> --config run.json \\
        [--seed N] [--out DIR] [--set section.key=value ...]

The config is one JSON document with ``model``, ``pe``, ``compile``,
``scan``, ``gate_count`` and ``output`` sections; unknown keys are rejected.
``--set`` values are parsed as JSON when possible (``--set pe.shots=10000``).

Exit codes: 0 success, 2 configuration error, 3 resource limit,
4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import jsonschema

from fermiqpe import __version__
from fermiqpe.compiler import compile_controlled_evolution, count_report, table_count
from fermiqpe.errors import ConfigError, ConsistencyError, FermiQPEError, ResourceError
from fermiqpe.fermion_models import (
    FermionHamiltonian,
    build_hubbard,
    build_pairing,
    from_config_terms,
)
from fermiqpe.oracle import eigensolve, fock_matrix
from fermiqpe.pauli import jw_hamiltonian
from fermiqpe.phase_estimation import PEConfig, run_phase_estimation, spectrum_scan

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_CONSISTENCY = 0, 2, 3, 4
EXACT_MAX_LEVELS = 12

_NUMBER = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "n_pairs"],
                    "properties": {
                        "type": {"const": "pairing"},
                        "n_pairs": _POS_INT,
                        "d": _NUMBER,
                        "g": _NUMBER,
                        "convention": {"enum": ["half", "full"]},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "n_sites"],
                    "properties": {
                        "type": {"const": "hubbard"},
                        "n_sites": _POS_INT,
                        "eps": _NUMBER,
                        "t": _NUMBER,
                        "u": _NUMBER,
                        "periodic": {"type": "boolean"},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "n_levels"],
                    "properties": {
                        "type": {"const": "custom"},
                        "n_levels": _POS_INT,
                        "e0": _NUMBER,
                        "terms": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["op", "indices", "coeff"],
                                "properties": {
                                    "op": {"enum": ["one_body", "two_body"]},
                                    "indices": {"type": "array", "items": _POS_INT},
                                    "coeff": _NUMBER,
                                },
                            },
                        },
                    },
                },
            ]
        },
        "pe": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "w": _POS_INT,
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "intervals": _POS_INT,
                "trotter_order": {"enum": [1, 2]},
                "e_max": {"type": ["number", "null"]},
                "shots": _POS_INT,
                "input_state": {"type": "string", "pattern": "^(random|[01]+)$"},
                "fresh_state": {"type": "boolean"},
                "exact_evolution": {"type": "boolean"},
                "backend": {"enum": ["register", "circuit"]},
            },
        },
        "compile": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "order": {"enum": [1, 2]},
                "intervals": _POS_INT,
                "repetitions": _POS_INT,
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dt_shifts": {"type": "array", "items": _NUMBER, "minItems": 1}},
        },
        "gate_count": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"sizes": {"type": "array", "items": _POS_INT, "minItems": 1}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dense": {"type": "boolean"}, "prefix": {"type": "string"}},
        },
    },
}


# --------------------------------------------------------------------------
# config handling


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(config: dict, assignment: str) -> None:
    """Apply one ``a.b.c=value`` override in place."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"empty key in {assignment!r}")
    node = config
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{key} does not name a nested field")
    node[parts[-1]] = _parse_value(raw)


def load_config(path: str | None, overrides: Sequence[str] = (), seed: int | None = None) -> dict:
    """Read, override and validate a run configuration."""
    config: dict = {}
    if path is not None:
        try:
            config = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    config = copy.deepcopy(config)
    for item in overrides:
        apply_override(config, item)
    if seed is not None:
        config["seed"] = seed
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    return config


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def build_model(spec: dict) -> FermionHamiltonian:
    kind = spec["type"]
    if kind == "pairing":
        return build_pairing(spec["n_pairs"], spec.get("d", 0.0), spec.get("g", 1.0), spec.get("convention", "half"))
    if kind == "hubbard":
        return build_hubbard(
            spec["n_sites"], spec.get("eps", 1.0), spec.get("t", 1.0), spec.get("u", 1.0), spec.get("periodic", False)
        )
    return from_config_terms(spec["n_levels"], spec.get("terms", []), spec.get("e0", 0.0))


def _model(config: dict) -> FermionHamiltonian:
    if "model" not in config:
        raise ConfigError("config has no model section")
    return build_model(config["model"])


def pe_config(config: dict) -> PEConfig:
    section = dict(config.get("pe", {}))
    if "w" not in section:
        raise ConfigError("pe.w is required")
    return PEConfig(seed=config.get("seed", 0), **section)


# --------------------------------------------------------------------------
# commands


class Context:
    def __init__(self, config: dict, out: Path):
        self.config = config
        self.out = out
        self.hash = config_hash(config)
        self.prefix = config.get("output", {}).get("prefix", "")

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / f"{self.prefix}{name}"

    def header(self) -> list[str]:
        return [f"config-hash: {self.hash}", f"fermiqpe {__version__}"]


def cmd_compile(ctx: Context) -> int:
    h = _model(ctx.config)
    section = ctx.config.get("compile", {})
    dt = section.get("dt", 1.0)
    ph = jw_hamiltonian(h)
    control = ph.n_qubits + 1
    seq = compile_controlled_evolution(
        ph, dt, section.get("intervals", 1), control, section.get("repetitions", 1), section.get("order", 1)
    )
    report = count_report(h, dt) if ph.strings else dict.fromkeys(
        ("two_qubit", "single_qubit", "controlled", "controlled_step_two_qubit", "table"), 0
    )
    lines = [f"# {c}" for c in ctx.header()]
    lines.append(f"# qubits: {seq.n_qubits} (simulation 1..{ph.n_qubits}, control {control})")
    text = "\n".join(lines) + "\n" + seq.to_text()
    ctx.path("gates.txt").write_text(text)
    print(f"gates: {len(seq)}")
    for key, value in report.items():
        print(f"{key}: {value}")
    return EXIT_OK


def cmd_phase_est(ctx: Context) -> int:
    h = _model(ctx.config)
    hist = run_phase_estimation(h, pe_config(ctx.config))
    dense = ctx.config.get("output", {}).get("dense", False)
    ctx.path("histogram.csv").write_text(hist.to_csv(dense=dense, comments=ctx.header()))
    ctx.path("histogram.json").write_text(hist.metadata_json(__version__))
    for p in hist.peaks():
        print(f"peak E={p.energy:.6f} mass={p.mass}")
    return EXIT_OK


def cmd_exact(ctx: Context) -> int:
    h = _model(ctx.config)
    if h.n_levels > EXACT_MAX_LEVELS:
        raise ResourceError(f"exact diagonalization limited to {EXACT_MAX_LEVELS} levels")
    sol = eigensolve(fock_matrix(h))
    ctx.path("eigenvalues.csv").write_text(sol.to_csv(comments=ctx.header()))
    print(f"{len(sol.levels)} distinct eigenvalues")
    return EXIT_OK


def cmd_scan(ctx: Context) -> int:
    h = _model(ctx.config)
    shifts = ctx.config.get("scan", {}).get("dt_shifts")
    report = spectrum_scan(h, pe_config(ctx.config), shifts)
    ctx.path("scan.csv").write_text(report.to_csv(comments=ctx.header()))
    for p in report.peaks:
        print(f"peak E={p.energy:.6f} mass={p.mass} {p.status}")
    return EXIT_OK


def gate_count_rows(sizes: Sequence[int]) -> list[tuple[int, int | None, int | None]]:
    """Per-step operation counts for the Hubbard and pairing models at each register size."""
    rows = []
    for s in sizes:
        if s % 2:
            rows.append((s, None, None))
            continue
        hh = jw_hamiltonian(build_hubbard(s // 2, 1.0, 1.0, 1.0))
        hp = jw_hamiltonian(build_pairing(s // 2, 1.0, 1.0))
        rows.append((s, table_count(hh), table_count(hp)))
    return rows


def cmd_gate_count(ctx: Context) -> int:
    sizes = ctx.config.get("gate_count", {}).get("sizes", [2, 4, 6, 8, 10, 12])
    lines = [f"# {c}" for c in ctx.header()] + ["s,H_H,H_P"]
    for s, hh, hp in gate_count_rows(sizes):
        lines.append(f"{s},{'' if hh is None else hh},{'' if hp is None else hp}")
    text = "\n".join(lines) + "\n"
    ctx.path("gate_counts.csv").write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "phase-est": cmd_phase_est,
    "exact": cmd_exact,
    "scan": cmd_scan,
    "gate-count": cmd_gate_count,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fermiqpe", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"fermiqpe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the root seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides, args.seed)
        return COMMANDS[args.command](Context(config, Path(args.out)))
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConsistencyError as exc:
        print(f"consistency error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (ConfigError, FermiQPEError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
