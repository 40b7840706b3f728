"""Command-line driver: strict JSON configs in, deterministic CSV/JSON out.

Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
3 numerical domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__
from .bounds import (
    SCHEMES,
    bridge_for,
    dirac_lower_bound,
    hl16_lower_bound_direct,
    hl16_mu,
    jensen_upper_bound,
    norm_bounds,
    optimize_markov_lower_bound,
)
from .branching import (
    BinaryModelParams,
    OneTypeModel,
    rho_binary,
    simulate_branching,
    survival_probability_exact,
)
from .errors import ConfigError, DomainError, NotStochasticShape, SchemePreconditionFailed, ShapeMismatch
from .exact import (
    one_type_exponent,
    prescient_exponent,
    rank1_trace_exponent,
    responsive_exponent,
    stochastic_rank1_exponent,
)
from .linalg_env import BinaryEnvironment
from .mc import SUPERMULTIPLICATIVE, enumerated_sandwich, mc_exponent
from .phase import ScanConfig, cells_to_csv, fmt, scan_grid, separatrix_s2
from .strategies import (
    MeanMatrixPair,
    OneType,
    Prescient,
    Responsive,
    Stochastic,
    delta_preset,
    nabla_preset,
)

SUBCOMMANDS = ("exact", "bounds", "mc", "sandwich", "survival", "phase", "separatrix")
NEEDS_SEED = ("bounds", "mc", "survival", "phase")
U64 = 2**64 - 1

Prob = Field(ge=0.0, le=1.0)
OpenProb = Field(ge=0.0, lt=1.0)


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class Base(Strict):
    subcommand: str
    seed: Optional[int] = Field(default=None, ge=0, le=U64)


class EnvFields(Strict):
    s1: float = Field(gt=0.0, le=1.0)
    s2: float = Field(gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _ergodic(self):
        if self.s1 * self.s2 >= 1.0:
            raise ValueError("s1 * s2 must be below 1")
        return self


class OneTypeFields(Strict):
    strategy: Literal["one-type"]
    m1: float = Field(gt=0.0)
    m2: float = Field(gt=0.0)
    d1: float = Field(default=0.2, ge=0.0, lt=1.0)
    d2: float = Field(default=0.2, ge=0.0, lt=1.0)

    def spec(self):
        return OneType(self.m1, self.m2, self.d1, self.d2)


class ResponsiveFields(Strict):
    strategy: Literal["responsive"]
    m1: float = Field(gt=0.0)
    m2: float = Field(gt=0.0)
    d1: float = OpenProb
    d2: float = OpenProb

    def spec(self):
        return Responsive(self.m1, self.m2, self.d1, self.d2)


class PrescientFields(ResponsiveFields):
    strategy: Literal["prescient"]

    def spec(self):
        return Prescient(self.m1, self.m2, self.d1, self.d2)


class StochasticFields(Strict):
    strategy: Literal["stochastic"]
    m_a: float = Field(ge=0.0)
    m_d: float = Field(ge=0.0)
    w1: float = Prob
    w2: float = Prob
    d1: float = OpenProb
    d2: float = OpenProb
    alpha: float = OpenProb

    def spec(self):
        return Stochastic(self.m_a, self.m_d, self.w1, self.w2, self.d1, self.d2, self.alpha)


class DeltaFields(Strict):
    strategy: Literal["delta", "nabla"]
    alpha: float = Field(gt=0.0, lt=1.0)

    def spec(self):
        return (delta_preset if self.strategy == "delta" else nabla_preset)(self.alpha)


class MatrixFields(Strict):
    strategy: Literal["matrices"]
    m1: list[list[float]] = Field(min_length=2, max_length=2)
    m2: list[list[float]] = Field(min_length=2, max_length=2)

    def spec(self):
        return MatrixSpec(self.m1, self.m2)


class MatrixSpec:
    def __init__(self, m1, m2):
        self.m1, self.m2 = m1, m2

    def build(self):
        return MeanMatrixPair(np.array(self.m1, dtype=float), np.array(self.m2, dtype=float))


STRATEGY_FIELDS = {
    "one-type": OneTypeFields,
    "responsive": ResponsiveFields,
    "prescient": PrescientFields,
    "stochastic": StochasticFields,
    "delta": DeltaFields,
    "nabla": DeltaFields,
    "matrices": MatrixFields,
}


class ExactFields(Strict):
    subcommand: Literal["exact"]


class BoundsFields(Strict):
    subcommand: Literal["bounds"]
    n_samples: int = Field(default=1000, ge=1)
    mc_steps: int = Field(default=100_000, ge=100)
    mc_reps: int = Field(default=10, ge=2)


class McFields(Strict):
    subcommand: Literal["mc"]
    steps: int = Field(default=1_000_000, ge=100)
    reps: int = Field(default=20, ge=1)


class SandwichFields(Strict):
    subcommand: Literal["sandwich"]
    k: int = Field(default=14, ge=1, le=22)
    f: Literal[SUPERMULTIPLICATIVE] = "min-row-sum"  # type: ignore[valid-type]


class SurvivalConfig(Base):
    subcommand: Literal["survival"]
    model: Literal["binary", "one-type"]
    p: float = Field(gt=0.0, lt=1.0)
    epsilon: float = Field(default=0.0, ge=0.0)
    b: float = Field(default=1.0, gt=0.0, le=1.0)
    w: float = Field(default=0.0, ge=0.0, le=1.0)
    d: float = Field(default=0.0, ge=0.0, le=1.0)
    generations: int = Field(default=2000, ge=1)
    reps: int = Field(default=100_000, ge=1)
    escape: int = Field(default=10**6, ge=1)

    @model_validator(mode="after")
    def _model_ok(self):
        if self.model == "binary":
            if self.epsilon >= self.p:
                raise ValueError("epsilon must be below p")
            if self.w + self.d > 1.0:
                raise ValueError("w + d must not exceed 1")
        return self


class PhaseConfig(Base):
    subcommand: Literal["phase"]
    alpha: float = Field(gt=0.0, lt=1.0)
    gamma: float = Field(default=1.0, gt=0.0)
    grid: int = Field(default=40, ge=2, le=1000)
    grid_mode: Literal["center", "edge"] = "center"
    cc_q: list[float] = Field(default_factory=list)
    rank2_method: Literal["mc", "sandwich"] = "mc"
    mc_steps: int = Field(default=200_000, ge=100)
    mc_reps: int = Field(default=8, ge=1)
    sandwich_k: int = Field(default=12, ge=1, le=22)

    @model_validator(mode="after")
    def _q_ok(self):
        if any(not 0.0 <= q <= 1.0 for q in self.cc_q):
            raise ValueError("cc_q entries must lie in [0, 1]")
        return self


class SeparatrixConfig(Base):
    subcommand: Literal["separatrix"]
    m_a: float = Field(gt=0.0)
    m_d: float = Field(gt=0.0)
    w1: float = Field(gt=0.0, le=1.0)
    w2: float = Field(gt=0.0, le=1.0)
    alpha: float = Field(gt=0.0, lt=1.0)
    gamma: float = Field(default=1.0, gt=0.0)
    s1: list[float] = Field(default_factory=lambda: [i / 10 for i in range(1, 11)], min_length=1)

    @model_validator(mode="after")
    def _s1_ok(self):
        if any(not 0.0 < s <= 1.0 for s in self.s1):
            raise ValueError("s1 values must lie in (0, 1]")
        return self


_STRATEGY_COMMANDS = {"exact": ExactFields, "bounds": BoundsFields, "mc": McFields, "sandwich": SandwichFields}
_PLAIN_COMMANDS = {"survival": SurvivalConfig, "phase": PhaseConfig, "separatrix": SeparatrixConfig}
_model_cache: dict = {}


def schema_for(subcommand: str, strategy: Optional[str] = None) -> type[BaseModel]:
    if subcommand in _PLAIN_COMMANDS:
        return _PLAIN_COMMANDS[subcommand]
    if subcommand not in _STRATEGY_COMMANDS:
        raise ConfigError("subcommand", f"must be one of {list(SUBCOMMANDS)}")
    if strategy not in STRATEGY_FIELDS:
        raise ConfigError("strategy", f"must be one of {sorted(STRATEGY_FIELDS)}")
    key = (subcommand, strategy)
    if key not in _model_cache:
        bases = (_STRATEGY_COMMANDS[subcommand], STRATEGY_FIELDS[strategy], EnvFields, Base)
        _model_cache[key] = type(f"{subcommand}_{strategy}".replace("-", "_"), bases, {})
    return _model_cache[key]


def _error_path(err: ValidationError) -> tuple[str, str]:
    first = err.errors()[0]
    path = ".".join(str(p) for p in first["loc"]) or "<root>"
    return path, first["msg"]


def parse_config(document: str, seed: Optional[int] = None, subcommand: Optional[str] = None) -> BaseModel:
    """Validate a JSON config; ``seed`` and ``subcommand`` from the command line override or fill in."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if subcommand is not None:
        if raw.get("subcommand", subcommand) != subcommand:
            raise ConfigError("subcommand", f"config says {raw['subcommand']!r}, command line says {subcommand!r}")
        raw["subcommand"] = subcommand
    if seed is not None:
        raw["seed"] = seed
    sub = raw.get("subcommand")
    if not isinstance(sub, str):
        raise ConfigError("subcommand", "missing or not a string")
    schema = schema_for(sub, raw.get("strategy"))
    try:
        cfg = schema.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(*_error_path(exc)) from None
    if sub in NEEDS_SEED and cfg.seed is None:
        raise ConfigError("seed", f"a seed is required for {sub!r}")
    return cfg


def _env(cfg) -> BinaryEnvironment:
    return BinaryEnvironment(cfg.s1, cfg.s2)


def _exact_value(cfg):
    env = _env(cfg)
    spec = cfg.spec()
    if isinstance(spec, OneType):
        return one_type_exponent(spec.m1, spec.m2, env)
    if isinstance(spec, Responsive):
        return responsive_exponent(spec.m1, spec.m2, spec.d1, spec.d2, env)
    if isinstance(spec, Prescient):
        return prescient_exponent(spec.m1, spec.m2, spec.d1, spec.d2, env)
    if isinstance(spec, Stochastic):
        return stochastic_rank1_exponent(
            spec.m_a, spec.m_d, spec.w1, spec.w2, spec.alpha, env, d1=spec.d1, d2=spec.d2
        )
    return rank1_trace_exponent(spec.build(), env)


def run_exact(cfg, threads: int) -> dict:
    r = _exact_value(cfg)
    return {"value": r.value, "method": r.method}


def run_bounds(cfg, threads: int) -> dict:
    env = _env(cfg)
    pair = cfg.spec().build()
    row = bridge_for(pair, "row")
    out: dict = {}
    out["jensen_upper"] = jensen_upper_bound(row, env).value
    try:
        out["dirac_lower"] = dirac_lower_bound(pair, env).value
    except (ShapeMismatch, NotStochasticShape):
        out["dirac_lower"] = None
    include = []
    try:
        out["hl16_lower"] = hl16_lower_bound_direct(pair, env).value
        include.append(hl16_mu(pair))
    except DomainError:
        out["hl16_lower"] = None
    # every admissible split gives a valid bound; keep the best one
    best, best_scheme = -math.inf, None
    for scheme in SCHEMES:
        try:
            value, _ = optimize_markov_lower_bound(bridge_for(pair, scheme), env, cfg.n_samples, cfg.seed, include)
        except SchemePreconditionFailed:
            continue
        if value > best:
            best, best_scheme = value, scheme
    out["markov_lower"] = best
    out["markov_scheme"] = best_scheme
    nb = norm_bounds(pair, env)
    out["norm_lower"] = nb.lower.value
    out["norm_upper"] = nb.upper.value
    mc = mc_exponent(pair, env, cfg.mc_steps, cfg.mc_reps, cfg.seed, threads)
    out["mc_reference"] = mc.value
    out["mc_stderr"] = mc.stderr
    return out


def run_mc(cfg, threads: int) -> dict:
    r = mc_exponent(cfg.spec().build(), _env(cfg), cfg.steps, cfg.reps, cfg.seed, threads)
    return {"value": r.value, "stderr": r.stderr, "method": r.method, "steps": cfg.steps, "reps": cfg.reps}


def run_sandwich(cfg, threads: int) -> dict:
    pair = cfg.spec().build()
    rows = [enumerated_sandwich(pair, _env(cfg), k, cfg.f) for k in range(1, cfg.k + 1)]
    return {"f": cfg.f, "rows": [{"k": r.k, "lower": r.lower, "upper": r.upper} for r in rows]}


def run_survival(cfg, threads: int) -> dict:
    if cfg.model == "one-type":
        model = OneTypeModel(cfg.p)
        rho = 2.0 * cfg.p
    else:
        model = BinaryModelParams(cfg.p, cfg.epsilon, cfg.b, cfg.w, cfg.d)
        rho = rho_binary(model)
    stats = simulate_branching(model, cfg.generations, cfg.reps, cfg.seed, escape=cfg.escape)
    return {
        "survival_frequency": stats.survival_frequency,
        "survival_exact": survival_probability_exact(model),
        "growth_rate": rho,
        "escaped": stats.escaped,
        "extinction_tail": [{"n": n, "p_alive": p} for n, p in stats.extinction_tail],
    }


def _scan(cfg, threads: int):
    config = ScanConfig(
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        grid=cfg.grid,
        grid_mode=cfg.grid_mode,
        cc_q=tuple(cfg.cc_q),
        rank2_method=cfg.rank2_method,
        mc_steps=cfg.mc_steps,
        mc_reps=cfg.mc_reps,
        sandwich_k=cfg.sandwich_k,
        seed=cfg.seed,
        threads=threads,
    )
    return scan_grid(config)


def run_phase(cfg, threads: int) -> dict:
    cells = _scan(cfg, threads)
    return {
        "cells": [
            {
                "s1": c.s1,
                "s2": c.s2,
                "phi": {k: r.value for k, r in c.exponents.items()},
                "method": dict(c.methods),
                "dominant": c.dominant,
                "strong": c.strong,
                "uncertain": c.uncertain,
            }
            for c in cells
        ],
        "_csv": cells_to_csv(cells),
    }


def run_separatrix(cfg, threads: int) -> dict:
    rows = []
    for s1 in cfg.s1:
        rows.append({"s1": s1, "s2": separatrix_s2(s1, cfg.m_a, cfg.m_d, cfg.w1, cfg.w2, cfg.alpha, cfg.gamma)})
    return {"rows": rows}


RUNNERS = {
    "exact": run_exact,
    "bounds": run_bounds,
    "mc": run_mc,
    "sandwich": run_sandwich,
    "survival": run_survival,
    "phase": run_phase,
    "separatrix": run_separatrix,
}


def _round_floats(obj):
    if isinstance(obj, float):
        if math.isfinite(obj):
            return float(fmt(obj))
        return fmt(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def metadata(cfg) -> dict:
    echoed = cfg.model_dump(mode="json")
    canonical = json.dumps(echoed, sort_keys=True, separators=(",", ":"))
    return {
        "version": __version__,
        "seed": cfg.seed,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "config": echoed,
    }


def _csv_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(_cell_text(r[k]) for k in keys))
    return "\n".join(lines) + "\n"


def _cell_text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def render(cfg, result: dict, fmt_name: str) -> str:
    meta = metadata(cfg)
    csv_text = result.pop("_csv", None)
    if fmt_name == "json":
        doc = {"metadata": meta, "result": _round_floats(result)}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    header = "".join(
        f"# {k}={json.dumps(meta[k], sort_keys=True, separators=(',', ':'))}\n"
        for k in ("version", "seed", "config_sha256", "config")
    )
    if csv_text is not None:
        return header + csv_text
    for key in ("rows", "extinction_tail"):
        if key in result:
            table = result.pop(key)
            scalars = "".join(f"# {k}={_cell_text(v)}\n" for k, v in sorted(result.items()))
            return header + scalars + _csv_table(table)
    return header + _csv_table([dict(sorted(result.items()))])


def _threads(value: str) -> int:
    if value == "auto":
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'auto'") from None
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer or 'auto'")
    return n


def _seed(value: str) -> int:
    n = int(value)
    if not 0 <= n <= U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seedbank", description="Lyapunov exponents of dormancy strategies.")
    parser.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS, help="defaults to the config's subcommand")
    parser.add_argument("--config", required=True, help="JSON config file, or - for stdin")
    parser.add_argument("--output", default="-", help="output path, or - for stdout")
    parser.add_argument("--seed", type=_seed, default=None)
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--threads", type=_threads, default=1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config == "-":
            document = sys.stdin.read()
        else:
            with open(args.config, encoding="utf-8") as fh:
                document = fh.read()
        cfg = parse_config(document, seed=args.seed, subcommand=args.subcommand)
        fmt_name = args.format or ("csv" if cfg.subcommand == "phase" else "json")
        result = RUNNERS[cfg.subcommand](cfg, args.threads)
        text = render(cfg, result, fmt_name)
        if args.output == "-":
            sys.stdout.write(text)
        else:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
