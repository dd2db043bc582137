"""Command-line driver: single tester runs, soundness sweeps, adversary games and lemma checks.

Every run is determined by its configuration and seed.  Options come from
flags or from a ``key=value`` file given with ``--config``; flags win.
Exit codes: 0 success, 1 usage, 2 parse, 3 protocol violation, 4 lemma failure.
"""

from __future__ import annotations

import argparse
import csv
import importlib
import io
import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .adversary import (
    BUDGET,
    CORRUPTION,
    ERASURE,
    FIXED_RATE,
    STRATEGIES,
    Strategy,
    run_game,
)
from .agreement import LemmaViolation, check_chebyshev, check_sampling_bounds, random_collection
from .bounds import ClaimViolation, k_adv_size, query_lower_bound
from .functab import FunctionTable, TableError, TableParseError, plant, read_table
from .gf import FieldError, parse_field
from .montecarlo import semi_sample_rejections
from .rm import CodeFamily, ReedMuller, load_lifted_base
from .rng import child
from .stats import clopper_pearson, demonstrates_at_least
from .testers import TesterSpec, run_tester

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_PROTOCOL, EXIT_LEMMA = 0, 1, 2, 3, 4

SWEEP_HEADER = ["q", "n", "d", "k", "Q", "eps_num", "eps_den", "trials", "rejects", "rate", "bound", "pass"]

DEFAULTS = {
    "q": "2",
    "modulus": None,
    "d": "1",
    "n": None,
    "k": None,
    "Q": None,
    "reps": "1",
    "eps": None,
    "kind": "SEMI_SAMPLE",
    "seed": "0",
    "trials": "1000",
    "adversary": "none_adv",
    "mode": ERASURE,
    "accounting": FIXED_RATE,
    "t": "0",
    "sigma": "3",
    "out": None,
    "input": None,
    "lifted": None,
    "weights": "0,1,2,4",
    "ks": None,
    "Qs": None,
    "pool": "16",
    "grid": "2:4,2:5,2:6,3:4,3:5",
    "instances": "50",
    "source": "planted",
    "weight": "1",
    "keep_trace": "1",
}


class UsageError(Exception):
    pass


class ConfigParseError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def read_config(path) -> dict[str, str]:
    cfg: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected key=value, got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
        cfg[key] = value
    return cfg


COMMAND_KEYS: dict[str, tuple[str, ...]] = {}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rmtest", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rmtest {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *extra):
        sp.add_argument("--config", help="key=value file; flags override it")
        keys = ("q", "modulus", "d", "n", "seed", "out", "sigma", "lifted") + extra
        COMMAND_KEYS[sp.prog.split()[-1]] = keys
        for key in keys:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
        return sp

    common(sub.add_parser("test", help="one tester run on a table file"), "input", "kind", "k", "Q", "reps", "eps", "adversary", "mode", "accounting", "t")
    common(sub.add_parser("sweep", help="soundness sweep over planted instances (CSV)"), "k", "ks", "Qs", "Q", "weights", "trials", "pool")
    for name in ("game", "arena"):
        common(
            sub.add_parser(name, help="tester vs adversary games (JSON lines)" if name == "game" else "every strategy vs one tester"),
            "input", "source", "weight", "kind", "k", "Q", "reps", "eps", "adversary", "mode", "accounting", "t", "trials", "keep_trace",
        )
    common(sub.add_parser("agreement", help="sampling-lemma and Chebyshev checks on random collections"), "grid", "instances")
    common(sub.add_parser("bounds", help="query lower bound and k_adv sizing"), "t", "eps", "Q", "reps")
    return p


def resolve(args: argparse.Namespace) -> dict[str, str | None]:
    keys = COMMAND_KEYS[args.command]
    cfg = {k: DEFAULTS[k] for k in keys}
    if getattr(args, "config", None):
        for k, v in read_config(args.config).items():
            if k in cfg:
                cfg[k] = v
    for key in keys:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg["command"] = args.command
    return cfg


# -- helpers ----------------------------------------------------------------------------------


def _int(cfg, key) -> int | None:
    v = cfg.get(key)
    if v is None or v == "":
        return None
    try:
        return int(v)
    except ValueError:
        raise UsageError(f"{key} must be an integer, got {v!r}") from None


def _frac(cfg, key) -> Fraction | None:
    v = cfg.get(key)
    if v is None or v == "":
        return None
    try:
        return Fraction(v)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{key} must be a rational, got {v!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


def _field(cfg):
    spec = f"q={cfg['q']}" + (f" modulus={cfg['modulus']}" if cfg.get("modulus") else "")
    try:
        return parse_field(spec)
    except FieldError as exc:
        raise UsageError(str(exc)) from None


def _code(cfg, field, n: int | None) -> CodeFamily:
    if cfg.get("lifted"):
        return load_lifted_base(cfg["lifted"], max_dim=n)
    return ReedMuller(field, _int(cfg, "d"))


def _spec(cfg, code, n: int) -> TesterSpec:
    kind = (cfg.get("kind") or "SEMI_SAMPLE").upper()
    k = _int(cfg, "k")
    if kind == "SEMI_SAMPLE" and k is None:
        k = code.base_dim
    try:
        return TesterSpec(kind, code, n, k, Q=_int(cfg, "Q"), reps=_int(cfg, "reps") or 1, eps=_frac(cfg, "eps"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _strategy(name: str) -> Strategy:
    if ":" in name:
        mod, _, attr = name.partition(":")
        try:
            cls = getattr(importlib.import_module(mod), attr)
        except (ImportError, AttributeError) as exc:
            raise UsageError(f"cannot load strategy {name!r}: {exc}") from None
        return cls()
    if name not in STRATEGIES:
        raise UsageError(f"unknown adversary {name!r}; choose from {sorted(STRATEGIES)}")
    return STRATEGIES[name]()


def _check_enum(cfg, key, allowed):
    if cfg[key] not in allowed:
        raise UsageError(f"{key} must be one of {allowed}, got {cfg[key]!r}")


def _header(cfg) -> dict:
    keep = {k: v for k, v in sorted(cfg.items()) if v is not None and k not in ("out",)}
    return {"config": keep, "seed": cfg["seed"], "version": version_string()}


def _emit(cfg, text: str, stdout) -> None:
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    stdout.write(text)


def _input(cfg, code, n: int | None, rng) -> FunctionTable:
    if cfg.get("input"):
        return read_table(cfg["input"])
    if n is None:
        raise UsageError("need --input or --n")
    source = cfg.get("source", "planted")
    if source == "codeword":
        return code.random_codeword(n, rng)
    if source == "planted":
        try:
            return plant(code, n, _int(cfg, "weight"), rng).f
        except TableError as exc:
            raise UsageError(str(exc)) from None
    if source == "random":
        return FunctionTable(code.field, n, rng.integers(0, code.field.q, size=code.field.q**n))
    raise UsageError(f"unknown source {source!r}")


# -- subcommands -------------------------------------------------------------------------------


def cmd_test(cfg, stdout) -> int:
    f = read_table(cfg["input"]) if cfg.get("input") else None
    if f is None:
        raise UsageError("test needs --input")
    if f.field.q != int(cfg["q"]) and cfg.get("q") == DEFAULTS["q"]:
        cfg["q"] = str(f.field.q)
    field = f.field
    code = _code(cfg, field, f.n)
    spec = _spec(cfg, code, f.n)
    seed = _int(cfg, "seed")
    _check_enum(cfg, "mode", (ERASURE, CORRUPTION))
    _check_enum(cfg, "accounting", (FIXED_RATE, BUDGET))
    t = _frac(cfg, "t")
    record = _header(cfg)
    if t == 0 and cfg["adversary"] == "none_adv":
        if f.has_erasures:
            raise UsageError("offline run on a table with ERASED entries; use an adversary session")
        v = run_tester(f, spec, child(seed, 0, tag=1))
        record["verdict"] = v.to_dict()
        status = EXIT_OK
    else:
        try:
            rec = run_game(f, spec, _strategy(cfg["adversary"]), seed, t=t, mode=cfg["mode"], accounting=cfg["accounting"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        record.update(json.loads(rec.to_json()))
        status = EXIT_PROTOCOL if rec.forfeit else EXIT_OK
    _emit(cfg, json.dumps(record, sort_keys=True) + "\n", stdout)
    return status


def cmd_sweep(cfg, stdout) -> int:
    field = _field(cfg)
    n = _int(cfg, "n")
    if n is None:
        raise UsageError("sweep needs --n")
    code = _code(cfg, field, n)
    seed, trials, pool = _int(cfg, "seed"), _int(cfg, "trials"), _int(cfg, "pool")
    sigma = float(cfg["sigma"])
    ks = _ints(cfg["ks"]) if cfg.get("ks") else [_int(cfg, "k") or code.base_dim]
    Qs = _ints(cfg["Qs"]) if cfg.get("Qs") else ([_int(cfg, "Q")] if cfg.get("Q") else [None])
    weights = _ints(cfg["weights"])
    q = field.q
    buf = io.StringIO()
    for key, val in _header(cfg).items():
        buf.write(f"# {key}={json.dumps(val, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    ok = True
    cell = 0
    for k in ks:
        if not code.base_dim <= k <= n:
            raise UsageError(f"k={k} outside [{code.base_dim}, {n}]")
        for Qcfg in Qs:
            Q = Qcfg if Qcfg is not None else min(code.q_parameter(k), 512)
            for wt in weights:
                rng = child(seed, cell, tag=11)
                try:
                    insts = [plant(code, n, wt, rng) for _ in range(pool)]
                except TableError as exc:
                    raise UsageError(str(exc)) from None
                eps = insts[0].certified_distance
                rej = semi_sample_rejections(code, np.stack([i.f.values for i in insts]), n, k, Q, trials, seed * 7919 + cell)
                bound = min(Fraction(1, 128), Q * eps / 8)
                passed = rej == 0 if eps == 0 else demonstrates_at_least(rej, trials, bound, sigma)
                ok &= passed
                w.writerow([q, n, code.d if hasattr(code, "d") else "", k, Q, eps.numerator, eps.denominator,
                            trials, rej, f"{rej / trials:.8g}", f"{float(bound):.8g}", "true" if passed else "false"])
                cell += 1
    _emit(cfg, buf.getvalue(), stdout)
    return EXIT_OK


def _games(cfg, stdout, names) -> int:
    field = _field(cfg)
    n = _int(cfg, "n")
    seed, trials = _int(cfg, "seed"), _int(cfg, "trials")
    code = _code(cfg, field, n)
    f = _input(cfg, code, n, child(seed, 0, tag=13))
    cfg["q"] = str(f.field.q)
    spec = _spec(cfg, code, f.n)
    _check_enum(cfg, "mode", (ERASURE, CORRUPTION))
    _check_enum(cfg, "accounting", (FIXED_RATE, BUDGET))
    t = _frac(cfg, "t")
    keep = cfg.get("keep_trace", "1") not in ("0", "false", "no")
    lines = [json.dumps({"header": _header(cfg)}, sort_keys=True)]
    summary = {}
    for name in names:
        strat = _strategy(name)
        if cfg["mode"] not in strat.modes:
            if len(names) == 1:
                raise UsageError(f"{name} does not support {cfg['mode']} mode")
            continue
        acc = rej = seen = forfeits = 0
        for g in range(trials):
            rec = run_game(f, spec, _strategy(name), seed * 1_000_003 + g, t=t, mode=cfg["mode"],
                           accounting=cfg["accounting"], keep_trace=keep)
            lines.append(rec.to_json())
            acc += rec.accepted
            rej += not rec.accepted
            seen += rec.erasure_seen
            forfeits += rec.forfeit is not None
        summary[strat.name] = {
            "games": trials,
            "accept": acc,
            "reject": rej,
            "erasure_seen": seen,
            "forfeits": forfeits,
            "reject_rate": rej / trials if trials else 0.0,
            "reject_ci": list(clopper_pearson(rej, trials, float(cfg["sigma"]))) if trials else None,
        }
    if cfg.get("out"):
        Path(cfg["out"]).write_text("\n".join(lines) + "\n")
    stdout.write(json.dumps({"summary": summary, "tester": spec.to_dict(), "t": str(t)}, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_game(cfg, stdout) -> int:
    return _games(cfg, stdout, [cfg["adversary"]])


def cmd_arena(cfg, stdout) -> int:
    return _games(cfg, stdout, list(STRATEGIES))


def cmd_agreement(cfg, stdout) -> int:
    seed, instances = _int(cfg, "seed"), _int(cfg, "instances")
    grid = []
    for cell in (cfg.get("grid") or "").split(","):
        if not cell.strip():
            continue
        try:
            q, n = (int(x) for x in cell.split(":"))
        except ValueError:
            raise UsageError(f"bad grid cell {cell!r}; expected q:n") from None
        grid.append((q, n))
    report = {"header": _header(cfg), "cells": []}
    status = EXIT_OK
    for ci, (q, n) in enumerate(grid):
        field = parse_field(f"q={q}")
        total = (q**n - 1) // (q - 1)
        rng = child(seed, ci, tag=17)
        passed = failed = 0
        worst = None
        for _ in range(instances):
            coll = random_collection(field, n, int(rng.integers(1, total + 1)), rng)
            S = rng.random(q**n) < rng.random()
            try:
                r = check_sampling_bounds(coll, S)
                for c in (Fraction(1, 2), Fraction(1), Fraction(2)):
                    check_chebyshev(coll, c)
                passed += 1
                slack = min(r["slack_lower"], r["slack_upper"])
                worst = slack if worst is None else min(worst, slack)
            except LemmaViolation:
                failed += 1
                status = EXIT_LEMMA
        report["cells"].append({"q": q, "n": n, "instances": instances, "passed": passed, "failed": failed,
                                "min_slack": None if worst is None else str(worst)})
    _emit(cfg, json.dumps(report, sort_keys=True) + "\n", stdout)
    return status


def cmd_bounds(cfg, stdout) -> int:
    q, d = int(cfg["q"]), _int(cfg, "d")
    n = _int(cfg, "n")
    if n is None:
        raise UsageError("bounds needs --n")
    t = _frac(cfg, "t")
    Q, reps = _int(cfg, "Q"), _int(cfg, "reps") or 1
    tq = Q * reps if Q else None
    out = {"header": _header(cfg)}
    try:
        if t >= 1:
            out["lower_bound"] = json.loads(query_lower_bound(q, n, d, t, tester_queries=tq).to_json())
        eps = _frac(cfg, "eps")
        if eps is not None:
            out["k_adv"] = k_adv_size(_code(cfg, _field(cfg), n), t, eps, n=n)
    except ClaimViolation as exc:
        stdout.write(json.dumps({"error": str(exc)}) + "\n")
        return EXIT_LEMMA
    _emit(cfg, json.dumps(out, sort_keys=True) + "\n", stdout)
    return EXIT_OK


COMMANDS = {
    "test": cmd_test,
    "sweep": cmd_sweep,
    "game": cmd_game,
    "arena": cmd_arena,
    "agreement": cmd_agreement,
    "bounds": cmd_bounds,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, stdout)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        stderr.write(f"rmtest: usage error: {exc}\n")
        return EXIT_USAGE
    except (TableParseError, ConfigParseError) as exc:
        stderr.write(f"rmtest: parse error: {exc}\n")
        return EXIT_PARSE
    except FileNotFoundError as exc:
        stderr.write(f"rmtest: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
