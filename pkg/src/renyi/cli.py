"""Command-line front end for the example pipelines and verification suites.

Usage:
    renyi list [--json]
    renyi poisson --t1 1 --t2 3 --x1 0 --x2 2 [--out DIR] [--format json|csv|both]
    renyi haldane --alpha 0 --beta 5 --strict
    renyi stone-dawid --prior flat
    renyi lebesgue
    renyi verify --suite theorem1 --cases 200 --seed 7
    renyi poisson --config run.json

Exit status: 0 success, 1 error (bad arguments, bad config, failed
verification), 2 inconclusive verdicts under ``--strict``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
import tempfile
from pathlib import Path
from typing import Any, Callable

from .errors import RenyiError
from .extension import ExtensionProtocol
from .serialization import clean, dumps, law_to_csv

OUT_ENV = "RENYI_OUT"
DEFAULT_OUT = "renyi-out"
FORMATS = ("json", "csv", "both")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _positive(kind: Callable) -> Callable:
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return conv


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {s}")
    return v


def _cells(s):
    v = int(s)
    if v < 2:
        raise argparse.ArgumentTypeError(f"need at least 2 cells, got {s}")
    return v


# -- pipelines -------------------------------------------------------------------

def _run_poisson(p, protocol, seed):
    from .examples import poisson_process_example
    r = poisson_process_example(p["t1"], p["t2"], p["x1"], p["x2"], p["cells"], p["max_count"], protocol)
    return r.to_dict(), r.laws, True


def _run_haldane(p, protocol, seed):
    from .examples import haldane_example
    r = haldane_example(p["alpha"], p["beta"], p["cells"], protocol)
    return r.to_dict(), r.laws, True


def _run_stone_dawid(p, protocol, seed):
    from .examples import stone_dawid_example
    r = stone_dawid_example(p["prior"], p["exponent"], p["cells"], p["z"], protocol=protocol)
    return r.to_dict(), r.laws, True


def _run_lebesgue(p, protocol, seed):
    from .examples import lebesgue_examples
    r = lebesgue_examples(p["half_width"], p["cells"], protocol)
    return r.to_dict(), r.laws, True


def _run_verify(p, protocol, seed):
    from .disintegration import fiber_campaign
    from .renyi import renyi_campaign, uniform_line_check
    if p["suite"] == "theorem1":
        r = fiber_campaign(p["cases"], seed)
        return {"suite": "theorem1", "seed": seed, "campaign": r.to_dict()}, {}, r.passed
    r = renyi_campaign(p["cases"], seed)
    line = uniform_line_check()
    ok = r.passed and line.max_violation <= 1e-12
    return {"suite": "renyi", "seed": seed, "campaign": r.to_dict(), "uniformLine": line.to_dict()}, {}, ok


@dataclasses.dataclass(frozen=True)
class Pipeline:
    name: str
    summary: str
    params: dict  # name -> (converter, default, help)
    run: Callable


PIPELINES = {p.name: p for p in (
    Pipeline("poisson", "Poisson process with scale prior 1/lambda: staged vs one-shot posterior", {
        "t1": (_positive(float), 1.0, "end of the first observation window"),
        "t2": (_positive(float), 3.0, "end of the second observation window"),
        "x1": (_nonneg_int, 0, "events in (0, t1]"),
        "x2": (_nonneg_int, 2, "events in (t1, t2]"),
        "cells": (_cells, 256, "cells of the lambda grid"),
        "max_count": (_nonneg_int, 64, "largest stored count"),
    }, _run_poisson),
    Pipeline("haldane", "Binomial data with the Haldane prior: Beta posterior and its verdict", {
        "alpha": (_nonneg_int, 2, "successes"),
        "beta": (_nonneg_int, 3, "failures"),
        "cells": (_cells, 256, "cells of the p grid"),
    }, _run_haldane),
    Pipeline("stone-dawid", "Marginalization paradox for the ratio of two exponential means", {
        "prior": (str, "flat", "prior on theta: flat or power"),
        "exponent": (float, 0.0, "exponent a of the power prior theta^a"),
        "cells": (_cells, 64, "cells per axis of the four-axis joint"),
        "z": (_positive(float), 1.0, "observed ratio z (nearest cell centre is used)"),
    }, _run_stone_dawid),
    Pipeline("lebesgue", "Lebesgue plane, upper half-plane statistic, countable statistic", {
        "half_width": (_positive(float), 4.0, "initial truncation [-w, w] per axis"),
        "cells": (_cells, 32, "cells per axis"),
    }, _run_lebesgue),
    Pipeline("verify", "Randomised exact verification suites (theorem1, renyi)", {
        "suite": (str, "theorem1", "theorem1 or renyi"),
        "cases": (_positive(int), 200, "number of random cases"),
    }, _run_verify),
)}

CHOICES = {"prior": ("flat", "power"), "suite": ("theorem1", "renyi")}


def list_pipelines() -> list[dict]:
    return [{"name": p.name, "summary": p.summary} for p in PIPELINES.values()]


# -- config ----------------------------------------------------------------------------

def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(cfg) - {"pipeline", "params", "protocol", "out", "format", "strict", "seed"}
    if unknown:
        raise UsageError(f"config: unknown field {sorted(unknown)[0]!r}")
    return cfg


def resolve_params(pipe: Pipeline, cfg: dict, cli: dict) -> dict:
    params = {k: spec[1] for k, spec in pipe.params.items()}
    from_cfg = cfg.get("params", {})
    if not isinstance(from_cfg, dict):
        raise UsageError("config: 'params' must be an object")
    for key, value in from_cfg.items():
        name = key.replace("-", "_")
        if name not in pipe.params:
            raise UsageError(f"config: unknown parameter 'params.{key}' for pipeline {pipe.name}")
        try:
            params[name] = pipe.params[name][0](value)
        except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"config: bad value for 'params.{key}': {exc}") from None
    params.update({k: v for k, v in cli.items() if v is not None})
    for name, allowed in CHOICES.items():
        if name in params and params[name] not in allowed:
            raise UsageError(f"parameter '{name}' must be one of {allowed}, got {params[name]!r}")
    return params


def resolve_protocol(cfg: dict) -> ExtensionProtocol:
    over = cfg.get("protocol", {})
    if not isinstance(over, dict):
        raise UsageError("config: 'protocol' must be an object")
    fields = {f.name for f in dataclasses.fields(ExtensionProtocol)}
    for key, value in over.items():
        if key not in fields:
            raise UsageError(f"config: unknown tolerance 'protocol.{key}'")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
            raise UsageError(f"config: 'protocol.{key}' must be a positive number")
    try:
        return ExtensionProtocol(**over)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config: bad 'protocol': {exc}") from None


# -- output --------------------------------------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def find_inconclusive(obj: Any, path: str = "") -> list[str]:
    """Paths of every verdict with kind ``inconclusive`` in a report."""
    found = []
    if isinstance(obj, dict):
        if obj.get("kind") == "inconclusive":
            found.append(path or "/")
        for k in sorted(obj):
            found += find_inconclusive(obj[k], f"{path}/{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            found += find_inconclusive(v, f"{path}/{i}")
    return found


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def run_pipeline(name: str, params: dict, protocol: ExtensionProtocol, seed: int, out: Path, fmt: str,
                 strict: bool) -> tuple[int, dict, list[Path]]:
    pipe = PIPELINES[name]
    result, laws, ok = pipe.run(params, protocol, seed)
    report = {"pipeline": name, "params": params, "protocol": dataclasses.asdict(protocol), "seed": seed,
              "result": result}
    report["inconclusive"] = find_inconclusive(clean(result))
    report["ok"] = bool(ok)
    written = []
    if fmt in ("json", "both"):
        p = out / f"{name}.json"
        write_atomic(p, dumps(report))
        written.append(p)
    if fmt in ("csv", "both"):
        for law_name, law in sorted(laws.items()):
            p = out / f"{name}_{_slug(law_name)}.csv"
            write_atomic(p, law_to_csv(law))
            written.append(p)
    code = 0 if ok else 1
    if strict and report["inconclusive"] and code == 0:
        code = 2
    return code, report, written


# -- argument parsing ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (see docs/config.schema.json)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--format", choices=FORMATS, help="report formats (default json)")
    common.add_argument("--strict", action="store_true", default=None,
                        help="exit 2 when any verdict is inconclusive")
    common.add_argument("--seed", type=_nonneg_int, help="random seed for verification campaigns")

    parser = _Parser(prog="renyi", description="Conditional measures for unnormalised laws.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    ls = sub.add_parser("list", help="list the pipelines")
    ls.add_argument("--json", action="store_true", help="machine-readable registry")
    for pipe in PIPELINES.values():
        sp = sub.add_parser(pipe.name, parents=[common], help=pipe.summary, description=pipe.summary)
        for key, (conv, default, help_) in pipe.params.items():
            kw = {"choices": CHOICES[key]} if key in CHOICES else {}
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=conv, default=None,
                            help=f"{help_} (default {default})", **kw)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "list":
            if args.json:
                print(json.dumps({"pipelines": list_pipelines()}, indent=2))
            else:
                for p in list_pipelines():
                    print(f"{p['name']:<12} {p['summary']}")
            return 0
        cfg = load_config(args.config)
        if cfg.get("pipeline", args.command) != args.command:
            raise UsageError(f"config: 'pipeline' is {cfg['pipeline']!r} but the command is {args.command!r}")
        pipe = PIPELINES[args.command]
        params = resolve_params(pipe, cfg, {k: getattr(args, k) for k in pipe.params})
        protocol = resolve_protocol(cfg)
        fmt = args.format or cfg.get("format", "json")
        if fmt not in FORMATS:
            raise UsageError(f"config: 'format' must be one of {FORMATS}")
        strict = args.strict if args.strict is not None else bool(cfg.get("strict", False))
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise UsageError("config: 'seed' must be a nonnegative integer")
        out = Path(args.out or cfg.get("out") or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        code, report, written = run_pipeline(args.command, params, protocol, seed, out, fmt, strict)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RenyiError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    for path in report["inconclusive"]:
        print(f"inconclusive verdict at {path}", file=sys.stderr)
    if not report["ok"]:
        print(f"{args.command}: checks failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
