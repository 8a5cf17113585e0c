"""Command-line front end.

Results go to standard output (or ``--out``), logs and the run manifest to
standard error.  Exit codes: 0 success, 1 usage or input error, 2 failed
verification, 3 singular parameter or degenerate constraint.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from typing import List, Optional

from . import __version__
from .engine import Parameter, param_hash, survivor_trajectory
from .enumeration import (ConstrainedParameter, CrossingSet, Side, enumerate_constrained,
                          enumerate_ff)
from .errors import BulletsError, DegenerateConstraint, InvalidParameter, SingularParameter, SizeLimit
from .geometry import as_rational, format_rational
from .law import central_moments_floating, q_exact, q_floating
from .models import (ImpetusProblem, SpeedSampler, compare_empirical, flock_run, sample_many)
from .rng import DEFAULT_SEED, rational_uniforms, stream
from .scheme import find_critical_patterns
from .verify import SUITES, format_table, run_suite

log = logging.getLogger("bullets")

TRAJECTORY_LIMIT = 5000
FLOATING_MASS_LIMIT = 20000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--params", metavar="FILE")
    common.add_argument("--model")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--max-n", type=int)
    common.add_argument("--out", metavar="FILE")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="bullets", description="Exact and sampled laws of colliding bullets.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dist", parents=[common], help="exact (or floating) law q_n")
    d.add_argument("--floating", action="store_true", help="double precision, for large n")

    e = sub.add_parser("enumerate", parents=[common], help="exhaustive configuration counts")
    e.add_argument("--s", default="0", help="segment height: rational, H or H/2")
    e.add_argument("--A", default="all", choices=[c.value for c in CrossingSet])

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo for the bullet models")
    s.add_argument("--speeds", default="uniform", choices=("uniform", "exponential"))
    s.add_argument("--acceleration", help="override the acceleration of a FAF problem file")

    sub.add_parser("alt", parents=[common], help="Monte Carlo for the combinatorial models")
    sub.add_parser("analyze", parents=[common], help="genericity verdict and critical patterns")

    t = sub.add_parser("trajectory", parents=[common], help="survivor counts of successive prefixes")
    t.add_argument("--large", action="store_true", help=f"allow n > {TRAJECTORY_LIMIT}")

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", required=True, choices=sorted(SUITES))
    return p


# --- subcommands -------------------------------------------------------------------

def _need(args, name):
    if getattr(args, name) is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")
    return getattr(args, name)


def _law_json(dist):
    return {str(k): format_rational(p) for k, p in dist.probabilities().items()}


def cmd_dist(args):
    n = _need(args, "n")
    if n < 0:
        raise UsageError("--n must be non-negative")
    if args.floating:
        mean, var, skew = central_moments_floating(n)
        out = {"n": n, "floating": True, "mean": mean, "variance": var, "skewness": skew}
        if n <= FLOATING_MASS_LIMIT:
            q = q_floating(n)
            out["mass"] = {str(k): float(q[k]) for k in range(n + 1) if q[k] > 0}
        rows = [(k, out["mass"][k]) for k in out.get("mass", {})]
        return out, [("k", "probability")] + rows
    dist = q_exact(n, args.max_n)
    mean = sum(k * p for k, p in dist.mass.items())
    var = sum(k * k * p for k, p in dist.mass.items()) - mean * mean
    out = {"n": n, "mass": _law_json(dist), "mean": format_rational(mean),
           "variance": format_rational(var)}
    return out, [("k", "probability")] + list(out["mass"].items())


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _constrained(args):
    obj = _read_json(_need(args, "params"))
    cp = ConstrainedParameter.from_json(obj)
    raw = args.s.strip()
    if raw == "H":
        s = cp.height
    elif raw == "H/2":
        s = cp.height / 2
    else:
        try:
            s = as_rational(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidParameter("s", f"not a rational, H or H/2: {raw!r}") from exc
    return cp.with_constraint(s=s, A=CrossingSet(args.A))


def cmd_enumerate(args):
    model = (args.model or "ff").lower()
    if model == "ff":
        p = Parameter.from_json(_read_json(_need(args, "params")))
        table = enumerate_ff(p, jobs=args.jobs, max_n=args.max_n)
    elif model in ("lr", "rr"):
        cp = _constrained(args)
        side = Side.LEFT if model == "lr" else Side.RIGHT
        table = enumerate_constrained(cp, side, jobs=args.jobs, max_n=args.max_n)
    else:
        raise UsageError(f"unknown enumeration model {model!r} (ff, lr, rr)")
    out = table.to_json()
    out["frequencies"] = {str(k): format_rational(v) for k, v in table.frequencies().items()}
    rows = [("k", "count")] + sorted(table.counts.items())
    return out, rows


def _faf_problem(args):
    obj = _read_json(_need(args, "params"))
    for key in ("impetuses", "delays"):
        if key not in obj:
            raise InvalidParameter(key, "missing field")
    accel = args.acceleration or obj.get("acceleration", "identity")
    table = obj.get("table")
    if table is not None:
        table = (tuple(table["x"]), tuple(table["y"]))
    return ImpetusProblem(tuple(obj["impetuses"]), tuple(obj["delays"]), accel, table)


def _sampling(args, model, n, options, sampler=None):
    samples = args.samples if args.samples is not None else 10 ** 5
    if samples <= 0:
        raise UsageError("--samples must be positive")
    log.info("model %s, n=%d, %d samples, seed %d", model, n, samples, args.seed)
    draws = sample_many(sampler or model, n, samples, args.seed, jobs=args.jobs, options=options)
    counts = {}
    for k in draws:
        counts[k] = counts.get(k, 0) + 1
    out = {"model": model, "n": n, "samples": samples, "seed": args.seed,
           "counts": {str(k): counts[k] for k in sorted(counts)}}
    if n <= (args.max_n or 5000):
        tv, chi2, pval = compare_empirical(draws, q_exact(n))
        out.update({"tv_vs_qn": tv, "chi2": chi2, "p_value": pval})
    rows = [("k", "count")] + sorted(counts.items())
    return out, rows


def cmd_simulate(args):
    model = (args.model or "ru").lower()
    options = {}
    if model in ("ru", "rr", "markov"):
        n = _need(args, "n")
        if args.speeds == "exponential":
            options["speeds"] = SpeedSampler("exponential")
    elif model == "ff":
        p = Parameter.from_json(_read_json(_need(args, "params")))
        options["parameter"] = p
        n = p.n
    elif model == "faf":
        ip = _faf_problem(args)
        options["problem"] = ip
        n = len(ip.impetuses)
    else:
        raise UsageError(f"unknown model {model!r} (ru, rr, ff, faf, markov)")
    if n < 0:
        raise UsageError("--n must be non-negative")
    return _sampling(args, model, n, options)


def cmd_alt(args):
    model = (args.model or "flock").lower()
    if model not in ("flock", "cycles", "matrix", "tree"):
        raise UsageError(f"unknown model {model!r} (flock, cycles, matrix, tree)")
    n = _need(args, "n")
    if n < 1:
        raise UsageError("--n must be positive")
    # large permutations are sampled through their cycle lengths only
    fast = "cycles-fast" if model == "cycles" and n > 1000 else None
    return _sampling(args, model, n, {}, fast)


def cmd_analyze(args):
    p = Parameter.from_json(_read_json(_need(args, "params")))
    patterns = find_critical_patterns(p, args.max_n)
    out = {"n": p.n, "parameter_hash": p.digest(), "generic": not patterns,
           "patterns": [c.to_json() for c in patterns]}
    rows = [("v_m", "v_l", "v_r", "d_l", "d_r", "triple_height", "minimal")]
    rows += [(c["v_m"], c["v_l"], c["v_r"], c["d_l"], c["d_r"], c["triple_height"], c["minimal"])
             for c in out["patterns"]]
    return out, rows


def cmd_trajectory(args):
    model = (args.model or "bullets").lower()
    n = args.n if args.n is not None else TRAJECTORY_LIMIT
    if n < 1:
        raise UsageError("--n must be positive")
    rng = stream(args.seed, 0)
    if model == "bullets":
        if n > TRAJECTORY_LIMIT and not args.large:
            raise UsageError(f"n > {TRAJECTORY_LIMIT} needs --large (cost grows like n^2 log n)")
        speeds = rational_uniforms(rng, n)
        while len(set(speeds)) < n:
            speeds = rational_uniforms(rng, n)
        sizes = survivor_trajectory(speeds, [1] * (n - 1), n)
    elif model == "flock":
        sizes = flock_run(rng.random(n))[1]
    else:
        raise UsageError(f"unknown trajectory model {model!r} (bullets, flock)")
    out = {"model": model, "n": n, "seed": args.seed, "sizes": sizes}
    return out, [("j", "size")] + [(j, s) for j, s in enumerate(sizes, start=1)]


def cmd_verify(args):
    checks = run_suite(args.suite, max_n=args.max_n, seed=args.seed, jobs=args.jobs,
                       samples=args.samples)
    print(format_table(checks), file=sys.stderr)
    passed = all(c.ok for c in checks)
    out = {"suite": args.suite, "passed": passed, "checks": [c.to_json() for c in checks]}
    rows = [("check", "ok", "detail")] + [(c.name, c.ok, c.detail) for c in checks]
    return out, rows


COMMANDS = {"dist": cmd_dist, "enumerate": cmd_enumerate, "simulate": cmd_simulate,
            "alt": cmd_alt, "analyze": cmd_analyze, "trajectory": cmd_trajectory,
            "verify": cmd_verify}
DEFAULT_FORMAT = {"trajectory": "csv"}


# --- output ------------------------------------------------------------------------------

def render(payload, rows, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if hasattr(x, "item"):      # numpy scalars
        return x.item()
    try:
        return format_rational(x)
    except TypeError:
        raise TypeError(f"not serializable: {type(x).__name__}")


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _manifest(args, started, params_digest):
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "verbose")}
    return {"subcommand": args.command, "flags": flags, "seed": args.seed,
            "parameter_hash": params_digest, "version": __version__,
            "duration_s": round(time.monotonic() - started, 3)}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:        # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    started = time.monotonic()
    fmt = args.format or DEFAULT_FORMAT.get(args.command, "json")
    log.info("%s: seed %d", args.command, args.seed)
    digest = None
    code = 0
    try:
        if args.params:
            digest = param_hash(_read_json(args.params))
        payload, rows = COMMANDS[args.command](args)
        if args.command == "verify" and not payload["passed"]:
            code = 2
    except (SingularParameter, DegenerateConstraint) as exc:
        report = {"error": type(exc).__name__, "message": str(exc),
                  "patterns": [c.to_json() for c in getattr(exc, "patterns", None) or []]}
        _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
        print(f"bullets: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (UsageError, InvalidParameter, SizeLimit, BulletsError, ValueError) as exc:
        print(f"bullets: error: {exc}", file=sys.stderr)
        return 1
    _emit(render(payload, rows, fmt), args.out)
    manifest = json.dumps(_manifest(args, started, digest), sort_keys=True)
    if args.out:
        with open(args.out + ".manifest.json", "w") as fh:
            fh.write(manifest + "\n")
    print(f"manifest {manifest}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
