"""Command-line interface.

Subcommands::

    run            seeded verification campaign over one or more cases
    check          verify a single instance loaded from JSON files
    limits         table of Renyi differences against alpha
    functoriality  composition identities of rotated Petz maps

Exit status: 0 when every verdict is ``pass``, 2 when some verdict is
``inconclusive``, 1 on a failed verdict or a runtime error, 64 on usage
errors (bad flags, empty case list, unreadable config).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import RecoverabilityError
from .numerics import matrix_from_json, matrix_to_json
from .quantum import channel_from_json, channel_to_json
from .verify import (
    CASES,
    DEFAULT_ALPHAS,
    FUNCTORIALITY,
    Instance,
    TSearchConfig,
    check_limits,
    check_lower,
    check_sequential,
    check_upper,
    build_instance,
    run_trial,
    trial_rng,
)

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64
RUN_CASES = CASES + FUNCTORIALITY
CSV_FIELDS = ("case", "trial", "seed", "dims", "delta", "bound", "witness_t", "deficit", "verdict", "t0_witness", "escalated")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Fixed 12-significant-digit rendering with ``inf``/``nan`` sentinels."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return format(x, ".12g")


# -- configuration --------------------------------------------------------


@dataclass
class CampaignConfig:
    cases: list = field(default_factory=list)
    dims: dict = field(default_factory=dict)
    trials: int = 1
    seed: int = 0
    t_search: TSearchConfig = field(default_factory=TSearchConfig)
    alpha_grid: tuple = DEFAULT_ALPHAS
    out: str | None = None
    workers: int = 1

    def validate(self):
        if not self.cases:
            raise UsageError("no cases given (use --case or a config file)")
        unknown = [c for c in self.cases if c not in RUN_CASES]
        if unknown:
            raise UsageError(f"unknown case(s) {unknown}; expected from {list(RUN_CASES)}")
        if self.trials < 1:
            raise UsageError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise UsageError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")


def _read_json(path) -> object:
    """Parse a JSON file; syntax errors report the byte offset."""
    raw = Path(path).read_bytes()
    text = raw.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ValueError(f"{path}: JSON parse error at byte offset {offset}: {exc.msg}") from None


def _parse_list(text, conv, what):
    try:
        return [conv(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"cannot parse {what} from {text!r}") from None


def load_config(args) -> CampaignConfig:
    cfg = CampaignConfig()
    ts = {}
    if args.config:
        try:
            data = _read_json(args.config)
        except (OSError, UnicodeDecodeError, ValueError) as exc:
            raise UsageError(f"unreadable config: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        cfg.cases = list(data.get("cases", []))
        cfg.dims = dict(data.get("dims", {}))
        cfg.trials = int(data.get("trials", cfg.trials))
        cfg.seed = int(data.get("seed", cfg.seed))
        ts = dict(data.get("t_search", {}))
        cfg.alpha_grid = tuple(float(a) for a in data.get("alpha_grid", cfg.alpha_grid))
        cfg.out = data.get("out", cfg.out)
        cfg.workers = int(data.get("workers", cfg.workers))
    if getattr(args, "case", None):
        cfg.cases = [c for item in args.case for c in item.split(",") if c]
    if getattr(args, "dims", None):
        dims = _parse_list(args.dims, int, "dims")
        cfg.dims = {c: dims for c in cfg.cases}
    for name in ("trials", "seed", "out", "workers"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "t_range", None) is not None:
        ts["t_range"] = args.t_range
    if getattr(args, "t_points", None) is not None:
        ts["coarse_points"] = args.t_points
    if getattr(args, "alpha_grid", None):
        cfg.alpha_grid = tuple(_parse_list(args.alpha_grid, float, "alpha grid"))
    try:
        cfg.t_search = TSearchConfig(**ts)
    except (TypeError, RecoverabilityError) as exc:
        raise UsageError(f"bad t-search settings: {exc}") from None
    cfg.validate()
    return cfg


# -- persistence ----------------------------------------------------------


def instance_to_json(inst: Instance) -> dict:
    return {
        "case": inst.case_tag,
        "dims": list(inst.dims),
        "interpretation": inst.interpretation,
        "rho": matrix_to_json(inst.rho),
        "sigma": matrix_to_json(inst.sigma),
        "channel": channel_to_json(inst.channel),
    }


def instance_from_json(obj) -> Instance:
    try:
        return Instance(
            matrix_from_json(obj["rho"]),
            matrix_from_json(obj["sigma"]),
            channel_from_json(obj["channel"]),
            obj.get("case", "generic"),
            obj.get("interpretation", Instance.interpretation),
            tuple(obj.get("dims", ())),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance object: missing {exc}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        w.writerow([
            r.case, r.trial, r.seed, "x".join(str(d) for d in r.dims), fmt(r.delta), fmt(r.bound),
            fmt(r.witness_t), fmt(r.deficit), r.verdict,
            fmt(r.details.get("t0_witness")), fmt(r.details.get("escalated")),
        ])
    return buf.getvalue()


def _exit_status(verdicts) -> int:
    verdicts = set(verdicts)
    if "fail" in verdicts:
        return EXIT_ERROR
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _summary(reports) -> str:
    lines = []
    for case in dict.fromkeys(r.case for r in reports):
        rs = [r for r in reports if r.case == case]
        counts = {v: sum(r.verdict == v for r in rs) for v in ("pass", "inconclusive", "fail")}
        t0 = sum(bool(r.details.get("t0_witness")) for r in rs)
        lines.append(
            f"{case:16s} trials={len(rs):4d} pass={counts['pass']:4d} "
            f"inconclusive={counts['inconclusive']:3d} fail={counts['fail']:3d} t0_witness={t0:4d}"
        )
    return "\n".join(lines)


# -- subcommands ----------------------------------------------------------


def _job(args):
    case, seed, trial, params, ts = args
    inst, rep = run_trial(case, seed, trial, params, ts)
    return case, trial, (instance_to_json(inst) if inst is not None else None), rep


def run_jobs(cfg: CampaignConfig):
    jobs = [
        (case, cfg.seed, k, {"dims": cfg.dims[case]} if case in cfg.dims else None, cfg.t_search)
        for case in cfg.cases
        for k in range(cfg.trials)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    order = {c: i for i, c in enumerate(cfg.cases)}
    results.sort(key=lambda r: (order[r[0]], r[1]))
    return results


def cmd_run(args) -> int:
    cfg = load_config(args)
    results = run_jobs(cfg)
    reports = [r[3] for r in results]
    table = reports_csv(reports)
    if cfg.out:
        out = Path(cfg.out)
        (out / "reports").mkdir(parents=True, exist_ok=True)
        (out / "instances").mkdir(exist_ok=True)
        for case, trial, inst, rep in results:
            stem = f"{case}_{trial:05d}"
            (out / "reports" / f"{stem}.json").write_text(_dump(rep.to_dict()))
            if inst is not None:
                (out / "instances" / f"{stem}.json").write_text(_dump(inst))
        (out / "summary.csv").write_text(table)
        print(str(out / "summary.csv"))
    else:
        sys.stdout.write(table)
    print(_summary(reports), file=sys.stderr)
    return _exit_status(r.verdict for r in reports)


def _load_check_instance(args) -> Instance:
    if args.instance:
        return instance_from_json(_read_json(args.instance))
    if not (args.rho and args.sigma and args.channel):
        raise UsageError("check needs --instance or all of --rho, --sigma, --channel")
    dims = tuple(_parse_list(args.dims, int, "dims")) if args.dims else ()
    return Instance(
        matrix_from_json(_read_json(args.rho)),
        matrix_from_json(_read_json(args.sigma)),
        channel_from_json(_read_json(args.channel)),
        args.case or "generic",
        dims=dims,
    )


def cmd_check(args) -> int:
    ts = TSearchConfig(
        args.t_range if args.t_range is not None else 10.0,
        args.t_points if args.t_points is not None else 401,
    )
    inst = _load_check_instance(args)
    bound = args.bound
    if bound == "auto":
        bound = {"dilated": "both", "sequential": "sequential"}.get(inst.case_tag, "lower")
    if bound == "sequential":
        rep = check_sequential(inst.rho, inst.dims, ts)
    elif bound == "upper":
        rep = check_upper(inst, ts)
    else:
        rep = check_lower(inst, ts)
        if bound == "both":
            up = check_upper(inst, ts)
            up.details["lower"] = {
                "bound": rep.bound, "witness_t": rep.witness_t, "deficit": rep.deficit, "verdict": rep.verdict,
            }
            if rep.verdict != "pass" and up.verdict == "pass":
                up.verdict = rep.verdict
            rep = up
    sys.stdout.write(_dump(rep.to_dict(with_trace=args.trace)))
    print(
        f"{rep.case} [{rep.kind}] delta={fmt(rep.delta)} bound={fmt(rep.bound)} "
        f"witness_t={fmt(rep.witness_t)} deficit={fmt(rep.deficit)} verdict={rep.verdict}",
        file=sys.stderr,
    )
    return _exit_status([rep.verdict])


def cmd_limits(args) -> int:
    cfg = load_config(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("case", "trial", "alpha", "delta_tilde", "delta", "extrapolated", "dmax", "dmax_extrapolated"))
    ok = True
    for case in cfg.cases:
        if case in FUNCTORIALITY or case == "sequential":
            raise UsageError(f"limits needs a (rho, sigma, N) case, got {case!r}")
        for k in range(cfg.trials):
            inst = build_instance(case, {"dims": cfg.dims[case]} if case in cfg.dims else None, trial_rng(cfg.seed, case, k))
            rep = check_limits(inst, cfg.alpha_grid, cfg.t_search)
            ok &= rep.chain_ok
            for a, v in zip(rep.alphas, rep.values):
                w.writerow((case, k, fmt(a), fmt(v), fmt(rep.delta), fmt(rep.extrapolated), fmt(rep.dmax), fmt(rep.dmax_extrapolated)))
            print(
                f"{case} trial {k}: delta={fmt(rep.delta)} extrapolated={fmt(rep.extrapolated)} "
                f"dmax={fmt(rep.dmax)} chain_ok={rep.chain_ok} monotone={rep.monotone}",
                file=sys.stderr,
            )
    text = buf.getvalue()
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_ERROR


def cmd_functoriality(args) -> int:
    args.case = [args.kind] if args.kind != "all" else list(FUNCTORIALITY)
    return cmd_run(args)


# -- parser ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _campaign_flags(p, with_case=True):
    if with_case:
        p.add_argument("--case", action="append", help="case tag; repeat or comma-separate")
    p.add_argument("--dims", help="comma-separated subsystem dimensions for every case")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--t-range", type=float, dest="t_range")
    p.add_argument("--t-points", type=int, dest="t_points")
    p.add_argument("--alpha-grid", dest="alpha_grid")
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recoverability", description="Verify recoverability bounds on random instances.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a seeded campaign")
    _campaign_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="check one instance from JSON files")
    p.add_argument("--instance", help="persisted instance JSON")
    p.add_argument("--rho")
    p.add_argument("--sigma")
    p.add_argument("--channel")
    p.add_argument("--case")
    p.add_argument("--dims")
    p.add_argument("--bound", choices=("auto", "lower", "upper", "both", "sequential"), default="auto")
    p.add_argument("--t-range", type=float, dest="t_range")
    p.add_argument("--t-points", type=int, dest="t_points")
    p.add_argument("--no-trace", action="store_false", dest="trace", help="omit the per-t objective trace")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("limits", help="tabulate Renyi differences against alpha")
    _campaign_flags(p)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("functoriality", help="composition identities of rotated Petz maps")
    p.add_argument("--kind", choices=FUNCTORIALITY + ("all",), default="all")
    _campaign_flags(p, with_case=False)
    p.set_defaults(func=cmd_functoriality)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"recoverability: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RecoverabilityError, ValueError, OSError) as exc:
        print(f"recoverability: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
