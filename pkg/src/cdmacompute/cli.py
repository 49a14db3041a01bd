"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 cap exceeded.
stdout carries only CSV or reports; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

import numpy as np

from . import bounds, codec, function_space as fs, gf2, source as src, sw_common, wrapped_channel as wc
from .bounds import fmt

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` inclusive of b, or a comma list, or a single value."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid {text!r} is not a:b:step")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise argparse.ArgumentTypeError(f"grid {text!r} needs a <= b and step > 0")
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return [round(a + i * step, 12) for i in range(count)]
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _csv(rows, header, out):
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _load(loader, path, what):
    try:
        return loader(path)
    except OSError as exc:
        raise ValidationError(f"cannot read {what} file {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ValidationError(f"{what} file {path}: {exc}") from None


def _require(cond: bool, msg: str):
    if not cond:
        raise ValidationError(msg)


def _check_N(N: int, H: gf2.BitMatrix):
    _require(N >= 1, "N must be positive")
    _require(
        N >= H.nrows,
        f"N={N} is below the r={H.nrows} rows of H; the construction needs signature length N > r (N = r allowed)",
    )


def _source(spec: str):
    try:
        return src.parse_source_spec(spec)
    except OSError as exc:
        raise ValidationError(f"cannot read source {spec}: {exc.strerror}") from None
    except ValueError as exc:
        raise ValidationError(f"source {spec}: {exc}") from None


# -- subcommands ---------------------------------------------------------------

def _fmt_class(members, L):
    return "{" + ",".join(f"{x:0{L}b}" for x in members) + "}"


def analyze_report(H: gf2.BitMatrix, f: fs.TruthTable) -> str:
    if f.L != H.ncols:
        raise ValidationError(f"H has {H.ncols} columns but f has L={f.L}")
    L = H.ncols
    cos = fs.coset_partition(H)
    real = fs.real_sum_partition(H)
    lines = [
        f"L: {L}",
        f"b: {f.b}",
        f"r: {H.nrows}",
        f"rank: {gf2.rank(H)}",
        f"cosets: {cos.num_classes}",
        "coset classes: " + " ".join(_fmt_class(c, L) for c in cos.classes()),
        f"real-sum classes: {real.num_classes}",
        "real-sum merged: " + (" ".join(_fmt_class(c, L) for c in real.classes() if len(c) > 1) or "none"),
        f"computable (cosets): {fs.count_computable(cos, f.b)}",
        f"computable (real sums): {fs.count_computable(real, f.b)}",
    ]
    ok, witness = fs.is_constant_on(cos, f)
    if ok:
        lines.append("coset-constant: yes")
        lines.append("lookup:")
        table = fs.coset_lookup(H, f)
        for s in sorted(table, key=lambda v: v.bits):
            bits = "".join(map(str, s))
            lines.append(f"  {bits} -> {' '.join(map(str, table[s]))}")
    else:
        a, b = witness
        lines.append(f"coset-constant: no (witness {_fmt_class([a.bits], L)[1:-1]} / {_fmt_class([b.bits], L)[1:-1]})")
    return "\n".join(lines) + "\n"


def cmd_analyze(args, out):
    H = _load(gf2.load_matrix, args.H, "matrix")
    f = _load(fs.load_truth_table, args.f, "truth table")
    _require(H.ncols <= fs.MAX_L, f"L={H.ncols} exceeds the exhaustive limit {fs.MAX_L}")
    out.write(analyze_report(H, f))


def cmd_capacity(args, out):
    _require(args.sigma >= 0, "sigma must be nonnegative")
    _require(args.r >= 1, "r must be positive")
    _require(args.N >= args.r, f"N={args.N} is below r={args.r}; the construction needs N > r (N = r allowed)")
    params = wc.ChannelParams(args.sigma, args.N, args.r)
    c = wc.capacity(params.effective_sigma)
    _csv([(params.effective_sigma, c)], ["sigma_eff", "c"], out)


def cmd_bound(args, out):
    H = _load(gf2.load_matrix, args.H, "matrix")
    _check_N(args.N, H)
    p = _source(args.source)
    _require(p.L == H.ncols, f"source has L={p.L} but H has {H.ncols} columns")
    _require((args.sigma is None) != (args.c is None), "give exactly one of --sigma and --c")
    if args.sigma is not None:
        _require(args.sigma >= 0, "sigma must be nonnegative")
    if args.c is not None:
        _require(0 < args.c <= 1, "c must lie in (0, 1]")
    reps = [
        bounds.theorem_bound(p, H, args.N, sigma=args.sigma, c=args.c, denominator=args.denominator),
        bounds.explicit_bound(p, H, args.N, sigma=args.sigma, c=args.c),
    ]
    rows = [(r.variant, r.N, r.c, r.denominator, r.bound) for r in reps]
    _csv(rows, ["variant", "N", "c", "denominator", "bound"], out)


def cmd_sweep(args, out):
    _require(args.model == "bsc-star", "only the bsc-star model is supported")
    for name, grid in (("q2", args.q2), ("q3", args.q3)):
        _require(all(0 <= q <= 1 for q in grid), f"{name} grid must lie in [0, 1]")
    _require(0 <= args.q1 <= 1, "q1 must lie in [0, 1]")
    _require(0 < args.c <= 1, "c must lie in (0, 1]")
    rows = bounds.fig3_sweep(args.q2, args.q3, args.c, q1=args.q1)
    _csv(rows, ["q2", "q3", "bound"], out)


def cmd_sw(args, out):
    p = _load(src.load_pmf, args.pmf, "pmf")
    _require(args.n >= 1, "n must be positive")
    _require(args.trials >= 1, "trials must be positive")
    _require(all(r > 0 for r in args.rates), "rates must be positive")
    _require(p.L <= sw_common.MAX_SOURCES, f"at most {sw_common.MAX_SOURCES} sources")
    _require(args.mode == "joint" or p.L == 2, "sequential mode needs exactly 2 sources")
    rows = sw_common.estimate_common_rate(p, args.n, args.trials, args.rates, args.seed, mode=args.mode)
    _csv([(r, e, t) for r, e, t in rows], ["rate", "empirical_error", "trials"], out)


def cmd_simulate(args, out):
    H = _load(gf2.load_matrix, args.H, "matrix")
    f = _load(fs.load_truth_table, args.f, "truth table")
    _check_N(args.N, H)
    p = _source(args.source)
    _require(p.L == H.ncols == f.L, "H, f and the source must agree on L")
    _require(args.sigma >= 0, "sigma must be nonnegative")
    _require(args.k >= 1 and args.trials >= 1, "k and trials must be positive")
    _require(args.eps_source >= 0 and args.eps_chan >= 0, "margins must be nonnegative")
    ok, witness = fs.is_constant_on(fs.coset_partition(H), f)
    _require(ok, "f is not constant on the cosets of H (witness "
             + " / ".join("".join(map(str, w)) for w in witness or ()) + ")")
    try:
        spec = codec.design_code(
            H, p, args.N, args.sigma, args.k, args.eps_source, args.eps_chan,
            rng=np.random.SeedSequence([args.seed, 0xC0DE]), rate_denominator=args.denominator,
        )
    except sw_common.CapExceeded:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    res = codec.monte_carlo(
        spec, p, f, args.trials, args.seed, fresh_codes=args.fresh_codes, rate_denominator=args.denominator
    )
    out.write(
        f"# k={spec.k} m={spec.m} n={spec.n} N={spec.N} r={spec.r} "
        f"errors={res.errors}/{res.trials} fresh_codes={'yes' if args.fresh_codes else 'no'}\n"
    )
    row = (args.N, args.sigma, res.sigma_eff, res.c, res.rate, res.bound, res.block_error_rate, res.trials)
    _csv([row], ["N", "sigma", "sigma_eff", "c", "rate", "bound", "error_rate", "trials"], out)


# -- parser / config -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cdmacompute", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--config", help="flat 'key = value' file; flags override it")
        sp.set_defaults(func=func)
        return sp

    a = add("analyze", cmd_analyze, "coset / real-sum analysis of H and f")
    a.add_argument("--H", required=True)
    a.add_argument("--f", required=True)

    c = add("capacity", cmd_capacity, "capacity of the folded channel")
    c.add_argument("--sigma", type=float, required=True)
    c.add_argument("--N", type=int, default=1)
    c.add_argument("--r", type=int, default=1)

    b = add("bound", cmd_bound, "achievable-rate lower bounds")
    b.add_argument("--H", required=True)
    b.add_argument("--source", required=True)
    b.add_argument("--N", type=int, required=True)
    b.add_argument("--sigma", type=float)
    b.add_argument("--c", type=float)
    b.add_argument("--denominator", type=float, help="override the common-matrix SW rate")

    s = add("sweep", cmd_sweep, "BSC-star bound over a (q2, q3) grid")
    s.add_argument("--model", default="bsc-star")
    s.add_argument("--q1", type=float, default=0.0)
    s.add_argument("--q2", type=parse_grid, required=True)
    s.add_argument("--q3", type=parse_grid, required=True)
    s.add_argument("--c", type=float, default=0.5)

    w = add("sw", cmd_sw, "empirical common-matrix Slepian-Wolf error vs rate")
    w.add_argument("--pmf", required=True)
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--rates", type=parse_grid, required=True)
    w.add_argument("--trials", type=int, default=100)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--mode", choices=["joint", "sequential"], default="joint")

    m = add("simulate", cmd_simulate, "end-to-end Monte Carlo of the full scheme")
    m.add_argument("--H", required=True)
    m.add_argument("--f", required=True)
    m.add_argument("--source", required=True)
    m.add_argument("--N", type=int, required=True)
    m.add_argument("--sigma", type=float, required=True)
    m.add_argument("--k", type=int, required=True)
    m.add_argument("--trials", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--eps-source", type=float, default=0.0)
    m.add_argument("--eps-chan", type=float, default=0.0)
    m.add_argument("--denominator", type=float, help="override the common-matrix SW rate")
    m.add_argument("--fresh-codes", action="store_true", help="redraw B and G every trial")
    return p


def read_config(path: str) -> dict[str, str]:
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


def _subparser(parser, name):
    """The subcommand parser for ``name``, or the subparsers action when name is None."""
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action if name is None else action.choices[name]
    raise KeyError(name)


def _config_path(argv: Sequence[str]) -> str | None:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    return known.config


def parse_args(argv: Sequence[str]):
    parser = build_parser()
    if not argv or argv[0] not in _subparser(parser, None).choices:
        return parser.parse_args(argv)
    path = _config_path(argv)
    if path:
        try:
            cfg = read_config(path)
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
        command = argv[0]
        sp = _subparser(parser, command)
        known = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in cfg.items():
            if key not in known or key in ("help", "config", "func"):
                raise UsageError(f"unknown config key {key!r} for {command}")
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                conv = action.type or str
                try:
                    defaults[key] = conv(value)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise ValidationError(f"config key {key}: {exc}") from None
            action.required = False
        sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = parse_args(list(sys.argv[1:] if argv is None else argv))
        args.func(args, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except ValidationError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID
    except sw_common.CapExceeded as exc:
        err.write(f"cap exceeded: {exc}\n")
        return EXIT_CAP
    except fs.NotCosetConstant as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
