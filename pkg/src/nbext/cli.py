"""Command-line entry point: ``nbext <command> [options]``.

Every command that writes results also writes ``<out>.echo`` holding the
full configuration; ``nbext rerun <out>.echo`` repeats the run.
"""

from __future__ import annotations

import argparse
import logging
import shlex
import sys
from pathlib import Path

from . import harness
from .code import MOTHER_CODE, DegreeDistribution, peg_construct, read_code, write_code
from .density import DEConfig, EnsembleSpec, threshold, write_trace
from .distribution import ExtendingDistribution, clustering_from, read_distribution, spreading_from
from .extension import DMIN, RANDOM, ExtensionMatrix, expected_eligible, select_extension
from .gf import field
from .optimizer import OptConfig, optimize, write_result

log = logging.getLogger("nbext")


def _dd(args) -> DegreeDistribution:
    if getattr(args, "regular", None):
        dv, dc = (int(x) for x in args.regular.split(","))
        return DegreeDistribution.regular(dv, dc)
    if getattr(args, "dd", None):
        return DegreeDistribution.parse(Path(args.dd).read_text())
    return MOTHER_CODE


def _de_config(args) -> DEConfig:
    return DEConfig(population_size=args.population_size, max_iters=args.max_iters,
                    success_tol=args.success_tol, bisection_tol=args.bisection_tol,
                    seed=args.seed, stall_iters=args.stall_iters)


def _ints(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ":" in part:
            lo, hi = (int(x) for x in part.split(":"))
            out += list(range(lo, hi + 1))
        elif part.strip():
            out.append(int(part))
    return out


def _finish(args, rows, command):
    harness.write_csv(args.out, rows)
    harness.write_echo(args.out, command, _params(args), args.argv)
    print(f"wrote {args.out} ({len(rows)} rows)")


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "argv", "verbose")}


# ---------------------------------------------------------------------------
# commands


def cmd_build_code(args):
    gf = field(args.field)
    code = peg_construct(_dd(args), args.n, gf, args.seed)
    write_code(code, args.out)
    harness.write_echo(args.out, "build-code", _params(args), args.argv)
    print(f"wrote {args.out}: N={code.N} M={code.M} K={code.K} rate={code.rate:.6f}")


def cmd_select_ext(args):
    gf = field(args.field)
    rows = []
    for k in _ints(args.k):
        rep = select_extension(gf, k)
        A = rep.matrix
        rows.append(dict(k=k, columns=" ".join(map(str, A.columns)), dmin=rep.dmin,
                         **{f"E_{e}": expected_eligible(A, e) for e in (0.25, 0.5, 0.75)}))
    _finish(args, rows, "select-ext")


def _cases(args, dd, gf):
    sels = [DMIN, RANDOM] if args.selection == "both" else [args.selection]
    if args.columns:
        # one explicit matrix for every extended node
        A = ExtensionMatrix.with_extra(gf, [int(c) for c in args.columns.split(",")], strict=False)
        table = {(d, A.k_ext): A for d in dd.lam}
        dist = ExtendingDistribution(gf, {(d, A.k_ext): 1.0 for d in dd.lam})
        return [harness.EnsembleCase(f"columns={args.columns}", EnsembleSpec(dd, gf, dist, table), str(A.k_ext))]
    if args.k:
        return harness.fixed_k_cases(dd, gf, _ints(args.k), args.rate, sels)
    if args.dist:
        dist = read_distribution(args.dist, gf)
    elif args.spread is not None or args.cluster is not None:
        make, f = (spreading_from, args.spread) if args.spread is not None else (clustering_from, args.cluster)
        dist = make(gf, {d: f for d in dd.lam})
    else:
        dist = None
    return [harness.EnsembleCase(sel, EnsembleSpec(dd, gf, dist, sel)) for sel in sels]


def cmd_threshold(args):
    gf = field(args.field)
    dd = _dd(args)
    cfg = _de_config(args)
    cases = _cases(args, dd, gf)
    if args.trace and len(cases) == 1:
        res = threshold(cases[0].spec, cfg)
        write_trace(res, args.trace)
    rows = harness.threshold_rows(cases, cfg, args.seeds, progress=_report)
    _finish(args, rows, "threshold")


def cmd_optimize(args):
    gf = field(args.field)
    dd = _dd(args)
    cfg = OptConfig(population=args.np, weight=args.weight, crossover=args.crossover,
                    generations=args.generations, de_config=_de_config(args), seed=args.seed)
    res = optimize(dd, gf, args.rate, cfg, progress=lambda g, t: print(f"generation {g}: threshold {t:.4f}"))
    echo = sorted(_params(args).items())
    write_result(res, args.out, echo)
    harness.write_echo(args.out, "optimize", _params(args), args.argv)
    print(_summary(res))


def _summary(res) -> str:
    f = " ".join(f"f_{d}={v:.4f}" for d, v in zip(res.best.degrees, res.best.f))
    return f"r_e={res.rate:.4f} threshold={res.best.threshold:.4f} gap={res.best.gap:.4f} {f}"


def cmd_ber_sweep(args):
    code = read_code(args.code)
    gf = code.field
    if args.dist:
        dist = read_distribution(args.dist, gf)
    else:
        dist = ExtendingDistribution.none(gf, sorted(set(int(d) for d in code.graph.symbol_degrees)))
    rows = harness.run_ber_sweep(code, dist, harness.parse_grid(args.eps_grid), args.trials, args.seed,
                                 args.selection, args.max_iters, progress=_report)
    _finish(args, rows, "ber-sweep")


def cmd_table1(args):
    gf = field(args.field)
    dd = _dd(args)
    cfg = OptConfig(population=args.np, generations=args.generations, de_config=_de_config(args), seed=args.seed)
    given = None
    if args.given:
        given = {}
        for line in Path(args.given).read_text().splitlines():
            line = line.split("#", 1)[0].split()
            if line:
                r, *fs = line
                given[float(r)] = dict(zip(dd.symbol_degrees, map(float, fs)))
    rates = [float(x) for x in args.rates.split(",")] if args.rates else harness.TABLE1_RATES
    rows = harness.run_table1(dd, gf, rates, cfg, given, progress=_report, seeds=args.seeds)
    _finish(args, rows, "table1")


def cmd_plot_data(args):
    path = harness.emit_plot_data(args.inputs, args.out, args.x, args.y, args.by)
    print(f"wrote {path}")


def cmd_rerun(args):
    echo = harness.read_echo(args.echo)
    if "argv" not in echo:
        raise SystemExit(f"{args.echo}: no argv line")
    return main(shlex.split(echo["argv"]))


def _report(row):
    print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()), flush=True)


# ---------------------------------------------------------------------------
# parser


def _common(p, out_required=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--field", type=int, default=4, help="p, for GF(2^p)")
    p.add_argument("--out", required=out_required)


def _ensemble(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dd", help="degree-polynomial file ('lambda d coeff' / 'rho d coeff' lines)")
    g.add_argument("--regular", help="dv,dc for a regular ensemble")


def _de(p):
    p.add_argument("--population-size", type=int, default=10_000)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--success-tol", type=float, default=1e-3)
    p.add_argument("--bisection-tol", type=float, default=1e-3)
    p.add_argument("--stall-iters", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nbext", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-code", help="PEG-construct a code and write it as a labeled alist file")
    _common(p); _ensemble(p)
    p.add_argument("--n", type=int, required=True, help="number of symbol nodes")
    p.set_defaults(func=cmd_build_code)

    p = sub.add_parser("select-ext", help="dmin-optimal extension matrices")
    _common(p)
    p.add_argument("--k", default="1:4", help="extension counts, e.g. 1:4 or 1,3")
    p.set_defaults(func=cmd_select_ext)

    p = sub.add_parser("threshold", help="density-evolution thresholds")
    _common(p); _ensemble(p); _de(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dist", help="extending-distribution file")
    g.add_argument("--spread", type=float, help="spreading with f_d equal for all degrees")
    g.add_argument("--cluster", type=float, help="clustering with f_d equal for all degrees")
    g.add_argument("--k", help="fixed extension counts (all nodes, or a fraction reaching --rate)")
    g.add_argument("--columns", help="explicit extra columns for every node, e.g. 15 or 1")
    p.add_argument("--rate", type=float, help="target extended rate for --k")
    p.add_argument("--selection", choices=[DMIN, RANDOM, "both"], default=DMIN)
    p.add_argument("--seeds", type=int, default=1, help="independent DE seeds to average")
    p.add_argument("--trace", help="CSV of the bisection trace (single case only)")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("optimize", help="optimize a spreading distribution for a target rate")
    _common(p); _ensemble(p); _de(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--np", type=int, default=40)
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--weight", type=float, default=0.5)
    p.add_argument("--crossover", type=float, default=0.9)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("ber-sweep", help="finite-length bit erasure rate over an erasure grid")
    _common(p)
    p.add_argument("--code", required=True)
    p.add_argument("--dist")
    p.add_argument("--eps-grid", required=True, help="lo:hi:step or a comma list")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--selection", choices=[DMIN, RANDOM], default=DMIN)
    p.add_argument("--max-iters", type=int, default=200)
    p.set_defaults(func=cmd_ber_sweep)

    p = sub.add_parser("table1", help="optimized distributions across extended rates")
    _common(p); _ensemble(p); _de(p)
    p.add_argument("--rates", help="comma list of extended rates")
    p.add_argument("--given", help="file of 'r_e f_d1 f_d2 ...' lines to evaluate instead of optimizing")
    p.add_argument("--np", type=int, default=40)
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--seeds", type=int, default=1, help="DE seeds per threshold")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("plot-data", help="split result CSVs into plot series with a manifest")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--by")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("rerun", help="repeat a run from its echo file")
    p.add_argument("echo")
    p.set_defaults(func=cmd_rerun)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"nbext: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
