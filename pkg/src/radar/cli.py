"""Command-line entry point: analyze, generate, bench and inspect."""

from __future__ import annotations

import argparse
import csv
import os
import sys

from radar.errors import (
    AnalysisError,
    ConfigError,
    IoError,
    ModelError,
    RadarError,
    SemanticError,
    SourceError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_ANALYSIS = 3
DEFAULT_N = 10_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; that code is reserved for model errors
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def load_model(path):
    """Read, tokenize, parse and analyze a model file.

    Errors keep their position and gain a ``path`` attribute.
    """
    from radar.language import load_source

    try:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        err = IoError(f"cannot read model file: {exc.strerror or exc}" if isinstance(exc, OSError)
                      else f"model file is not UTF-8 text: {exc}")
        err.path = str(path)
        raise err from exc
    try:
        return load_source(source)
    except ModelError as exc:
        exc.path = str(path)
        raise


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text):
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None


def _default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _resolve_seed(value):
    if value is not None:
        return value
    env = os.environ.get("RADAR_SEED")
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise UsageError(f"RADAR_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    from radar.designspace import DEFAULT_CAP
    from radar.simulation.engine import AUTO, FULL, STREAMING

    parser = _Parser(prog="radar", description="Multi-objective decision analysis under uncertainty.")
    sub = parser.add_subparsers(dest="command", metavar="{analyze,generate,bench,inspect}",
                                parser_class=_Parser)
    sub.required = True

    a = sub.add_parser("analyze", help="simulate a model, shortlist and compute value of information",
                       description="Enumerate the design space, simulate every solution, shortlist "
                                   "the Pareto front and report EVTPI/EVPPI.")
    a.add_argument("model", help="path to a .rdr model file")
    a.add_argument("--N", type=_positive_int, default=DEFAULT_N,
                   help=f"Monte Carlo runs per solution (default {DEFAULT_N})")
    a.add_argument("--seed", type=_seed, default=None,
                   help="root random seed (default: $RADAR_SEED, else 0)")
    a.add_argument("--mode", choices=(AUTO, FULL, STREAMING), default=AUTO,
                   help="keep all draws (full), keep means only (streaming) or choose by size (auto)")
    a.add_argument("--bin-count", type=_positive_int, default=None,
                   help="EVPPI bins (default ceil(sqrt(N)))")
    a.add_argument("--voi-objective", action="append", default=None, metavar="NAME",
                   help="objective to compute VoI for; repeatable (default: first declared)")
    a.add_argument("--csv-dir", default=None, metavar="DIR",
                   help="write front.csv, voi.csv and means.csv to DIR")
    a.add_argument("--dump-nb", action="store_true",
                   help="with --csv-dir, also write nb_<objective>.csv (one row per run)")
    a.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP,
                   help=f"largest design space to enumerate (default {DEFAULT_CAP})")
    a.add_argument("--workers", type=_positive_int, default=None,
                   help="simulation threads (default: available CPUs; 1 = sequential)")
    a.add_argument("--time-budget", type=float, default=None, metavar="SECONDS",
                   help="abort with exit code 3 after this wall-clock time")

    g = sub.add_parser("generate", help="write random synthetic models",
                       description="Write one random model, or one per row of a suite plan.")
    g.add_argument("out", nargs="?", help="output .rdr file (or directory with --suite)")
    g.add_argument("--objectives", type=int, default=1)
    g.add_argument("--decisions", type=int, default=0)
    g.add_argument("--options", type=int, default=2, help="options per decision")
    g.add_argument("--min-vars", type=int, default=0, help="minimum number of model variables")
    g.add_argument("--deps", action="store_true", help="nest some decisions inside others")
    g.add_argument("--seed", type=_seed, default=None,
                   help="generator seed (default: $RADAR_SEED, else 0)")
    g.add_argument("--suite", default=None, metavar="PLAN_CSV",
                   help="CSV rows of objectives,decisions,options,min_vars,deps,seed; "
                        "one model is written per row into the output directory")

    b = sub.add_parser("bench", help="run the scaling experiments",
                       description="Measure time and memory per analysis step and fit linear models.")
    b.add_argument("--rq", choices=("1", "2", "3", "4", "all"), default="all",
                   help="experiment to run (4 reuses the 2 and 3 workloads)")
    b.add_argument("--scale", choices=("desk", "paper"), default="desk",
                   help="desk shrinks N and design-space sizes so the suite fits on a laptop")
    b.add_argument("--out", default="bench-out", metavar="DIR",
                   help="directory for rqN.csv and report.md (default bench-out)")
    b.add_argument("--seed", type=_seed, default=None,
                   help="generator and simulation seed (default: $RADAR_SEED, else 0)")
    b.add_argument("--workers", type=_positive_int, default=1,
                   help="simulation threads inside each measured run (default 1)")
    b.add_argument("--repeats", type=_positive_int, default=None,
                   help="timed runs per point (default depends on scale)")
    b.add_argument("--time-budget", type=float, default=None, metavar="SECONDS",
                   help="per-point wall-clock limit (default 3600)")

    i = sub.add_parser("inspect", help="describe a model without simulating it",
                       description="Print decisions, dependency edges, design-space size and node count.")
    i.add_argument("model", help="path to a .rdr model file")
    i.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP,
                   help="warn when the design space exceeds this size")
    return parser


def _fmt(value) -> str:
    # 17 significant digits round-trip every double
    return format(float(value), ".17g")


def _table(header, rows):
    cols = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cols) for k in range(len(header))]
    out = []
    for n, r in enumerate(cols):
        out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if n == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out)


def _solution_rows(result, indices):
    ds = result.design_space
    for s in indices:
        row = ds.choices[s]
        yield s, [d.options[k] if k >= 0 else "" for d, k in zip(ds.decisions, row.tolist())], result.means[s]


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_analysis_csvs(result, model, out_dir):
    names = [o.name for o in model.objectives]
    header = ["solution"] + [d.name for d in result.design_space.decisions] + names
    front = set(result.front.indices)

    def rows(indices, flag):
        for s, opts, means in _solution_rows(result, indices):
            extra = [int(s in front)] if flag else []
            yield [s] + opts + [_fmt(v) for v in means] + extra

    _write_csv(os.path.join(out_dir, "means.csv"), header + ["pareto"],
               rows(range(result.design_space.size), True))
    _write_csv(os.path.join(out_dir, "front.csv"), header, rows(result.front.indices, False))
    voi_rows = []
    for rep in result.voi:
        voi_rows.append([rep.objective, "EVTPI", "", _fmt(rep.evtpi), _fmt(rep.evtpi),
                         rep.N, rep.S, rep.bin_count])
        for name, raw, clamped in rep.ranked():
            voi_rows.append([rep.objective, "EVPPI", name, _fmt(raw), _fmt(clamped),
                             rep.N, rep.S, rep.bin_count])
    _write_csv(os.path.join(out_dir, "voi.csv"),
               ["objective", "measure", "parameter", "raw", "clamped", "N", "shortlist", "bin_count"],
               voi_rows)


def write_nb_csv(nb, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run"] + list(nb.solution_ids))
        for i, row in enumerate(nb.values):
            writer.writerow([i] + [_fmt(v) for v in row])


def _cmd_analyze(args, out):
    from radar.analysis import AnalysisConfig, run_analysis
    from radar.simulation.rng import RandomPlan

    seed = _resolve_seed(args.seed)
    if args.time_budget is not None and args.time_budget <= 0:
        raise UsageError("--time-budget must be positive")
    if args.dump_nb and args.csv_dir is None:
        raise UsageError("--dump-nb needs --csv-dir")
    if args.csv_dir is not None:
        if os.path.exists(args.csv_dir) and not os.path.isdir(args.csv_dir):
            raise UsageError(f"--csv-dir {args.csv_dir!r} exists and is not a directory")
    model = load_model(args.model)
    if args.csv_dir is not None:
        try:
            os.makedirs(args.csv_dir, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create --csv-dir {args.csv_dir!r}: {exc.strerror}") from None
    config = AnalysisConfig(mode=args.mode, workers=args.workers or _default_workers(),
                            bin_count=args.bin_count, voi_objectives=args.voi_objective,
                            cap=args.cap, time_budget=args.time_budget)
    result = run_analysis(model, RandomPlan(seed, args.N), config)

    dec_names = [d.name for d in result.design_space.decisions]
    print(f"Model {model.ast.name}: |DS| = {result.design_space.size}, N = {args.N}, seed = {seed}, "
          f"mode = {result.simulation.mode}", file=out)
    print(f"\nPareto shortlist ({len(result.front)} of {result.design_space.size} solutions)", file=out)
    header = ["#"] + dec_names + [f"{o.direction} EV({o.name})" for o in model.objectives]
    rows = [[s] + [o or "-" for o in opts] + [f"{v:.6g}" for v in means]
            for s, opts, means in _solution_rows(result, result.front.indices)]
    print(_table(header, rows), file=out)
    for rep in result.voi:
        print(f"\nValue of information for {rep.objective} (shortlist {rep.S}, "
              f"{rep.bin_count} bins)", file=out)
        vrows = [["EVTPI", "", f"{rep.evtpi:.6g}", f"{rep.evtpi:.6g}"]]
        vrows += [["EVPPI", name, f"{raw:.6g}", f"{clamped:.6g}"] for name, raw, clamped in rep.ranked()]
        print(_table(["measure", "parameter", "raw", "clamped"], vrows), file=out)
    if args.csv_dir is not None:
        write_analysis_csvs(result, model, args.csv_dir)
        if args.dump_nb:
            from radar.simulation.engine import nb_matrix

            for rep in result.voi:
                nb = nb_matrix(model, result.front.indices, result.simulation.plan, rep.objective,
                               result=result.simulation, workers=config.workers)
                write_nb_csv(nb, os.path.join(args.csv_dir, f"nb_{rep.objective}.csv"))
        print(f"\nwrote front.csv, voi.csv, means.csv to {args.csv_dir}", file=out)
    return EXIT_OK


def _read_suite(path):
    from radar.generator import GeneratorConfig

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise UsageError(f"cannot read suite plan {path!r}: {exc.strerror}") from None
    if rows and not rows[0][0].strip().lstrip("+-").isdigit():
        rows = rows[1:]  # header
    configs = []
    for n, row in enumerate(rows, 1):
        if len(row) != 6:
            raise UsageError(f"{path}: row {n}: expected 6 columns "
                             f"(objectives,decisions,options,min_vars,deps,seed), got {len(row)}")
        try:
            k, d, o, v, seed = (int(row[j].strip(), 0) for j in (0, 1, 2, 3, 5))
        except ValueError:
            raise UsageError(f"{path}: row {n}: non-integer field") from None
        deps = row[4].strip().lower()
        if deps not in ("0", "1", "true", "false", "yes", "no"):
            raise UsageError(f"{path}: row {n}: deps must be 0/1 or true/false, got {row[4]!r}")
        configs.append(GeneratorConfig(k, d, o, v, deps in ("1", "true", "yes"), seed).validate())
    return configs


def _cmd_generate(args, out):
    from radar.generator import GeneratorConfig, generate, generate_suite
    from radar.language import pretty_print

    if args.suite is not None:
        out_dir = args.out or "."
        if os.path.exists(out_dir) and not os.path.isdir(out_dir):
            raise UsageError(f"{out_dir!r} is not a directory")
        configs = _read_suite(args.suite)
        os.makedirs(out_dir, exist_ok=True)
        for n, (config, ast, size) in enumerate(generate_suite(configs), 1):
            path = os.path.join(out_dir, f"model_{n:04d}.rdr")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(pretty_print(ast))
            print(f"{path}: |DS| = {size}", file=out)
        return EXIT_OK
    if not args.out:
        raise UsageError("generate needs an output path")
    config = GeneratorConfig(args.objectives, args.decisions, args.options, args.min_vars,
                             args.deps, _resolve_seed(args.seed)).validate()
    ast = generate(config)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(pretty_print(ast))
    print(f"wrote {args.out}", file=out)
    return EXIT_OK


def _cmd_bench(args, out):
    from radar.benchmark import DEFAULT_TIME_BUDGET, render_markdown, run_suite, write_report

    if os.path.exists(args.out) and not os.path.isdir(args.out):
        raise UsageError(f"--out {args.out!r} is not a directory")
    rqs = ("1", "2", "3", "4") if args.rq == "all" else (args.rq,)
    report = run_suite(rqs, args.scale, _resolve_seed(args.seed), args.workers,
                       args.time_budget or DEFAULT_TIME_BUDGET, args.repeats)
    write_report(report, args.out)
    print(render_markdown(report), file=out)
    return EXIT_OK


def _cmd_inspect(args, out):
    from radar.designspace import size_without_enumeration

    model = load_model(args.model)
    size = size_without_enumeration(model)
    print(f"Model {model.ast.name}", file=out)
    print(f"node count m = {model.node_count}", file=out)
    print(f"|DS| = {size}", file=out)
    print("\nObjectives", file=out)
    print(_table(["name", "direction", "variable"],
                 [[o.name, o.direction, o.target] for o in model.objectives]), file=out)
    print("\nDecisions", file=out)
    rows = []
    for d in model.decisions:
        parent = model.parents.get(d.name)
        rows.append([d.name, len(d.options), ", ".join(d.options),
                     f"{parent[0]} in {{{', '.join(parent[1])}}}" if parent else "-"])
    print(_table(["name", "#", "options", "active when"], rows), file=out)
    print("\nDependency edges", file=out)
    for outer, opt, inner in model.dependency_edges:
        print(f"  {outer}.{opt} -> {inner}", file=out)
    if not model.dependency_edges:
        print("  (none)", file=out)
    print(f"\nParameters: {', '.join(model.parameters) or '(none)'}", file=out)
    if size > args.cap:
        print(f"radar: warning: design space of {size} solutions exceeds the cap of {args.cap}; "
              "analyze would refuse to enumerate it", file=sys.stderr)
    return EXIT_OK


def render_error(exc) -> str:
    """One greppable line, ``radar: error[Kind] where: message``, then any detail lines."""
    path = getattr(exc, "path", None)
    if isinstance(exc, SemanticError):
        where = f"{path}:{exc.line}:{exc.col}" if path else f"{exc.line}:{exc.col}"
        first = exc.issues[0][0]
        lines = [f"radar: error[{exc.kind}] {where}: {first}"]
        for msg, line, col in exc.issues[1:]:
            lines.append(f"  also {path + ':' if path else ''}{line}:{col}: {msg}")
        return "\n".join(lines)
    if isinstance(exc, SourceError):
        where = f"{path}:{exc.line}:{exc.col}" if path else f"{exc.line}:{exc.col}"
        return f"radar: error[{exc.kind}] {where}: {exc.message}"
    if isinstance(exc, IoError):
        return f"radar: error[{exc.kind}] {path}: {exc}"
    kind = getattr(exc, "kind", type(exc).__name__)
    return f"radar: error[{kind}] {exc}"


_COMMANDS = {"analyze": _cmd_analyze, "generate": _cmd_generate, "bench": _cmd_bench,
             "inspect": _cmd_inspect}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"radar: error[UsageError] {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(render_error(exc), file=sys.stderr)
        return EXIT_MODEL
    except AnalysisError as exc:
        print(render_error(exc), file=sys.stderr)
        return EXIT_ANALYSIS
    except (ConfigError, RadarError) as exc:
        print(render_error(exc), file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"radar: error[IoError] {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
