"""``lowtrot`` command line.

Exit codes: 0 success, 1 usage or runtime error, 2 at least one bound violated.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bounds
from .formulas import apply_formula, planning_schedule, save_schedule, suzuki_schedule
from .hamiltonian import GALLERY, load_spec, model_gallery, parameters, save_spec
from .lab import measure
from .lab.model import DenseModel, gallery_model
from .lab.plan import plan_compare
from .lab.plot import write_plot
from .lab.records import ExperimentRecord, summarize, write_records
from .lab.sweep import ConfigError, SweepConfig, sweep
from .linalg import expm_i, write_dump

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _couplings(text: str | None) -> dict:
    if not text:
        return {}
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        v = value.strip()
        out[key.strip()] = {"true": True, "false": False}.get(v.lower(), None)
        if out[key.strip()] is None:
            out[key.strip()] = float(v) if any(c in v for c in ".eE") else int(v)
    return out


def _model_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", "--name", dest="model", required=required, help=f"gallery name ({', '.join(GALLERY)}) or spec JSON path")
    g.add_argument("--n", type=int, help="number of sites (gallery models)")
    g.add_argument("--couplings", help='"J=1,h=0.5" or a JSON object')
    g.add_argument("--seed", type=int, help="seed for random models")
    g.add_argument("--shift-mode", choices=("per_term", "per_layer"), default="per_term")


def _out_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="directory for machine-readable records")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--svg", action="store_true", help="also write log-log SVG plots")


def _spec(args):
    if Path(args.model).is_file():
        return load_spec(args.model)
    if args.model not in GALLERY:
        raise ValueError(f"model {args.model!r} is neither a gallery name nor an existing spec file")
    if args.n is None:
        raise ValueError("--n is required for gallery models")
    return model_gallery(args.model, args.n, _couplings(args.couplings), seed=args.seed, shift_mode=args.shift_mode)


def _dense(args) -> DenseModel:
    if args.model in GALLERY and args.shift_mode == "per_term" and args.n is not None:
        return gallery_model(args.model, args.n, _couplings(args.couplings), args.seed)
    return DenseModel(_spec(args), seed=args.seed)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "NO"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _print_records(records: list[ExperimentRecord]) -> None:
    cols = ("kind", "p", "s", "delta", "lambda_lo", "lambda_hi", "delta_prime", "measured", "bound", "satisfied")
    rows = [[_fmt(r.row()[c]) for c in cols] for r in records]
    widths = [max(len(c), *(len(row[i]) for row in rows)) if rows else len(c) for i, c in enumerate(cols)]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    for row in rows:
        print("  ".join(x.ljust(w) for x, w in zip(row, widths)))


def _finish(records: list[ExperimentRecord], args, stem: str) -> int:
    _print_records(records)
    summary = summarize(records)
    print(f"{summary['records']} records, {summary['violations']} violations")
    if args.out:
        for path in write_records(records, args.out, stem, args.format):
            print(f"wrote {path}")
    return EXIT_VIOLATION if summary["violations"] else EXIT_OK


# --- subcommands -------------------------------------------------------------


def cmd_model(args) -> int:
    spec = _spec(args)
    params = parameters(spec)
    info = {"model": spec.name, "N": params.N, "k": params.k, "d": params.d, "J": params.J,
            "M": params.M, "L": params.L, "lambda": params.lam, "terms": len(spec.terms),
            "shift_mode": spec.shift_mode, "one_norm": bounds.one_norm(spec),
            "induced_one_norm": bounds.induced_one_norm(spec)}
    if args.spectrum:
        m = DenseModel(spec, seed=args.seed)
        info.update(E0=m.E0, Emax=m.Emax)
    for key, value in info.items():
        print(f"{key:18s} {_fmt(value)}")
    if args.out:
        # a .json target is the spec file itself, anything else a directory
        target = Path(args.out)
        out = target.parent if target.suffix == ".json" else target
        spec_path = target if target.suffix == ".json" else out / "spec.json"
        out.mkdir(parents=True, exist_ok=True)
        save_spec(spec, spec_path)
        print(f"wrote {spec_path}")
        if args.p:
            sched_path = out / f"schedule_p{args.p}.json"
            save_schedule(suzuki_schedule(args.p, spec.n_layers), sched_path)
            print(f"wrote {sched_path}")
    return EXIT_OK


def cmd_leakage(args) -> int:
    m = _dense(args)
    layers = range(len(m.layers)) if args.layer is None and args.all_layers else [args.layer or 0]
    lo = m.resolve(args.lo)
    hi = m.resolve(args.hi, lo)
    records = []
    for l in layers:
        if args.cutoff is not None:
            cut = m.resolve(args.cutoff, hi)
            records.append(measure.measure_effective_leakage(m, l, args.s, lo, hi, cut, args.which))
        elif args.moment is not None:
            records.append(measure.measure_moment_leakage(m, l, args.moment, lo, hi))
        else:
            records.append(measure.measure_leakage(m, l, args.s, lo, hi))
    return _finish(records, args, "leakage")


def cmd_error(args) -> int:
    m = _dense(args)
    sched = suzuki_schedule(args.p, len(m.layers))
    Delta = m.resolve(args.delta)
    restrictions = ("low_energy", "full") if args.restriction == "both" else (args.restriction,)
    records = [measure.measure_formula_error(m, sched, args.s, Delta, r, gamma_tilde=args.gamma_tilde,
                                             with_log_term=not args.no_log_term) for r in restrictions]
    for r in records:
        print(f"identity residual ({r.info['restriction']}): {r.info['identity_residual']:.3e}")
    return _finish(records, args, "error")


def cmd_corollary(args) -> int:
    m = _dense(args)
    sched = suzuki_schedule(args.p, len(m.layers))
    Delta = m.resolve(args.delta)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", measure.VacuousLadderWarning)
        records = measure.corollary_checks(m, sched, args.s, Delta, args.budget)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.which != "all":
        records = [records[int(args.which) - 1]]
    return _finish(records, args, "corollary")


def cmd_fit(args) -> int:
    m = _dense(args)
    sched = suzuki_schedule(args.p, len(m.layers))
    grid = np.geomspace(args.s_min, args.s_max, args.points)
    Delta = m.resolve(args.delta) if args.delta is not None else None
    restriction = "low_energy" if Delta is not None else "full"
    rec, fit = measure.order_fit_record(m, sched, grid, Delta, "full")
    records, series = [rec], {"full": (fit.s, fit.errors)}
    print(f"full       slope {fit.slope:.4f}  r2 {fit.r2:.6f}  points {fit.points}  window {fit.window}")
    if restriction == "low_energy":
        low_rec, low = measure.order_fit_record(m, sched, grid, Delta, "low_energy", reference=fit.slope)
        records.append(low_rec)
        series["low_energy"] = (low.s, low.errors)
        print(f"low_energy slope {low.slope:.4f}  r2 {low.r2:.6f}  points {low.points}  window {low.window}")
    if args.out:
        for path in write_plot(series, args.out, "fit", svg=args.svg, title=f"order {args.p}",
                               xlabel="s", ylabel="error"):
            print(f"wrote {path}")
    return _finish(records, args, "fit")


def cmd_plan(args) -> int:
    if args.spec:
        spec = load_spec(args.spec)
    elif args.model:
        spec = _spec(args)
    else:
        raise ValueError("plan needs --spec or --model")
    if args.compare:
        n_grid = args.n_grid or [int(x) for x in np.geomspace(1e2, 1e6, 9)]
        table = plan_compare(spec, args.t, args.eps, args.delta, args.p, n_grid, gamma_tilde=args.gamma_tilde)
        print(json.dumps({"exponents": table.exponents, "crossovers": table.crossovers}, indent=2, default=str))
        if args.out:
            records = table.to_records(spec.name)
            for path in write_records(records, args.out, "plan", args.format):
                print(f"wrote {path}")
            for p in args.p:
                rows = [r for r in table.rows if r["p"] == p and r["t"] == args.t[0] and r["eps"] == args.eps[0]]
                xs = [r["N"] for r in rows]
                series = {"r": (xs, [r["r"] for r in rows]), "r_grouped": (xs, [r["r_grouped"] for r in rows]),
                          "r_prior": (xs, [r["r_prior"] for r in rows])}
                for path in write_plot(series, args.out, f"plan_p{p}", svg=args.svg, title=f"order {p}",
                                       xlabel="N", ylabel="Trotter number"):
                    print(f"wrote {path}")
        return EXIT_OK
    params = parameters(spec)
    if args.n_grid:
        params = params.scaled_to(args.n_grid[0])
    out = []
    for p in args.p:
        for t in args.t:
            for eps in args.eps:
                sched = planning_schedule(p, params.L)
                inputs = bounds.BoundInputs(params.with_schedule(sched), p=p, Delta=args.delta, t=t, eps=eps,
                                            gamma_tilde=args.gamma_tilde)
                res = bounds.trotter_number(inputs)
                one = bounds.one_norm(spec) * params.N / spec.n_sites
                ind = bounds.induced_one_norm(spec)
                res = replace(res, r_prior=bounds.prior_from_norms(one, ind, t, eps, p), norms=(one, ind),
                              r_grouped=bounds.grouped_trotter_number(inputs) if args.grouped else None)
                out.append({"p": p, "t": t, "eps": eps, "Delta": args.delta, "N": params.N, **res.to_dict()})
    print(json.dumps(out[0] if len(out) == 1 else out, indent=2))
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "plan.json").write_text(json.dumps(out, indent=2) + "\n")
        print(f"wrote {path / 'plan.json'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.preset:
        cfg = SweepConfig(preset=args.preset)
    elif args.config:
        cfg = SweepConfig.load(args.config)
    else:
        raise ConfigError("sweep needs --config or --preset")
    if args.out:
        cfg.out = args.out
    if args.format:
        cfg.format = args.format
    if args.workers:
        cfg.workers = args.workers
    if args.timing:
        cfg.timing = True
    result = sweep(cfg)
    s = result.summary
    for kind, c in s["by_kind"].items():
        print(f"{kind:16s} {c['records']:6d} records  {c['violations']:4d} violations")
    print(f"{s['records']} records, {s['violations']} violations")
    for path in result.files:
        print(f"wrote {path}")
    return EXIT_VIOLATION if s["violations"] else EXIT_OK


def cmd_dump(args) -> int:
    m = _dense(args)
    what = args.what
    if what == "H":
        mat = m.H.matrix
    elif what == "layer":
        mat = m.layers[args.layer].matrix
    elif what == "evolution":
        mat = m.evolution(args.s)
    elif what == "formula":
        mat = apply_formula(suzuki_schedule(args.p, len(m.layers)), args.s, m.layers)
    elif what == "layer_evolution":
        mat = expm_i(m.layers[args.layer], args.s)
    else:
        mat = m.p_le(m.resolve(args.threshold))
    write_dump(args.file, mat)
    print(f"wrote {args.file} ({mat.shape[0]}x{mat.shape[1]} complex128)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lowtrot", description="Low-energy Trotter error lab.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("model", help="build a model, print its parameters, optionally save the spec")
    _model_args(p)
    p.add_argument("--spectrum", action="store_true", help="also diagonalize and print E0, Emax")
    p.add_argument("--p", type=int, help="also write the order-p schedule")
    p.add_argument("--out", help="spec file (*.json) or directory")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("leakage", help="leakage, moment or effective-leakage measurement")
    _model_args(p)
    p.add_argument("--layer", type=int)
    p.add_argument("--all-layers", action="store_true")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--lo", required=True, help='energy expression, e.g. "E0+1J"')
    p.add_argument("--hi", required=True, help='energy expression, may be relative to --lo, e.g. "+6J"')
    p.add_argument("--moment", type=int, help="measure the n-th power of the layer instead")
    p.add_argument("--cutoff", help="effective cutoff (relative to --hi allowed); selects effective leakage")
    p.add_argument("--which", choices=("sandwiched", "projected"), default="sandwiched")
    _out_args(p)
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("error", help="product-formula error on the low-energy subspace and/or full space")
    _model_args(p)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--delta", required=True, help="low-energy cutoff Delta (energy expression)")
    p.add_argument("--restriction", choices=("low_energy", "full", "both"), default="both")
    p.add_argument("--gamma-tilde", type=float, default=1.0)
    p.add_argument("--no-log-term", action="store_true")
    _out_args(p)
    p.set_defaults(func=cmd_error)

    p = sub.add_parser("corollary", help="projected/effective product-formula comparisons")
    _model_args(p)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--delta", required=True, help="low-energy cutoff Delta (energy expression)")
    p.add_argument("--budget", type=float, required=True, help="leakage budget for the ladder")
    p.add_argument("--which", choices=("1", "2", "3", "4", "all"), default="all")
    _out_args(p)
    p.set_defaults(func=cmd_corollary)

    p = sub.add_parser("fit", help="log-log order fit of the formula error")
    _model_args(p)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--s-min", type=float, default=0.01)
    p.add_argument("--s-max", type=float, default=0.1)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--delta", help="also fit the low-energy error below this cutoff")
    _out_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("plan", help="Trotter number planning and comparison")
    p.add_argument("--spec", help="spec JSON path")
    _model_args(p, required=False)
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.add_argument("--eps", type=float, nargs="+", required=True)
    p.add_argument("--delta", type=float, default=0.0, help="absolute low-energy cutoff Delta")
    p.add_argument("--p", type=int, nargs="+", default=[1])
    p.add_argument("--gamma-tilde", type=float, default=1.0)
    p.add_argument("--grouped", action="store_true", help="also report the grouped two-term Trotter number")
    p.add_argument("--compare", action="store_true", help="grid comparison with exponent fits")
    p.add_argument("--n-grid", type=int, nargs="+", help="system sizes (formula level)")
    _out_args(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", help="run a sweep from a JSON config or a preset")
    p.add_argument("--config")
    p.add_argument("--preset", choices=("acceptance",))
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="record wall-clock runtime (breaks byte determinism)")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json", "both"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dump", help="write a dense operator in the binary dump format")
    _model_args(p)
    p.add_argument("--what", choices=("H", "layer", "layer_evolution", "evolution", "formula", "projector"),
                   default="H")
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--threshold", default="E0")
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_dump)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (ValueError, TypeError, OSError, KeyError, IndexError) as exc:
        print(f"lowtrot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
