"""Command-line front end.

Subcommands: qfim, optimize, figure, verify, sweep.  Exit codes are fixed for
CI use: 0 success, 1 verification failure, 2 malformed input, 3 degenerate
computation (vanishing postselection probability).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, figures, verify
from .analysis import NoiseGeometry
from .core import load_model
from .errors import (
    DegenerateRegimeError,
    InvalidInputError,
    PostselectionError,
    PsfilterError,
)
from .filters import load_filter
from .optimize import optimize_ds, optimize_pp, p_star

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_DEGENERATE = 3


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_theta(raw: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in raw.split(",") if v.strip() != ""])
    except ValueError as exc:
        raise InvalidInputError(f"bad --theta value {raw!r}: {exc}") from exc


def _matrix_list(m: np.ndarray) -> list:
    return [[float(v) for v in row] for row in np.asarray(m, dtype=float)]


def cmd_qfim(args) -> int:
    model = load_model(args.model)
    theta = _parse_theta(args.theta)
    flt = load_filter(args.filter) if args.filter else None
    eps = args.eps
    if args.order == "none" and eps > 0.0:
        raise InvalidInputError("--order none is the noiseless path; use --order before/after with --eps")
    family = analysis.family_from_model(model, theta, flt=flt, eps=eps, order=args.order)
    baseline = analysis.family_from_model(model, theta, flt=None, eps=eps, order=args.order)
    qfim = family.qfim()
    payload = {
        "qfim": _matrix_list(qfim),
        "postselect_prob": family.prob,
        "order": args.order,
        "eps": eps,
    }
    if flt is not None:
        ratio = analysis.amplification_numeric(qfim, baseline.qfim())
        report = analysis.make_report(ratio, family.prob)
        payload["amplification_entrywise"] = _matrix_list(
            np.where(np.abs(baseline.qfim()) > 1e-12 * np.max(np.abs(baseline.qfim())),
                     qfim / baseline.qfim(), np.nan))
        payload["amplification"] = report.amplification if report.uniform_flag else None
        payload["uniform"] = report.uniform_flag
        payload["efficiency"] = report.efficiency if report.uniform_flag else None
    if args.format == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        lines = ["i,j,qfim" + (",amplification" if flt is not None else "")]
        amp = payload.get("amplification_entrywise")
        for i in range(qfim.shape[0]):
            for j in range(qfim.shape[1]):
                row = f"{i},{j},{qfim[i, j]!r}"
                if amp is not None:
                    row += f",{amp[i][j]!r}"
                lines.append(row)
        lines.append(f"# postselect_prob,{family.prob!r}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    geom = NoiseGeometry(eps=args.eps, d=args.d, u=args.u)
    if args.regime == "pp":
        sol = optimize_pp(geom)
    else:
        if args.pmax is None:
            raise InvalidInputError("--regime ds requires --pmax")
        sol = optimize_ds(geom, args.pmax)
    payload = {
        "regime": args.regime,
        "eps": geom.eps, "d": geom.d, "u": geom.u,
        "p_theta": sol.p_theta, "B": sol.b, "t2": sol.t2,
        "category": sol.category.value,
        "predicted_amplification": sol.predicted_amplification,
        "predicted_efficiency": sol.predicted_efficiency,
        "P_ps": sol.p_ps,
        "P_star": p_star(geom) if geom.eps > 0.0 else None,
        "degenerate": sol.degenerate,
    }
    if args.regime == "ds":
        payload["P_max"] = args.pmax
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_figure(args) -> int:
    if not args.out:
        raise InvalidInputError("--out is required for figure emission")
    kwargs = {}
    if args.n is not None:
        kwargs["n"] = args.n
    if args.eps_series:
        series = tuple(float(v) for v in args.eps_series.split(","))
        if args.panel in ("3a", "3b"):
            kwargs["eps_series"] = series
    if args.pmax_series and args.panel in ("3e", "3f"):
        kwargs["pmax_series"] = tuple(float(v) for v in args.pmax_series.split(","))
    path = figures.write_panel(args.panel, args.out, version=__version__, **kwargs)
    sys.stdout.write(f"{path}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify.run_suites(args.suite, seed=args.seed)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _emit(text, args.out)
    if args.out:
        sys.stdout.write(f"all_passed: {report['all_passed']}\n")
    return EXIT_OK if report["all_passed"] else EXIT_VERIFY_FAILED


def cmd_sweep(args) -> int:
    if not args.out:
        raise InvalidInputError("--out is required for sweep emission")
    if args.lo >= args.hi or args.n < 2:
        raise InvalidInputError("sweep needs lo < hi and n >= 2")
    xs = np.linspace(args.lo, args.hi, args.n)
    geom_of = lambda e: NoiseGeometry(eps=e, d=args.d, u=args.u)
    if args.variable == "t2":
        geom = geom_of(args.eps)
        label = f"A[eps={args.eps:g},d={args.d},u={args.u}]"
        fn = lambda x: analysis.amplification_t_closed(geom, x) * (
            1.0 if args.baseline == "noisy"
            else analysis.noisy_information_prefactor(args.eps, args.d))
    elif args.variable == "eps":
        label = f"Amax[d={args.d},u={args.u}]"
        fn = lambda x: (analysis.max_amplification(geom_of(x)) if args.baseline == "noisy"
                        else analysis.max_amplification_vs_noiseless(geom_of(x)))
    else:  # P_max
        geom = geom_of(args.eps)
        label = f"eta[eps={args.eps:g},d={args.d},u={args.u}]"
        fn = lambda x: optimize_ds(geom, float(x)).predicted_efficiency
    ys = analysis.ordered_map(fn, [float(x) for x in xs], jobs=args.jobs)
    header = [args.variable, label]
    if args.variable == "P_max":
        header.append("naive")
        cols = [xs, np.asarray(ys, dtype=float), xs]
    else:
        cols = [xs, np.asarray(ys, dtype=float)]
    out = Path(args.out)
    out.write_text(figures.format_csv(header, cols))
    sidecar = {"command": "sweep", "tool": "psfilter", "version": __version__,
               "variable": args.variable, "range": [args.lo, args.hi, args.n],
               "fixed": {"eps": args.eps, "d": args.d, "u": args.u, "pmax": args.pmax},
               "baseline": args.baseline, "seed": args.seed, "columns": header}
    out.with_name(out.stem + ".meta.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(f"{out}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psfilter",
        description="Postselected quantum metrology under depolarizing noise: "
                    "QFIM computation, filter optimization, figure data, verification.")
    parser.add_argument("--version", action="version", version=f"psfilter {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("qfim", help="QFIM and amplification for a model/filter/noise setup")
    q.add_argument("--model", required=True, help="model JSON file")
    q.add_argument("--theta", required=True, help="comma-separated parameter values")
    q.add_argument("--eps", type=float, default=0.0, help="depolarizing strength")
    q.add_argument("--filter", default=None, help="filter JSON file (F and K)")
    q.add_argument("--order", choices=("before", "after", "none"), default="none",
                   help="noise placement relative to the filter")
    q.add_argument("--format", choices=("json", "csv"), default="json")
    q.add_argument("--out", default=None)
    q.set_defaults(fn=cmd_qfim)

    o = sub.add_parser("optimize", help="closed-form regime optimizers")
    o.add_argument("--regime", choices=("pp", "ds"), required=True)
    o.add_argument("--eps", type=float, required=True)
    o.add_argument("--d", type=int, required=True)
    o.add_argument("--u", type=int, required=True)
    o.add_argument("--pmax", type=float, default=None)
    o.add_argument("--out", default=None)
    o.set_defaults(fn=cmd_optimize)

    f = sub.add_parser("figure", help="emit one summary-panel dataset as CSV + sidecar")
    f.add_argument("--panel", choices=figures.PANEL_IDS, required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--n", type=int, default=None, help="override the x-grid size")
    f.add_argument("--eps-series", default=None, help="comma-separated eps values (3a/3b)")
    f.add_argument("--pmax-series", default=None, help="comma-separated P_max values (3e/3f)")
    f.set_defaults(fn=cmd_figure)

    v = sub.add_parser("verify", help="run invariant suites, emit a JSON report")
    v.add_argument("--suite", default="all",
                   choices=("all",) + verify.SUITE_NAMES)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None)
    v.set_defaults(fn=cmd_verify)

    s = sub.add_parser("sweep", help="sweep one variable of the closed forms to CSV")
    s.add_argument("--variable", choices=("t2", "eps", "P_max"), required=True)
    s.add_argument("--lo", type=float, required=True)
    s.add_argument("--hi", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--u", type=int, default=2)
    s.add_argument("--pmax", type=float, default=None)
    s.add_argument("--baseline", choices=("noisy", "noiseless"), default="noisy")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PostselectionError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DEGENERATE
    except (InvalidInputError, DegenerateRegimeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BAD_INPUT
    except PsfilterError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
