"""Command-line interface: configuration ingestion, solver orchestration and
machine-readable outputs.

Subcommands: validate, spectrum, traces, solve, oracle, compare, report.
Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 I/O or
configuration error. CSV files carry a `# key=value` metadata block that is
sufficient to rerun the job; no timestamps, so identical runs produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .exprcore import ExprError
from .oracle import compare_grids, fd_solve
from .problem import ProblemSpec, validate
from .solver_contour import default_traces, solve_contour
from .solver_residue import SolutionGrid, solve_residue
from .spectrum import locate_eigenvalues
from .util import SolverError, thread_count

__all__ = ["RunConfig", "main"]

_METHODS = ("residue", "spectral-contour", "existence-formula")


@dataclass
class RunConfig:
    spec: ProblemSpec
    method: str = "residue"
    x_points: int = 21
    t_values: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    eps: float = 1e-8
    tol: float = 1e-10
    n_pairs: int = 12
    k_segments: int = 2
    threads: int = 0
    raw: dict = field(default_factory=dict)

    @staticmethod
    def load(path):
        with open(path) as fh:
            data = json.load(fh)
        return RunConfig.from_dict(data)

    @staticmethod
    def from_dict(data):
        spec = ProblemSpec.from_strings(
            a=data.get("a", "1"), b=data.get("b", "0"), c=data.get("c", "0"),
            phi=data.get("phi", "0"),
            alpha0=data.get("alpha0", 1.0), alpha1=data.get("alpha1", 1.0),
            beta0=data.get("beta0", -1.0), beta1=data.get("beta1", -1.0),
            delta0=data.get("delta0", 1.0), delta1=data.get("delta1", 1.0),
            omega=data.get("omega", 0.5))
        method = data.get("method", "residue")
        if method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")
        return RunConfig(
            spec=spec, method=method,
            x_points=int(data.get("x_points", 21)),
            t_values=tuple(float(t) for t in data.get("t_values",
                                                      (0.1, 0.2, 0.3, 0.4, 0.5))),
            eps=float(data.get("eps", 1e-8)), tol=float(data.get("tol", 1e-10)),
            n_pairs=int(data.get("n_pairs", 12)),
            k_segments=int(data.get("k_segments", 2)),
            threads=int(data.get("threads", 0)),
            raw=dict(data))

    def meta_items(self):
        items = [("shiftheat_version", __version__)]
        for key in sorted(self.raw):
            items.append((key, self.raw[key]))
        return items


def _write_csv(path, header, rows, meta_items):
    lines = []
    for key, val in meta_items:
        lines.append(f"# {key}={val}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _read_solution_csv(path):
    xs, ts, us = [], [], []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            parts = line.split(",")
            xs.append(float(parts[0]))
            ts.append(float(parts[1]))
            us.append(float(parts[2]))
    x = np.array(sorted(set(xs)))
    t = np.array(sorted(set(ts)))
    u = np.full((len(t), len(x)), np.nan)
    for xv, tv, uv in zip(xs, ts, us):
        u[np.searchsorted(t, tv), np.searchsorted(x, xv)] = uv
    return SolutionGrid(x=x, t=t, u=u, method=f"csv:{os.path.basename(path)}")


def _emit_plot_script(path, csv_path, columns, title):
    """Small gnuplot script replaying the CSV (external plotting tool)."""
    script = [
        f"# gnuplot script for {os.path.basename(csv_path)}",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set title '{title}'",
        "set grid",
        f"plot " + ", ".join(
            f"'{os.path.basename(csv_path)}' using {c[0]}:{c[1]} with "
            f"linespoints title '{c[2]}'" for c in columns),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(script) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_validate(args):
    cfg = RunConfig.load(args.config)
    report = validate(cfg.spec)
    for line in report.lines():
        print(line)
    return 0 if (report.passed or args.force) else 1


def _gate(cfg, args):
    report = validate(cfg.spec)
    if not report.passed and not args.force:
        for line in report.lines():
            print(line, file=sys.stderr)
        return False
    return True


def _cmd_spectrum(args):
    cfg = RunConfig.load(args.config)
    if not _gate(cfg, args):
        return 1
    records, meta = locate_eigenvalues(cfg.spec, args.count)
    rows = [(r.nu, r.mu.real, r.mu.imag, r.chi, r.seed.real, r.seed.imag,
             r.residual) for r in records]
    meta_items = cfg.meta_items() + [
        ("count", args.count), ("h", meta.h), ("delta", meta.delta),
        ("zero_multiplicity", meta.zero_multiplicity),
        ("complete", meta.complete)]
    _write_csv(args.out, ["nu", "re", "im", "chi", "seed_re", "seed_im",
                          "residual"], rows, meta_items)
    if args.emit_plots and args.out:
        _emit_plot_script(os.path.splitext(args.out)[0] + ".gp", args.out,
                          [(2, 3, "located"), (5, 6, "seeds")],
                          "spectrum in the complex plane")
    return 0 if meta.complete else 2


def _cmd_traces(args):
    cfg = RunConfig.load(args.config)
    if not _gate(cfg, args):
        return 1
    traces = default_traces(cfg.spec, eps=cfg.eps,
                            k_segments=max(cfg.k_segments, 1))
    rows = []
    endpoints = (0, 1) if args.endpoint == "both" else (int(args.endpoint),)
    for s in endpoints:
        for k in range(1, traces.k_segments + 1):
            tt = traces.segment_times(k)
            gg = (traces.seg0 if s == 0 else traces.seg1)[k - 1]
            rows.extend((s, t, g) for t, g in zip(tt, gg))
    meta_items = cfg.meta_items() + [("jumps", json.dumps(
        [[t, j0, j1] for t, j0, j1 in traces.jumps]))]
    _write_csv(args.out, ["s", "t", "gamma"], rows, meta_items)
    if args.emit_plots and args.out:
        _emit_plot_script(os.path.splitext(args.out)[0] + ".gp", args.out,
                          [(2, 3, "gamma_s(t)")], "boundary traces")
    return 0


def _solution_for(cfg, method, force=False):
    x = np.linspace(0.0, 1.0, cfg.x_points)
    t = np.array(cfg.t_values, dtype=float)
    if method == "residue":
        return solve_residue(cfg.spec, x, t, n_pairs=cfg.n_pairs,
                             eps=cfg.eps, force=force,
                             threads=thread_count(cfg.threads))
    if method == "spectral-contour":
        return solve_residue(cfg.spec, x, t, method="contour", eps=cfg.eps,
                             force=force)
    traces = default_traces(cfg.spec, eps=min(cfg.eps, 1e-9),
                            k_segments=max(cfg.k_segments,
                                           int(np.ceil(t.max() / cfg.spec.omega))) + 1)
    return solve_contour(cfg.spec, x, t, traces=traces, eps=cfg.eps,
                         k_max=max(cfg.k_segments, 4), force=force)


def _cmd_solve(args):
    cfg = RunConfig.load(args.config)
    if not _gate(cfg, args):
        return 1
    method = args.method or cfg.method
    sol = _solution_for(cfg, method, force=args.force)
    comps = sol.components or {}
    header = ["x", "t", "u"] + list(comps)
    rows = []
    for j, t in enumerate(sol.t):
        for i, x in enumerate(sol.x):
            row = [x, t, sol.u[j, i]] + [comps[c][j, i] for c in comps]
            rows.append(row)
    meta_items = [(k, v) for k, v in cfg.meta_items() if k != "method"]
    meta_items += [("method", method)] + sorted(sol.meta.items())
    _write_csv(args.out, header, rows, meta_items)
    if args.emit_plots and args.out:
        _emit_plot_script(os.path.splitext(args.out)[0] + ".gp", args.out,
                          [(1, 3, "u(x, t)")], f"solution ({method})")
    return 0


def _cmd_oracle(args):
    cfg = RunConfig.load(args.config)
    if not _gate(cfg, args):
        return 1
    t_end = args.t_end or max(cfg.t_values)
    # snap nx so the config x grid is an exact subset (compare interpolates
    # in t only)
    segs = max(1, cfg.x_points - 1)
    nx = max(segs * max(1, round(args.nx / segs)), 20)
    grid = fd_solve(cfg.spec, nx=nx, dt=args.dt, t_end=t_end)
    stride = nx // segs
    rows = []
    for t in cfg.t_values:
        if t > grid.t_end + 1e-12:
            continue
        slice_ = grid.sample(t)[::stride]
        rows.extend((x, t, u) for x, u in zip(grid.x[::stride], slice_))
    meta_items = [(k, v) for k, v in cfg.meta_items() if k != "method"]
    meta_items += [("method", "crank-nicolson"), ("nx", nx),
                   ("dt", grid.meta["dt"]), ("t_end", t_end)]
    _write_csv(args.out, ["x", "t", "u"], rows, meta_items)
    return 0


def _cmd_compare(args):
    a = _read_solution_csv(args.a)
    b = _read_solution_csv(args.b)
    report = compare_grids(a, b)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_report(args):
    from .acceptance import AcceptanceContext, run_criteria

    numbers = None
    if args.only:
        numbers = {int(n) for n in args.only.split(",")}
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    ctx = AcceptanceContext()
    results = run_criteria(numbers=numbers, ctx=ctx, verbose=True)
    rows = [(r.number, r.name, "pass" if r.passed else "fail",
             r.detail.replace(",", ";"), f"{r.seconds:.2f}") for r in results]
    _write_csv(os.path.join(outdir, "report.csv"),
               ["criterion", "name", "verdict", "detail", "seconds"],
               rows, [("shiftheat_version", __version__)])
    _render_report_figures(ctx, outdir, numbers)
    if args.emit_plots:
        _emit_plot_script(os.path.join(outdir, "report.gp"),
                          os.path.join(outdir, "report.csv"),
                          [(1, 5, "seconds per criterion")],
                          "acceptance run")
    n_fail = sum(1 for r in results if not r.passed)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed; "
          f"outputs in {outdir}")
    return 0 if n_fail == 0 else 2


def _render_report_figures(ctx, outdir, numbers=None):
    from . import plots
    from .contours import build_contour, contour_quadrature, graded_hyperbola_rule

    def want(*nums):
        return numbers is None or any(n in numbers for n in nums)

    try:
        if want(1, 2):
            records, meta = ctx.spectrum6
            plots.spectrum_figure(records, meta,
                                  os.path.join(outdir, "spectrum.png"))
        if want(7):
            plots.solution_figure([ctx.residue_cos, ctx.existence_cos],
                                  os.path.join(outdir, "solutions.png"))
            rep = compare_grids(ctx.residue_cos, ctx.existence_cos)
            plots.comparison_figure(rep, os.path.join(outdir, "errors.png"),
                                    "existence formula vs residue series")
        if want(8, 11):
            plots.traces_figure(ctx.cos_traces,
                                os.path.join(outdir, "traces.png"))
        if want(10):
            hat = contour_quadrature(build_contour("hat_full", 0.7, 8.8), 48)
            hyp = graded_hyperbola_rule(1.0, 12.0, 0.5)
            plots.contours_figure([hat, hyp],
                                  os.path.join(outdir, "contours.png"),
                                  ["closed hat", "hyperbola branch"])
    except Exception as exc:
        print(f"figure rendering skipped: {exc!r}", file=sys.stderr)


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="shiftheat",
        description="Solver suite for a heat equation with time-shift "
                    "nonlocal boundary conditions")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON problem file")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--force", action="store_true",
                       help="proceed despite validation failures")
        p.add_argument("--emit-plots", action="store_true",
                       help="emit a gnuplot script next to the output")

    p = sub.add_parser("validate", help="check every solvability hypothesis")
    p.add_argument("--config", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("spectrum", help="enumerate eigenvalues")
    add_common(p)
    p.add_argument("--count", type=int, default=6)

    p = sub.add_parser("traces", help="boundary traces with continuation")
    add_common(p)
    p.add_argument("--endpoint", choices=["0", "1", "both"], default="both")

    p = sub.add_parser("solve", help="solve the mixed problem")
    add_common(p)
    p.add_argument("--method", choices=list(_METHODS), default=None)

    p = sub.add_parser("oracle", help="finite-difference reference solve")
    add_common(p)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--t-end", type=float, default=None, dest="t_end")

    p = sub.add_parser("compare", help="error report between two solution CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", default=None)

    p = sub.add_parser("report", help="run the acceptance battery with figures")
    p.add_argument("--outdir", default="report_out")
    p.add_argument("--only", default=None,
                   help="comma-separated criterion numbers")
    p.add_argument("--emit-plots", action="store_true")
    return ap


_HANDLERS = {
    "validate": _cmd_validate,
    "spectrum": _cmd_spectrum,
    "traces": _cmd_traces,
    "solve": _cmd_solve,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (OSError, json.JSONDecodeError, KeyError, ValueError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
