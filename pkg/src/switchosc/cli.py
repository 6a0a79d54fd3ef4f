"""Command-line surface: simulate, analyze, reproduce.

Exit codes: 0 success, 1 failed verdict or reported absence, 2 usage errors.
All floating output is printed at 12 significant digits so paper-quoted
10-digit values are reproducible from the terminal.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, poincare
from .core import (
    DomainError,
    OscillatorParams,
    SwitchingModel,
    OscillatorError,
)
from .regularization import (
    TransitionFunction,
    critical_branch,
    exit_scaling_fit,
    regularized_poincare_linear,
    simulate_regularized,
)
from .sliding import (
    ageing_metrics,
    find_sliding_period4_linear,
    find_sliding_period4_nonlinear,
    linear_branches,
    nonlinear_branches,
    simulate_discontinuous,
)
from .svgplot import line_plot

CSV_HEADER = "x,y_or_v,mode,branch,event"


def _g(v) -> str:
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def _out_dir(args) -> Path:
    d = Path(getattr(args, "out_dir", None) or os.environ.get("SWITCHOSC_OUT", "out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise DomainError("config file must hold a flat JSON object")
    return doc


def _params(args, cfg: dict) -> OscillatorParams:
    a = args.a if args.a is not None else cfg.get("a")
    if a is None:
        raise DomainError("damping a is required (flag --a or config)")
    eps = args.epsilon if args.epsilon is not None else cfg.get("epsilon", 0.0)
    psi = getattr(args, "psi", None) or cfg.get("psi", "cubic")
    return OscillatorParams(a=a, epsilon=eps, psi=psi)


def _model(args, cfg: dict) -> SwitchingModel:
    name = args.model or cfg.get("model")
    if name is None:
        raise DomainError("model is required (linear|nonlinear)")
    return SwitchingModel(name)


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for x, y, mode, branch, event in rows:
            fh.write(f"{_g(float(x))},{_g(float(y))},{mode},"
                     f"{'' if branch is None else branch},{event}\n")


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    params = _params(args, cfg)
    model = _model(args, cfg)
    x0 = args.x0 if args.x0 is not None else cfg.get("x0", 0.0)
    y0 = args.y0 if args.y0 is not None else cfg.get("y0", 0.0)
    x_end = args.x_end if args.x_end is not None else cfg.get("x_end", x0 + 8.0)
    out = _out_dir(args)
    if params.epsilon > 0.0:
        traj = simulate_regularized(model, params, x0, y0, x_end).to_trajectory()
        ylab = "v"
    else:
        traj = simulate_discontinuous(model, params, (x0, y0), x_end,
                                      tol=args.tol)
        ylab = "y"
    csv_path = out / "trajectory.csv"
    _write_csv(csv_path, traj.rows())
    print(f"wrote {csv_path}")
    if args.plot:
        xs = [x for seg in traj.segments for x in seg.xs]
        ys = [y for seg in traj.segments for y in seg.ys]
        svg_path = out / "trajectory.svg"
        line_plot([("trajectory", xs, ys)], path=str(svg_path),
                  title=f"{model.value}, a={_g(params.a)}", xlabel="x", ylabel=ylab)
        print(f"wrote {svg_path}")
    return 0


def cmd_orbit_find(args) -> int:
    cfg = _load_config(args.config)
    params = _params(args, cfg)
    model = _model(args, cfg)
    if model is SwitchingModel.LINEAR and not args.sliding:
        x_star, mult = poincare.find_nonsliding_period4(params.a)
        print(f"non-sliding period-4 fixed point x* = {_g(x_star)}")
        print(f"multiplier dP/dx = {_g(mult)}")
        return 0
    if model is SwitchingModel.LINEAR:
        res = find_sliding_period4_linear(params.a)
        if not res.exists:
            print(f"no sliding period-4 orbit: {res.reason}")
            return 1
        print(f"sliding period-4 orbit: landing x = {_g(res.landing)}, "
              f"closure error {_g(res.closure_error)}, branch {res.branch}")
        return 0
    res = find_sliding_period4_nonlinear(params.a)
    if not res.exists:
        print(f"orbit construction failed: {res.reason}")
        return 1
    print(f"sliding period-4 orbit: x_a = {_g(res.x_a)}, branch {res.branch}, "
          f"closure error {_g(res.closure_error)}")
    return 0


def cmd_manifolds(args) -> int:
    cfg = _load_config(args.config)
    params = _params(args, cfg)
    model = _model(args, cfg)
    lo, hi = (float(t) for t in args.range.split(":"))
    branches = (nonlinear_branches((lo, hi)) if model is SwitchingModel.NONLINEAR
                else linear_branches((lo, hi)))
    out = _out_dir(args)
    path = out / "manifolds.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("n,x_lo,x_hi,stability,lambda_mid,v0_mid\n")
        for b in branches:
            xm = 0.5 * (max(b.domain[0], lo) + min(b.domain[1], hi))
            lam = b.lambda_of(xm)
            v0 = (critical_branch(model, b.index, xm, params)
                  if params.epsilon > 0.0 else float("nan"))
            fh.write(f"{b.index},{_g(b.domain[0])},{_g(b.domain[1])},"
                     f"{b.stability},{_g(lam)},{_g(v0)}\n")
    print(f"wrote {path} ({len(branches)} branches)")
    for b in branches:
        print(f"n={b.index} domain=({_g(b.domain[0])}, {_g(b.domain[1])}) {b.stability}")
    return 0


def cmd_map(args) -> int:
    cfg = _load_config(args.config)
    params = _params(args, cfg)
    lo, hi, n = args.grid.split(":")
    xs = np.linspace(float(lo), float(hi), int(n))
    out = _out_dir(args)
    path = out / "maps.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("x,p_minus,p_composite,p_eps\n")
        for x in xs:
            try:
                pm = poincare.next_crossing(-1, float(x), params.with_epsilon(0.0)).x_next
                pc = poincare.composite_map(float(x), params.a,
                                            params.with_epsilon(0.0))
            except OscillatorError:
                pm = pc = float("nan")
            pe = float("nan")
            if params.epsilon > 0.0:
                try:
                    pe = regularized_poincare_linear(float(x), params)
                except OscillatorError:
                    pass
            fh.write(f"{_g(float(x))},{_g(pm)},{_g(pc)},{_g(pe)}\n")
    print(f"wrote {path}")
    return 0


def cmd_ageing(args) -> int:
    cfg = _load_config(args.config)
    model = _model(args, cfg)
    lo, hi = (float(t) for t in args.range.split(":"))
    rows = ageing_metrics(model, x_range=(lo, hi))
    out = _out_dir(args)
    path = out / "ageing.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("n,branch_width,slid_length,stability\n")
        for r in rows:
            fh.write(f"{r['n']},{_g(r['branch_width'])},{_g(r['slid_length'])},"
                     f"{r['stability']}\n")
    print(f"wrote {path}")
    return 0


def cmd_scaling(args) -> int:
    cfg = _load_config(args.config)
    params = _params(args, cfg)
    eps_grid = [float(t) for t in args.eps_grid.split(",")]
    n_grid = [int(t) for t in args.n_grid.split(",")]
    fit_eps, fit_n = exit_scaling_fit(params.a, eps_grid, args.n_fixed,
                                      n_grid, args.eps_fixed)
    print(f"slope_eps = {_g(fit_eps.exponent)} (r^2 = {_g(fit_eps.r_squared)})")
    print(f"slope_n   = {_g(fit_n.exponent)} (r^2 = {_g(fit_n.r_squared)})")
    out = _out_dir(args)
    path = out / "scaling.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("sweep,abscissa,delay\n")
        for u, d in fit_eps.samples:
            fh.write(f"eps,{_g(u)},{_g(d)}\n")
        for u, d in fit_n.samples:
            fh.write(f"n,{_g(u)},{_g(d)}\n")
    if args.plot:
        svg = out / "scaling.svg"
        line_plot([("delay vs eps", [s[0] for s in fit_eps.samples],
                    [s[1] for s in fit_eps.samples])],
                  path=str(svg), title="exit-point scaling", xlabel="eps",
                  ylabel="x_e - fold", logx=True, logy=True)
        print(f"wrote {svg}")
    print(f"wrote {path}")
    return 0


def cmd_reproduce(args) -> int:
    scenario = experiments.load_scenario(args.scenario)
    report = experiments.run_scenario(scenario, out_dir=_out_dir(args),
                                      plot=args.plot)
    for line in report.lines():
        print(line)
    print(f"runtime {report.runtime_s:.2f} s")
    return 0 if report.passed else 1


def cmd_validate_psi(args) -> int:
    doc = json.loads(Path(args.file).read_text())
    if doc.get("type", "poly") != "poly":
        print("only polynomial transition profiles are supported", file=sys.stderr)
        return 2
    coeffs = list(map(float, doc["coeffs"]))  # ascending powers
    d1 = [k * c for k, c in enumerate(coeffs)][1:]
    d2 = [k * c for k, c in enumerate(d1)][1:]
    ev = lambda cs: (lambda v: sum(c * v**k for k, c in enumerate(cs)))
    tf = TransitionFunction(name=doc.get("name", "user"), psi=ev(coeffs),
                            psi_prime=ev(d1), psi_second=ev(d2))
    try:
        tf.validate()
    except DomainError as exc:
        print(f"FAIL {exc}")
        return 1
    print(f"PASS transition function {tf.name!r} satisfies the property suite")
    return 0


def cmd_plot_from_csv(args) -> int:
    lines = Path(args.csv).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        print(f"unexpected CSV header (want {CSV_HEADER!r})", file=sys.stderr)
        return 2
    xs, ys = [], []
    for line in lines[1:]:
        parts = line.split(",")
        xs.append(float(parts[0]))
        ys.append(float(parts[1]))
    out = args.out or str(Path(args.csv).with_suffix(".svg"))
    line_plot([("trajectory", xs, ys)], path=out, title=Path(args.csv).stem,
              xlabel="x", ylabel="y or v")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="switchosc",
        description="Frequency-switching oscillator: simulation and analysis")
    ap.add_argument("--config", help="JSON config file; flags override its values")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model_required=False):
        p.add_argument("--model", choices=["linear", "nonlinear"])
        p.add_argument("--a", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--psi", default=None)
        p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("simulate", help="hybrid or regularized trajectory to CSV/SVG")
    common(p)
    p.add_argument("--x0", type=float)
    p.add_argument("--y0", "--v0", dest="y0", type=float)
    p.add_argument("--x-end", dest="x_end", type=float)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p_orbit = sub.add_parser("orbit", help="periodic-orbit search")
    orbit_sub = p_orbit.add_subparsers(dest="orbit_command", required=True)
    p = orbit_sub.add_parser("find", help="locate the period-4 orbit")
    common(p)
    p.add_argument("--sliding", action="store_true",
                   help="search the sliding orbit (linear model)")
    p.set_defaults(func=cmd_orbit_find)

    p = sub.add_parser("manifolds", help="sliding/critical branch tables")
    common(p)
    p.add_argument("--range", required=True, help="lo:hi")
    p.set_defaults(func=cmd_manifolds)

    p = sub.add_parser("map", help="tabulate the crossing maps over a grid")
    common(p)
    p.add_argument("--grid", required=True, help="lo:hi:n")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("ageing", help="branch width table")
    common(p)
    p.add_argument("--range", required=True, help="lo:hi")
    p.set_defaults(func=cmd_ageing)

    p = sub.add_parser("scaling", help="exit-point scaling fits")
    common(p)
    p.add_argument("--eps-grid", default="1e-2,3e-3,1e-3,3e-4,1e-4")
    p.add_argument("--n-grid", default="4,8,16,32")
    p.add_argument("--n-fixed", type=int, default=10)
    p.add_argument("--eps-fixed", type=float, default=1e-3)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("reproduce", help="run a named scenario")
    p.add_argument("scenario")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--no-plot", dest="plot", action="store_false", default=True)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("validate-psi", help="property suite for a user transition profile")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate_psi)

    p = sub.add_parser("plot-from-csv", help="re-plot a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot_from_csv)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except OscillatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
