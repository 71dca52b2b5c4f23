"""Command-line entry points: ``solve``, ``example`` and ``check``.

Exit codes: 0 success (converged / bayesian), 1 input error, 2 solver gap
not reached, 3 strategy is improper.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .experiments import CURVE_COLUMNS, curves_csv, run_example
from .gaussian import GridSpec
from .model import ModelSpecError, SizeError, dump_strategy, load_model_spec, strategy_from_doc
from .optimize import SolverConfig
from .plotting import line_chart
from .risk import RiskModel, risk_curve_csv, RiskCurve
from .strategies import PRESETS, improperness_test, preset_profile, scaled_minimax_strategy

EXIT_OK, EXIT_ERROR, EXIT_GAP, EXIT_IMPROPER = 0, 1, 2, 3

SERIES_LABELS = {
    "risk_ml": "maximum likelihood",
    "risk_minimax": "minimax",
    "risk_mindev": "minimax deviation",
    "bayes_risk": "Bayes risk floor",
}


class CliError(Exception):
    pass


def _range(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("range needs LO < HI")
    return lo, hi


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _config(args):
    if args.iters < 1:
        raise CliError("--iters must be positive")
    if not args.tol > 0:
        raise CliError("--tol must be positive")
    return SolverConfig(iters=args.iters, tol=args.tol)


def _load_vector(path, models):
    """Read a per-model vector: a JSON list, a JSON object keyed by model label,
    or whitespace-separated numbers."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = text.split()
    if isinstance(doc, dict):
        missing = [m for m in models if m not in doc]
        if missing or len(doc) != len(models):
            raise CliError(f"{path}: keys must be exactly the model labels")
        doc = [doc[m] for m in models]
    try:
        vec = np.array([float(v) for v in doc])
    except (TypeError, ValueError):
        raise CliError(f"{path}: expected numbers") from None
    if vec.shape != (len(models),):
        raise CliError(f"{path}: expected {len(models)} values, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise CliError(f"{path}: values must be finite")
    return vec


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _out_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_solve(args):
    obj, ld, loss = load_model_spec(args.spec)
    rm = RiskModel(obj, ld, loss)
    alpha = _load_vector(args.alpha, obj.models) if args.alpha else None
    beta = _load_vector(args.beta, obj.models) if args.beta else None
    preset = args.preset
    if preset is None:
        preset = "custom" if (alpha is not None or beta is not None) else "mindev"
    if preset == "custom":
        alpha = np.zeros(rm.m) if alpha is None else alpha
        beta = np.ones(rm.m) if beta is None else beta
    elif alpha is not None or beta is not None:
        raise CliError(f"--alpha/--beta only apply to the custom preset, not {preset!r}")
    profile = preset_profile(preset, rm, alpha, beta)
    q, report = scaled_minimax_strategy(profile, rm, cfg=_config(args))

    out = _out_dir(args.out)
    doc = report.to_dict()
    doc["preset"] = preset
    doc["models"] = list(obj.models)
    _write(os.path.join(out, "report.json"), json.dumps(doc, indent=1) + "\n")
    if q is not None:
        _write(os.path.join(out, "strategy.json"), dump_strategy(q, obj, ld) + "\n")
        curve = RiskCurve(rm.risks(q), preset)
        _write(os.path.join(out, "risk_curve.csv"), risk_curve_csv(curve, obj))
    print(f"preset {preset}: phi={report.phi:.6g} upper={report.upper:.6g} "
          f"gap={report.gap:.3g} iters={report.iters}")
    if not report.converged:
        print(f"warning: gap {report.gap:.3g} above tolerance {args.tol:g}", file=sys.stderr)
        return EXIT_GAP
    return EXIT_OK


def _grid(cells, rng, default):
    if cells is None and rng is None:
        return None
    lo, hi = rng if rng is not None else (default.lo, default.hi)
    return GridSpec(lo, hi, cells if cells is not None else default.cells)


def cmd_example(args):
    if args.n < 0:
        raise CliError("--n must be >= 0")
    cfg = _config(args)
    default_signal = GridSpec(-8.0, 8.0, 65)
    signal = _grid(args.signal_cells, args.signal_range, default_signal)
    learn = _grid(args.learn_cells, None, GridSpec(-10.0, 10.0, 33))
    if args.theta_range is not None and args.which == 2:
        raise CliError("--theta-range applies to example 1 only (example 2 uses [0, 1])")
    result = run_example(args.which, args.n, m=args.theta_cells, theta_range=args.theta_range,
                         signal=signal, learn=learn, cfg=cfg, seed=args.seed, mode=args.mode)
    for note in result.notes:
        print(f"note: {note}", file=sys.stderr)

    out = _out_dir(args.out)
    stem = f"example{args.which}_n{args.n}"
    csv = curves_csv(result)
    _write(os.path.join(out, stem + ".csv"), csv)
    series = {SERIES_LABELS[c]: result.curves[c] for c in CURVE_COLUMNS}
    svg = line_chart(result.thetas, series, title=f"Example {args.which}, n = {args.n}",
                     dashed=(SERIES_LABELS["risk_mindev"],))
    _write(os.path.join(out, stem + ".svg"), svg)
    meta = dict(result.config)
    meta["notes"] = result.notes
    meta["reports"] = {k: r.to_dict() for k, r in result.reports.items()}
    meta["max_deviation"] = {c: result.max_deviation(c) for c in CURVE_COLUMNS[:3]}
    meta["version"] = __version__
    _write(os.path.join(out, stem + ".json"), json.dumps(meta, indent=1) + "\n")

    for c in CURVE_COLUMNS[:3]:
        print(f"{c}: max risk {np.max(result.curves[c]):.4f}, "
              f"max deviation {result.max_deviation(c):.4f}")
    print(f"seed {args.seed}; wrote {stem}.csv, {stem}.svg, {stem}.json to {out}")
    ok = all(r.converged for r in result.reports.values())
    return EXIT_OK if ok else EXIT_GAP


def cmd_check(args):
    obj, ld, loss = load_model_spec(args.spec)
    with open(args.strategy, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"{args.strategy}: parse error at line {exc.lineno}: {exc.msg}") from None
    q0 = strategy_from_doc(doc, obj, ld)
    verdict = improperness_test(q0, obj, ld, loss, cfg=SolverConfig(iters=args.iters, tol=args.tol))
    if verdict.improper:
        out = _out_dir(args.out)
        path = os.path.join(out, "dominating_strategy.json")
        _write(path, dump_strategy(verdict.dominating, obj, ld) + "\n")
        print(f"improper: F*={verdict.value:.6g}, margin {verdict.margin:.6g}, "
              f"dominating strategy written to {path}")
        return EXIT_IMPROPER
    tau = ", ".join(f"{m}={t:.6g}" for m, t in zip(obj.models, verdict.weights))
    print(f"bayesian: F*={verdict.value:.3g}, weights tau*: {tau}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="mindev", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp, iters=5000, tol=1e-3):
        sp.add_argument("--iters", type=int, default=iters, help="iteration cap (default %(default)s)")
        sp.add_argument("--tol", type=float, default=tol, help="duality-gap target (default %(default)s)")

    s = sub.add_parser("solve", help="solve a scaled-minimax problem for a model spec")
    s.add_argument("--spec", required=True, help="model-spec JSON file")
    s.add_argument("--preset", choices=PRESETS, help="objective (default mindev)")
    s.add_argument("--alpha", help="per-model offsets for the custom preset")
    s.add_argument("--beta", help="per-model positive scales for the custom preset")
    solver_flags(s)
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("example", help="risk curves for one of the Gaussian examples")
    e.add_argument("which", type=int, choices=(1, 2))
    e.add_argument("--n", type=int, default=1, help="learning sample size")
    e.add_argument("--theta-cells", type=int, default=41)
    e.add_argument("--theta-range", type=_range, help="LO:HI (example 1)")
    e.add_argument("--signal-cells", type=int)
    e.add_argument("--signal-range", type=_range, help="LO:HI")
    e.add_argument("--learn-cells", type=int)
    solver_flags(e)
    e.add_argument("--seed", type=_seed, default=0)
    e.add_argument("--mode", choices=("exact", "mc", "auto"), default="auto")
    e.add_argument("--out", default=".", help="output directory")
    e.set_defaults(func=cmd_example)

    c = sub.add_parser("check", help="test whether a strategy is Bayesian or improper")
    c.add_argument("--spec", required=True)
    c.add_argument("--strategy", required=True, help="strategy JSON file")
    solver_flags(c, iters=20000, tol=1e-8)
    c.add_argument("--out", default=".", help="where the dominating strategy goes")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ModelSpecError, SizeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
