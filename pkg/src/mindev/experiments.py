"""Risk-curve experiments on the two Gaussian examples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import GridSpec, build_example1, build_example2
from .optimize import SolverConfig
from .risk import RiskModel
from .simulate import MaxLikelihoodRule, mc_risk_curve
from .strategies import minimax_strategy, mindev_strategy, ml_strategy

# largest multiset learning set solved exactly when the mode is "auto"
EXACT_BUDGET = 50_000
COARSE_LEARN_CELLS = 17
MC_SAMPLES = 20_000

CURVE_COLUMNS = ("risk_ml", "risk_minimax", "risk_mindev", "bayes_risk")


@dataclass
class ExampleResult:
    thetas: np.ndarray
    curves: dict
    reports: dict
    mode: str
    notes: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    strategies: dict = field(default_factory=dict, repr=False)
    instance: object = field(default=None, repr=False)

    def max_deviation(self, name):
        return float(np.max(self.curves[name] - self.curves["bayes_risk"]))


def _multiset_size(cells, n):
    return math.comb(cells + n - 1, n) if n > 0 else 1


def _coarse_cells(n, wanted):
    cells = wanted
    while cells > 3 and _multiset_size(cells, n) > EXACT_BUDGET:
        cells -= 2
    return cells


def _build(which, n, m, theta_range, signal, learn, ex2_mode="multiset"):
    if which == 1:
        kw = {"m": m, "learn": learn}
        if theta_range is not None:
            kw["theta_range"] = theta_range
        if signal is not None:
            kw["x1"] = signal
            kw["x2"] = signal
        return build_example1(n, **kw)
    kw = {"m": m, "learn": learn, "mode": ex2_mode}
    if signal is not None:
        kw["signal"] = signal
    return build_example2(n, **kw)


def run_example(which, n, m=41, theta_range=None, signal=None, learn=None, cfg=None,
                seed=0, mode="auto", mc_samples=MC_SAMPLES):
    """Compute ML, minimax, minimax-deviation and Bayes-floor risk curves."""
    if which not in (1, 2):
        raise ValueError("example must be 1 or 2")
    if n < 0:
        raise ValueError("sample size must be >= 0")
    cfg = cfg or SolverConfig()
    learn = learn or GridSpec(-10.0, 10.0, 33)
    notes = []
    exact = True
    solve_learn = learn
    if which == 2 and n > 0:
        size = _multiset_size(learn.cells, n)
        if mode == "exact" and size > EXACT_BUDGET:
            raise ValueError(f"exact mode needs {size} learning values (budget {EXACT_BUDGET}); "
                             "use --mode mc or fewer --learn-cells")
        if mode == "mc" or (mode == "auto" and size > EXACT_BUDGET):
            exact = False
            cells = _coarse_cells(n, min(COARSE_LEARN_CELLS, learn.cells))
            solve_learn = GridSpec(learn.lo, learn.hi, cells)
            notes.append(f"learning set of {size} values exceeds budget {EXACT_BUDGET}: "
                         f"curves by Monte Carlo ({mc_samples} samples per model, seed {seed}), "
                         f"solve on a {cells}-cell learn grid")

    inst = _build(which, n, m, theta_range, signal, solve_learn)
    rm = RiskModel(inst.obj, inst.ld, inst.loss)
    q_ml = ml_strategy(rm)
    q_mm, rep_mm = minimax_strategy(rm, cfg=cfg)
    q_md, rep_md = mindev_strategy(rm, cfg=cfg)
    bayes = rm.model_bayes_risks()

    if exact:
        curves = {
            "risk_ml": rm.risks(q_ml),
            "risk_minimax": rm.risks(q_mm),
            "risk_mindev": rm.risks(q_md),
        }
        instance = inst
    else:
        # the solved tables live on the coarse learn grid: simulate them there;
        # maximum likelihood needs no solve and runs on the fine raw samples
        fine = _build(which, n, m, theta_range, signal, learn, ex2_mode="mc")
        rules = {
            "risk_ml": (MaxLikelihoodRule(fine.obj, fine.base, fine.loss), fine),
            "risk_minimax": (q_mm, inst),
            "risk_mindev": (q_md, inst),
        }
        curves = {}
        for name, (rule, where) in rules.items():
            est = mc_risk_curve(rule, where, mc_samples, seed)
            curves[name] = np.array([e.mean for e in est])
        instance = fine
    curves["bayes_risk"] = bayes
    config = {
        "example": which, "n": n, "theta_cells": m,
        "theta_range": list(theta_range) if theta_range else None,
        "signal": None if signal is None else [signal.lo, signal.hi, signal.cells],
        "learn": [learn.lo, learn.hi, learn.cells],
        "solve_learn": [solve_learn.lo, solve_learn.hi, solve_learn.cells],
        "iters": cfg.iters, "tol": cfg.tol, "seed": seed, "mode": "exact" if exact else "mc",
        "mc_samples": None if exact else mc_samples,
    }
    return ExampleResult(
        thetas=inst.obj.theta_axis(), curves=curves,
        reports={"minimax": rep_mm, "mindev": rep_md}, mode=config["mode"], notes=notes,
        config=config, strategies={"ml": q_ml, "minimax": q_mm, "mindev": q_md},
        instance=instance,
    )


def curves_csv(result):
    lines = ["theta," + ",".join(CURVE_COLUMNS)]
    for i, t in enumerate(result.thetas):
        vals = [f"{t:.10g}"] + [f"{result.curves[c][i]:.10g}" for c in CURVE_COLUMNS]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
