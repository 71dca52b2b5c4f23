"""Maximum likelihood, minimax, minimax deviation and scaled-minimax strategies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ScalingProfile, Strategy, validate_strategy
from .optimize import OracleResult, SimplexOracle, SolverConfig, maximize_on_simplex
from .risk import RiskModel, _argmin_lowest

BETA_FLOOR = 1e-12
IMPROPER_MARGIN = 1e-6
PRESETS = ("minimax", "mindev", "mindev-relative", "custom")


def _risk_model(obj, ld, loss):
    if isinstance(obj, RiskModel):
        return obj
    return RiskModel(obj, ld, loss)


def ml_strategy(obj, ld=None, loss=None):
    """Estimate the model by maximum likelihood, then act Bayes-optimally for it."""
    rm = _risk_model(obj, ld, loss)
    theta_hat = np.argmax(rm.p_z, axis=0)
    # per-model Bayes decisions without learning data: d_model[t, x]
    d_model = _argmin_lowest(rm.A, axis=-1)
    decisions = d_model[theta_hat].T
    return Strategy.from_decisions(decisions, rm.ny)


def scaled_oracle(rm, profile):
    """Oracle for ``phi(tau) = min_q sum_t tau(t) (R(q, t) - alpha(t)) / beta(t)``."""
    alpha, beta = profile.alpha, profile.beta
    if alpha.shape != (rm.m,):
        raise ValueError("profile length does not match the number of models")

    def evaluate(tau):
        witness = rm.bayes_strategy(tau / beta)
        g = (rm.risks_of_decisions(witness.decisions) - alpha) / beta
        return OracleResult(float(tau @ g), g, witness)

    if rm.nz * rm.nx * rm.ny > 4096:
        return SimplexOracle(rm.m, evaluate)
    # dense per-model cost table for vectorized grid sweeps on small instances
    cost = rm.p_z[:, :, None, None] * rm.A[:, None, :, :]
    flat = cost.reshape(rm.m, -1) / beta[:, None]
    offset = alpha / beta

    def batch(taus):
        c = (taus @ flat).reshape(len(taus), -1, rm.ny)
        return c.min(axis=-1).sum(axis=-1) - taus @ offset

    return SimplexOracle(rm.m, evaluate, batch)


def scaled_minimax_strategy(profile, obj, ld=None, loss=None, cfg=None, seeds=()):
    """Approximate ``argmin_q max_t (R(q, t) - alpha(t)) / beta(t)`` with a gap certificate.

    ``seeds`` are extra candidate strategies for the upper bound.
    """
    rm = _risk_model(obj, ld, loss)
    oracle = scaled_oracle(rm, profile)
    extra = []
    for q in seeds:
        g = (rm.risks(q) - profile.alpha) / profile.beta
        extra.append(OracleResult(float(g.max()), g, q))
    report = maximize_on_simplex(oracle, cfg or SolverConfig(), seeds=extra)
    return report.strategy, report


def minimax_strategy(obj, ld=None, loss=None, cfg=None):
    rm = _risk_model(obj, ld, loss)
    return scaled_minimax_strategy(ScalingProfile.identity(rm.m), rm, cfg=cfg)


def mindev_profile(rm):
    return ScalingProfile(rm.model_bayes_risks(), np.ones(rm.m))


def mindev_relative_profile(rm):
    return ScalingProfile(np.zeros(rm.m), np.maximum(rm.model_bayes_risks(), BETA_FLOOR))


def mindev_strategy(obj, ld=None, loss=None, cfg=None):
    rm = _risk_model(obj, ld, loss)
    return scaled_minimax_strategy(mindev_profile(rm), rm, cfg=cfg)


def preset_profile(name, rm, alpha=None, beta=None):
    if name == "minimax":
        return ScalingProfile.identity(rm.m)
    if name == "mindev":
        return mindev_profile(rm)
    if name == "mindev-relative":
        return mindev_relative_profile(rm)
    if name == "custom":
        if alpha is None or beta is None:
            raise ValueError("custom preset needs alpha and beta")
        return ScalingProfile(alpha, beta)
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


@dataclass
class Verdict:
    kind: str
    value: float
    weights: np.ndarray | None = None
    dominating: Strategy | None = None
    margin: float | None = None
    report: object = None

    @property
    def improper(self):
        return self.kind == "improper"


def improperness_test(q0, obj, ld=None, loss=None, cfg=None, margin=IMPROPER_MARGIN):
    """Decide whether ``q0`` is Bayesian or strictly dominated.

    Solves the saddle problem with offsets ``alpha = R(q0, .)``. A clearly
    negative saddle value yields a candidate dominating strategy, which is
    accepted only after re-checking the domination model by model.
    """
    rm = _risk_model(obj, ld, loss)
    validate_strategy(q0, rm.obj, rm.ld)
    r0 = rm.risks(q0)
    cfg = cfg or SolverConfig(iters=20000, tol=1e-8)
    # q0 itself scores 0, so the upper bound starts at 0 and a Bayesian q0 converges fast
    q_star, report = scaled_minimax_strategy(ScalingProfile(r0, np.ones(rm.m)), rm, cfg=cfg,
                                             seeds=(q0,))
    if report.phi < -margin and q_star is not None:
        r_star = rm.risks(q_star)
        eps = float(np.min(r0 - r_star))
        if eps > 0:
            return Verdict("improper", report.phi, dominating=q_star, margin=eps, report=report)
    return Verdict("bayesian", report.phi, weights=report.tau, report=report)
