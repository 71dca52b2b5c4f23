"""Maximization of concave piecewise-linear functions over the probability simplex.

The objectives handled here have the form ``phi(tau) = min_j <tau, g_j>``
where each ``g_j`` is the per-model value vector of some strategy. An oracle
returns, at a given ``tau``, the value, the active ``g`` (a supergradient) and
the strategy that produced it (the witness). Any convex mixture of witnesses
is itself a strategy whose worst-case value is ``max`` of the mixed ``g``;
that gives the upper bound used in the duality-gap certificate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import Strategy


@dataclass
class OracleResult:
    value: float
    subgradient: np.ndarray
    witness: Strategy | None = None


@dataclass
class SimplexOracle:
    """Evaluator of a concave piecewise-linear function on the ``dim``-simplex.

    ``batch`` optionally maps an ``(n, dim)`` array of weight vectors to their
    values in one call; the grid oracle uses it when present.
    """

    dim: int
    evaluate: Callable[[np.ndarray], OracleResult]
    batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, tau):
        return self.evaluate(tau)


@dataclass
class SolverConfig:
    iters: int = 5000
    tol: float = 1e-3
    step0: float | None = None
    polish_every: int = 10


@dataclass
class SolveReport:
    tau: np.ndarray
    phi: float
    strategy: Strategy | None
    upper: float
    gap: float
    iters: int
    converged: bool
    upper_values: np.ndarray | None = field(default=None, repr=False)
    history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "tau": [float(t) for t in self.tau],
            "phi": float(self.phi),
            "upper": float(self.upper),
            "gap": float(self.gap),
            "iters": int(self.iters),
            "converged": bool(self.converged),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def project_to_simplex(v):
    """Euclidean projection of ``v`` onto ``{t >= 0, sum(t) = 1}`` (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("need a non-empty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    w = np.maximum(v - theta, 0.0)
    # absorb rounding so the invariant sum == 1 holds tightly
    return w / w.sum()


def _check_finite(res):
    if not math.isfinite(res.value) or not np.all(np.isfinite(res.subgradient)):
        raise FloatingPointError("oracle returned a non-finite value")


def best_mixture(cuts):
    """Mixture of witnesses minimizing the worst model value.

    ``cuts`` is a ``(J, m)`` array of per-model values. Solves the matrix game
    ``min_lam max_t sum_j lam_j cuts[j, t]`` and returns ``(lam, value, tau)``
    where ``tau`` is the maximizing model weighting read from the duals.
    """
    from scipy.optimize import linprog

    J, m = cuts.shape
    c = np.zeros(J + 1)
    c[-1] = 1.0
    a_ub = np.hstack([cuts.T, -np.ones((m, 1))])
    a_eq = np.zeros((1, J + 1))
    a_eq[0, :J] = 1.0
    bounds = [(0, None)] * J + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(m), A_eq=a_eq, b_eq=[1.0],
                  bounds=bounds, method="highs")
    if res.status != 0:
        return None
    lam = np.maximum(res.x[:J], 0.0)
    lam /= lam.sum()
    tau = project_to_simplex(np.maximum(-res.ineqlin.marginals, 0.0))
    return lam, float((lam @ cuts).max()), tau


class _Primal:
    """Upper-bound bookkeeping: running average, single witnesses and mixtures."""

    def __init__(self, m):
        self.gsum = np.zeros(m)
        self.count = 0
        self.qsum = None
        self.cuts, self.points, self.keys = [], [], {}
        self.best_u, self.best = math.inf, None

    def add(self, tau, res, seed=False):
        g = np.asarray(res.subgradient, dtype=float)
        if not seed:
            self.gsum += g
            self.count += 1
            w = res.witness
            if w is not None:
                if self.qsum is None:
                    self.qsum = np.zeros(w.shape)
                if w.decisions is not None:
                    for k in range(w.n_states):
                        self.qsum[..., k] += w.decisions == k
                else:
                    self.qsum += w.q
        key = g.tobytes()
        if key not in self.keys:
            self.keys[key] = len(self.cuts)
            self.cuts.append(g)
            self.points.append((tau, res.witness if seed else None))
        u = float(g.max())
        if u < self.best_u:
            self.best_u, self.best = u, ("single", self.keys[key])

    def average_upper(self):
        return float((self.gsum / self.count).max()) if self.count else math.inf

    def upper(self):
        return min(self.best_u, self.average_upper())

    def polish(self):
        sol = best_mixture(np.array(self.cuts))
        if sol is None:
            return None
        lam, u, tau = sol
        if u < self.best_u:
            self.best_u, self.best = u, ("mixture", lam)
        return tau

    def strategy(self, oracle):
        """Materialize the primal candidate with the smallest upper bound."""
        if self.average_upper() <= self.best_u:
            if self.qsum is None:
                return None, self.gsum / self.count
            return Strategy(self.qsum / self.count), self.gsum / self.count
        kind, what = self.best
        if kind == "single":
            return self._witness(what, oracle), self.cuts[what]
        idx = np.nonzero(what > 0)[0]
        parts = [(what[j], self._witness(j, oracle)) for j in idx]
        values = sum(lam * self.cuts[j] for j, (lam, _) in zip(idx, parts))
        if any(w is None for _, w in parts):
            return None, values
        q = sum(lam * w.q for lam, w in parts)
        return Strategy(q), values

    def _witness(self, j, oracle):
        tau, witness = self.points[j]
        if witness is None:
            # witnesses are deterministic functions of tau; rebuild on demand
            witness = oracle(tau).witness
        return witness


def maximize_on_simplex(oracle, cfg=None, seeds=(), record_history=False):
    """Projected subgradient ascent with a duality-gap certificate.

    Iterates ``tau <- P(tau + s_k g_k)`` from the uniform point with
    ``s_k = s0 / sqrt(k + 1)``. The lower bound is the best oracle value seen.
    Upper bounds come from the running average of witnesses, the best single
    witness and, every ``cfg.polish_every`` steps, the best mixture of the
    witnesses collected so far; that mixture's dual weights are also probed
    as an extra ascent point. ``seeds`` are ``OracleResult``s of known
    strategies added as primal candidates. Stops once the gap is ``<= cfg.tol``.
    """
    cfg = cfg or SolverConfig()
    m = oracle.dim
    primal = _Primal(m)
    for s in seeds:
        primal.add(None, s, seed=True)
    tau = np.full(m, 1.0 / m)
    best_phi, best_tau = -math.inf, tau
    history = []
    step0 = cfg.step0
    k = 0

    def probe(point):
        nonlocal best_phi, best_tau
        res = oracle(point)
        _check_finite(res)
        if res.value > best_phi:
            best_phi, best_tau = float(res.value), point
        primal.add(point, res)
        return res

    for k in range(1, max(cfg.iters, 1) + 1):
        res = probe(tau)
        if cfg.polish_every and (k % cfg.polish_every == 0 or k == 1):
            extra = primal.polish()
            if extra is not None and primal.upper() - best_phi > cfg.tol:
                probe(extra)
        if record_history:
            history.append((float(res.value), best_phi, primal.upper()))
        if primal.upper() - best_phi <= cfg.tol or m == 1:
            break
        g = np.asarray(res.subgradient, dtype=float)
        if step0 is None:
            step0 = 1.0 / (1.0 + float(np.linalg.norm(g)))
        tau = project_to_simplex(tau + step0 / math.sqrt(k) * g)

    strategy, values = primal.strategy(oracle)
    upper = float(values.max())
    gap = upper - best_phi
    return SolveReport(
        tau=best_tau, phi=best_phi, strategy=strategy, upper=upper, gap=gap,
        iters=k, converged=gap <= cfg.tol, upper_values=values, history=history,
    )


def _compositions(m, total):
    """Integer rows of length ``m`` with non-negative entries summing to ``total``."""
    if m == 1:
        return np.array([[total]], dtype=np.int64)
    if m == 2:
        first = np.arange(total, -1, -1, dtype=np.int64)
        return np.column_stack([first, total - first])
    blocks = []
    for first in range(total, -1, -1):
        rest = _compositions(m - 1, total - first)
        blocks.append(np.column_stack([np.full(len(rest), first), rest]))
    return np.vstack(blocks)


def simplex_grid(m, resolution):
    """All points of the simplex with coordinates in multiples of ``1/resolution``."""
    return _compositions(m, resolution) / resolution


def grid_oracle(oracle, resolution, max_dim=4, chunk=200_000):
    """Brute-force maximum of the oracle over the regular simplex grid."""
    m = oracle.dim
    if m > max_dim:
        raise ValueError(f"grid search limited to dimension {max_dim}, got {m}")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    grid = simplex_grid(m, resolution)
    best_val, best_tau = -math.inf, None
    for start in range(0, len(grid), chunk):
        pts = grid[start:start + chunk]
        if oracle.batch is not None:
            vals = np.asarray(oracle.batch(pts), dtype=float)
        else:
            vals = np.array([oracle(t).value for t in pts])
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_tau = float(vals[i]), pts[i]
    return best_tau, best_val
