"""Seeded Monte-Carlo risk estimates.

Sample ``i`` always consumes row ``i % CHUNK`` of the Philox stream keyed by
``seed`` whose counter starts at block ``i // CHUNK``. Results therefore do not
depend on how many chunks are processed, or in which order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .risk import _argmin_lowest, _pairwise_sum

CHUNK = 1024
MIN_SAMPLES = 100


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int

    def within(self, exact, k=4.0):
        return abs(self.mean - exact) <= k * self.stderr


def _uniforms(seed, chunk, rows, width):
    bitgen = np.random.Philox(key=seed & (2**64 - 1), counter=[0, 0, 0, chunk])
    return np.random.Generator(bitgen).random((rows, width))


def _categorical(cdf, u):
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


class DecisionRule:
    """Decision as a function of the current signal and the raw learning sample."""

    def decide(self, x, raw):
        raise NotImplementedError


class BayesRule(DecisionRule):
    """Bayes decision for fixed model weights, evaluated on raw samples.

    ``cost(k) = sum_t tau(t) prod_i p_base(raw_i; t) A[t, x, k]`` with the
    sample likelihood handled in log space.
    """

    def __init__(self, tau, obj, base, loss):
        self.A = np.einsum("txy,yk->txk", obj.p_xy, loss.w)
        with np.errstate(divide="ignore"):
            self.log_tau = np.log(np.asarray(tau, dtype=float))
            self.log_base = np.log(base.p_z)

    def decide(self, x, raw):
        loglik = self.log_tau[None, :] + self.log_base[:, raw].sum(axis=2).T
        top = loglik.max(axis=1, keepdims=True)
        w = np.exp(loglik - top)
        cost = np.einsum("st,tsk->sk", w, self.A[:, x, :])
        return _argmin_lowest(cost, axis=-1)


class MaxLikelihoodRule(DecisionRule):
    def __init__(self, obj, base, loss):
        A = np.einsum("txy,yk->txk", obj.p_xy, loss.w)
        self.model_decisions = _argmin_lowest(A, axis=-1)
        with np.errstate(divide="ignore"):
            self.log_base = np.log(base.p_z)

    def decide(self, x, raw):
        loglik = self.log_base[:, raw].sum(axis=2)
        theta_hat = np.argmax(loglik, axis=0)
        return self.model_decisions[theta_hat, x]


def _z_index(ld, raw):
    """Map raw base-value samples ``(S, n)`` to learning-value indices."""
    g = ld.base.n_values
    if ld.representation == "multiset":
        counts = np.zeros((raw.shape[0], g), dtype=np.int64)
        for j in range(raw.shape[1]):
            np.add.at(counts, (np.arange(raw.shape[0]), raw[:, j]), 1)
        radix = ld.n + 1
        weights = radix ** np.arange(g - 1, -1, -1, dtype=np.int64)
        codes = ld.counts @ weights
        order = np.argsort(codes)
        pos = np.searchsorted(codes[order], counts @ weights)
        return order[pos]
    return raw @ (g ** np.arange(raw.shape[1] - 1, -1, -1, dtype=np.int64))


def estimate_risk_mc(rule, theta, instance, samples, seed):
    """Estimate ``R(rule, theta)`` from ``samples`` simulated decisions.

    ``rule`` is a Strategy over the instance's learning values or a
    DecisionRule over raw samples. ``instance`` needs ``obj``, ``ld``,
    ``loss`` and, for raw-sample rules or iid learning data, ``base`` and ``n``.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    obj, ld, loss = instance.obj, instance.ld, instance.loss
    n = getattr(instance, "n", 0) or 0
    base = getattr(instance, "base", None)
    if base is None and ld is not None:
        base = ld.base
    raw_draws = isinstance(rule, DecisionRule) or (
        ld is not None and ld.base is not None and ld.representation in ("multiset", "iid-product"))
    if raw_draws and n > 0 and base is None:
        raise ValueError("raw-sample simulation needs the base learning distribution")
    nz_draws = n if (raw_draws and n > 0) else 1
    width = nz_draws + 2

    pxy = obj.p_xy[theta].ravel()
    cdf_xy = np.cumsum(pxy)
    cdf_base = np.cumsum(base.p_z[theta]) if (raw_draws and n > 0) else None
    cdf_z = np.cumsum(ld.p_z[theta]) if (ld is not None and not raw_draws) else None
    ny = obj.n_states

    sums, sqs = [], []
    for chunk in range(math.ceil(samples / CHUNK)):
        rows = min(CHUNK, samples - chunk * CHUNK)
        u = _uniforms(seed, chunk, CHUNK, width)[:rows]
        xy = _categorical(cdf_xy, u[:, 0])
        x, y = np.divmod(xy, ny)
        if raw_draws and n > 0:
            raw = _categorical(cdf_base, u[:, 2:])
        else:
            raw = None
        if isinstance(rule, DecisionRule):
            if raw is None:
                raw = np.zeros((rows, 0), dtype=np.int64)
            d = rule.decide(x, raw)
        else:
            if ld is None:
                raise ValueError("a tabulated strategy needs enumerated learning data")
            z = _z_index(ld, raw) if raw is not None else _categorical(cdf_z, u[:, 2])
            probs = rule.q[x, z]
            d = _categorical_rows(probs, u[:, 1])
        losses = loss.w[y, d]
        sums.append(losses.sum())
        sqs.append((losses * losses).sum())
    total = float(_pairwise_sum(sums))
    total_sq = float(_pairwise_sum(sqs))
    mean = total / samples
    var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return McEstimate(mean, math.sqrt(var / samples), samples, seed)


def _categorical_rows(probs, u):
    cdf = np.cumsum(probs, axis=1)
    idx = (cdf < (u * cdf[:, -1])[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def mc_risk_curve(rule, instance, samples, seed):
    """Estimated risk at every model; model ``t`` uses seed ``seed + t``."""
    return [estimate_risk_mc(rule, t, instance, samples, seed + t)
            for t in range(instance.obj.n_models)]


