"""Discretized versions of the two Gaussian recognition examples.

Example 1: two states with equal priors; state 1 emits ``N((2, 0), I)``,
state 2 emits ``N((0, theta), I)`` with ``theta`` unknown. Learning data is a
sample of size ``n`` drawn from state 2 with variance 16.

Example 2 (Robbins): state 1 emits ``N(-1, 1)``, state 2 emits ``N(1, 1)``,
the prior of state 1 is the unknown ``theta``. Learning data is an unlabeled
sample of size ``n`` from the mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .model import (
    DEFAULT_CAP, FiniteObject, LearningData, LossMatrix, SizeError, iid_product, validate_object,
)

LEARN_VARIANCE = 16.0


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    cells: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.cells < 2:
            raise ValueError("grid needs at least two cells")

    def boundaries(self):
        """Inner cell boundaries; the edge cells extend to infinity."""
        return np.linspace(self.lo, self.hi, self.cells + 1)[1:-1]

    def centers(self):
        """Representative points: interior midpoints, edge cells at their finite end."""
        b = np.linspace(self.lo, self.hi, self.cells + 1)
        c = 0.5 * (b[:-1] + b[1:])
        return c

    def cell_of(self, value):
        return int(np.searchsorted(self.boundaries(), value, side="right"))


@dataclass
class ExampleInstance:
    obj: FiniteObject
    ld: LearningData | None
    loss: LossMatrix
    n: int
    meta: dict = field(default_factory=dict)
    base: LearningData | None = None

    @property
    def mode(self):
        return "mc" if self.ld is None and self.n > 0 else "exact"


def discretize_gaussian_1d(mean, var, grid):
    """Cell masses of ``N(mean, var)``; the edge cells absorb the tails."""
    if not var > 0:
        raise ValueError("variance must be positive")
    sd = math.sqrt(var)
    cdf = ndtr((grid.boundaries() - mean) / sd)
    edges = np.concatenate([[0.0], cdf, [1.0]])
    return np.diff(edges)


def _theta_labels(thetas):
    return tuple(f"{t:.6g}" for t in thetas)


def build_example2(n, m=41, signal=GridSpec(-8.0, 8.0, 65), learn=GridSpec(-10.0, 10.0, 33),
                   mode="multiset", cap=DEFAULT_CAP):
    """Robbins two-state mixture with an unknown prior on a theta grid over [0, 1]."""
    thetas = np.linspace(0.0, 1.0, m) if m > 1 else np.array([0.5])
    f1 = discretize_gaussian_1d(-1.0, 1.0, signal)
    f2 = discretize_gaussian_1d(1.0, 1.0, signal)
    p_xy = np.stack([np.stack([t * f1, (1.0 - t) * f2], axis=1) for t in thetas])
    obj = FiniteObject(
        signals=tuple(f"x{j}" for j in range(signal.cells)),
        states=("1", "2"),
        models=_theta_labels(thetas),
        p_xy=p_xy,
        params=tuple(float(t) for t in thetas),
    )
    g1 = discretize_gaussian_1d(-1.0, 1.0, learn)
    g2 = discretize_gaussian_1d(1.0, 1.0, learn)
    base = LearningData(np.stack([t * g1 + (1.0 - t) * g2 for t in thetas]),
                        labels=tuple(f"u{j}" for j in range(learn.cells)))
    meta = {"example": 2, "n": n, "m": m, "signal": signal, "learn": learn, "mode": mode}
    if n == 0:
        ld = LearningData.trivial(m)
    elif mode == "multiset":
        try:
            ld = iid_product(base, n, "multiset", cap=cap)
        except SizeError as exc:
            raise SizeError(exc.required, exc.cap) from None
    elif mode == "mc":
        ld = None
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ExampleInstance(obj, ld, LossMatrix.zero_one(2), n, meta, base)


def build_example1(n, m=41, theta_range=(-4.0, 4.0), x1=GridSpec(-6.0, 8.0, 57),
                   x2=GridSpec(-8.0, 8.0, 65), learn=GridSpec(-10.0, 10.0, 33),
                   use_sufficient_statistic=True, cap=DEFAULT_CAP):
    """Two-dimensional Gaussian example with an unknown second mean coordinate."""
    thetas = np.linspace(theta_range[0], theta_range[1], m) if m > 1 else np.array(
        [0.5 * (theta_range[0] + theta_range[1])])
    a1 = discretize_gaussian_1d(2.0, 1.0, x1)
    a2 = discretize_gaussian_1d(0.0, 1.0, x2)
    b1 = discretize_gaussian_1d(0.0, 1.0, x1)
    state1 = 0.5 * np.outer(a1, a2).ravel()
    p_xy = np.empty((m, x1.cells * x2.cells, 2))
    for i, t in enumerate(thetas):
        b2 = discretize_gaussian_1d(t, 1.0, x2)
        p_xy[i, :, 0] = state1
        p_xy[i, :, 1] = 0.5 * np.outer(b1, b2).ravel()
    obj = FiniteObject(
        signals=tuple(f"x{i}_{j}" for i in range(x1.cells) for j in range(x2.cells)),
        states=("1", "2"),
        models=_theta_labels(thetas),
        p_xy=p_xy,
        params=tuple(float(t) for t in thetas),
    )
    meta = {"example": 1, "n": n, "m": m, "x1": x1, "x2": x2, "learn": learn,
            "sufficient_statistic": use_sufficient_statistic}
    if n == 0:
        return ExampleInstance(obj, LearningData.trivial(m), LossMatrix.zero_one(2), n, meta)
    if use_sufficient_statistic:
        # the mean of the second coordinates is sufficient; the first
        # coordinates have a theta-free law and drop out of every comparison
        p_z = np.stack([discretize_gaussian_1d(t, LEARN_VARIANCE / n, learn) for t in thetas])
        ld = LearningData(p_z, labels=tuple(f"mean{j}" for j in range(learn.cells)),
                          representation="sufficient-statistic", n=n)
        base = None
    else:
        # full 2-D draws from N((0, theta), 16 I) on the learn grid per axis
        c1 = discretize_gaussian_1d(0.0, LEARN_VARIANCE, learn)
        rows = [np.outer(c1, discretize_gaussian_1d(t, LEARN_VARIANCE, learn)).ravel()
                for t in thetas]
        base = LearningData(np.stack(rows), labels=tuple(
            f"u{i}_{j}" for i in range(learn.cells) for j in range(learn.cells)))
        ld = iid_product(base, n, "multiset", cap=cap)
    return ExampleInstance(obj, ld, LossMatrix.zero_one(2), n, meta, base)


def check_instance(inst):
    return validate_object(inst.obj, inst.ld, inst.loss)
