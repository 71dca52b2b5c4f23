"""Exact risks, Bayes strategies and per-model Bayes risks.

Everything reduces to the expected-loss table

    A[t, x, k] = sum_y p_xy(x, y; t) * w(y, k)

so that ``R(q, t) = sum_z p_z(z; t) sum_{x,k} A[t, x, k] q(k | x, z)`` and the
Bayes cost of decision ``k`` at ``(x, z)`` under weights ``tau`` is
``sum_t tau(t) p_z(z; t) A[t, x, k]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LearningData, Strategy, check_weights, validate_strategy

# relative slack under which two decision costs count as a tie
TIE_RTOL = 1e-12

# learning values processed per block; fixed so summation order never varies
Z_BLOCK = 4096


@dataclass(frozen=True)
class RiskCurve:
    risks: np.ndarray
    label: str = ""

    def __iter__(self):
        return iter(self.risks)

    def __len__(self):
        return len(self.risks)

    def __getitem__(self, i):
        return self.risks[i]


def _pairwise_sum(parts):
    """Deterministic tree reduction of a list of equally shaped arrays."""
    parts = list(parts)
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _argmin_lowest(cost, axis=-1):
    """Argmin along ``axis``; near-ties resolve to the lowest index.

    Loops over the (short) decision axis so every step is an elementwise
    operation on whole cost planes.
    """
    planes = np.moveaxis(cost, axis, 0)
    lo = planes[0].copy()
    scale = np.abs(planes[0])
    for c in planes[1:]:
        np.minimum(lo, c, out=lo)
        np.maximum(scale, np.abs(c), out=scale)
    bound = lo + TIE_RTOL * scale
    d = np.zeros(lo.shape, dtype=np.int64)
    for k in range(len(planes) - 1, -1, -1):
        d[planes[k] <= bound] = k
    return d


class RiskModel:
    """Precomputed tables for one ``(object, learning data, loss)`` triple.

    When the expected-loss table has low rank across models (for example when
    ``p_xy`` is affine in an unknown prior), it is stored factored as
    ``A = left @ right`` which cuts the cost of every sweep over ``Z``.
    """

    def __init__(self, obj, ld=None, loss=None, factor=True):
        from .model import LossMatrix

        self.obj = obj
        self.ld = ld if ld is not None else LearningData.trivial(obj.n_models)
        self.loss = loss if loss is not None else LossMatrix.zero_one(obj.n_states)
        if self.ld.p_z.shape[0] != obj.n_models:
            raise ValueError("learning data and object disagree on the number of models")
        if self.loss.w.shape != (obj.n_states, obj.n_states):
            raise ValueError("loss matrix does not match the state set")
        m, nx, ny = obj.p_xy.shape
        self.m, self.nx, self.ny, self.nz = m, nx, ny, self.ld.n_values
        self.A = np.einsum("txy,yk->txk", obj.p_xy, self.loss.w)
        self.p_z = self.ld.p_z
        self.left, self.right = self._factor(factor)
        r = self.right.shape[0]
        self._right_kx = np.ascontiguousarray(self.right.transpose(0, 2, 1)).reshape(r, ny * nx)
        self._right_base = self.right[:, :, 0].sum(axis=1)
        self._right_delta = [np.ascontiguousarray(self.right[:, :, k] - self.right[:, :, 0])
                             for k in range(1, ny)]

    def _factor(self, enabled):
        m, nx, ny = self.A.shape
        flat = self.A.reshape(m, nx * ny)
        if enabled and m >= 4:
            u, s, vt = np.linalg.svd(flat, full_matrices=False)
            tol = max(s[0], 1e-300) * 1e-13
            r = int(np.sum(s > tol))
            if r <= m // 2:
                left = u[:, :r] * s[:r]
                right = vt[:r]
                if np.abs(left @ right - flat).max() <= 1e-14 * max(np.abs(flat).max(), 1e-300):
                    return left, right.reshape(r, nx, ny)
        return np.eye(m), self.A

    # -- decisions --------------------------------------------------------

    def _blocks(self):
        for start in range(0, self.nz, Z_BLOCK):
            yield slice(start, min(start + Z_BLOCK, self.nz))

    def bayes_costs(self, weights, zs=slice(None)):
        """Cost table ``c[k, z, x]`` for the given (unnormalized) weights."""
        v = self.p_z[:, zs].T * weights[None, :]
        c = (v @ self.left) @ self._right_kx
        return c.reshape(-1, self.ny, self.nx).transpose(1, 0, 2)

    def bayes_decisions(self, weights):
        """Deterministic Bayes decisions ``d[x, z]`` for nonnegative weights."""
        weights = check_weights(weights, self.m, normalized=False)
        d = np.empty((self.nx, self.nz), dtype=np.int64)
        for zs in self._blocks():
            d[:, zs] = _argmin_lowest(self.bayes_costs(weights, zs), axis=0).T
        return d

    def weighted_bayes_value(self, weights):
        weights = check_weights(weights, self.m, normalized=False)
        parts = [self.bayes_costs(weights, zs).min(axis=0).sum() for zs in self._blocks()]
        return float(_pairwise_sum(parts))

    def model_bayes_risks(self):
        """``min_q R(q, t)`` per model, computed without learning data."""
        return self.A.min(axis=-1).sum(axis=-1)

    # -- risks ------------------------------------------------------------

    def risks_of_decisions(self, d):
        """Risk vector of the deterministic strategy ``d[x, z]``."""
        parts = []
        for zs in self._blocks():
            dz = d[:, zs]
            # sel[r, z] = sum_x right[r, x, d[x, z]], as a base column plus
            # per-decision corrections so every product goes through BLAS
            sel = np.repeat(self._right_base[:, None], dz.shape[1], axis=1)
            for k in range(1, self.ny):
                sel += self._right_delta[k - 1] @ (dz == k).astype(np.float64)
            b = self.left @ sel
            parts.append((self.p_z[:, zs] * b).sum(axis=1))
        return self._clip(_pairwise_sum(parts))

    def risks_of_table(self, q):
        r = self.right.shape[0]
        flat_right = self.right.reshape(r, -1)
        parts = []
        for zs in self._blocks():
            qz = np.ascontiguousarray(q[:, zs, :].transpose(0, 2, 1)).reshape(self.nx * self.ny, -1)
            b = self.left @ (flat_right @ qz)
            parts.append((self.p_z[:, zs] * b).sum(axis=1))
        return self._clip(_pairwise_sum(parts))

    def _clip(self, r):
        # factored tables can leave rounding residue outside the loss range
        return np.clip(r, self.loss.w.min(), self.loss.w.max())

    def risks(self, q):
        if isinstance(q, Strategy):
            validate_strategy(q, self.obj, self.ld)
            if q.decisions is not None:
                return self.risks_of_decisions(q.decisions)
            return self.risks_of_table(q.q)
        return self.risks_of_table(np.asarray(q))

    def bayes_strategy(self, weights):
        return Strategy.from_decisions(self.bayes_decisions(weights), self.ny)


def _model(obj, ld, loss):
    return RiskModel(obj, ld, loss, factor=False)


def risk(q, theta, obj, ld=None, loss=None):
    """Expected loss of ``q`` under model index ``theta``."""
    return float(_model(obj, ld, loss).risks(q)[theta])


def risk_curve(q, obj, ld=None, loss=None, label=""):
    return RiskCurve(_model(obj, ld, loss).risks(q), label)


def bayes_strategy(weights, obj, ld=None, loss=None):
    """Deterministic strategy minimizing ``sum_t weights[t] R(q, t)``."""
    return _model(obj, ld, loss).bayes_strategy(weights)


def weighted_bayes_value(weights, obj, ld=None, loss=None):
    """``min_q sum_t weights[t] R(q, t)``."""
    return _model(obj, ld, loss).weighted_bayes_value(weights)


def model_bayes_risk(theta, obj, loss=None):
    """Smallest achievable risk under model ``theta``; learning data cannot help here."""
    return float(_model(obj, None, loss).model_bayes_risks()[theta])


def scaled_deviation(q, theta, profile, obj, ld=None, loss=None):
    beta = profile.beta[theta]
    if not beta > 0:
        raise ValueError("beta must be positive")
    return (risk(q, theta, obj, ld, loss) - profile.alpha[theta]) / beta


def risk_curve_csv(curve, obj):
    """CSV rows ``theta_label,theta_param,risk``."""
    lines = ["theta_label,theta_param,risk"]
    for t, label in enumerate(obj.models):
        param = "" if obj.params is None or obj.params[t] is None else f"{obj.params[t]:.10g}"
        lines.append(f"{label},{param},{curve.risks[t]:.10g}")
    return "\n".join(lines) + "\n"
