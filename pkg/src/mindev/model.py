"""Problem data: objects, learning data, losses, strategies and model-spec I/O.

All tables are numpy float64 arrays with the model axis first:

* ``FiniteObject.p_xy``  -- shape ``(m, nx, ny)``
* ``LearningData.p_z``   -- shape ``(m, nz)``
* ``LossMatrix.w``       -- shape ``(ny, ny)``, indexed ``(true state, decision)``
* ``Strategy.q``         -- shape ``(nx, nz, ny)``
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

NORM_TOL = 1e-9
DEFAULT_CAP = 10**7

REPRESENTATIONS = ("explicit", "iid-product", "multiset", "sufficient-statistic")


class ModelSpecError(ValueError):
    """Raised when a model-spec document cannot be turned into a valid problem."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = list(report or [])


class SizeError(ValueError):
    """Raised when an enumeration would exceed the configured cap."""

    def __init__(self, required, cap):
        super().__init__(f"enumeration needs {required} outcomes, cap is {cap}")
        self.required = required
        self.cap = cap


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteObject:
    signals: tuple
    states: tuple
    models: tuple
    p_xy: np.ndarray
    params: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "p_xy", _frozen(self.p_xy))
        if self.params is not None:
            object.__setattr__(self, "params", tuple(self.params))
        shape = (len(self.models), len(self.signals), len(self.states))
        if self.p_xy.shape != shape:
            raise ValueError(f"p_xy has shape {self.p_xy.shape}, expected {shape}")

    @property
    def n_models(self):
        return len(self.models)

    @property
    def n_signals(self):
        return len(self.signals)

    @property
    def n_states(self):
        return len(self.states)

    def theta_axis(self):
        """Numeric plotting axis: model params if present, else model indices."""
        if self.params is not None and all(p is not None for p in self.params):
            return np.array(self.params, dtype=float)
        return np.arange(self.n_models, dtype=float)


@dataclass(frozen=True, eq=False)
class LearningData:
    """Learning observations ``z`` with per-model probabilities ``p_z``.

    For ``multiset`` data ``counts`` holds one row of per-base-value counts
    per outcome; labels are derived from it lazily because ``nz`` may be
    large.
    """

    p_z: np.ndarray
    labels: tuple | None = None
    representation: str = "explicit"
    n: int | None = None
    counts: np.ndarray | None = field(default=None, repr=False)
    base: "LearningData | None" = field(default=None, repr=False)

    def __post_init__(self):
        p = _frozen(self.p_z)
        if p.ndim != 2:
            raise ValueError("p_z must be a (models, values) table")
        object.__setattr__(self, "p_z", p)
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.counts is not None:
            object.__setattr__(self, "counts", _frozen(self.counts, np.int64))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != p.shape[1]:
                raise ValueError("label count does not match p_z")

    @property
    def n_values(self):
        return self.p_z.shape[1]

    @property
    def values(self):
        if self.labels is not None:
            return self.labels
        if self.counts is not None:
            return tuple(",".join(map(str, row)) for row in self.counts)
        return tuple(f"z{i}" for i in range(self.n_values))

    @classmethod
    def trivial(cls, n_models):
        """No learning data: a single value observed with probability one."""
        return cls(np.ones((n_models, 1)), labels=("-",))


@dataclass(frozen=True, eq=False)
class LossMatrix:
    w: np.ndarray

    def __post_init__(self):
        w = _frozen(self.w)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("loss must be a square table")
        object.__setattr__(self, "w", w)

    @classmethod
    def zero_one(cls, n_states):
        return cls(1.0 - np.eye(n_states))

    def __eq__(self, other):
        return isinstance(other, LossMatrix) and np.array_equal(self.w, other.w)

    __hash__ = None


class Strategy:
    """Randomized decision table ``q[x, z, y']``.

    Deterministic strategies keep their decision indices ``d[x, z]``; the
    dense table is then built only when something asks for it.
    """

    __slots__ = ("_q", "decisions", "n_states")

    def __init__(self, q=None, decisions=None, n_states=None):
        if q is None and (decisions is None or n_states is None):
            raise ValueError("need a table or decisions plus the number of states")
        self._q = None if q is None else _frozen(q)
        if self._q is not None and self._q.ndim != 3:
            raise ValueError("strategy table must have shape (nx, nz, ny)")
        self.decisions = None if decisions is None else _frozen(decisions, np.int64)
        self.n_states = self._q.shape[2] if self._q is not None else int(n_states)

    @property
    def q(self):
        if self._q is None:
            q = np.zeros(self.decisions.shape + (self.n_states,))
            np.put_along_axis(q, self.decisions[..., None], 1.0, axis=-1)
            self._q = _frozen(q)
        return self._q

    @property
    def shape(self):
        if self._q is None:
            return self.decisions.shape + (self.n_states,)
        return self._q.shape

    def __repr__(self):
        kind = "deterministic" if self.decisions is not None else "randomized"
        return f"Strategy({kind}, shape={self.shape})"

    @classmethod
    def from_decisions(cls, decisions, n_states):
        return cls(decisions=decisions, n_states=n_states)

    @classmethod
    def constant(cls, probs, nx, nz):
        probs = np.asarray(probs, dtype=float)
        return cls(np.broadcast_to(probs, (nx, nz, probs.size)))

    def is_deterministic(self):
        return self.decisions is not None or bool(np.all((self.q == 0) | (self.q == 1)))

    def mix(self, other, lam):
        """``lam * self + (1 - lam) * other``."""
        return Strategy(lam * self.q + (1.0 - lam) * other.q)

    def mode(self):
        """Most probable decision per ``(x, z)``; ties go to the lowest index."""
        if self.decisions is not None:
            return np.array(self.decisions)
        return np.argmax(self.q, axis=-1)


@dataclass(frozen=True, eq=False)
class ScalingProfile:
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a, b = _frozen(self.alpha), _frozen(self.beta)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("alpha and beta must be equal-length vectors")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise ValueError("alpha and beta must be finite")
        if np.any(b <= 0):
            raise ValueError("beta must be strictly positive")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def identity(cls, m):
        return cls(np.zeros(m), np.ones(m))


def check_weights(tau, m=None, normalized=True):
    """Validate a weight table and return it as a float array."""
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or (m is not None and tau.size != m):
        raise ValueError(f"weights must be a vector of length {m}")
    if not np.all(np.isfinite(tau)) or np.any(tau < 0):
        raise ValueError("weights must be finite and nonnegative")
    if not np.any(tau > 0):
        raise ValueError("weights are all zero")
    if normalized and abs(tau.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"weights sum to {tau.sum()!r}, not 1")
    return tau


# -- validation ---------------------------------------------------------------


def validate_object(obj, ld=None, loss=None):
    """Return a list of invariant violations (empty when everything is valid).

    Each entry is a dict with ``kind``, ``where`` (index tuple or label) and a
    human-readable ``message``.
    """
    report = []

    def add(kind, where, message):
        report.append({"kind": kind, "where": where, "message": message})

    if obj.n_signals < 1:
        add("size", "signals", "need at least one signal")
    if obj.n_states < 2:
        add("size", "states", "need at least two states")
    if obj.n_models < 1:
        add("size", "models", "need at least one model")

    p = obj.p_xy
    for idx in zip(*np.nonzero(~np.isfinite(p))):
        t, x, y = map(int, idx)
        add("nonfinite", (obj.models[t], obj.signals[x], obj.states[y]),
            f"p_xy{(t, x, y)} is not finite")
    for idx in zip(*np.nonzero(p < 0)):
        t, x, y = map(int, idx)
        add("negative", (obj.models[t], obj.signals[x], obj.states[y]),
            f"p_xy{(t, x, y)} = {p[t, x, y]!r} is negative")
    sums = p.reshape(p.shape[0], -1).sum(axis=1)
    for t, s in enumerate(sums):
        if abs(s - 1.0) > NORM_TOL:
            add("normalization", obj.models[t],
                f"p_xy for model {obj.models[t]!r} sums to {s!r} (deficit {1.0 - s:.12g})")

    if ld is not None:
        pz = ld.p_z
        if pz.shape[0] != obj.n_models:
            add("shape", "p_z", f"p_z has {pz.shape[0]} model rows, object has {obj.n_models}")
        else:
            vals = ld.values if pz.shape[1] <= 10000 else None
            for idx in zip(*np.nonzero(pz < 0)):
                t, z = map(int, idx)
                zl = vals[z] if vals is not None else z
                add("negative", (obj.models[t], zl), f"p_z{(t, z)} = {pz[t, z]!r} is negative")
            for idx in zip(*np.nonzero(~np.isfinite(pz))):
                t, z = map(int, idx)
                add("nonfinite", (obj.models[t], z), f"p_z{(t, z)} is not finite")
            for t, s in enumerate(pz.sum(axis=1)):
                if abs(s - 1.0) > NORM_TOL:
                    add("normalization", obj.models[t],
                        f"p_z for model {obj.models[t]!r} sums to {s!r} (deficit {1.0 - s:.12g})")

    if loss is not None:
        w = loss.w
        if w.shape != (obj.n_states, obj.n_states):
            add("shape", "loss", f"loss has shape {w.shape}, expected {(obj.n_states,) * 2}")
        for idx in zip(*np.nonzero(~np.isfinite(w))):
            add("nonfinite", tuple(map(int, idx)), f"loss{tuple(map(int, idx))} is not finite")
        for idx in zip(*np.nonzero(w < 0)):
            add("negative", tuple(map(int, idx)), f"loss{tuple(map(int, idx))} is negative")
    return report


def validate_strategy(q, obj, ld):
    nz = 1 if ld is None else ld.n_values
    expected = (obj.n_signals, nz, obj.n_states)
    if q.shape != expected:
        raise ValueError(f"strategy has shape {q.shape}, instance needs {expected}")
    if np.any(q.q < 0) or np.any(np.abs(q.q.sum(axis=-1) - 1.0) > NORM_TOL):
        raise ValueError("strategy rows must be probability distributions")


# -- learning data construction ----------------------------------------------


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


def multiset_counts(g, n):
    """All count vectors of length ``g`` summing to ``n``, lexicographically descending."""
    rows = []
    for combo in itertools.combinations_with_replacement(range(g), n):
        c = [0] * g
        for j in combo:
            c[j] += 1
        rows.append(c)
    return np.array(rows, dtype=np.int64).reshape(-1, g)


def iid_product(base, n, mode="multiset", cap=DEFAULT_CAP):
    """Learning data for ``n`` independent draws of a scalar base observation.

    Products are accumulated in log space and exponentiated once.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    g = base.n_values
    logp = _log(base.p_z)
    if mode == "explicit":
        required = g**n
        if required > cap:
            raise SizeError(required, cap)
        idx = np.array(list(itertools.product(range(g), repeat=n)), dtype=np.int64)
        logpz = logp[:, idx].sum(axis=2)
        bl = base.values
        labels = tuple(tuple(bl[i] for i in row) for row in idx)
        return LearningData(np.exp(logpz), labels=labels, representation="iid-product",
                            n=n, base=base)
    if mode == "multiset":
        required = math.comb(g + n - 1, n)
        if required > cap:
            raise SizeError(required, cap)
        counts = multiset_counts(g, n)
        log_coef = math.lgamma(n + 1) - _lgamma_int(counts).sum(axis=1)
        # 0 * log(0) terms must vanish, not produce nan
        with np.errstate(invalid="ignore"):
            terms = np.where(counts[None, :, :] > 0, counts[None, :, :] * logp[:, None, :], 0.0)
        logpz = log_coef[None, :] + terms.sum(axis=2)
        return LearningData(np.exp(logpz), representation="multiset", n=n,
                            counts=counts, base=base)
    raise ValueError(f"unknown mode {mode!r}")


def _lgamma_int(k):
    table = np.array([math.lgamma(i + 1) for i in range(int(k.max()) + 1)])
    return table[k]


def expand_multiset_strategy(q, multiset_ld, explicit_ld):
    """Lift a strategy on multiset outcomes to the ordered-sample outcome set."""
    g = multiset_ld.base.n_values
    index = {tuple(row): i for i, row in enumerate(multiset_ld.counts)}
    base_labels = {lab: j for j, lab in enumerate(explicit_ld.base.values)}
    cols = []
    for sample in explicit_ld.labels:
        c = [0] * g
        for lab in sample:
            c[base_labels[lab]] += 1
        cols.append(index[tuple(c)])
    return Strategy(q.q[:, cols, :])


# -- model-spec documents -----------------------------------------------------

_TOP_FIELDS = {"signals", "states", "models", "p_xy", "learning", "loss"}


def _reject_constant(token):
    raise ValueError(f"non-finite number {token} not allowed")


def _model_entry(entry, i):
    if isinstance(entry, dict):
        extra = set(entry) - {"label", "param"}
        if extra:
            raise ModelSpecError(f"models[{i}]: unexpected field(s) {sorted(extra)}")
        if "label" not in entry:
            raise ModelSpecError(f"models[{i}]: missing field 'label'")
        param = entry.get("param")
        if param is not None and not isinstance(param, (int, float)):
            raise ModelSpecError(f"models[{i}]: 'param' must be a number")
        return str(entry["label"]), None if param is None else float(param)
    return str(entry), None


def _table(value, shape, where):
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelSpecError(f"{where}: not a numeric table ({exc})") from None
    if a.shape != shape:
        raise ModelSpecError(f"{where}: shape {a.shape}, expected {shape}")
    return a


def _renormalize(a):
    """Rescale rows that are within tolerance of summing to one."""
    flat = a.reshape(a.shape[0], -1)
    sums = flat.sum(axis=1)
    # rows off by no more than summation rounding stay as written, which keeps
    # load(emit(load(doc))) identical to load(doc)
    rounding = flat.shape[1] * np.finfo(float).eps
    ok = (np.abs(sums - 1.0) <= NORM_TOL) & (np.abs(sums - 1.0) > rounding)
    out = a.copy()
    for t in np.nonzero(ok & (sums > 0))[0]:
        out[t] = a[t] / sums[t]
    return out


def parse_model_spec(text):
    """Parse a model-spec JSON document into (FiniteObject, LearningData, LossMatrix)."""
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelSpecError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise ModelSpecError(f"parse error: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelSpecError("document must be a JSON object")
    extra = set(doc) - _TOP_FIELDS
    if extra:
        raise ModelSpecError(f"unexpected field(s) {sorted(extra)}")
    for name in ("signals", "states", "models", "p_xy"):
        if name not in doc:
            raise ModelSpecError(f"missing field {name!r}")

    signals = tuple(str(s) for s in doc["signals"])
    states = tuple(str(s) for s in doc["states"])
    entries = [_model_entry(e, i) for i, e in enumerate(doc["models"])]
    models = tuple(e[0] for e in entries)
    params = tuple(e[1] for e in entries)
    if len(set(models)) != len(models):
        raise ModelSpecError("duplicate model labels")
    if any(p is None for p in params):
        params = None

    pxy_doc = doc["p_xy"]
    if not isinstance(pxy_doc, dict):
        raise ModelSpecError("p_xy must map model labels to tables")
    if set(pxy_doc) != set(models):
        missing = sorted(set(models) - set(pxy_doc))
        unknown = sorted(set(pxy_doc) - set(models))
        raise ModelSpecError(f"p_xy keys mismatch: missing {missing}, unknown {unknown}")
    p_xy = np.stack([_table(pxy_doc[m], (len(signals), len(states)), f"p_xy[{m!r}]")
                     for m in models]) if models else np.zeros((0, len(signals), len(states)))
    p_xy = _renormalize(p_xy)

    learning = doc.get("learning")
    if learning is None:
        ld = LearningData.trivial(len(models))
    else:
        if not isinstance(learning, dict) or set(learning) != {"values", "p_z"}:
            raise ModelSpecError("learning must have exactly the fields 'values' and 'p_z'")
        values = tuple(str(v) for v in learning["values"])
        pz_doc = learning["p_z"]
        if not isinstance(pz_doc, dict) or set(pz_doc) != set(models):
            raise ModelSpecError("learning.p_z must have one entry per model label")
        p_z = np.stack([_table(pz_doc[m], (len(values),), f"learning.p_z[{m!r}]") for m in models])
        ld = LearningData(_renormalize(p_z), labels=values)

    if doc.get("loss") is None:
        loss = LossMatrix.zero_one(len(states))
    else:
        loss = LossMatrix(_table(doc["loss"], (len(states), len(states)), "loss"))

    try:
        obj = FiniteObject(signals, states, models, p_xy, params=params)
    except ValueError as exc:
        raise ModelSpecError(str(exc)) from None
    report = validate_object(obj, ld, loss)
    if report:
        lines = "; ".join(r["message"] for r in report)
        raise ModelSpecError(f"validation failed: {lines}", report)
    return obj, ld, loss


def load_model_spec(path):
    with open(path, encoding="utf-8") as fh:
        return parse_model_spec(fh.read())


def emit_model_spec(obj, ld=None, loss=None):
    """Serialize a problem back to a model-spec JSON string."""
    models = []
    for i, label in enumerate(obj.models):
        entry = {"label": label}
        if obj.params is not None and obj.params[i] is not None:
            entry["param"] = obj.params[i]
        models.append(entry)
    doc: dict[str, Any] = {
        "signals": list(obj.signals),
        "states": list(obj.states),
        "models": models,
        "p_xy": {m: obj.p_xy[t].tolist() for t, m in enumerate(obj.models)},
    }
    if ld is not None and ld.n_values > 1:
        doc["learning"] = {
            "values": [str(v) for v in ld.values],
            "p_z": {m: ld.p_z[t].tolist() for t, m in enumerate(obj.models)},
        }
    if loss is not None:
        doc["loss"] = loss.w.tolist()
    return json.dumps(doc, indent=1)


# -- strategy documents -------------------------------------------------------


def strategy_to_doc(q, obj, ld):
    zl = [str(v) for v in ld.values]
    return {str(x): {zl[j]: q.q[i, j].tolist() for j in range(len(zl))}
            for i, x in enumerate(obj.signals)}


def strategy_from_doc(doc, obj, ld):
    """Build a Strategy from ``{"x": {"z": [prob per decision]}}``."""
    zl = [str(v) for v in ld.values]
    xl = [str(x) for x in obj.signals]
    if not isinstance(doc, dict) or set(doc) != set(xl):
        raise ValueError("strategy document must have one entry per signal label")
    q = np.empty((len(xl), len(zl), obj.n_states))
    for i, x in enumerate(xl):
        row = doc[x]
        if not isinstance(row, dict) or set(row) != set(zl):
            raise ValueError(f"strategy entry {x!r} must have one entry per learning value")
        for j, z in enumerate(zl):
            probs = np.asarray(row[z], dtype=float)
            if probs.shape != (obj.n_states,):
                raise ValueError(f"strategy[{x!r}][{z!r}] needs {obj.n_states} probabilities")
            q[i, j] = probs
    s = Strategy(q)
    validate_strategy(s, obj, ld)
    return s


def dump_strategy(q, obj, ld):
    return json.dumps(strategy_to_doc(q, obj, ld), indent=1)


def labels_as_str(seq: Sequence) -> list[str]:
    return [str(s) for s in seq]
