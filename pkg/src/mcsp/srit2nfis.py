"""Self-regulated interval type-2 neuro-fuzzy classifier (SRIT2NFIS).

Five layers: inputs, interval type-2 Gaussian memberships with an uncertain
mean, product firing of the lower and upper envelopes, Nie-Tan reduction
``(1 - alpha) * lower + alpha * upper`` and a normalized weighted sum of rule
consequents.  Learning is sequential: each sample either grows a rule,
updates the consequents, is deleted, or is reserved for a later pass, and
persistently silent rules are pruned.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import kernels
from .errors import ValidationError

__all__ = [
    "HyperParams",
    "IT2GaussianMF",
    "Rule",
    "Prediction",
    "LearnResult",
    "TrainingReport",
    "SRIT2NFIS",
    "encode_target",
    "hinge_error",
    "spherical_potential",
    "predict",
    "learn_sample",
    "train",
    "evaluate",
    "GREW",
    "UPDATED",
    "DELETED",
    "RESERVED",
]

GREW = "grew_rule"
UPDATED = "updated_params"
DELETED = "deleted_sample"
RESERVED = "reserved_sample"
ACTIONS = (GREW, UPDATED, DELETED, RESERVED)

ADD_RANGE = (1.01, 1.20)
NOVELTY_RANGE = (0.01, 0.60)
INTER_RANGE = (0.1, 0.4)
UPDATE_RANGE = (0.04, 0.2)

# share of sigma used as the half-width of a new rule's uncertain mean
MEAN_SPREAD = 0.05


@dataclass(frozen=True)
class HyperParams:
    add_threshold_init: float = 1.10
    novelty_threshold: float = 0.30
    inter_overlap: float = 0.25
    update_threshold_init: float = 0.10
    intra_overlap: float = 0.95
    gamma: float = 0.99
    prune_threshold: float = 0.01
    prune_window: int = 10
    delete_threshold: float = 0.05
    regularization: float = 0.01
    alpha: float = 0.5

    def __post_init__(self):
        for name, (lo, hi) in (
            ("add_threshold_init", ADD_RANGE),
            ("novelty_threshold", NOVELTY_RANGE),
            ("inter_overlap", INTER_RANGE),
            ("update_threshold_init", UPDATE_RANGE),
        ):
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ValidationError(f"{name}={v} outside [{lo}, {hi}]")
        fixed = HyperParams.__dataclass_fields__
        for name in ("intra_overlap", "gamma", "prune_threshold", "prune_window",
                     "delete_threshold", "regularization", "alpha"):
            if getattr(self, name) != fixed[name].default:
                raise ValidationError(f"{name} is fixed at {fixed[name].default}")

    TUNABLE = ("add_threshold_init", "novelty_threshold", "inter_overlap", "update_threshold_init")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown hyperparameter(s): {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class IT2GaussianMF:
    """Gaussian with mean anywhere in ``[mean_lo, mean_hi]`` and fixed ``sigma``."""

    mean_lo: float
    mean_hi: float
    sigma: float

    def __post_init__(self):
        if not self.mean_lo <= self.mean_hi:
            raise ValidationError("mean_lo must not exceed mean_hi")
        if not self.sigma > 0:
            raise ValidationError("sigma must be positive")

    def upper(self, x: float) -> float:
        if x < self.mean_lo:
            d = x - self.mean_lo
        elif x > self.mean_hi:
            d = x - self.mean_hi
        else:
            return 1.0
        return float(np.exp(-0.5 * d * d / self.sigma ** 2))

    def lower(self, x: float) -> float:
        m = self.mean_hi if x <= 0.5 * (self.mean_lo + self.mean_hi) else self.mean_lo
        return float(np.exp(-0.5 * (x - m) ** 2 / self.sigma ** 2))


@dataclass
class Rule:
    id: int
    mfs: list[IT2GaussianMF]
    weights: np.ndarray
    class_assoc: int
    age: int
    recent_contribution: list[float]

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (mf.mean_lo + mf.mean_hi) for mf in self.mfs])


@dataclass
class Prediction:
    label: int
    y: np.ndarray
    firing: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    fired: bool

    @property
    def normalized_firing(self) -> np.ndarray:
        total = self.firing.sum()
        return self.firing / total if self.fired else np.zeros_like(self.firing)


@dataclass
class LearnResult:
    action: str
    pruned: list[int]
    abs_max_error: float
    potential: float
    predicted: int
    fired: bool


@dataclass
class TrainingReport:
    counts: dict
    pass_counts: list[dict]
    n_rules: int
    add_threshold_trace: list[float]
    update_threshold_trace: list[float]
    pruned: list[int]
    reserve_remaining: list[tuple[np.ndarray, int]]
    n_passes: int

    @property
    def grew(self) -> int:
        return self.counts.get(GREW, 0)

    def summary(self) -> dict:
        return {
            "counts": dict(self.counts),
            "pass_counts": [dict(c) for c in self.pass_counts],
            "n_rules": self.n_rules,
            "n_passes": self.n_passes,
            "pruned": list(self.pruned),
            "reserve_remaining": len(self.reserve_remaining),
            "add_threshold_final": self.add_threshold_trace[-1],
            "update_threshold_final": self.update_threshold_trace[-1],
        }


def encode_target(c: int, n_classes: int) -> np.ndarray:
    """+1 at the class position, -1 elsewhere."""
    if not 1 <= c <= n_classes:
        raise ValidationError(f"class {c} outside 1..{n_classes}")
    t = -np.ones(n_classes)
    t[c - 1] = 1.0
    return t


def hinge_error(y, target) -> tuple[np.ndarray, float]:
    """Zero where the margin ``y_j * t_j`` exceeds 1, else ``t_j - y_j``."""
    y = np.asarray(y, float)
    target = np.asarray(target, float)
    if y.shape != target.shape:
        raise ValidationError("output and target lengths differ")
    e = np.where(y * target > 1.0, 0.0, target - y)
    return e, float(np.max(np.abs(e))) if e.size else 0.0


class SRIT2NFIS:
    """Evolving rule base plus adaptive learning thresholds."""

    def __init__(self, n_classes: int, dim: int, hyper: HyperParams | None = None):
        if n_classes < 1 or dim < 1:
            raise ValidationError("n_classes and dim must be positive")
        self.n_classes = n_classes
        self.dim = dim
        self.hyper = hyper or HyperParams()
        self.add_threshold = self.hyper.add_threshold_init
        self.update_threshold = self.hyper.update_threshold_init
        self.mean_lo = np.zeros((0, dim))
        self.mean_hi = np.zeros((0, dim))
        self.sigma = np.zeros((0, dim))
        self.weights = np.zeros((0, n_classes))
        self.class_assoc = np.zeros(0, dtype=int)
        self.rule_ids = np.zeros(0, dtype=int)
        self.born = np.zeros(0, dtype=int)
        self.contrib: list[deque] = []
        self.reserve_queue: list[tuple[np.ndarray, int]] = []
        self.classes_seen: set[int] = set()
        self.n_seen = 0
        self.next_rule_id = 0
        self._mean = np.zeros(dim)
        self._m2 = np.zeros(dim)

    # -- structure -------------------------------------------------------

    @property
    def n_rules(self) -> int:
        return self.rule_ids.size

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.mean_lo + self.mean_hi)

    @property
    def rules(self) -> list[Rule]:
        out = []
        for r in range(self.n_rules):
            mfs = [IT2GaussianMF(float(a), float(b), float(s))
                   for a, b, s in zip(self.mean_lo[r], self.mean_hi[r], self.sigma[r])]
            out.append(Rule(int(self.rule_ids[r]), mfs, self.weights[r].copy(), int(self.class_assoc[r]),
                            self.n_seen - int(self.born[r]), list(self.contrib[r])))
        return out

    def add_rule(self, mean_lo, mean_hi, sigma, weights, class_assoc: int) -> int:
        """Append a rule and return its id."""
        mean_lo = np.broadcast_to(np.asarray(mean_lo, float), (self.dim,))
        mean_hi = np.broadcast_to(np.asarray(mean_hi, float), (self.dim,))
        sigma = np.broadcast_to(np.asarray(sigma, float), (self.dim,))
        if np.any(mean_lo > mean_hi) or np.any(sigma <= 0):
            raise ValidationError("rule needs mean_lo <= mean_hi and sigma > 0")
        rid = self.next_rule_id
        self.next_rule_id += 1
        self.mean_lo = np.vstack([self.mean_lo, mean_lo])
        self.mean_hi = np.vstack([self.mean_hi, mean_hi])
        self.sigma = np.vstack([self.sigma, sigma])
        self.weights = np.vstack([self.weights, np.asarray(weights, float)])
        self.class_assoc = np.append(self.class_assoc, class_assoc)
        self.rule_ids = np.append(self.rule_ids, rid)
        self.born = np.append(self.born, self.n_seen)
        self.contrib.append(deque(maxlen=self.hyper.prune_window))
        return rid

    def _remove(self, rows):
        keep = np.setdiff1d(np.arange(self.n_rules), rows)
        self.mean_lo = self.mean_lo[keep]
        self.mean_hi = self.mean_hi[keep]
        self.sigma = self.sigma[keep]
        self.weights = self.weights[keep]
        self.class_assoc = self.class_assoc[keep]
        self.rule_ids = self.rule_ids[keep]
        self.born = self.born[keep]
        self.contrib = [self.contrib[i] for i in keep]

    # -- inference -------------------------------------------------------

    def _infer(self, x):
        if self.n_rules == 0:
            empty = np.zeros(0)
            return empty, empty, empty, np.zeros(self.n_classes), 0.0
        return kernels.infer(x, self.mean_lo, self.mean_hi, self.sigma, self.weights, self.hyper.alpha)

    def _check_x(self, x):
        x = np.asarray(x, float).ravel()
        if x.size != self.dim:
            raise ValidationError(f"input has {x.size} features, model expects {self.dim}")
        return x

    def predict(self, x) -> Prediction:
        """Class, output vector and per-rule reduced firing for one input."""
        x = self._check_x(x)
        if self.n_rules == 0:
            raise ValidationError("model has no rules")
        lower, upper, h, y, total = self._infer(x)
        fired = total >= kernels.UNDERFLOW
        label = int(np.argmax(y)) + 1 if fired else 1
        return Prediction(label, y, h, lower, upper, fired)

    def predict_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.dim:
            raise ValidationError(f"inputs have {X.shape[1]} features, model expects {self.dim}")
        if self.n_rules == 0:
            raise ValidationError("model has no rules")
        Y, totals = kernels.infer_batch(X, self.mean_lo, self.mean_hi, self.sigma, self.weights, self.hyper.alpha)
        labels = np.argmax(Y, axis=1) + 1
        labels[totals < kernels.UNDERFLOW] = 1
        return labels

    def _potential(self, x, c, h) -> float:
        rows = np.flatnonzero(self.class_assoc == c)
        if rows.size == 0:
            return 0.0
        hc = h[rows]
        peak = hc.max()
        if not peak > 0:
            return 0.0
        rows = rows[hc > 0.1 * peak]
        d2 = np.sum((x - self.centers[rows]) ** 2, axis=1)
        s = self.sigma[rows].mean(axis=1)
        return float(np.mean(np.exp(-d2 / (2 * s * s))))

    def spherical_potential(self, x, c: int) -> float:
        """Mean Gaussian-kernel similarity of ``x`` to the strongly firing class-``c`` rules.

        A rule counts when its reduced firing exceeds a tenth of the largest
        firing among class-``c`` rules.  Returns 0 when there are none.
        """
        x = self._check_x(x)
        _, _, h, _, _ = self._infer(x)
        return self._potential(x, c, h)

    # -- learning --------------------------------------------------------

    def _observe(self, x):
        self.n_seen += 1
        delta = x - self._mean
        self._mean += delta / self.n_seen
        self._m2 += delta * (x - self._mean)

    def _input_spread(self) -> float:
        if self.n_seen < 2:
            return 1.0
        s = float(np.mean(np.sqrt(self._m2 / self.n_seen)))
        return s if s > 0 else 1.0

    def _new_width(self, x, c) -> float:
        hp = self.hyper
        fallback = 0.5 * self._input_spread()
        if self.n_rules:
            dist = np.linalg.norm(self.centers - x, axis=1)
            same = self.class_assoc == c
        else:
            dist = np.zeros(0)
            same = np.zeros(0, dtype=bool)
        if not same.any():
            return fallback
        width = hp.intra_overlap * dist[same].min()
        if (~same).any():
            width = min(width, hp.inter_overlap * dist[~same].min())
        if not width > 1e-8 * fallback:
            width = fallback
        return width

    def _grow(self, x, c):
        width = self._new_width(x, c)
        half = MEAN_SPREAD * width
        return self.add_rule(x - half, x + half, width, encode_target(c, self.n_classes), c)

    def _update(self, h, total, e):
        hp = self.hyper
        hn = h / total
        active = hn > hp.prune_threshold
        denom = np.sum(hn[active] ** 2) + hp.regularization
        self.weights[active] += np.outer(hn[active], e) / denom

    def _prune(self, c, h, total, fired) -> list[int]:
        hp = self.hyper
        rows = np.flatnonzero(self.class_assoc[: h.size] == c)
        for r in rows:
            self.contrib[r].append(h[r] / total if fired else 0.0)
        starved = [
            r for r in rows
            if len(self.contrib[r]) == hp.prune_window and max(self.contrib[r]) < hp.prune_threshold
        ]
        removed = []
        for r in starved:
            cls = self.class_assoc[r]
            remaining = np.sum(self.class_assoc == cls) - sum(self.class_assoc[q] == cls for q in removed)
            if remaining > 1:
                removed.append(r)
        ids = [int(self.rule_ids[r]) for r in removed]
        if removed:
            self._remove(removed)
        return ids

    def learn_sample(self, x, c: int) -> LearnResult:
        x = self._check_x(x)
        hp = self.hyper
        t = encode_target(c, self.n_classes)
        self._observe(x)
        self.classes_seen.add(int(c))

        _, _, h, y, total = self._infer(x)
        fired = total >= kernels.UNDERFLOW
        predicted = int(np.argmax(y)) + 1 if fired else 1
        e, abs_max = hinge_error(y, t)
        psi = self._potential(x, c, h) if fired else 0.0
        novelty = 1.0 - psi

        if not fired or (
            predicted != c and abs_max >= self.add_threshold and novelty >= hp.novelty_threshold
        ):
            self._grow(x, c)
            self.add_threshold = float(np.clip(
                hp.gamma * self.add_threshold + (1 - hp.gamma) * abs_max, *ADD_RANGE))
            action = GREW
        elif predicted == c and abs_max >= self.update_threshold:
            self._update(h, total, e)
            self.update_threshold = float(np.clip(
                hp.gamma * self.update_threshold + (1 - hp.gamma) * abs_max, *UPDATE_RANGE))
            action = UPDATED
        elif abs_max < hp.delete_threshold:
            action = DELETED
        else:
            self.reserve_queue.append((x.copy(), int(c)))
            action = RESERVED

        pruned = self._prune(c, h, total, fired)
        return LearnResult(action, pruned, abs_max, psi, predicted, fired)

    def train(self, X, labels, max_passes: int = 3) -> TrainingReport:
        """One sequential pass, then up to ``max_passes - 1`` passes over the reserve queue.

        Stops early once a reserve pass fails to shrink the queue; whatever
        is left is returned in the report.
        """
        X = np.atleast_2d(np.asarray(X, float))
        labels = np.asarray(labels, dtype=int)
        if X.shape[0] == 0 or X.shape[0] != labels.size:
            raise ValidationError("need a nonempty sample list with one label per sample")
        if labels.min() < 1 or labels.max() > self.n_classes:
            raise ValidationError(f"labels must lie in 1..{self.n_classes}")
        if max_passes < 1:
            raise ValidationError("max_passes must be >= 1")
        totals = Counter({a: 0 for a in ACTIONS})
        pass_counts = []
        add_trace = [self.add_threshold]
        upd_trace = [self.update_threshold]
        pruned = []

        def run(batch):
            counts = Counter({a: 0 for a in ACTIONS})
            for x, c in batch:
                res = self.learn_sample(x, c)
                counts[res.action] += 1
                pruned.extend(res.pruned)
                add_trace.append(self.add_threshold)
                upd_trace.append(self.update_threshold)
            totals.update(counts)
            pass_counts.append(dict(counts))

        run(zip(X, labels))
        n_passes = 1
        while n_passes < max_passes and self.reserve_queue:
            pending, self.reserve_queue = self.reserve_queue, []
            run(pending)
            n_passes += 1
            if len(self.reserve_queue) >= len(pending):
                break
        return TrainingReport(dict(totals), pass_counts, self.n_rules, add_trace, upd_trace,
                              pruned, list(self.reserve_queue), n_passes)

    def evaluate(self, X, labels) -> tuple[float, np.ndarray]:
        """Accuracy and confusion matrix (rows are true classes)."""
        labels = np.asarray(labels, dtype=int)
        if labels.size == 0:
            raise ValidationError("evaluate needs at least one sample")
        pred = self.predict_batch(X)
        conf = np.zeros((self.n_classes, self.n_classes), dtype=int)
        np.add.at(conf, (labels - 1, pred - 1), 1)
        return float(np.trace(conf) / labels.size), conf


# functional aliases matching the operation names used elsewhere
def predict(model: SRIT2NFIS, x) -> Prediction:
    return model.predict(x)


def spherical_potential(model: SRIT2NFIS, x, c: int) -> float:
    return model.spherical_potential(x, c)


def learn_sample(model: SRIT2NFIS, x, c: int) -> LearnResult:
    return model.learn_sample(x, c)


def train(model: SRIT2NFIS, X, labels, max_passes: int = 3) -> TrainingReport:
    return model.train(X, labels, max_passes)


def evaluate(model: SRIT2NFIS, X, labels) -> tuple[float, np.ndarray]:
    return model.evaluate(X, labels)
