"""Global-best particle swarm search over the four tunable classifier thresholds."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .srit2nfis import ADD_RANGE, INTER_RANGE, NOVELTY_RANGE, UPDATE_RANGE, SRIT2NFIS, HyperParams

__all__ = [
    "SEARCH_SPACE",
    "PSOConfig",
    "TuneResult",
    "tune",
    "sweep",
    "write_sweep_csv",
    "stratified_tail_split",
]

SEARCH_SPACE = {
    "add_threshold_init": ADD_RANGE,
    "novelty_threshold": NOVELTY_RANGE,
    "inter_overlap": INTER_RANGE,
    "update_threshold_init": UPDATE_RANGE,
}
_NAMES = tuple(SEARCH_SPACE)
_LO = np.array([SEARCH_SPACE[n][0] for n in _NAMES])
_HI = np.array([SEARCH_SPACE[n][1] for n in _NAMES])


@dataclass(frozen=True)
class PSOConfig:
    iterations: int = 10
    swarm_size: int = 10
    parameter_width: float = 0.2
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    seed: int = 0
    include_default: bool = True
    max_passes: int = 3

    def __post_init__(self):
        if self.iterations < 1 or self.swarm_size < 2:
            raise ValidationError("PSO needs iterations >= 1 and swarm_size >= 2")
        if not 0 < self.parameter_width <= 1:
            raise ValidationError(f"parameter_width must lie in (0, 1], got {self.parameter_width}")


@dataclass
class TuneResult:
    best: HyperParams
    best_accuracy: float
    trace: list[float]
    evaluations: list[tuple[int, int, dict, float]] = field(default_factory=list)


def _as_hyper(position) -> HyperParams:
    return HyperParams(**{n: float(v) for n, v in zip(_NAMES, position)})


def fitness(hyper: HyperParams, train, val, n_classes: int, max_passes: int = 3) -> float:
    """Validation accuracy of a classifier trained from scratch with ``hyper``."""
    Xt, yt = train
    model = SRIT2NFIS(n_classes, Xt.shape[1], hyper)
    model.train(Xt, yt, max_passes=max_passes)
    return model.evaluate(*val)[0]


def tune(train, val, cfg: PSOConfig = PSOConfig(), n_classes: int | None = None) -> TuneResult:
    """Search the threshold space for the best validation accuracy.

    ``train`` and ``val`` are ``(X, labels)`` pairs.  Iteration 1 evaluates
    the initial swarm; each later iteration moves and re-evaluates every
    particle.  Velocities are clamped to ``parameter_width`` times each
    dimension's range and positions to the search space.  With
    ``include_default`` the first particle starts at the default
    thresholds.
    """
    Xt, yt = np.asarray(train[0], float), np.asarray(train[1], int)
    Xv, yv = np.asarray(val[0], float), np.asarray(val[1], int)
    if Xt.shape[0] == 0 or Xv.shape[0] == 0:
        raise ValidationError("PSO needs nonempty training and validation sets")
    n_classes = n_classes or int(max(yt.max(), yv.max()))
    rng = np.random.default_rng(cfg.seed)
    span = _HI - _LO
    vmax = cfg.parameter_width * span
    S = cfg.swarm_size

    pos = _LO + rng.random((S, len(_NAMES))) * span
    if cfg.include_default:
        d = HyperParams()
        pos[0] = [getattr(d, n) for n in _NAMES]
    vel = rng.uniform(-vmax, vmax, size=pos.shape)

    evaluations = []

    def evaluate(it):
        fit = np.empty(S)
        for i in range(S):
            fit[i] = fitness(_as_hyper(pos[i]), (Xt, yt), (Xv, yv), n_classes, cfg.max_passes)
            evaluations.append((it, i, dict(zip(_NAMES, pos[i].tolist())), float(fit[i])))
        return fit

    fit = evaluate(1)
    pbest, pbest_fit = pos.copy(), fit.copy()
    g = int(np.argmax(pbest_fit))
    gbest, gbest_fit = pbest[g].copy(), float(pbest_fit[g])
    trace = [gbest_fit]

    for it in range(2, cfg.iterations + 1):
        r1 = rng.random(pos.shape)
        r2 = rng.random(pos.shape)
        vel = cfg.inertia * vel + cfg.cognitive * r1 * (pbest - pos) + cfg.social * r2 * (gbest - pos)
        vel = np.clip(vel, -vmax, vmax)
        pos = np.clip(pos + vel, _LO, _HI)
        fit = evaluate(it)
        better = fit > pbest_fit
        pbest[better] = pos[better]
        pbest_fit[better] = fit[better]
        g = int(np.argmax(pbest_fit))
        if pbest_fit[g] > gbest_fit:
            gbest, gbest_fit = pbest[g].copy(), float(pbest_fit[g])
        trace.append(gbest_fit)

    return TuneResult(_as_hyper(gbest), gbest_fit, trace, evaluations)


def sweep(train, val, widths, iteration_counts, cfg: PSOConfig = PSOConfig(),
          n_classes: int | None = None) -> list[dict]:
    """Best validation accuracy for each (parameter width, iteration count) cell.

    All cells share ``cfg.seed``, so a run with fewer iterations is a prefix
    of a longer one; each width is therefore searched once for the largest
    count and read off its best-so-far trace.
    """
    widths, iteration_counts = list(widths), list(iteration_counts)
    if not widths or not iteration_counts:
        raise ValidationError("sweep needs nonempty width and iteration grids")
    longest = max(iteration_counts)
    rows = []
    for w in widths:
        res = tune(train, val, replace(cfg, parameter_width=w, iterations=longest), n_classes)
        for n in iteration_counts:
            rows.append({"parameter_width": w, "iterations": n, "accuracy": res.trace[n - 1]})
    return rows


def write_sweep_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["parameter_width", "iterations", "accuracy"])
        writer.writeheader()
        writer.writerows(rows)


def stratified_tail_split(labels, fraction: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Hold out the last ``fraction`` of each class's samples, in original order."""
    labels = np.asarray(labels, int)
    val = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        n_val = int(round(fraction * idx.size))
        if idx.size >= 2:
            n_val = min(max(n_val, 1), idx.size - 1)
        else:
            n_val = 0
        val.extend(idx[idx.size - n_val:].tolist())
    val = np.array(sorted(val), dtype=int)
    train = np.setdiff1d(np.arange(labels.size), val)
    return train, val
