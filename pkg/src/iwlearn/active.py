"""Importance weighted online active learning.

For each unlabeled example the learner asks how much importance an example
with the *other* label would need before the model's decision flips. That
flip importance stands in for the error-rate gap between the current model
and the best model that disagrees with it: a small value means the decision
is fragile and the label is worth buying.

Query rule. Labels are requested with probability ``min(1, c0 / flip_h)``
and queried examples are trained with importance ``h / P`` (capped at
``max_importance``). This is a reconstruction of the IWAL threshold rule
that keeps two properties: query probability proportional to the learning
rate, and importance weights of order ``1 / eta_t``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from . import losses
from .learner import (DivergenceError, ModelState, UpdateRule, predict,
                      schedule_rate, update_example)
from .losses import Loss

SIGNED = (-1.0, 1.0)
BINARY = (0.0, 1.0)


@dataclass(frozen=True)
class ActiveConfig:
    c0: float
    boundary: float = 0.0
    seed: int = 0
    max_importance: float = 1e6

    def __post_init__(self):
        if not self.c0 > 0.0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if not self.max_importance >= 1.0:
            raise ValueError("max_importance must be >= 1")

    @property
    def label_set(self):
        return BINARY if self.boundary == 0.5 else SIGNED


@dataclass(frozen=True)
class QueryDecision:
    g_estimate: float
    flip_importance: float
    query_prob: float
    queried: bool
    applied_importance: float = 0.0
    capped: bool = False


@dataclass
class ActiveResult:
    model: ModelState
    labels_queried: int
    n: int
    cap_events: int
    applied_importance_sum: float

    @property
    def fraction_queried(self):
        return self.labels_queried / self.n if self.n else math.nan


class QueryRandomness:
    """Uniform draws keyed by ``(seed, t)``.

    Draws come from Philox blocks so ``uniform(t)`` does not depend on how
    many draws were taken before.
    """

    BLOCK = 1024

    def __init__(self, seed):
        self.seed = int(seed)
        self._block_id = None
        self._block = None

    def uniform(self, t):
        block_id, offset = divmod(int(t), self.BLOCK)
        if block_id != self._block_id:
            key = (self.seed % 2**64) * 2**64 + block_id
            gen = np.random.Generator(np.random.Philox(key=key))
            self._block = gen.random(self.BLOCK)
            self._block_id = block_id
        return float(self._block[offset])


def alternative_label(p, boundary, label_set):
    """The label on the other side of ``boundary``; ties count as positive predictions."""
    negative, positive = label_set
    return negative if p >= boundary else positive


def _reachable_kink(kind, p, y_a, boundary):
    """False when the invariant path stalls before reaching the boundary."""
    if kind.name is Loss.HINGE:
        stop = y_a
    elif kind.name is Loss.QUANTILE or kind.name is Loss.SQUARED:
        stop = y_a
    elif kind.name is Loss.LOGARITHMIC:
        stop = 1.0 - kind.clip_eps if y_a == 1.0 else kind.clip_eps
    else:
        return True
    # the boundary must lie strictly between p and the stop point
    return (boundary - p) * (stop - boundary) > 0.0


def flip_importance(kind, rule, p, xx, eta_t, y_a, boundary):
    """Smallest importance moving the prediction from ``p`` to ``boundary`` under label ``y_a``.

    Returns ``math.inf`` when no importance reaches the boundary.
    """
    rule = UpdateRule(rule)
    kind.check_label(y_a)
    if p == boundary:
        return 0.0
    target = (p - boundary) / xx   # scale that lands exactly on the boundary
    name = kind.name

    if rule is UpdateRule.STANDARD:
        d = losses._derivative(kind, p, y_a)
        h = target / (eta_t * d) if d != 0.0 else math.inf
        return h if h > 0.0 else math.inf

    if rule is UpdateRule.IMPLICIT and name not in (Loss.HINGE, Loss.QUANTILE):
        # stationarity at the landing point: target = lam * dloss(boundary, y_a)
        d = losses._derivative(kind, boundary, y_a)
        h = target / (eta_t * d) if d != 0.0 else math.inf
        return h if h > 0.0 else math.inf

    if not _reachable_kink(kind, p, y_a, boundary):
        return math.inf
    if name is Loss.SQUARED:
        frac = (p - boundary) / (p - y_a)
        return -math.log1p(-frac) / (eta_t * xx)
    if name is Loss.HINGE or name is Loss.QUANTILE:
        # linear segment: the scale grows at rate dloss(p) per unit mass
        d = losses._derivative(kind, p, y_a)
        return target / (eta_t * d)

    def integrand(u):
        return 1.0 / losses._derivative(kind, p - u * xx, y_a)

    value, _ = integrate.quad(integrand, 0.0, target, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value / eta_t if value > 0.0 else math.inf


def query_probability(flip_h, c0):
    if flip_h <= c0:
        return 1.0
    if math.isinf(flip_h):
        return 0.0
    return c0 / flip_h


def active_step(m, ex, learner_cfg, cfg, rng, t):
    """Decide whether to query ``ex`` (the ``t``-th stream item, from 1) and train on it.

    ``ex.label`` is only read when the label is queried.
    """
    xx = ex.xx
    p = predict(m, ex.indices, ex.values)
    if not math.isfinite(p):
        raise DivergenceError(f"non-finite prediction {p!r}")
    y_a = alternative_label(p, cfg.boundary, cfg.label_set)
    if xx == 0.0:
        flip_h = math.inf
    else:
        eta_t = schedule_rate(learner_cfg.schedule, m.t + 1, xx)
        flip_h = flip_importance(learner_cfg.kind, learner_cfg.rule, p, xx, eta_t, y_a,
                                 cfg.boundary)
    prob = query_probability(flip_h, cfg.c0)
    g = flip_h / t
    if not (prob > 0.0 and rng.uniform(t) < prob):
        return QueryDecision(g, flip_h, prob, False)
    importance = ex.importance / prob
    capped = importance > cfg.max_importance
    if capped:
        importance = cfg.max_importance
    update_example(m, ex.with_label(ex.label, importance), learner_cfg)
    return QueryDecision(g, flip_h, prob, True, importance, capped)


def run_active(stream, learner_cfg, cfg):
    """Fold ``active_step`` over ``stream``."""
    m = ModelState.zeros(learner_cfg.dim)
    rng = QueryRandomness(cfg.seed)
    queried = capped = n = 0
    applied = 0.0
    for n, ex in enumerate(stream, start=1):
        try:
            d = active_step(m, ex, learner_cfg, cfg, rng, n)
        except DivergenceError as err:
            raise DivergenceError(str(err), example_index=n - 1) from None
        queried += d.queried
        capped += d.capped
        applied += d.applied_importance
    if not np.all(np.isfinite(m.weights)):
        raise DivergenceError("non-finite weights after pass")
    return ActiveResult(m, queried, n, capped, applied)
