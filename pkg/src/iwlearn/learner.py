"""Single-pass online learning for sparse linear models.

Each example ``(x, y, h)`` turns into an effective mass ``k`` (the integral
of the learning rate over the ``h`` virtual presentations of the example),
a scalar scale ``s`` chosen by the update rule, and the update

    w <- (w - s * x) / (1 + k * lambda)

The l2 shrink touches every coordinate, so weights are stored as
``multiplier * v`` and the shrink only changes ``multiplier``.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from . import losses
from .losses import LossKind


class UpdateRule(str, Enum):
    STANDARD = "standard"
    INVARIANT = "invariant"
    IMPLICIT = "implicit"


class DivergenceError(ArithmeticError):
    """Weights or the update scale became non-finite."""

    def __init__(self, message, example_index=None):
        self.example_index = example_index
        if example_index is not None:
            message = f"example {example_index}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Schedule:
    """``eta_t = (mu / xx) * (tau_s / (t + tau_s)) ** power``.

    ``power=0`` gives a constant rate. With ``per_example_norm`` off the
    ``1 / xx`` factor is dropped.
    """

    mu: float
    tau_s: float = 1.0
    power: float = 0.5
    per_example_norm: bool = True

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.tau_s > 0.0:
            raise ValueError(f"tau_s must be positive, got {self.tau_s}")
        if self.power not in (0.0, 0.5, 1.0):
            raise ValueError(f"power must be 0, 0.5 or 1, got {self.power}")

    @classmethod
    def constant(cls, eta):
        return cls(mu=eta, tau_s=1.0, power=0.0, per_example_norm=False)

    @property
    def key(self):
        return f"mu={self.mu:g},tau={self.tau_s:g},p={self.power:g}"


@dataclass(frozen=True)
class RegConfig:
    lam: float = 0.0

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")


@dataclass
class ModelState:
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    multiplier: float = 1.0
    t: int = 0
    pv_loss_sum: float = 0.0
    pv_count: int = 0

    @classmethod
    def zeros(cls, dim=0):
        return cls(weights=np.zeros(dim))

    @property
    def dim(self):
        return self.weights.shape[0]

    def dense_weights(self):
        return self.multiplier * self.weights

    def ensure_dim(self, dim):
        if dim > self.weights.shape[0]:
            grown = np.zeros(max(dim, 2 * self.weights.shape[0]))
            grown[:self.weights.shape[0]] = self.weights
            self.weights = grown

    def copy(self):
        return ModelState(self.weights.copy(), self.multiplier, self.t,
                          self.pv_loss_sum, self.pv_count)

    @property
    def pv_loss(self):
        return self.pv_loss_sum / self.pv_count if self.pv_count else math.nan


@dataclass(frozen=True)
class LearnerConfig:
    kind: LossKind
    rule: UpdateRule = UpdateRule.INVARIANT
    schedule: Schedule = Schedule(mu=1.0)
    reg: RegConfig = RegConfig()
    dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rule", UpdateRule(self.rule))


def schedule_rate(s, t, xx=1.0):
    if t < 1:
        raise ValueError("t starts at 1")
    c = s.mu / xx if s.per_example_norm else s.mu
    if s.power == 0.0:
        return c
    return c * (s.tau_s / (t + s.tau_s)) ** s.power


def _mass_integral(c, base, h, power):
    """``c * integral_0^h (base + u) ** -power du`` in cancellation-free form."""
    if power == 1.0:
        return c * math.log1p(h / base)
    if power == 0.5:
        return c * 2.0 * h / (math.sqrt(base + h) + math.sqrt(base))
    return c * h


def effective_mass(s, t, h, xx=1.0):
    """Integral of the learning rate over ``h`` presentations starting at ``t``."""
    if h == 0.0:
        return 0.0
    c = s.mu / xx if s.per_example_norm else s.mu
    if s.power == 0.0:
        return c * h
    return _mass_integral(c * s.tau_s ** s.power, t + s.tau_s, h, s.power)


def predict(m, x_indices, x_values):
    idx = np.asarray(x_indices)
    if idx.size == 0:
        return 0.0
    inside = idx < m.weights.shape[0]
    if not inside.all():
        idx = idx[inside]
        x_values = np.asarray(x_values)[inside]
    return m.multiplier * float(np.dot(m.weights[idx], x_values))


def compute_scale(rule, kind, p, y, xx, k):
    if rule is UpdateRule.INVARIANT:
        return losses._invariant(kind, p, y, xx, k)
    if rule is UpdateRule.IMPLICIT:
        return losses._implicit(kind, p, y, xx, k)
    return k * losses._derivative(kind, p, y)


def update_example(m, ex, cfg, mass=None):
    """Train ``m`` in place on ``ex`` and return it.

    ``mass`` overrides the schedule-derived effective mass.
    """
    kind = cfg.kind
    y = ex.label
    kind.check_label(y)
    m.ensure_dim(ex.max_index + 1)
    p = predict(m, ex.indices, ex.values)
    try:
        loss = losses._value(kind, p, y)
    except OverflowError:
        loss = math.inf
    m.t += 1
    m.pv_loss_sum += loss
    m.pv_count += 1
    xx = ex.xx
    if xx == 0.0:
        return m
    k = effective_mass(cfg.schedule, m.t, ex.importance, xx) if mass is None else mass
    if k == 0.0:
        return m
    try:
        s = compute_scale(cfg.rule, kind, p, y, xx, k)
    except OverflowError:
        s = math.inf
    if not math.isfinite(s) or not math.isfinite(p - s * xx):
        raise DivergenceError(f"non-finite update (p={p!r}, scale={s!r}, mass={k!r})")
    with np.errstate(over="ignore", invalid="ignore"):
        m.weights[ex.indices] -= (s / m.multiplier) * ex.values
    if not np.all(np.isfinite(m.weights[ex.indices])):
        raise DivergenceError(f"weights overflowed (p={p!r}, scale={s!r})")
    lam = cfg.reg.lam
    if lam > 0.0:
        m.multiplier /= 1.0 + k * lam
        if m.multiplier < 1e-100:
            m.weights *= m.multiplier
            m.multiplier = 1.0
    return m


def train_pass(stream, cfg, model=None):
    """One pass over ``stream``; returns ``(model, progressive validation loss)``.

    The loss is NaN for an empty stream.
    """
    m = ModelState.zeros(cfg.dim) if model is None else model
    for i, ex in enumerate(stream):
        try:
            update_example(m, ex, cfg)
        except DivergenceError as err:
            raise DivergenceError(str(err), example_index=i) from None
        except (ValueError, ArithmeticError) as err:
            raise type(err)(f"example {i}: {err}") from err
    if not np.all(np.isfinite(m.weights)):
        raise DivergenceError("non-finite weights after pass")
    return m, m.pv_loss


def evaluate(m, dataset, kind, boundary=None):
    """Return ``(accuracy, mean loss)``; predictions at the boundary count as positive."""
    if boundary is None:
        boundary = kind.boundary
    correct = 0
    total_loss = 0.0
    for ex in dataset:
        p = predict(m, ex.indices, ex.values)
        correct += (p >= boundary) == (ex.label > boundary)
        total_loss += losses._value(kind, p, ex.label)
    n = len(dataset)
    if n == 0:
        return math.nan, math.nan
    return correct / n, total_loss / n


def regret_sums(T, power):
    """Step-size sums behind the squared-loss regret bounds.

    With ``eta'_t = 1 - exp(-1 / t**power)``:

    * ``power=0.5`` returns ``1/eta'_T + sum eta'_t``;
    * ``power=1`` returns ``(sum (1/eta'_t - 1/eta'_{t-1} - 1), sum eta'_t)``,
      where the first term of the first sum uses ``1/eta'_0 = 0``.
    """
    t = np.arange(1, T + 1, dtype=np.float64)
    steps = -np.expm1(-1.0 / t ** power)
    if power == 0.5:
        return 1.0 / steps[-1] + math.fsum(steps)
    if power == 1.0:
        inv = 1.0 / steps
        diffs = np.diff(inv, prepend=0.0) - 1.0
        return math.fsum(diffs), math.fsum(steps)
    raise ValueError("power must be 0.5 or 1")
