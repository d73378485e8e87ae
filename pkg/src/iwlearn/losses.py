"""Loss catalog: values, derivatives and update scales.

Every update in this package has the form ``w <- w - s * x`` for a scalar
``s``. The functions here compute that scalar from the current prediction
``p``, the label ``y``, the squared norm ``xx = x.x`` and the effective mass
``k`` (importance times learning rate, or its integral under a decaying
schedule).

Two families of scales are provided:

* ``invariant_scale`` -- the limit of infinitely many infinitesimal gradient
  steps, in closed form for every loss in the catalog. Updating with mass
  ``a`` then ``b`` equals updating once with ``a + b``.
* ``implicit_scale`` -- the proximal step
  ``argmin_w 0.5 |w - w_t|^2 + k * loss(w.x, y)``. Closed form for squared,
  hinge and quantile; bracketed bisection for the rest.
"""

from dataclasses import dataclass
from enum import Enum
import math
from typing import NamedTuple

from .lambertw import lambert_w_exp

DEFAULT_CLIP_EPS = 1e-6

_BISECT_MAX_ITER = 200
_BISECT_TOL = 1e-12


class Loss(str, Enum):
    SQUARED = "squared"
    LOGISTIC = "logistic"
    EXPONENTIAL = "exponential"
    LOGARITHMIC = "logarithmic"
    HELLINGER = "hellinger"
    HINGE = "hinge"
    QUANTILE = "quantile"
    LOGARITHMIC_TANH = "logarithmic_tanh"


SIGNED_LABEL_LOSSES = frozenset({Loss.LOGISTIC, Loss.EXPONENTIAL, Loss.HINGE})
BINARY_LABEL_LOSSES = frozenset({Loss.LOGARITHMIC, Loss.HELLINGER, Loss.LOGARITHMIC_TANH})


class LabelError(ValueError):
    """Label outside the legal set for the loss."""


class RootFindingError(ArithmeticError):
    """Bisection for an implicit update failed to converge."""


@dataclass(frozen=True)
class LossKind:
    """A loss from the catalog plus its parameters.

    ``quantile_tau`` is only meaningful for ``Loss.QUANTILE``; ``clip_eps``
    only for ``Loss.LOGARITHMIC``.
    """

    name: Loss
    quantile_tau: float = 0.5
    clip_eps: float = DEFAULT_CLIP_EPS

    def __post_init__(self):
        object.__setattr__(self, "name", Loss(self.name))
        if not 0.0 <= self.quantile_tau <= 1.0:
            raise ValueError(f"quantile_tau must lie in [0, 1], got {self.quantile_tau}")
        if not 0.0 < self.clip_eps < 0.5:
            raise ValueError(f"clip_eps must lie in (0, 0.5), got {self.clip_eps}")

    @classmethod
    def parse(cls, text, quantile_tau=None):
        """Build from ``"hinge"`` or ``"quantile:0.3"`` style strings."""
        name, _, param = text.partition(":")
        kwargs = {}
        if param:
            kwargs["quantile_tau"] = float(param)
        if quantile_tau is not None:
            kwargs["quantile_tau"] = float(quantile_tau)
        return cls(Loss(name.strip().lower()), **kwargs)

    @property
    def label(self):
        if self.name is Loss.QUANTILE:
            return f"quantile:{self.quantile_tau:g}"
        return self.name.value

    @property
    def binary_labels(self):
        """True when labels are {0, 1}; the decision boundary is then 0.5."""
        return self.name in BINARY_LABEL_LOSSES

    @property
    def boundary(self):
        return 0.5 if self.binary_labels else 0.0

    def check_label(self, y):
        if self.name in SIGNED_LABEL_LOSSES:
            if y != 1.0 and y != -1.0:
                raise LabelError(f"{self.name.value} loss needs labels in {{-1, +1}}, got {y!r}")
        elif self.name in BINARY_LABEL_LOSSES:
            if y != 0.0 and y != 1.0:
                raise LabelError(f"{self.name.value} loss needs labels in {{0, 1}}, got {y!r}")
        elif not math.isfinite(y):
            raise LabelError(f"label must be finite, got {y!r}")


class ScaleInput(NamedTuple):
    """Arguments shared by every scale function, in call order."""

    p: float
    y: float
    xx: float
    k: float

    def validate(self):
        if not self.xx > 0.0:
            raise ValueError(f"xx must be positive, got {self.xx}")
        if not self.k >= 0.0:
            raise ValueError(f"mass k must be non-negative, got {self.k}")
        return self


def _clip(kind, p):
    eps = kind.clip_eps
    return min(max(p, eps), 1.0 - eps)


def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _softplus(z):
    # log(1 + exp(z))
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


def _hellinger_domain(p, y):
    if (y == 1.0 and p <= 0.0) or (y == 0.0 and p >= 1.0):
        raise ValueError(f"hellinger derivative undefined at p={p} for y={y}")


# --- loss values -----------------------------------------------------------

def _value(kind, p, y):
    name = kind.name
    if name is Loss.SQUARED:
        return 0.5 * (y - p) * (y - p)
    if name is Loss.LOGISTIC:
        return _softplus(-y * p)
    if name is Loss.EXPONENTIAL:
        return math.exp(-y * p)
    if name is Loss.LOGARITHMIC:
        pc = _clip(kind, p)
        return -math.log(pc) if y == 1.0 else -math.log1p(-pc)
    if name is Loss.HELLINGER:
        pc = min(max(p, 0.0), 1.0)
        return 2.0 * (1.0 - math.sqrt(pc * y) - math.sqrt((1.0 - pc) * (1.0 - y)))
    if name is Loss.HINGE:
        return max(0.0, 1.0 - y * p)
    if name is Loss.QUANTILE:
        tau = kind.quantile_tau
        return tau * (y - p) if y > p else (1.0 - tau) * (p - y)
    if name is Loss.LOGARITHMIC_TANH:
        # sigma = (1 + tanh p) / 2 = logistic(2p)
        return _softplus(-2.0 * p) if y == 1.0 else _softplus(2.0 * p)
    raise AssertionError(name)


def _derivative(kind, p, y):
    name = kind.name
    if name is Loss.SQUARED:
        return p - y
    if name is Loss.LOGISTIC:
        return -y * _sigmoid(-y * p)
    if name is Loss.EXPONENTIAL:
        return -y * math.exp(-y * p)
    if name is Loss.LOGARITHMIC:
        pc = _clip(kind, p)
        return -1.0 / pc if y == 1.0 else 1.0 / (1.0 - pc)
    if name is Loss.HELLINGER:
        _hellinger_domain(p, y)
        return -1.0 / math.sqrt(p) if y == 1.0 else 1.0 / math.sqrt(1.0 - p)
    if name is Loss.HINGE:
        return -y if y * p < 1.0 else 0.0
    if name is Loss.QUANTILE:
        if y > p:
            return -kind.quantile_tau
        if y < p:
            return 1.0 - kind.quantile_tau
        return 0.0
    if name is Loss.LOGARITHMIC_TANH:
        return math.tanh(p) - 1.0 if y == 1.0 else 1.0 + math.tanh(p)
    raise AssertionError(name)


def loss_value(kind, p, y):
    """Loss at prediction ``p`` and label ``y``.

    Logarithmic loss evaluates at ``p`` clipped to ``[eps, 1 - eps]``;
    Hellinger at ``p`` clipped to ``[0, 1]``.
    """
    kind.check_label(y)
    return _value(kind, p, y)


def loss_derivative(kind, p, y):
    """d loss / dp. Returns 0 at the hinge and quantile corners."""
    kind.check_label(y)
    return _derivative(kind, p, y)


# --- invariant scales ------------------------------------------------------

def _logistic_invariant(p, y, xx, k):
    yp = y * p
    big_k = k * xx
    if yp <= 30.0:
        omega = lambert_w_exp(big_k + yp + math.exp(yp))
        return (yp - math.log(omega)) / (y * xx)
    # exp(yp) is huge: solve d + log1p((K + d) * v) = 0 with v = exp(-yp)
    v = math.exp(-yp)
    d = -math.log1p(big_k * v)
    for _ in range(4):
        g = d + math.log1p((big_k + d) * v)
        d -= g / (1.0 + v / (1.0 + (big_k + d) * v))
    return d / (y * xx)


def _tanh_link_up(p, xx, k):
    """Scale for the tanh-link logarithmic loss with y = 1."""
    big_k = k * xx
    if 2.0 * p <= 40.0:
        omega = lambert_w_exp(math.exp(2.0 * p) + 2.0 * p + 4.0 * big_k)
        # new prediction is log(omega) / 2
        return (p - 0.5 * math.log(omega)) / xx
    # solve expm1(d) + v * d = 4 K v for the increment d of 2p, v = exp(-2p)
    v = math.exp(-2.0 * p)
    d = math.log1p(4.0 * big_k * v)
    for _ in range(6):
        g = math.expm1(d) + v * d - 4.0 * big_k * v
        d -= g / (math.exp(d) + v)
    return -0.5 * d / xx


def tanh_link_log_scale(p, y, xx, k):
    """Invariant scale for logarithmic loss through ``sigma = (1 + tanh p)/2``.

    The ``y = 0`` branch mirrors ``y = 1``: ``s0(p) = -s1(-p)``.
    """
    if y == 1.0:
        return _tanh_link_up(p, xx, k)
    if y == 0.0:
        return -_tanh_link_up(-p, xx, k)
    raise LabelError(f"tanh-link logarithmic loss needs labels in {{0, 1}}, got {y!r}")


def clip_mass_for_log_loss(p, y, xx, k, eps=DEFAULT_CLIP_EPS):
    """Cap the mass so the logarithmic update stops at the clip point.

    Returns ``min(k, k')`` where ``k'`` moves the (clipped) prediction to
    ``1 - eps`` for ``y = 1`` or to ``eps`` for ``y = 0``; 0 if the
    prediction is already there.
    """
    pc = min(max(p, eps), 1.0 - eps)
    target = 1.0 - eps
    if y == 1.0:
        if pc >= target:
            return 0.0
        k_clip = (target * target - pc * pc) / (2.0 * xx)
    elif y == 0.0:
        if pc <= eps:
            return 0.0
        k_clip = (target * target - (1.0 - pc) ** 2) / (2.0 * xx)
    else:
        raise LabelError(f"logarithmic loss needs labels in {{0, 1}}, got {y!r}")
    return min(k, k_clip)


def _invariant(kind, p, y, xx, k):
    if k == 0.0:
        return 0.0
    name = kind.name
    if name is Loss.SQUARED:
        return (p - y) / xx * -math.expm1(-k * xx)
    if name is Loss.LOGISTIC:
        return _logistic_invariant(p, y, xx, k)
    if name is Loss.EXPONENTIAL:
        # (py - log(k xx + e^{py})) / (xx y), rewritten to avoid overflow
        return -_softplus(math.log(k * xx) - p * y) / (xx * y)
    if name is Loss.LOGARITHMIC:
        k = clip_mass_for_log_loss(p, y, xx, k, kind.clip_eps)
        pc = _clip(kind, p)
        if y == 1.0:
            return (pc - math.sqrt(pc * pc + 2.0 * k * xx)) / xx
        return (pc - 1.0 + math.sqrt((1.0 - pc) ** 2 + 2.0 * k * xx)) / xx
    if name is Loss.HELLINGER:
        _hellinger_domain(p, y)
        if y == 1.0:
            return (p - (p ** 1.5 + 1.5 * k * xx) ** (2.0 / 3.0)) / xx
        return (p - 1.0 + ((1.0 - p) ** 1.5 + 1.5 * k * xx) ** (2.0 / 3.0)) / xx
    if name is Loss.HINGE:
        return -y * min(k, max(0.0, 1.0 - y * p) / xx)
    if name is Loss.QUANTILE:
        return _quantile_step(kind.quantile_tau, p, y, xx, k)
    if name is Loss.LOGARITHMIC_TANH:
        return tanh_link_log_scale(p, y, xx, k)
    raise AssertionError(name)


def _quantile_step(tau, p, y, xx, k):
    # gradient step of size k times the slope, stopped at the corner y
    if y > p:
        return -min(tau * k, (y - p) / xx)
    if y < p:
        return min((1.0 - tau) * k, (p - y) / xx)
    return 0.0


def invariant_scale(kind, p, y, xx, k):
    """Importance invariant scale ``s(k)``; apply as ``w <- w - s * x``."""
    kind.check_label(y)
    ScaleInput(p, y, xx, k).validate()
    return _invariant(kind, p, y, xx, k)


# --- implicit scales -------------------------------------------------------

def solve_implicit(derivative, p, xx, lam):
    """Root of ``g(s) = s - lam * derivative(p - s * xx)`` by bisection.

    ``g`` is increasing for convex losses, so ``[0, lam * derivative(p)]``
    (sign-ordered) brackets the root.
    """
    d0 = derivative(p)
    if lam == 0.0 or d0 == 0.0:
        return 0.0
    lo, hi = sorted((0.0, lam * d0))

    def g(s):
        return s - lam * derivative(p - s * xx)

    g_lo, g_hi = g(lo), g(hi)
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid
        if g_mid > 0.0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    else:
        if hi - lo > _BISECT_TOL:
            raise RootFindingError(
                f"implicit update did not converge: bracket [{lo}, {hi}] after "
                f"{_BISECT_MAX_ITER} iterations")
    return lo if abs(g_lo) <= abs(g_hi) else hi


def _implicit(kind, p, y, xx, k):
    if k == 0.0:
        return 0.0
    name = kind.name
    if name is Loss.SQUARED:
        return k * (p - y) / (1.0 + k * xx)
    if name is Loss.HINGE or name is Loss.QUANTILE:
        return _invariant(kind, p, y, xx, k)
    if name is Loss.LOGARITHMIC:
        pc = _clip(kind, p)
        target = 1.0 - kind.clip_eps if y == 1.0 else kind.clip_eps
        if (y == 1.0 and pc >= target) or (y == 0.0 and pc <= target):
            return 0.0
        # mass at which the proximal step lands exactly on the clip point
        k = min(k, (pc - target) / (xx * _derivative(kind, target, y)))
        p = pc
    if name is Loss.HELLINGER:
        _hellinger_domain(p, y)
    return solve_implicit(lambda q: _derivative(kind, q, y), p, xx, k)


def implicit_scale(kind, p, y, xx, k):
    """Scale of the proximal (implicit) step with multiplier ``k``."""
    kind.check_label(y)
    ScaleInput(p, y, xx, k).validate()
    return _implicit(kind, p, y, xx, k)


def standard_scale(kind, p, y, xx, k):
    """Gradient multiplication: ``k * dloss/dp`` at the current prediction."""
    kind.check_label(y)
    return k * _derivative(kind, p, y)
