"""Numerical ground truth for the closed-form scales.

``recursive_scale`` replays ``h`` explicit gradient steps on one example.
``integrate_scale`` integrates ``ds/dk = dloss/dp(p - s * xx)`` from 0 to the
target mass with many small Euler or RK4 substeps.

The integrator carries its own derivative table, compiled with numba, and
shares no code with ``losses``; it is meant to check that module.
"""

from dataclasses import dataclass

import numba
import numpy as np

from .losses import Loss, LossKind, _derivative

EULER = "euler"
RK4 = "rk4"

_CODES = {
    Loss.SQUARED: 0,
    Loss.LOGISTIC: 1,
    Loss.EXPONENTIAL: 2,
    Loss.LOGARITHMIC: 3,
    Loss.HELLINGER: 4,
    Loss.HINGE: 5,
    Loss.QUANTILE: 6,
    Loss.LOGARITHMIC_TANH: 7,
}
# losses whose trajectory stops at a kink (hinge point, quantile corner, log clip)
_KINKED = frozenset({Loss.LOGARITHMIC, Loss.HINGE, Loss.QUANTILE})


@dataclass(frozen=True)
class IntegratorConfig:
    substeps: int = 1_000_000
    method: str = EULER

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.method not in (EULER, RK4):
            raise ValueError(f"unknown method {self.method!r}")


@numba.njit(cache=True)
def _dloss(code, q, y, tau):
    if code == 0:
        return q - y
    if code == 1:
        return -y / (1.0 + np.exp(y * q))
    if code == 2:
        return -y * np.exp(-y * q)
    if code == 3:
        return -1.0 / q if y == 1.0 else 1.0 / (1.0 - q)
    if code == 4:
        return -1.0 / np.sqrt(q) if y == 1.0 else 1.0 / np.sqrt(1.0 - q)
    if code == 5:
        return -y if y * q < 1.0 else 0.0
    if code == 6:
        if y > q:
            return -tau
        if y < q:
            return 1.0 - tau
        return 0.0
    # tanh link: d/dp of -log((1 + tanh p)/2) or -log((1 - tanh p)/2)
    return np.tanh(q) - 1.0 if y == 1.0 else 1.0 + np.tanh(q)


@numba.njit(cache=True)
def _stop_point(code, p, y, eps):
    """Prediction at which the trajectory halts, or NaN for smooth losses."""
    if code == 5:
        return y
    if code == 6:
        return y
    if code == 3:
        return 1.0 - eps if y == 1.0 else eps
    return np.nan


@numba.njit(cache=True)
def _euler(code, p, y, xx, k, n, tau, eps):
    if k == 0.0:
        return 0.0
    if code == 3:
        p = min(max(p, eps), 1.0 - eps)
    stop = _stop_point(code, p, y, eps)
    has_stop = not np.isnan(stop)
    s_stop = (p - stop) / xx
    dk = k / n
    s = 0.0
    for _ in range(n):
        s_new = s + dk * _dloss(code, p - s * xx, y, tau)
        if has_stop and (s - s_stop) * (s_new - s_stop) <= 0.0 and s_new != s:
            # land on the kink instead of stepping past it
            return s_stop
        s = s_new
    return s


@numba.njit(cache=True)
def _rk4(code, p, y, xx, k, n, tau):
    if k == 0.0:
        return 0.0
    dk = k / n
    s = 0.0
    for _ in range(n):
        k1 = _dloss(code, p - s * xx, y, tau)
        k2 = _dloss(code, p - (s + 0.5 * dk * k1) * xx, y, tau)
        k3 = _dloss(code, p - (s + 0.5 * dk * k2) * xx, y, tau)
        k4 = _dloss(code, p - (s + dk * k3) * xx, y, tau)
        s += dk * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return s


@numba.njit(cache=True)
def _euler_many(code, p, y, xx, k, n, tau, eps, out):
    for i in range(p.shape[0]):
        out[i] = _euler(code, p[i], y[i], xx[i], k[i], n, tau, eps)


@numba.njit(cache=True)
def _rk4_many(code, p, y, xx, k, n, tau, out):
    for i in range(p.shape[0]):
        out[i] = _rk4(code, p[i], y[i], xx[i], k[i], n, tau)


def integrate_scale(kind, p, y, xx, k, cfg=IntegratorConfig()):
    """Integrate the scale ODE from mass 0 to ``k``.

    Scalar inputs return a float; array inputs (broadcast together) return an
    array. Kinked losses always use Euler and stop exactly on the kink.
    """
    if np.isscalar(y):
        kind.check_label(y)
    code = _CODES[kind.name]
    arrays = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (p, y, xx, k)))
    scalar = arrays[0].ndim == 0
    p_, y_, xx_, k_ = (np.ascontiguousarray(a).ravel() for a in arrays)
    if np.any(xx_ <= 0.0) or np.any(k_ < 0.0):
        raise ValueError("integrate_scale needs xx > 0 and k >= 0")
    out = np.empty_like(p_)
    if cfg.method == RK4 and kind.name not in _KINKED:
        _rk4_many(code, p_, y_, xx_, k_, cfg.substeps, kind.quantile_tau, out)
    else:
        _euler_many(code, p_, y_, xx_, k_, cfg.substeps, kind.quantile_tau,
                    kind.clip_eps, out)
    if scalar:
        return float(out[0])
    return out.reshape(arrays[0].shape)


def recursive_scale(kind, p, y, xx, eta, h):
    """Scale after ``h`` explicit gradient steps of rate ``eta`` on one example."""
    if h < 0 or int(h) != h:
        raise ValueError(f"h must be a non-negative integer, got {h!r}")
    kind.check_label(y)
    s = 0.0
    for _ in range(int(h)):
        s += eta * _derivative(kind, p - s * xx, y)
    return s


def oracle_derivative(kind, q, y):
    """The integrator's own derivative table, exposed for cross-checks."""
    return float(_dloss(_CODES[kind.name], float(q), float(y), kind.quantile_tau))

