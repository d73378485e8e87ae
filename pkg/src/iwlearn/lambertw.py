"""Principal branch of the Lambert W function for real arguments.

Two entry points: ``lambert_w(z)`` for ordinary arguments and
``lambert_w_exp(a)`` which returns ``W(exp(a))`` without ever forming
``exp(a)``. The latter is what the logistic and tanh-link scales need, since
their arguments are exponentials of quantities that grow with the step mass.
"""

import math

_MAX_ITER = 64
_BRANCH_POINT = -1.0 / math.e


def lambert_w(z):
    """Return ``w`` with ``w * exp(w) == z`` on the principal branch.

    Halley iteration from ``log(1 + z)`` for ``z > 0``; a square-root series
    start is used on ``[-1/e, 0)``.

    Raises
    ------
    ValueError
        If ``z < -1/e`` or ``z`` is NaN.
    """
    z = float(z)
    if math.isnan(z) or z < _BRANCH_POINT:
        raise ValueError(f"lambert_w: argument {z!r} below branch point -1/e")
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return math.inf
    if z > 1e300:
        # exp(w) would overflow inside Halley; work in log space instead
        return lambert_w_exp(math.log(z))
    if z > 0.0:
        w = math.log1p(z)
    else:
        w = math.sqrt(2.0 * (1.0 + math.e * z)) - 1.0
        if z - _BRANCH_POINT < 1e-300:
            return -1.0
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


def lambert_w_exp(a):
    """Return ``W(exp(a))`` for real ``a`` without overflow.

    Solves ``w + log(w) = a`` by Halley's method. The residual is formed as
    ``(w - a) + log(w)`` so that it stays accurate when ``w`` and ``a`` are
    both large and nearly equal.
    """
    a = float(a)
    if math.isnan(a):
        raise ValueError("lambert_w_exp: NaN argument")
    if a == math.inf:
        return math.inf
    if a < 1.0:
        # exp(a) is small enough to evaluate directly
        return lambert_w(math.exp(a))
    w = a - math.log(a) if a > 3.0 else 1.0 + 0.5 * (a - 1.0)
    for _ in range(_MAX_ITER):
        f = (w - a) + math.log(w)
        fp = 1.0 + 1.0 / w
        fpp = -1.0 / (w * w)
        step = f / (fp - 0.5 * f * fpp / fp)
        w -= step
        if abs(step) <= 1e-16 * w:
            break
    # one Newton polish so the final rounding is against an accurate residual
    w -= ((w - a) + math.log(w)) / (1.0 + 1.0 / w)
    return w
