"""Random scale inputs shared by the test modules."""

import numpy as np

from iwlearn.losses import Loss, LossKind

ALL_LOSSES = [Loss(name) for name in Loss]


def kind_for(name, rng):
    if name is Loss.QUANTILE:
        return LossKind(name, quantile_tau=float(rng.uniform(0.1, 0.9)))
    return LossKind(name)


def draw_label(kind, rng):
    if kind.name in (Loss.LOGISTIC, Loss.EXPONENTIAL, Loss.HINGE):
        return float(rng.choice([-1.0, 1.0]))
    if kind.binary_labels:
        return float(rng.choice([0.0, 1.0]))
    return float(rng.uniform(-2.0, 2.0))


def draw_prediction(kind, rng):
    if kind.name in (Loss.LOGARITHMIC, Loss.HELLINGER):
        return float(rng.uniform(0.1, 0.9))
    return float(rng.uniform(-3.0, 3.0))


def draw_inputs(name, n, rng, max_kxx=10.0):
    """``n`` tuples ``(kind, p, y, xx, k)`` with ``k * xx <= max_kxx``."""
    out = []
    for _ in range(n):
        kind = kind_for(name, rng)
        xx = float(rng.uniform(0.5, 4.0))
        k = float(rng.uniform(0.0, max_kxx)) / xx
        out.append((kind, draw_prediction(kind, rng), draw_label(kind, rng), xx, k))
    return out
