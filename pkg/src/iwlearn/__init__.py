"""Importance weight aware online learning for sparse linear models."""

from .active import ActiveConfig, flip_importance, run_active
from .data import Example, ParseError, SynthSpec, load_dataset, parse_example, synth_generate
from .lambertw import lambert_w, lambert_w_exp
from .learner import (DivergenceError, LearnerConfig, ModelState, RegConfig, Schedule,
                      UpdateRule, effective_mass, evaluate, train_pass)
from .losses import (Loss, LossKind, implicit_scale, invariant_scale, loss_derivative,
                     loss_value, standard_scale)
from .oracle import IntegratorConfig, integrate_scale

__all__ = [
    "ActiveConfig", "DivergenceError", "Example", "IntegratorConfig", "LearnerConfig",
    "Loss", "LossKind", "ModelState", "ParseError", "RegConfig", "Schedule", "SynthSpec",
    "UpdateRule", "effective_mass", "evaluate", "flip_importance", "implicit_scale",
    "integrate_scale", "invariant_scale", "lambert_w", "lambert_w_exp", "load_dataset",
    "loss_derivative", "loss_value", "parse_example", "run_active", "standard_scale",
    "synth_generate", "train_pass",
]
