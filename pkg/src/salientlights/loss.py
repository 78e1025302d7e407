"""Focal loss, its salience-weighted variant, and analytic gradients.

The classification loss is -alpha * w * (1 - p_t)^gamma * log(p_t) with
w = omega when the candidate's nearest ground truth is salient and 1
otherwise. Scalar entry points here are the reference definitions; the
array kernels in ``backend`` follow the same formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

OBJECT = "object"
BACKGROUND = "background"


@dataclass(frozen=True)
class LossParams:
    """Hyperparameters of the weighted focal loss."""

    alpha: float = 0.25
    gamma: float = 2.0
    omega: float = 4.0
    epsilon: float = 1e-12

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not (math.isfinite(self.omega) and self.omega >= 1):
            raise ValueError(f"omega must be >= 1, got {self.omega}")
        if not 0 < self.epsilon <= 1e-6:
            raise ValueError(f"epsilon must be in (0, 1e-6], got {self.epsilon}")


@dataclass(frozen=True)
class ClassTarget:
    """Classification target for one candidate."""

    label: str  # OBJECT or BACKGROUND
    salient: bool = False

    def __post_init__(self):
        if self.label not in (OBJECT, BACKGROUND):
            raise ValueError(f"label must be {OBJECT!r} or {BACKGROUND!r}, "
                             f"got {self.label!r}")


def focal_loss(p_t: float, params: LossParams) -> float:
    """-alpha * (1 - p_t)^gamma * log(p_t), with p_t clamped to [epsilon, 1]."""
    if not math.isfinite(p_t):
        raise ValueError(f"p_t must be finite, got {p_t}")
    p = min(max(p_t, params.epsilon), 1.0)
    return -params.alpha * (1.0 - p) ** params.gamma * math.log(p)


def salience_focal_loss(p_t: float, salient: bool, params: LossParams) -> float:
    """Focal loss scaled by omega when the nearest ground truth is salient."""
    base = focal_loss(p_t, params)
    return params.omega * base if salient else base


def focal_grad_logit(logit: float, target: ClassTarget,
                     params: LossParams) -> tuple[float, float]:
    """Salience-weighted focal loss through a sigmoid link, with its exact
    derivative with respect to the logit.

    p = sigmoid(logit); p_t = p for an object target, 1 - p for background.
    """
    if not math.isfinite(logit):
        raise ValueError(f"logit must be finite, got {logit}")
    sign = 1.0 if target.label == OBJECT else -1.0
    sz = sign * logit
    p_t = 1.0 / (1.0 + math.exp(-sz))
    q = 1.0 / (1.0 + math.exp(sz))  # 1 - p_t without cancellation
    w = params.omega if target.salient else 1.0
    amp = params.alpha * w
    if p_t < params.epsilon:
        p_c, q_c = params.epsilon, 1.0 - params.epsilon
        clamped = True
    else:
        p_c, q_c = p_t, q
        clamped = False
    log_p = math.log(p_c)
    loss = -amp * q_c ** params.gamma * log_p
    if clamped:
        return loss, 0.0
    if params.gamma == 0.0:
        dl_dp = -amp / p_c
    else:
        dl_dp = (amp * params.gamma * q_c ** (params.gamma - 1.0) * log_p
                 - amp * q_c ** params.gamma / p_c)
    return loss, dl_dp * sign * p_t * q


def box_l1_loss(pred, gt) -> tuple[float, tuple[float, float, float, float]]:
    """Sum of absolute coordinate differences and its subgradient w.r.t.
    the predicted coordinates (0 at exact equality)."""
    pc = pred.as_tuple()
    gc = gt.as_tuple()
    loss = 0.0
    grad = []
    for p, g in zip(pc, gc):
        d = p - g
        loss += abs(d)
        grad.append(0.0 if d == 0 else math.copysign(1.0, d))
    return loss, tuple(grad)
