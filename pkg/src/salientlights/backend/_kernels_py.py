"""Pure-numpy kernels; reference implementation for the compiled extension."""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def pairwise_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IOU matrix between two box arrays of shape (n, 4) and (m, 4).

    Boxes are (x_min, y_min, x_max, y_max). Returns shape (n, m).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 4 or b.ndim != 2 or b.shape[1] != 4:
        raise ValueError("box arrays must have shape (n, 4)")
    ix0 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy0 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix1 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy1 = np.minimum(a[:, None, 3], b[None, :, 3])
    iw = np.maximum(ix1 - ix0, 0.0)
    ih = np.maximum(iy1 - iy0, 0.0)
    inter = iw * ih
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def focal_terms(
    logits: np.ndarray,
    is_object: np.ndarray,
    weights: np.ndarray,
    alpha: float,
    gamma: float,
    eps: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-element weighted focal loss and its derivative w.r.t. the logit.

    ``is_object`` selects whether p_t is sigmoid(z) or sigmoid(-z);
    ``weights`` carries the per-element salience multiplier.
    Returns (loss, dloss_dlogit), both float64 arrays of the input shape.
    """
    z = np.asarray(logits, dtype=np.float64)
    sign = np.where(np.asarray(is_object, dtype=bool), 1.0, -1.0)
    w = np.asarray(weights, dtype=np.float64)
    sz = sign * z
    # p_t = sigmoid(sign * z), q = 1 - p_t computed without cancellation
    p_t = 1.0 / (1.0 + np.exp(-sz))
    q = 1.0 / (1.0 + np.exp(sz))
    clamped = p_t < eps
    p_c = np.where(clamped, eps, p_t)
    q_c = np.where(clamped, 1.0 - eps, q)
    log_p = np.log(p_c)
    amp = alpha * w
    qg = np.power(q_c, gamma)
    loss = -amp * qg * log_p
    # dL/dp_t, with the gamma term dropped entirely at gamma == 0
    if gamma == 0.0:
        dl_dp = -amp / p_c
    else:
        dl_dp = amp * gamma * np.power(q_c, gamma - 1.0) * log_p - amp * qg / p_c
    dp_dz = sign * p_t * q
    grad = np.where(clamped, 0.0, dl_dp * dp_dz)
    return loss, grad


def greedy_assign(order: np.ndarray, ious: np.ndarray, threshold: float) -> np.ndarray:
    """Greedy one-to-one assignment of predictions to ground truths.

    ``order`` lists prediction indices in the order they claim ground
    truths; each takes the free ground truth of highest IOU, if that IOU
    is >= ``threshold``. Returns per-prediction gt index, -1 if unmatched.
    """
    ious = np.asarray(ious, dtype=np.float64)
    n, m = ious.shape
    assign = np.full(n, -1, dtype=np.int64)
    taken = np.zeros(m, dtype=bool)
    for p in order:
        best_j = -1
        best_iou = 0.0
        for j in range(m):
            if taken[j]:
                continue
            v = ious[p, j]
            if v >= threshold and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            assign[p] = best_j
            taken[best_j] = True
    return assign
