# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirrors _kernels_py operation for operation."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, pow

cnp.import_array()

BACKEND = "cython"


def pairwise_iou(a, b):
    """IOU matrix between two (n, 4) / (m, 4) box arrays."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bb = np.ascontiguousarray(b, dtype=np.float64)
    if aa.ndim != 2 or aa.shape[1] != 4 or bb.ndim != 2 or bb.shape[1] != 4:
        raise ValueError("box arrays must have shape (n, 4)")
    cdef Py_ssize_t n = aa.shape[0], m = bb.shape[0], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, m), dtype=np.float64)
    cdef double ix0, iy0, ix1, iy1, iw, ih, inter, area_a, area_b, union
    for i in range(n):
        area_a = (aa[i, 2] - aa[i, 0]) * (aa[i, 3] - aa[i, 1])
        for j in range(m):
            ix0 = max(aa[i, 0], bb[j, 0])
            iy0 = max(aa[i, 1], bb[j, 1])
            ix1 = min(aa[i, 2], bb[j, 2])
            iy1 = min(aa[i, 3], bb[j, 3])
            iw = ix1 - ix0
            ih = iy1 - iy0
            if iw < 0.0:
                iw = 0.0
            if ih < 0.0:
                ih = 0.0
            inter = iw * ih
            area_b = (bb[j, 2] - bb[j, 0]) * (bb[j, 3] - bb[j, 1])
            union = area_a + area_b - inter
            if union > 0.0:
                out[i, j] = inter / union
    return out


def focal_terms(logits, is_object, weights, double alpha, double gamma, double eps):
    """Per-element weighted focal loss and its logit derivative."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = np.ascontiguousarray(
        np.asarray(logits, dtype=np.float64).ravel())
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] obj = np.ascontiguousarray(
        np.asarray(is_object, dtype=bool).ravel().view(np.uint8))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(
        np.asarray(weights, dtype=np.float64).ravel())
    cdef Py_ssize_t n = z.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] loss = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.empty(n, dtype=np.float64)
    cdef double sign, sz, p_t, q, p_c, q_c, log_p, amp, qg, dl_dp
    for i in range(n):
        sign = 1.0 if obj[i] else -1.0
        sz = sign * z[i]
        p_t = 1.0 / (1.0 + exp(-sz))
        q = 1.0 / (1.0 + exp(sz))
        if p_t < eps:
            p_c = eps
            q_c = 1.0 - eps
        else:
            p_c = p_t
            q_c = q
        log_p = log(p_c)
        amp = alpha * w[i]
        qg = pow(q_c, gamma)
        loss[i] = -amp * qg * log_p
        if gamma == 0.0:
            dl_dp = -amp / p_c
        else:
            dl_dp = amp * gamma * pow(q_c, gamma - 1.0) * log_p - amp * qg / p_c
        if p_t < eps:
            grad[i] = 0.0
        else:
            grad[i] = dl_dp * sign * p_t * q
    shape = np.asarray(logits, dtype=np.float64).shape
    return loss.reshape(shape), grad.reshape(shape)


def greedy_assign(order, ious, double threshold):
    """Greedy one-to-one assignment; per-prediction gt index, -1 if unmatched."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ordr = np.ascontiguousarray(
        np.asarray(order, dtype=np.int64))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] iou = np.ascontiguousarray(
        np.asarray(ious, dtype=np.float64))
    cdef Py_ssize_t n = iou.shape[0], m = iou.shape[1], k, j, p
    cdef cnp.ndarray[cnp.int64_t, ndim=1] assign = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] taken = np.zeros(m, dtype=np.uint8)
    cdef Py_ssize_t best_j
    cdef double best_iou, v
    for k in range(ordr.shape[0]):
        p = ordr[k]
        best_j = -1
        best_iou = 0.0
        for j in range(m):
            if taken[j]:
                continue
            v = iou[p, j]
            if v >= threshold and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            assign[p] = best_j
            taken[best_j] = 1
    return assign
