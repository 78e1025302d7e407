"""Box geometry: IOU, evaluation-time greedy matching, and the
nearest-ground-truth salience weight lookup used by the loss."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .dataset import BBox, ParseError

PREDICTION_FIELDS = {"frame_id", "detections"}
DETECTION_FIELDS = {"x_min", "y_min", "x_max", "y_max", "confidence"}


@dataclass(frozen=True)
class Detection:
    """A predicted box with confidence in [0, 1]."""

    box: BBox
    confidence: float


@dataclass
class MatchResult:
    matches: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_predictions: list[int] = field(default_factory=list)
    unmatched_ground_truths: list[int] = field(default_factory=list)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    ix0 = max(a.x_min, b.x_min)
    iy0 = max(a.y_min, b.y_min)
    ix1 = min(a.x_max, b.x_max)
    iy1 = min(a.y_max, b.y_max)
    iw = max(ix1 - ix0, 0.0)
    ih = max(iy1 - iy0, 0.0)
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def boxes_array(boxes) -> np.ndarray:
    """Stack BBox instances (or 4-tuples) into an (n, 4) float64 array."""
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=np.float64)
    rows = [b.as_tuple() if isinstance(b, BBox) else tuple(b) for b in boxes]
    return np.asarray(rows, dtype=np.float64)


def greedy_match(preds: list[Detection], gts: list[tuple[BBox, bool]],
                 iou_threshold: float = 0.5) -> MatchResult:
    """Match predictions to ground truths greedily.

    Predictions claim ground truths in descending confidence (ties by
    lower input index); each takes the free ground truth of highest IOU
    provided that IOU >= iou_threshold.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    n, m = len(preds), len(gts)
    result = MatchResult()
    if n == 0 or m == 0:
        result.unmatched_predictions = list(range(n))
        result.unmatched_ground_truths = list(range(m))
        return result
    order = sorted(range(n), key=lambda i: (-preds[i].confidence, i))
    ious = backend.pairwise_iou(boxes_array([p.box for p in preds]),
                                boxes_array([g[0] for g in gts]))
    assign = backend.greedy_assign(np.asarray(order, dtype=np.int64), ious,
                                   iou_threshold)
    matched_gts = set()
    for i in order:
        j = int(assign[i])
        if j >= 0:
            result.matches.append((i, j, float(ious[i, j])))
            matched_gts.add(j)
        else:
            result.unmatched_predictions.append(i)
    result.unmatched_predictions.sort()
    result.unmatched_ground_truths = [j for j in range(m) if j not in matched_gts]
    return result


def nearest_gt(box: BBox, gts: list[BBox]) -> int | None:
    """Index of the ground truth nearest to ``box``.

    Nearest means highest IOU; if every IOU is zero, smallest Euclidean
    center distance. Ties break to the lowest index. None when empty.
    """
    if not gts:
        return None
    best_i, best_iou = 0, -1.0
    for i, g in enumerate(gts):
        v = iou(box, g)
        if v > best_iou:
            best_i, best_iou = i, v
    if best_iou > 0.0:
        return best_i
    cx, cy = box.center
    best_i, best_d = 0, math.inf
    for i, g in enumerate(gts):
        gx, gy = g.center
        d = math.hypot(cx - gx, cy - gy)
        if d < best_d:
            best_i, best_d = i, d
    return best_i


def salience_weight(box: BBox, gts: list[tuple[BBox, bool]],
                    omega: float) -> float:
    """Loss multiplier: omega when the nearest ground truth is salient,
    1 otherwise (including frames without ground truths)."""
    if omega < 1.0:
        raise ValueError(f"omega must be >= 1, got {omega}")
    idx = nearest_gt(box, [g[0] for g in gts])
    if idx is not None and gts[idx][1]:
        return omega
    return 1.0


def parse_predictions(text: str) -> dict[str, list[Detection]]:
    """Parse the JSON-lines predictions format into per-frame detections."""
    out: dict[str, list[Detection]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(line_no, f"invalid JSON: {e.msg}")
        if not isinstance(obj, dict):
            raise ParseError(line_no, "record is not an object")
        extra = set(obj) - PREDICTION_FIELDS
        if extra:
            raise ParseError(line_no, f"unknown fields {sorted(extra)}")
        missing = PREDICTION_FIELDS - set(obj)
        if missing:
            raise ParseError(line_no, f"missing fields {sorted(missing)}")
        frame_id = obj["frame_id"]
        if not isinstance(frame_id, str) or not frame_id:
            raise ParseError(line_no, "frame_id must be a non-empty string")
        if frame_id in out:
            raise ParseError(line_no, f"duplicate frame_id {frame_id!r}")
        if not isinstance(obj["detections"], list):
            raise ParseError(line_no, "detections must be an array")
        dets = []
        for i, d in enumerate(obj["detections"]):
            if not isinstance(d, dict) or set(d) != DETECTION_FIELDS:
                raise ParseError(line_no, f"detection {i}: fields must be exactly "
                                          f"{sorted(DETECTION_FIELDS)}")
            try:
                box = BBox(float(d["x_min"]), float(d["y_min"]),
                           float(d["x_max"]), float(d["y_max"]))
                conf = float(d["confidence"])
            except (TypeError, ValueError):
                raise ParseError(line_no, f"detection {i}: non-numeric field")
            if not box.is_valid():
                raise ParseError(line_no, f"detection {i}: invalid box")
            if not 0.0 <= conf <= 1.0:
                raise ParseError(line_no, f"detection {i}: confidence outside [0, 1]")
            dets.append(Detection(box=box, confidence=conf))
        out[frame_id] = dets
    return out


def serialize_predictions(preds: dict[str, list[Detection]]) -> str:
    lines = []
    for frame_id, dets in preds.items():
        obj = {
            "frame_id": frame_id,
            "detections": [
                {"x_min": d.box.x_min, "y_min": d.box.y_min,
                 "x_max": d.box.x_max, "y_max": d.box.y_max,
                 "confidence": d.confidence}
                for d in dets
            ],
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)
