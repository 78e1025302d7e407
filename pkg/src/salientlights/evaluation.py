"""Confidence-sweep evaluation: per-threshold precision/recall over all
objects and over salient objects, plus the recall-difference projection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .dataset import BBox
from .geometry import Detection, greedy_match

DEFAULT_THRESHOLDS = tuple(i / 10 for i in range(11))


class EvaluationError(ValueError):
    """Frame misalignment or invalid evaluation configuration."""


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.5
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise EvaluationError(
                f"iou_threshold must be in (0, 1], got {self.iou_threshold}")
        ts = self.thresholds
        if not ts or any(not 0.0 <= t <= 1.0 for t in ts):
            raise EvaluationError("thresholds must be non-empty, within [0, 1]")
        if any(a > b for a, b in zip(ts, ts[1:])):
            raise EvaluationError("thresholds must be sorted ascending")


@dataclass
class PRPoint:
    confidence_threshold: float
    tp_all: int = 0
    fp_all: int = 0
    fn_all: int = 0
    tp_salient: int = 0
    fn_salient: int = 0
    precision_all: float = 1.0
    recall_all: float = 1.0
    recall_salient: float = 1.0
    recall_difference: float = 0.0


def _ratio(num: int, den: int) -> float:
    # 0/0 convention: empty denominators count as perfect
    return num / den if den > 0 else 1.0


PredsByFrame = Mapping[str, Sequence[Detection]]
GtsByFrame = Mapping[str, Sequence[tuple[BBox, bool]]]


def confusion_at_threshold(preds: PredsByFrame, gts: GtsByFrame,
                           conf_t: float, cfg: EvalConfig) -> PRPoint:
    """Drop predictions below conf_t, greedy-match per frame, count."""
    if set(preds) != set(gts):
        raise EvaluationError(
            f"frame ids do not align: {sorted(set(preds) ^ set(gts))}")
    point = PRPoint(confidence_threshold=conf_t)
    for frame_id in gts:
        kept = [d for d in preds[frame_id] if d.confidence >= conf_t]
        frame_gts = list(gts[frame_id])
        result = greedy_match(kept, frame_gts, cfg.iou_threshold)
        point.tp_all += len(result.matches)
        point.fp_all += len(result.unmatched_predictions)
        point.fn_all += len(result.unmatched_ground_truths)
        matched_gts = {j for _, j, _ in result.matches}
        for j, (_, salient) in enumerate(frame_gts):
            if salient:
                if j in matched_gts:
                    point.tp_salient += 1
                else:
                    point.fn_salient += 1
    point.precision_all = _ratio(point.tp_all, point.tp_all + point.fp_all)
    point.recall_all = _ratio(point.tp_all, point.tp_all + point.fn_all)
    point.recall_salient = _ratio(point.tp_salient,
                                  point.tp_salient + point.fn_salient)
    point.recall_difference = point.recall_salient - point.recall_all
    return point


def pr_sweep(preds: PredsByFrame, gts: GtsByFrame,
             cfg: EvalConfig | None = None) -> list[PRPoint]:
    """One PRPoint per configured confidence threshold, ascending."""
    cfg = cfg or EvalConfig()
    return [confusion_at_threshold(preds, gts, t, cfg) for t in cfg.thresholds]


def recall_difference_curve(points: Sequence[PRPoint]
                            ) -> list[tuple[float, float]]:
    """(precision_all, recall_salient - recall_all) in threshold order."""
    if not points:
        raise EvaluationError("points must be non-empty")
    return [(p.precision_all, p.recall_difference) for p in points]


CSV_HEADER = ("threshold,tp_all,fp_all,fn_all,precision_all,recall_all,"
              "recall_salient,recall_difference")


def write_metrics_csv(points: Sequence[PRPoint]) -> str:
    lines = [CSV_HEADER]
    for p in points:
        lines.append(
            f"{p.confidence_threshold:.6f},{p.tp_all},{p.fp_all},{p.fn_all},"
            f"{p.precision_all:.6f},{p.recall_all:.6f},"
            f"{p.recall_salient:.6f},{p.recall_difference:.6f}")
    return "".join(line + "\n" for line in lines)


def read_metrics_csv(text: str) -> list[dict]:
    """Rows of the metrics CSV as dicts (counts int, metrics float)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise EvaluationError("missing or unexpected metrics CSV header")
    names = CSV_HEADER.split(",")
    int_fields = {"tp_all", "fp_all", "fn_all"}
    rows = []
    for ln in lines[1:]:
        vals = ln.split(",")
        if len(vals) != len(names):
            raise EvaluationError(f"bad metrics row: {ln!r}")
        rows.append({n: (int(v) if n in int_fields else float(v))
                     for n, v in zip(names, vals)})
    return rows
