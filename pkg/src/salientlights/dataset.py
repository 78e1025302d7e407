"""Salience-annotated detection dataset: schema, JSON-lines IO, validation,
statistics, seeded splitting, and dual-annotation salience diffing.

The on-disk format is one frame per line, each line a JSON object with
exactly the fields listed in ANNOTATION_FIELDS / FRAME_FIELDS; unknown
fields are rejected.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

STATUS_VALUES = ("on", "off", "undefined")
COLOR_VALUES = ("red", "yellow", "green", "undefined")
OCCLUSION_VALUES = ("none", "partial", "major")

FRAME_FIELDS = {"frame_id", "image_width", "image_height", "annotations"}
ANNOTATION_FIELDS = {
    "x_min", "y_min", "x_max", "y_max",
    "status", "color", "directional", "occlusion", "salient",
}


class DatasetError(ValueError):
    """Base error for dataset parsing and structural problems."""


class ParseError(DatasetError):
    """Malformed annotation file; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in continuous pixel coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def is_valid(self) -> bool:
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) and v >= 0 for v in vals):
            return False
        return self.x_min < self.x_max and self.y_min < self.y_max

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class Annotation:
    """One labeled traffic light."""

    box: BBox
    status: str
    color: str
    directional: bool
    occlusion: str
    salient: bool


@dataclass
class Frame:
    """One annotated image."""

    frame_id: str
    image_width: int
    image_height: int
    annotations: list[Annotation] = field(default_factory=list)


@dataclass
class Dataset:
    frames: list[Frame] = field(default_factory=list)

    def total_annotations(self) -> int:
        return sum(len(f.annotations) for f in self.frames)


@dataclass
class DatasetStats:
    total_annotations: int
    salient_count: int
    non_salient_count: int
    # keyed by (salient, color, status, directional)
    per_category: dict[tuple[bool, str, str, bool], int]


@dataclass(frozen=True)
class Violation:
    frame_id: str
    annotation_index: int | None
    rule: str
    message: str


@dataclass(frozen=True)
class Disagreement:
    frame_id: str
    annotation_index: int
    salient_a: bool
    salient_b: bool


def _annotation_violations(frame: Frame) -> list[Violation]:
    out: list[Violation] = []
    for i, ann in enumerate(frame.annotations):
        b = ann.box
        if not b.is_valid():
            out.append(Violation(frame.frame_id, i, "box-geometry",
                                 f"invalid box {b.as_tuple()}"))
        else:
            if (b.x_min < 0 or b.y_min < 0
                    or b.x_max > frame.image_width or b.y_max > frame.image_height):
                out.append(Violation(frame.frame_id, i, "box-bounds",
                                     f"box {b.as_tuple()} outside "
                                     f"{frame.image_width}x{frame.image_height}"))
        if ann.status not in STATUS_VALUES:
            out.append(Violation(frame.frame_id, i, "status-enum",
                                 f"unknown status {ann.status!r}"))
        if ann.color not in COLOR_VALUES:
            out.append(Violation(frame.frame_id, i, "color-enum",
                                 f"unknown color {ann.color!r}"))
        if ann.occlusion not in OCCLUSION_VALUES:
            out.append(Violation(frame.frame_id, i, "occlusion-enum",
                                 f"unknown occlusion {ann.occlusion!r}"))
        if ann.status in ("off", "undefined") and ann.color != "undefined":
            out.append(Violation(frame.frame_id, i, "status-color",
                                 f"status {ann.status!r} requires color "
                                 f"'undefined', got {ann.color!r}"))
    return out


def validate(dataset: Dataset) -> list[Violation]:
    """Structural validation; returns one Violation per broken rule."""
    out: list[Violation] = []
    seen: set[str] = set()
    for frame in dataset.frames:
        if frame.frame_id in seen:
            out.append(Violation(frame.frame_id, None, "duplicate-frame-id",
                                 f"frame_id {frame.frame_id!r} appears more than once"))
        seen.add(frame.frame_id)
        if frame.image_width <= 0 or frame.image_height <= 0:
            out.append(Violation(frame.frame_id, None, "image-size",
                                 f"non-positive image size "
                                 f"{frame.image_width}x{frame.image_height}"))
        out.extend(_annotation_violations(frame))
    return out


def _parse_annotation(obj: dict, line_no: int, index: int) -> Annotation:
    if not isinstance(obj, dict):
        raise ParseError(line_no, f"annotation {index} is not an object")
    extra = set(obj) - ANNOTATION_FIELDS
    if extra:
        raise ParseError(line_no, f"annotation {index}: unknown fields {sorted(extra)}")
    missing = ANNOTATION_FIELDS - set(obj)
    if missing:
        raise ParseError(line_no, f"annotation {index}: missing fields {sorted(missing)}")
    try:
        box = BBox(float(obj["x_min"]), float(obj["y_min"]),
                   float(obj["x_max"]), float(obj["y_max"]))
    except (TypeError, ValueError):
        raise ParseError(line_no, f"annotation {index}: non-numeric box coordinate")
    if obj["status"] not in STATUS_VALUES:
        raise ParseError(line_no, f"annotation {index}: unknown status {obj['status']!r}")
    if obj["color"] not in COLOR_VALUES:
        raise ParseError(line_no, f"annotation {index}: unknown color {obj['color']!r}")
    if obj["occlusion"] not in OCCLUSION_VALUES:
        raise ParseError(line_no,
                         f"annotation {index}: unknown occlusion {obj['occlusion']!r}")
    if not isinstance(obj["directional"], bool):
        raise ParseError(line_no, f"annotation {index}: directional must be boolean")
    if not isinstance(obj["salient"], bool):
        raise ParseError(line_no, f"annotation {index}: salient must be boolean")
    return Annotation(box=box, status=obj["status"], color=obj["color"],
                      directional=obj["directional"], occlusion=obj["occlusion"],
                      salient=obj["salient"])


def parse_dataset(text: str) -> Dataset:
    """Parse the JSON-lines annotation format, enforcing every invariant."""
    frames: list[Frame] = []
    seen: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(line_no, f"invalid JSON: {e.msg}")
        if not isinstance(obj, dict):
            raise ParseError(line_no, "record is not an object")
        extra = set(obj) - FRAME_FIELDS
        if extra:
            raise ParseError(line_no, f"unknown fields {sorted(extra)}")
        missing = FRAME_FIELDS - set(obj)
        if missing:
            raise ParseError(line_no, f"missing fields {sorted(missing)}")
        frame_id = obj["frame_id"]
        if not isinstance(frame_id, str) or not frame_id:
            raise ParseError(line_no, "frame_id must be a non-empty string")
        if frame_id in seen:
            raise ParseError(line_no, f"duplicate frame_id {frame_id!r}")
        seen.add(frame_id)
        w, h = obj["image_width"], obj["image_height"]
        if not isinstance(w, int) or not isinstance(h, int) or w <= 0 or h <= 0:
            raise ParseError(line_no, "image_width/image_height must be positive integers")
        if not isinstance(obj["annotations"], list):
            raise ParseError(line_no, "annotations must be an array")
        anns = [_parse_annotation(a, line_no, i)
                for i, a in enumerate(obj["annotations"])]
        frame = Frame(frame_id=frame_id, image_width=w, image_height=h,
                      annotations=anns)
        problems = _annotation_violations(frame)
        if problems:
            v = problems[0]
            raise ParseError(line_no, f"annotation {v.annotation_index}: "
                                      f"{v.rule}: {v.message}")
        frames.append(frame)
    return Dataset(frames=frames)


def serialize_dataset(dataset: Dataset) -> str:
    """Inverse of parse_dataset; value-level round trip."""
    lines = []
    for frame in dataset.frames:
        obj = {
            "frame_id": frame.frame_id,
            "image_width": frame.image_width,
            "image_height": frame.image_height,
            "annotations": [
                {
                    "x_min": a.box.x_min, "y_min": a.box.y_min,
                    "x_max": a.box.x_max, "y_max": a.box.y_max,
                    "status": a.status, "color": a.color,
                    "directional": a.directional, "occlusion": a.occlusion,
                    "salient": a.salient,
                }
                for a in frame.annotations
            ],
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def stats(dataset: Dataset) -> DatasetStats:
    """Exact annotation counts, overall and per light category."""
    per: dict[tuple[bool, str, str, bool], int] = {}
    salient = 0
    total = 0
    for frame in dataset.frames:
        for a in frame.annotations:
            total += 1
            if a.salient:
                salient += 1
            key = (a.salient, a.color, a.status, a.directional)
            per[key] = per.get(key, 0) + 1
    return DatasetStats(total_annotations=total, salient_count=salient,
                        non_salient_count=total - salient, per_category=per)


def split(dataset: Dataset, ratios: tuple[float, float, float],
          seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic per-frame split into (train, val, test).

    Sizes are floor(ratio * N) with remainder frames assigned to train;
    frames keep their input order within each part.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise DatasetError(f"ratios must be 3 non-negative values, got {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1, got {sum(ratios)!r}")
    n = len(dataset.frames)
    n_val = math.floor(ratios[1] * n)
    n_test = math.floor(ratios[2] * n)
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    val_ids = set(indices[:n_val])
    test_ids = set(indices[n_val:n_val + n_test])
    train = Dataset([f for i, f in enumerate(dataset.frames)
                     if i not in val_ids and i not in test_ids])
    val = Dataset([f for i, f in enumerate(dataset.frames) if i in val_ids])
    test = Dataset([f for i, f in enumerate(dataset.frames) if i in test_ids])
    return train, val, test


def salience_diff(a: Dataset, b: Dataset) -> list[Disagreement]:
    """Compare salience flags of two annotation passes over the same frames.

    Annotations are aligned positionally within each frame; the schema
    carries no annotation ids.
    """
    by_id_a = {f.frame_id: f for f in a.frames}
    by_id_b = {f.frame_id: f for f in b.frames}
    if set(by_id_a) != set(by_id_b):
        only_a = sorted(set(by_id_a) - set(by_id_b))
        only_b = sorted(set(by_id_b) - set(by_id_a))
        raise DatasetError(f"frame sets differ (only in a: {only_a}, "
                           f"only in b: {only_b})")
    out: list[Disagreement] = []
    for fa in a.frames:
        fb = by_id_b[fa.frame_id]
        if len(fa.annotations) != len(fb.annotations):
            raise DatasetError(
                f"frame {fa.frame_id!r}: annotation counts differ "
                f"({len(fa.annotations)} vs {len(fb.annotations)})")
        for i, (aa, ab) in enumerate(zip(fa.annotations, fb.annotations)):
            if aa.salient != ab.salient:
                out.append(Disagreement(fa.frame_id, i, aa.salient, ab.salient))
    return out


def generate_random_dataset(n_frames: int, seed: int,
                            max_annotations: int = 6) -> Dataset:
    """Random valid dataset; used by round-trip and validation properties."""
    rng = random.Random(seed)
    frames = []
    for i in range(n_frames):
        w = rng.choice([640, 1280, 1920])
        h = rng.choice([480, 960, 1080])
        anns = []
        for _ in range(rng.randint(0, max_annotations)):
            x0 = rng.uniform(0, w - 2)
            y0 = rng.uniform(0, h - 2)
            x1 = rng.uniform(x0 + 1, w)
            y1 = rng.uniform(y0 + 1, h)
            status = rng.choice(STATUS_VALUES)
            color = rng.choice(COLOR_VALUES) if status == "on" else "undefined"
            anns.append(Annotation(
                box=BBox(x0, y0, x1, y1), status=status, color=color,
                directional=rng.random() < 0.2,
                occlusion=rng.choice(OCCLUSION_VALUES),
                salient=rng.random() < 0.3))
        frames.append(Frame(frame_id=f"frame-{seed}-{i:05d}", image_width=w,
                            image_height=h, annotations=anns))
    return Dataset(frames=frames)
