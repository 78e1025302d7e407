"""Synthetic scenes and a small differentiable detector.

Scenes live in the unit square. A fixed grid of overlapping candidate
boxes plays the role of detection queries; each candidate carries a
noisy feature vector summarizing its overlap with the nearest ground
truth. A 3-layer feed-forward head maps features to an objectness logit
plus 4 box offsets, trained by SGD with the salience-weighted focal
loss on classification and an L1 loss on matched boxes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .dataset import BBox
from .geometry import Detection, boxes_array
from .loss import LossParams

FEATURE_DIM = 16
_OFFSET_CLIP = 2.0
_MIN_SIDE = 1e-6
_IOU_FEATURE_GAIN = 4.0  # lifts overlap evidence above the noise floor
_LOGIT_BIAS_INIT = -2.0  # background prior; most candidates are empty


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes non-finite."""


@dataclass(frozen=True)
class SceneConfig:
    grid_size: int = 8
    objects_min: int = 1
    objects_max: int = 3
    salient_fraction: float = 0.3
    salient_size_scale: float = 0.5
    feature_noise_sigma: float = 0.08

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if not 0 <= self.objects_min <= self.objects_max:
            raise ValueError("objects_min/objects_max out of order")
        if not 0.0 <= self.salient_fraction <= 1.0:
            raise ValueError("salient_fraction must be in [0, 1]")
        if not 0.0 < self.salient_size_scale <= 1.0:
            raise ValueError("salient_size_scale must be in (0, 1]")
        if self.feature_noise_sigma < 0:
            raise ValueError("feature_noise_sigma must be >= 0")


@dataclass
class Scene:
    ground_truths: list[tuple[BBox, bool]]
    candidate_boxes: np.ndarray   # (C, 4)
    candidate_features: np.ndarray  # (C, FEATURE_DIM)


@dataclass
class ToyModel:
    """Three dense layers mapping features to (logit, 4 box offsets)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]


@dataclass(frozen=True)
class TrainConfig:
    loss: LossParams = field(default_factory=LossParams)
    use_salience_loss: bool = True
    epochs: int = 30
    learning_rate: float = 0.7
    batch_size: int = 8
    grad_clip_norm: float = 10.0
    lr_decay: float = 0.5
    lr_decay_every: int = 15
    seed: int = 0
    hidden: int = 32
    assignment_iou_threshold: float = 0.1
    box_loss_weight: float = 0.25

    def __post_init__(self):
        if self.epochs <= 0 or self.learning_rate <= 0 or self.batch_size <= 0:
            raise ValueError("epochs, learning_rate and batch_size must be positive")
        if not 0.0 < self.assignment_iou_threshold <= 1.0:
            raise ValueError("assignment_iou_threshold must be in (0, 1]")


def candidate_grid(grid_size: int) -> np.ndarray:
    """Candidate boxes tiling the unit square, one per grid cell."""
    g = grid_size
    edges = np.arange(g) / g
    y0, x0 = np.meshgrid(edges, edges, indexing="ij")
    side = 1.0 / g
    return np.stack([x0.ravel(), y0.ravel(),
                     x0.ravel() + side, y0.ravel() + side], axis=1)


def _sample_objects(cfg: SceneConfig, rng: np.random.Generator
                    ) -> list[tuple[BBox, bool]]:
    g = cfg.grid_size
    cell = 1.0 / g
    count = int(rng.integers(cfg.objects_min, cfg.objects_max + 1))
    count = min(count, g * g)
    # one object per distinct cell, jittered around the cell center, so
    # each object is cleanly owned by a single candidate box
    cells = rng.choice(g * g, size=count, replace=False)
    out: list[tuple[BBox, bool]] = []
    for c in cells:
        row, col = divmod(int(c), g)
        salient = bool(rng.random() < cfg.salient_fraction)
        side = rng.uniform(1.05, 1.25) * cell
        if salient:
            side *= cfg.salient_size_scale
        w = side * rng.uniform(0.9, 1.1)
        h = side * rng.uniform(0.9, 1.1)
        cx = (col + 0.5) * cell + rng.uniform(-0.15, 0.15) * cell
        cy = (row + 0.5) * cell + rng.uniform(-0.15, 0.15) * cell
        cx = min(max(cx, w / 2 + 1e-6), 1.0 - w / 2 - 1e-6)
        cy = min(max(cy, h / 2 + 1e-6), 1.0 - h / 2 - 1e-6)
        out.append((BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2),
                    salient))
    return out


def generate_scene(cfg: SceneConfig, seed: int) -> Scene:
    """Deterministic synthetic scene for (cfg, seed)."""
    rng = np.random.default_rng(seed)
    gts = _sample_objects(cfg, rng)
    cands = candidate_grid(cfg.grid_size)
    n = cands.shape[0]
    feats = np.zeros((n, FEATURE_DIM), dtype=np.float64)
    if gts:
        gt_boxes = boxes_array([g[0] for g in gts])
        ious = backend.pairwise_iou(cands, gt_boxes)
        max_iou = ious.max(axis=1)
        nearest = ious.argmax(axis=1)
        gx0, gy0, gx1, gy1 = (gt_boxes[nearest, k] for k in range(4))
        cx0, cy0, cx1, cy1 = (cands[:, k] for k in range(4))
        cw, ch = cx1 - cx0, cy1 - cy0
        inter_w = np.maximum(np.minimum(cx1, gx1) - np.maximum(cx0, gx0), 0.0)
        inter_h = np.maximum(np.minimum(cy1, gy1) - np.maximum(cy0, gy0), 0.0)
        overlap = max_iou > 0.0
        feats[:, 0] = _IOU_FEATURE_GAIN * max_iou
        feats[overlap, 1] = (_IOU_FEATURE_GAIN * inter_w * inter_h)[overlap] \
            / (cw * ch)[overlap]
        gcx, gcy = (gx0 + gx1) / 2, (gy0 + gy1) / 2
        ccx, ccy = (cx0 + cx1) / 2, (cy0 + cy1) / 2
        feats[overlap, 2] = ((gcx - ccx) / cw)[overlap]
        feats[overlap, 3] = ((gcy - ccy) / ch)[overlap]
        feats[overlap, 4] = np.log((gx1 - gx0) / cw)[overlap]
        feats[overlap, 5] = np.log((gy1 - gy0) / ch)[overlap]
    if cfg.feature_noise_sigma > 0:
        noise = rng.normal(0.0, cfg.feature_noise_sigma, feats.shape)
        # localization evidence is cleaner than objectness evidence, so
        # box-offset misses do not drown out the confidence effects
        noise[:, 2:6] *= 0.1
        feats += noise
    return Scene(ground_truths=gts, candidate_boxes=cands,
                 candidate_features=feats)


def init_model(feature_dim: int = FEATURE_DIM, hidden: int = 32,
               seed: int = 0) -> ToyModel:
    rng = np.random.default_rng(seed)

    def dense(n_in, n_out):
        return rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_in, n_out))

    b3 = np.zeros(5)
    b3[0] = _LOGIT_BIAS_INIT
    return ToyModel(
        w1=dense(feature_dim, hidden), b1=np.zeros(hidden),
        w2=dense(hidden, hidden), b2=np.zeros(hidden),
        w3=dense(hidden, 5), b3=b3,
    )


def _forward_raw(model: ToyModel, feats: np.ndarray):
    h1 = np.tanh(feats @ model.w1 + model.b1)
    h2 = np.tanh(h1 @ model.w2 + model.b2)
    out = h2 @ model.w3 + model.b3
    return h1, h2, out


def decode_boxes(cands: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Apply predicted offsets to candidate boxes, clipped to the unit
    square with strictly positive area preserved."""
    cx0, cy0, cx1, cy1 = (cands[:, k] for k in range(4))
    cw, ch = cx1 - cx0, cy1 - cy0
    ccx, ccy = (cx0 + cx1) / 2, (cy0 + cy1) / 2
    o = np.clip(offsets, -_OFFSET_CLIP, _OFFSET_CLIP)
    cx = ccx + o[:, 0] * cw
    cy = ccy + o[:, 1] * ch
    w = cw * np.exp(o[:, 2])
    h = ch * np.exp(o[:, 3])
    x0 = np.clip(cx - w / 2, 0.0, 1.0 - _MIN_SIDE)
    y0 = np.clip(cy - h / 2, 0.0, 1.0 - _MIN_SIDE)
    x1 = np.clip(cx + w / 2, x0 + _MIN_SIDE, 1.0)
    y1 = np.clip(cy + h / 2, y0 + _MIN_SIDE, 1.0)
    return np.stack([x0, y0, x1, y1], axis=1)


def forward(model: ToyModel, scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """Per-candidate objectness logits and decoded boxes."""
    feats = scene.candidate_features
    if feats.shape[1] != model.w1.shape[0]:
        raise ValueError(f"feature dim {feats.shape[1]} does not match model "
                         f"input {model.w1.shape[0]}")
    _, _, out = _forward_raw(model, feats)
    return out[:, 0], decode_boxes(scene.candidate_boxes, out[:, 1:5])


def predict(model: ToyModel, scene: Scene) -> list[Detection]:
    """All candidates as Detections; confidence = sigmoid(logit)."""
    logits, boxes = forward(model, scene)
    conf = 1.0 / (1.0 + np.exp(-logits))
    return [Detection(box=BBox(*boxes[i]), confidence=float(conf[i]))
            for i in range(boxes.shape[0])]


def assign_targets(scene: Scene, assignment_iou_threshold: float,
                   omega: float, apply_salience: bool):
    """Per-candidate training targets.

    One-to-one: each ground truth claims its highest-IOU free candidate,
    provided that IOU reaches the assignment threshold. Weights come
    from the nearest-ground-truth salience rule on the candidate's
    reference box.
    """
    cands = scene.candidate_boxes
    n = cands.shape[0]
    is_obj = np.zeros(n, dtype=bool)
    weights = np.ones(n, dtype=np.float64)
    tgt = np.zeros((n, 4), dtype=np.float64)
    if not scene.ground_truths:
        return is_obj, weights, tgt
    gt_boxes = boxes_array([g[0] for g in scene.ground_truths])
    salient = np.array([g[1] for g in scene.ground_truths], dtype=bool)
    ious = backend.pairwise_iou(cands, gt_boxes)
    taken = np.zeros(n, dtype=bool)
    for j in range(gt_boxes.shape[0]):
        col = np.where(taken, -1.0, ious[:, j])
        i = int(col.argmax())
        if col[i] >= assignment_iou_threshold:
            assert ious[i, j] >= assignment_iou_threshold
            is_obj[i] = True
            taken[i] = True
            tgt[i] = gt_boxes[j]
    if apply_salience and omega != 1.0:
        # nearest gt per candidate: highest IOU, center distance fallback
        nearest = ious.argmax(axis=1)
        no_overlap = ious.max(axis=1) <= 0.0
        if no_overlap.any():
            ccx = (cands[:, 0] + cands[:, 2]) / 2
            ccy = (cands[:, 1] + cands[:, 3]) / 2
            gcx = (gt_boxes[:, 0] + gt_boxes[:, 2]) / 2
            gcy = (gt_boxes[:, 1] + gt_boxes[:, 3]) / 2
            d2 = (ccx[:, None] - gcx[None, :]) ** 2 + (ccy[:, None] - gcy[None, :]) ** 2
            nearest = np.where(no_overlap, d2.argmin(axis=1), nearest)
        weights[salient[nearest]] = omega
    return is_obj, weights, tgt


def _clipped_decode_grads(cands, offsets):
    """Decode boxes and the partials needed to backprop the L1 box loss
    onto the raw offsets. Returns (boxes, grad closure inputs)."""
    cx0, cy0, cx1, cy1 = (cands[:, k] for k in range(4))
    cw, ch = cx1 - cx0, cy1 - cy0
    ccx, ccy = (cx0 + cx1) / 2, (cy0 + cy1) / 2
    o = np.clip(offsets, -_OFFSET_CLIP, _OFFSET_CLIP)
    o_pass = (np.abs(offsets) < _OFFSET_CLIP)
    cx = ccx + o[:, 0] * cw
    cy = ccy + o[:, 1] * ch
    w = cw * np.exp(o[:, 2])
    h = ch * np.exp(o[:, 3])
    x0r, y0r = cx - w / 2, cy - h / 2
    x1r, y1r = cx + w / 2, cy + h / 2
    x0 = np.clip(x0r, 0.0, 1.0 - _MIN_SIDE)
    y0 = np.clip(y0r, 0.0, 1.0 - _MIN_SIDE)
    x1 = np.clip(x1r, x0 + _MIN_SIDE, 1.0)
    y1 = np.clip(y1r, y0 + _MIN_SIDE, 1.0)
    boxes = np.stack([x0, y0, x1, y1], axis=1)
    pass_x0 = (x0r == x0)
    pass_y0 = (y0r == y0)
    pass_x1 = (x1r == x1)
    pass_y1 = (y1r == y1)
    aux = (cw, ch, w, h, o_pass, pass_x0, pass_y0, pass_x1, pass_y1)
    return boxes, aux


def _box_grad_to_offsets(dbox, aux):
    cw, ch, w, h, o_pass, px0, py0, px1, py1 = aux
    dx0 = dbox[:, 0] * px0
    dy0 = dbox[:, 1] * py0
    dx1 = dbox[:, 2] * px1
    dy1 = dbox[:, 3] * py1
    dcx = dx0 + dx1
    dcy = dy0 + dy1
    dw = 0.5 * (dx1 - dx0)
    dh = 0.5 * (dy1 - dy0)
    dof = np.zeros((dbox.shape[0], 4), dtype=np.float64)
    dof[:, 0] = dcx * cw
    dof[:, 1] = dcy * ch
    dof[:, 2] = dw * w
    dof[:, 3] = dh * h
    return dof * o_pass


def train(scenes: list[Scene], cfg: TrainConfig) -> tuple[ToyModel, list[float]]:
    """SGD training; returns the model and per-epoch mean loss history."""
    if not scenes:
        raise ValueError("scenes must be non-empty")
    n_scenes = len(scenes)
    n_cand = scenes[0].candidate_boxes.shape[0]
    feats = np.stack([s.candidate_features for s in scenes])  # (S, C, D)
    cands = np.stack([s.candidate_boxes for s in scenes])     # (S, C, 4)
    is_obj = np.zeros((n_scenes, n_cand), dtype=bool)
    weights = np.ones((n_scenes, n_cand), dtype=np.float64)
    tgt = np.zeros((n_scenes, n_cand, 4), dtype=np.float64)
    omega = cfg.loss.omega if cfg.use_salience_loss else 1.0
    for k, s in enumerate(scenes):
        is_obj[k], weights[k], tgt[k] = assign_targets(
            s, cfg.assignment_iou_threshold, omega, apply_salience=True)

    model = init_model(feats.shape[2], cfg.hidden, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate * cfg.lr_decay ** (epoch // cfg.lr_decay_every)
        perm = rng.permutation(n_scenes)
        batch_losses = []
        for start in range(0, n_scenes, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            x = feats[idx].reshape(-1, feats.shape[2])
            cb = cands[idx].reshape(-1, 4)
            obj = is_obj[idx].ravel()
            w = weights[idx].ravel()
            t = tgt[idx].reshape(-1, 4)
            n_total = x.shape[0]

            h1, h2, out = _forward_raw(model, x)
            logits = out[:, 0]
            cls_loss, cls_grad = backend.focal_terms(
                logits, obj, w, cfg.loss.alpha, cfg.loss.gamma, cfg.loss.epsilon)
            loss_cls = float(cls_loss.sum()) / n_total

            dout = np.zeros_like(out)
            dout[:, 0] = cls_grad / n_total

            n_obj = int(obj.sum())
            loss_box = 0.0
            if n_obj > 0:
                boxes, aux = _clipped_decode_grads(cb, out[:, 1:5])
                diff = boxes - t
                l1 = np.abs(diff).sum(axis=1) * obj
                loss_box = cfg.box_loss_weight * float(l1.sum()) / n_obj
                dbox = np.sign(diff) * obj[:, None] * (cfg.box_loss_weight / n_obj)
                dout[:, 1:5] = _box_grad_to_offsets(dbox, aux)

            total = loss_cls + loss_box
            if not np.isfinite(total):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}: cls={loss_cls} "
                    f"box={loss_box} lr={lr}")
            batch_losses.append(total)

            dh2 = (dout @ model.w3.T) * (1.0 - h2 * h2)
            dh1 = (dh2 @ model.w2.T) * (1.0 - h1 * h1)
            grads = [
                x.T @ dh1, dh1.sum(axis=0),
                h1.T @ dh2, dh2.sum(axis=0),
                h2.T @ dout, dout.sum(axis=0),
            ]
            norm = np.sqrt(sum(float((g * g).sum()) for g in grads))
            if cfg.grad_clip_norm > 0 and norm > cfg.grad_clip_norm:
                scale = cfg.grad_clip_norm / norm
                grads = [g * scale for g in grads]
            for p, g in zip(model.params(), grads):
                p -= lr * g
        history.append(float(np.mean(batch_losses)))
    return model, history


_MAGIC = b"SLTM"
_VERSION = 1


def save_model(model: ToyModel, path) -> None:
    """Binary checkpoint: magic, version byte, per-array shape header,
    then little-endian float64 weights in layer order."""
    arrays = model.params()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<B", _VERSION))
        f.write(struct.pack("<B", len(arrays)))
        for a in arrays:
            f.write(struct.pack("<B", a.ndim))
            f.write(struct.pack(f"<{a.ndim}I", *a.shape))
        for a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_model(path) -> ToyModel:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a model checkpoint (bad magic)")
    version = data[4]
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    n_arrays = data[5]
    pos = 6
    shapes = []
    for _ in range(n_arrays):
        ndim = data[pos]
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        shapes.append(shape)
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape)) if shape else 1
        a = np.frombuffer(data, dtype="<f8", count=count, offset=pos)
        pos += 8 * count
        arrays.append(a.reshape(shape).astype(np.float64))
    if len(arrays) != 6:
        raise ValueError(f"{path}: expected 6 weight arrays, got {len(arrays)}")
    return ToyModel(*arrays)
