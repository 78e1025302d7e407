"""TOML run configuration: one file, one section per subsystem.

Sections and keys map 1:1 onto the config dataclasses; every default is
overridable. Example:

    [scene]
    grid_size = 8
    salient_fraction = 0.3

    [loss]
    alpha = 0.25
    gamma = 2.0
    omega = 4.0

    [train]
    epochs = 30
    learning_rate = 0.7

    [eval]
    iou_threshold = 0.5

    [experiment]
    n_train_scenes = 200
    n_test_scenes = 50
    seed = 0
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from .evaluation import EvalConfig
from .loss import LossParams
from .toy import SceneConfig, TrainConfig


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    n_train_scenes: int = 200
    n_val_scenes: int = 25
    n_test_scenes: int = 50
    seed: int = 0

    def __post_init__(self):
        if min(self.n_train_scenes, self.n_val_scenes, self.n_test_scenes) < 0:
            raise ConfigError("scene counts must be non-negative")
        if self.n_train_scenes == 0 or self.n_test_scenes == 0:
            raise ConfigError("experiment needs train and test scenes")


@dataclass(frozen=True)
class RunConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)


def _build(cls, section: dict, name: str):
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - valid
    if unknown:
        raise ConfigError(f"[{name}]: unknown keys {sorted(unknown)}")
    try:
        return cls(**section)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"[{name}]: {e}")


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a RunConfig from a TOML file; defaults when path is None."""
    data: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = tomllib.loads(p.read_text())
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{p}: {e}")
    known = {"scene", "loss", "train", "eval", "experiment"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    scene = _build(SceneConfig, data.get("scene", {}), "scene")
    loss = _build(LossParams, data.get("loss", {}), "loss")
    train_section = dict(data.get("train", {}))
    train_section["loss"] = loss
    train = _build(TrainConfig, train_section, "train")
    eval_section = dict(data.get("eval", {}))
    if "thresholds" in eval_section:
        eval_section["thresholds"] = tuple(eval_section["thresholds"])
    eval_cfg = _build(EvalConfig, eval_section, "eval")
    experiment = _build(ExperimentConfig, data.get("experiment", {}), "experiment")
    return RunConfig(scene=scene, train=train, eval=eval_cfg,
                     experiment=experiment)


def apply_overrides(cfg: RunConfig, *, seed: int | None = None,
                    omega: float | None = None, gamma: float | None = None,
                    alpha: float | None = None, epochs: int | None = None,
                    lr: float | None = None,
                    iou_threshold: float | None = None) -> RunConfig:
    """Apply CLI flag overrides on top of a loaded config."""
    loss = cfg.train.loss
    loss_updates = {}
    if omega is not None:
        loss_updates["omega"] = omega
    if gamma is not None:
        loss_updates["gamma"] = gamma
    if alpha is not None:
        loss_updates["alpha"] = alpha
    try:
        if loss_updates:
            loss = dataclasses.replace(loss, **loss_updates)
        train_updates: dict = {"loss": loss}
        if epochs is not None:
            train_updates["epochs"] = epochs
        if lr is not None:
            train_updates["learning_rate"] = lr
        if seed is not None:
            train_updates["seed"] = seed
        train = dataclasses.replace(cfg.train, **train_updates)
        eval_cfg = cfg.eval
        if iou_threshold is not None:
            eval_cfg = dataclasses.replace(eval_cfg, iou_threshold=iou_threshold)
        experiment = cfg.experiment
        if seed is not None:
            experiment = dataclasses.replace(experiment, seed=seed)
    except ValueError as e:
        raise ConfigError(str(e))
    return RunConfig(scene=cfg.scene, train=train, eval=eval_cfg,
                     experiment=experiment)
