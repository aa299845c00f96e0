"""Run configuration: model/loss/stage hyperparameters and named profiles.

The "paper" profile carries the published hyperparameters (C=512, 4-layer
8-head cloze network, batch sizes 304/232, 30/70 labeled/unlabeled sampling,
lr 1e-4 with x0.1 step decay, gradient clip 20, tau=0.1, T=5 instances, all
loss coefficients 1). The "toy" profile scales the architecture and step
counts down so the full pipeline runs on a small CPU box; "tiny" exists for
float64 gradient checks.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

DECODERS = ("vision", "language", "fusion")


@dataclass
class ModelConfig:
    t_seq: int = 26
    n_classes: int = 37
    dim: int = 512
    res_blocks: int = 5
    tf_layers: int = 3
    tf_heads: int = 8
    bcn_layers: int = 4
    bcn_heads: int = 8
    fusion_iterations: int = 3
    detach_lm_input: bool = True  # block gradient from the LM into the vision stack


@dataclass
class ContrastiveConfig:
    temperature: float = 0.1
    instances: int = 5
    lambda_unsupervised: float = 1.0
    lambda_supervised: float = 1.0
    projection_head: bool = False
    projection_dim: int | None = None
    tap_point: str = "backbone"  # or "post_attention"

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if self.lambda_unsupervised < 0 or self.lambda_supervised < 0:
            raise ValueError("loss coefficients must be >= 0")
        if self.tap_point not in ("backbone", "post_attention"):
            raise ValueError(f"unknown tap_point {self.tap_point!r}")


def _unit_lambdas() -> dict:
    return {d: 1.0 for d in DECODERS}


@dataclass
class ConsistencyConfig:
    core_loss: str = "cross_entropy"  # or "kl_divergence"
    hard_labels: bool = True
    stop_teacher_gradients: bool = True
    threshold: float | None = None    # e.g. 0.9; None disables the indicator
    # student decoder -> teacher decoder (None deactivates that student)
    teacher_matrix: dict = field(default_factory=lambda: {d: d for d in DECODERS})
    lambda_unsupervised: dict = field(default_factory=_unit_lambdas)
    lambda_supervised: dict = field(default_factory=_unit_lambdas)

    def __post_init__(self):
        if self.core_loss not in ("cross_entropy", "kl_divergence"):
            raise ValueError(f"unknown core loss {self.core_loss!r}")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        for student, teacher in self.teacher_matrix.items():
            if student not in DECODERS:
                raise ValueError(f"unknown student decoder {student!r}")
            if teacher is not None and teacher not in DECODERS:
                raise ValueError(f"unknown teacher decoder {teacher!r}")


def parse_teacher_matrix(spec: str) -> dict:
    """Parse 'self', 'vision->all', 'fusion->vision,language' style strings."""
    spec = spec.strip()
    if spec == "self":
        return {d: d for d in DECODERS}
    if "->" not in spec:
        raise ValueError(f"cannot parse teacher matrix {spec!r}")
    teacher, students = spec.split("->", 1)
    teacher = teacher.strip()
    if teacher not in DECODERS:
        raise ValueError(f"unknown teacher decoder {teacher!r}")
    if students.strip() == "all":
        chosen = list(DECODERS)
    else:
        chosen = [s.strip() for s in students.split(",") if s.strip()]
    matrix = {d: None for d in DECODERS}
    for s in chosen:
        if s not in DECODERS:
            raise ValueError(f"unknown student decoder {s!r}")
        matrix[s] = teacher
    return matrix


@dataclass
class StageConfig:
    steps: int = 1000
    batch_size: int = 32
    labeled_ratio: float = 0.3
    lr: float = 1e-4
    lr_decay: float = 0.1
    # fraction of total steps spent in each constant-lr period
    lr_periods: tuple = (0.68, 0.2, 0.12)
    grad_clip: float = 20.0
    log_every: int = 25

    def __post_init__(self):
        if abs(sum(self.lr_periods) - 1.0) > 1e-6:
            raise ValueError("lr_periods must sum to 1")
        if not 0.0 <= self.labeled_ratio <= 1.0:
            raise ValueError("labeled_ratio must be in [0, 1]")


@dataclass
class LMStageConfig:
    steps: int = 400
    batch_size: int = 128
    lr: float = 1e-4
    lr_decay: float = 0.1
    lr_drop_at: float = 0.875  # fraction of training after which lr decays once
    grad_clip: float = 20.0
    corpus_words: int = 10000
    val_fraction: float = 0.05
    log_every: int = 20


@dataclass
class RunConfig:
    profile: str = "toy"
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    contrastive: ContrastiveConfig = field(default_factory=ContrastiveConfig)
    consistency: ConsistencyConfig = field(default_factory=ConsistencyConfig)
    stage1: StageConfig = field(default_factory=StageConfig)
    stage2: LMStageConfig = field(default_factory=LMStageConfig)
    stage3: StageConfig = field(default_factory=StageConfig)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["stage1"]["lr_periods"] = list(self.stage1.lr_periods)
        d["stage3"]["lr_periods"] = list(self.stage3.lr_periods)
        return d

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def paper_config(seed: int = 0) -> RunConfig:
    return RunConfig(
        profile="paper",
        seed=seed,
        model=ModelConfig(),
        stage1=StageConfig(steps=495_000, batch_size=304, labeled_ratio=0.3,
                           lr_periods=(0.68, 0.2, 0.12)),
        stage2=LMStageConfig(steps=20_000, batch_size=4096, lr_drop_at=0.875,
                             corpus_words=1_000_000),
        stage3=StageConfig(steps=130_000, batch_size=232, labeled_ratio=0.3,
                           lr_periods=(0.6, 0.2, 0.2)),
    )


def toy_config(seed: int = 0) -> RunConfig:
    return RunConfig(
        profile="toy",
        seed=seed,
        model=ModelConfig(dim=64, res_blocks=3, tf_layers=1, tf_heads=4,
                          bcn_layers=2, bcn_heads=4),
        stage1=StageConfig(steps=1000, batch_size=32, labeled_ratio=0.3,
                           lr=3e-4, lr_periods=(0.68, 0.2, 0.12), log_every=25),
        stage2=LMStageConfig(steps=400, batch_size=128, lr=3e-4, corpus_words=10000),
        stage3=StageConfig(steps=500, batch_size=32, labeled_ratio=0.3,
                           lr=3e-4, lr_periods=(0.6, 0.2, 0.2), log_every=25),
    )


def tiny_config(seed: int = 0) -> RunConfig:
    return RunConfig(
        profile="tiny",
        seed=seed,
        model=ModelConfig(t_seq=6, dim=16, res_blocks=2, tf_layers=1, tf_heads=2,
                          bcn_layers=1, bcn_heads=2, fusion_iterations=2),
        stage1=StageConfig(steps=10, batch_size=4),
        stage2=LMStageConfig(steps=10, batch_size=8, corpus_words=100),
        stage3=StageConfig(steps=10, batch_size=4, lr_periods=(0.6, 0.2, 0.2)),
    )


PROFILES = {"paper": paper_config, "toy": toy_config, "tiny": tiny_config}


def get_config(profile: str, seed: int = 0) -> RunConfig:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}")
    return PROFILES[profile](seed=seed)


def _merge(dst, src, path=""):
    for key, value in src.items():
        if not hasattr(dst, key):
            raise ValueError(f"unknown config key {path + key!r}")
        current = getattr(dst, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            _merge(current, value, path + key + ".")
        else:
            if isinstance(current, tuple) and isinstance(value, list):
                value = tuple(value)
            setattr(dst, key, value)


def load_config(path: str | None, profile: str = "toy", seed: int = 0) -> RunConfig:
    """Profile defaults, optionally overridden by a JSON or TOML file."""
    cfg = get_config(profile, seed=seed)
    if path:
        if path.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError as exc:  # tomllib is stdlib from 3.11 on
                raise RuntimeError("TOML configs need Python >= 3.11; use JSON") from exc
            with open(path, "rb") as f:
                overrides = tomllib.load(f)
        else:
            with open(path, encoding="utf-8") as f:
                overrides = json.load(f)
        overrides.pop("profile", None)
        _merge(cfg, overrides)
    return cfg
