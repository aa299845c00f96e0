"""Gated fusion of visual and contextual features plus the iterative full pass.

The gate G = sigmoid([F_v, F_l] W_f) mixes the two feature streams
elementwise: F_f = G * F_v + (1 - G) * F_l. The full forward feeds the
vision predictions into the language model on the first iteration and the
previous fusion predictions on later ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from ..config import ModelConfig
from .language import LanguageModel
from .vision import VisionModel


@dataclass
class ModalityOutputs:
    """Final-iteration outputs of the three decoders plus per-iteration history."""

    y_vision: torch.Tensor
    y_language: torch.Tensor
    y_fusion: torch.Tensor
    f_v: torch.Tensor
    f_l: torch.Tensor
    f_f: torch.Tensor
    logits_vision: torch.Tensor
    logits_language: torch.Tensor
    logits_fusion: torch.Tensor
    fusion_history: list = field(default_factory=list)     # probs per iteration
    language_history: list = field(default_factory=list)   # probs per iteration

    def probs(self, decoder: str) -> torch.Tensor:
        return getattr(self, f"y_{decoder}")

    def logits(self, decoder: str) -> torch.Tensor:
        return getattr(self, f"logits_{decoder}")


class FusionGate(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.proj = nn.Linear(2 * dim, dim)

    def forward(self, f_v: torch.Tensor, f_l: torch.Tensor):
        if f_v.shape != f_l.shape:
            raise ValueError(f"feature shape mismatch: {tuple(f_v.shape)} vs {tuple(f_l.shape)}")
        gate = torch.sigmoid(self.proj(torch.cat([f_v, f_l], dim=-1)))
        f_f = gate * f_v + (1.0 - gate) * f_l
        return gate, f_f


class Recognizer(nn.Module):
    """Vision + language + fusion; the complete multimodal recognizer."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.vision = VisionModel(cfg)
        self.language = LanguageModel(cfg)
        self.gate = FusionGate(cfg.dim)
        self.fusion_classifier = nn.Linear(cfg.dim, cfg.n_classes)

    def fuse(self, f_v: torch.Tensor, f_l: torch.Tensor):
        """(F_f, Y_f) from the gated combination of the two feature streams."""
        _, f_f = self.gate(f_v, f_l)
        logits = self.fusion_classifier(f_f)
        return f_f, torch.softmax(logits, dim=-1)

    def full_forward(self, x: torch.Tensor, iterations: int | None = None) -> ModalityOutputs:
        k = self.cfg.fusion_iterations if iterations is None else iterations
        if k < 1:
            raise ValueError("iterations must be >= 1")
        vis = self.vision(x)
        y_in = vis.probs
        fusion_history, language_history = [], []
        f_l = f_f = lm_logits = fus_logits = y_l = y_f = None
        for _ in range(k):
            if self.cfg.detach_lm_input:
                y_in = y_in.detach()
            f_l, lm_logits, y_l = self.language(y_in, validate=False)
            _, f_f = self.gate(vis.f_v, f_l)
            fus_logits = self.fusion_classifier(f_f)
            y_f = torch.softmax(fus_logits, dim=-1)
            fusion_history.append(y_f)
            language_history.append(y_l)
            y_in = y_f
        return ModalityOutputs(
            y_vision=vis.probs, y_language=y_l, y_fusion=y_f,
            f_v=vis.f_v, f_l=f_l, f_f=f_f,
            logits_vision=vis.logits, logits_language=lm_logits, logits_fusion=fus_logits,
            fusion_history=fusion_history, language_history=language_history,
        )

    def forward(self, x: torch.Tensor) -> ModalityOutputs:
        return self.full_forward(x)
