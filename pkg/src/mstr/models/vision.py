"""Vision model: conv/transformer backbone, position attention, character decoder.

The backbone downsamples the 32x128 input exactly 4x in both axes and feeds
the flattened feature map through transformer encoder layers. Position
attention turns the spatial map into one feature vector per character slot
using fixed sinusoidal order queries against keys produced by a small
U-Net; its rows are softmax-normalized, so each output vector is a convex
combination of the flattened map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn

from ..config import ModelConfig
from .layers import MiniUNet, ResBlock, group_norm, sinusoid_encoding, sinusoid_encoding_2d

IMG_SHAPE = (3, 32, 128)
FEAT_H, FEAT_W = IMG_SHAPE[1] // 4, IMG_SHAPE[2] // 4


@dataclass
class VisionForward:
    f_b: torch.Tensor      # (N, H/4, W/4, C)
    f_v: torch.Tensor      # (N, T, C)
    attention: torch.Tensor  # (N, T, H*W/16), rows sum to 1
    logits: torch.Tensor   # (N, T, n_classes)
    probs: torch.Tensor    # (N, T, n_classes)


class VisionBackbone(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        if cfg.res_blocks < 2:
            raise ValueError("backbone needs at least 2 residual blocks")
        c = cfg.dim
        self.stem = nn.Sequential(nn.Conv2d(3, c // 4, 3, 1, 1, bias=False),
                                  group_norm(c // 4), nn.ReLU())
        blocks = [ResBlock(c // 4, c // 2, stride=2), ResBlock(c // 2, c, stride=2)]
        for _ in range(cfg.res_blocks - 2):
            blocks.append(ResBlock(c, c, stride=1))
        self.blocks = nn.Sequential(*blocks)
        layer = nn.TransformerEncoderLayer(c, cfg.tf_heads, dim_feedforward=4 * c,
                                           dropout=0.0, batch_first=True)
        self.encoder = nn.TransformerEncoder(layer, cfg.tf_layers)
        self.register_buffer("pos2d", sinusoid_encoding_2d(FEAT_H, FEAT_W, c))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or tuple(x.shape[1:]) != IMG_SHAPE:
            raise ValueError(f"expected input of shape (N, {IMG_SHAPE[0]}, {IMG_SHAPE[1]}, "
                             f"{IMG_SHAPE[2]}), got {tuple(x.shape)}")
        h = self.blocks(self.stem(x))                    # (N, C, H/4, W/4)
        n, c, fh, fw = h.shape
        tokens = h.flatten(2).transpose(1, 2)            # (N, H*W/16, C)
        tokens = self.encoder(tokens + self.pos2d)
        return tokens.reshape(n, fh, fw, c)              # NHWC contract


class PositionAttention(nn.Module):
    """F_v = softmax(Q K^T / sqrt(C)) . Flatten(F_b), with fixed sinusoidal Q."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.key_net = MiniUNet(cfg.dim)
        self.register_buffer("queries", sinusoid_encoding(cfg.t_seq, cfg.dim))
        self.scale = 1.0 / math.sqrt(cfg.dim)

    def forward(self, f_b: torch.Tensor):
        n, fh, fw, c = f_b.shape
        nchw = f_b.permute(0, 3, 1, 2)
        keys = self.key_net(nchw).flatten(2).transpose(1, 2)      # (N, H*W, C)
        values = f_b.reshape(n, fh * fw, c)                       # (N, H*W, C)
        logits = torch.einsum("tc,nkc->ntk", self.queries, keys) * self.scale
        attention = torch.softmax(logits, dim=-1)
        f_v = torch.bmm(attention, values)                        # (N, T, C)
        return f_v, attention


class VisionModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.backbone = VisionBackbone(cfg)
        self.attention = PositionAttention(cfg)
        self.classifier = nn.Linear(cfg.dim, cfg.n_classes)

    def backbone_features(self, x: torch.Tensor) -> torch.Tensor:
        """Backbone feature map, shape (N, H/4, W/4, C)."""
        return self.backbone(x)

    def position_attention(self, f_b: torch.Tensor):
        return self.attention(f_b)

    def decode(self, f_v: torch.Tensor) -> torch.Tensor:
        """Per-position character probabilities from visual features."""
        return torch.softmax(self.classifier(f_v), dim=-1)

    def forward(self, x: torch.Tensor) -> VisionForward:
        f_b = self.backbone_features(x)
        f_v, attention = self.position_attention(f_b)
        logits = self.classifier(f_v)
        return VisionForward(f_b=f_b, f_v=f_v, attention=attention, logits=logits,
                             probs=torch.softmax(logits, dim=-1))
