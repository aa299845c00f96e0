"""Shared building blocks: residual conv blocks, sinusoidal encodings, mini U-Net.

GroupNorm is used instead of BatchNorm so every forward pass is a pure
per-sample function, which the batch-permutation and finite-difference tests
rely on.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn


def group_norm(channels: int) -> nn.GroupNorm:
    return nn.GroupNorm(min(8, channels), channels)


class ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride, 1, bias=False)
        self.norm1 = group_norm(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, 1, 1, bias=False)
        self.norm2 = group_norm(c_out)
        if stride != 1 or c_in != c_out:
            self.skip = nn.Conv2d(c_in, c_out, 1, stride, bias=False)
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        h = torch.relu(self.norm1(self.conv1(x)))
        h = self.norm2(self.conv2(h))
        return torch.relu(h + self.skip(x))


def sinusoid_encoding(length: int, dim: int) -> torch.Tensor:
    """Classic fixed sin/cos positional encoding, shape (length, dim)."""
    position = torch.arange(length, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float32) * (-math.log(10000.0) / dim))
    enc = torch.zeros(length, dim)
    enc[:, 0::2] = torch.sin(position * div)
    enc[:, 1::2] = torch.cos(position * div)
    return enc


def sinusoid_encoding_2d(height: int, width: int, dim: int) -> torch.Tensor:
    """Fixed 2-D encoding (height*width, dim): half the channels encode the row,
    half the column."""
    if dim % 2 != 0:
        raise ValueError("dim must be even for the 2-D encoding")
    row = sinusoid_encoding(height, dim // 2)          # (H, dim/2)
    col = sinusoid_encoding(width, dim // 2)           # (W, dim/2)
    enc = torch.cat([
        row[:, None, :].expand(height, width, dim // 2),
        col[None, :, :].expand(height, width, dim // 2),
    ], dim=-1)
    return enc.reshape(height * width, dim)


class MiniUNet(nn.Module):
    """Two-down/two-up conv encoder-decoder with additive skip connections."""

    def __init__(self, channels: int):
        super().__init__()
        self.down1 = ResBlock(channels, channels, stride=2)
        self.down2 = ResBlock(channels, channels, stride=2)
        self.up = nn.Upsample(scale_factor=2, mode="nearest")
        self.dec1 = nn.Sequential(nn.Conv2d(channels, channels, 3, 1, 1, bias=False),
                                  group_norm(channels), nn.ReLU())
        self.dec2 = nn.Sequential(nn.Conv2d(channels, channels, 3, 1, 1, bias=False),
                                  group_norm(channels), nn.ReLU())
        self.out = nn.Conv2d(channels, channels, 3, 1, 1)

    def forward(self, x):
        d1 = self.down1(x)
        d2 = self.down2(d1)
        u1 = self.dec1(self.up(d2)) + d1
        u2 = self.dec2(self.up(u1)) + x
        return self.out(u2)
