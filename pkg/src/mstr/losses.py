"""Shared supervised loss pieces."""

from __future__ import annotations

import torch
import torch.nn.functional as F

LOG_EPS = 1e-12


def sequence_ce(logits: torch.Tensor, targets: torch.Tensor,
                lengths: torch.Tensor) -> torch.Tensor:
    """Recognition cross-entropy.

    Per image the loss is summed over the first (length + 1) positions (the
    characters plus one terminating padding slot), then averaged over the
    batch.
    """
    if logits.shape[:2] != targets.shape:
        raise ValueError(f"logits {tuple(logits.shape)} do not match targets "
                         f"{tuple(targets.shape)}")
    n, t = targets.shape
    per_pos = F.cross_entropy(logits.permute(0, 2, 1), targets, reduction="none")
    keep = torch.arange(t, device=targets.device)[None, :] < (lengths[:, None] + 1).clamp(max=t)
    return (per_pos * keep).sum(dim=1).mean()


def encode_batch(labels: list, charset, t_seq: int):
    """(targets, lengths) LongTensors for a list of transcriptions."""
    targets = torch.tensor([charset.encode(text, t_seq) for text in labels], dtype=torch.long)
    lengths = torch.tensor([len(text) for text in labels], dtype=torch.long)
    return targets, lengths
