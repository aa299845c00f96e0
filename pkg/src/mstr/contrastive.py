"""Sequence contrastive learning for the vision pretraining stage.

instance_map flattens a batch of feature maps to (N, H*W, F) and adaptive-
average-pools each flattened map into T ordered sub-word representations.
The SeqCLR loss is a symmetric sum of temperature-scaled cosine NCE terms
over index-aligned representations of two augmented views, with all
non-anchor vectors of both views acting as candidates.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ContrastiveConfig
from .losses import sequence_ce


def instance_map(p: torch.Tensor, t: int) -> torch.Tensor:
    """(N, F, H, W) feature maps -> (N*T, F) ordered instance vectors.

    Instance j of a sample averages flattened frames [floor(j*L/T),
    ceil((j+1)*L/T)) where L = H*W; vectors are returned sample-major.
    """
    if p.ndim != 4:
        raise ValueError(f"expected (N, F, H, W) input, got shape {tuple(p.shape)}")
    n, f, h, w = p.shape
    if t > h * w:
        raise ValueError(f"cannot extract {t} instances from {h * w} frames")
    flat = p.reshape(n, f, h * w)                  # frames indexed h-major
    pooled = F.adaptive_avg_pool1d(flat, t)        # (N, F, T)
    return pooled.permute(0, 2, 1).reshape(n * t, f)


def _normalize_rows(vectors: torch.Tensor) -> torch.Tensor:
    norms = vectors.norm(dim=-1, keepdim=True)
    if norms.min() == 0:
        raise ValueError("zero vector: cosine similarity undefined")
    return vectors / norms


def nce_loss(vectors: torch.Tensor, anchor: int, positive: int, tau: float) -> torch.Tensor:
    """Noise contrastive estimation over a candidate set.

    `vectors` is the candidate set U (one row per element); `anchor` and
    `positive` index into it. The denominator runs over every row except the
    anchor itself.
    """
    if vectors.ndim != 2 or len(vectors) < 2:
        raise ValueError("need at least two candidate vectors")
    if anchor == positive:
        raise ValueError("anchor and positive must be distinct elements")
    unit = _normalize_rows(vectors)
    sims = unit @ unit[anchor] / tau
    keep = torch.ones(len(vectors), dtype=torch.bool, device=vectors.device)
    keep[anchor] = False
    return torch.logsumexp(sims[keep], dim=0) - sims[positive]


def seqclr_loss(z_a: torch.Tensor, z_b: torch.Tensor, tau: float) -> torch.Tensor:
    """Symmetric sum of NCE terms over index-aligned pairs from the two views."""
    if z_a.shape != z_b.shape:
        raise ValueError(f"view size mismatch: {tuple(z_a.shape)} vs {tuple(z_b.shape)}")
    m = len(z_a)
    unit = _normalize_rows(torch.cat([z_a, z_b], dim=0))
    sims = unit @ unit.T / tau                                 # (2M, 2M)
    eye = torch.eye(2 * m, dtype=torch.bool, device=sims.device)
    denom = torch.logsumexp(sims.masked_fill(eye, float("-inf")), dim=1)
    pos_idx = torch.arange(2 * m, device=sims.device)
    pos_idx = torch.where(pos_idx < m, pos_idx + m, pos_idx - m)
    positives = sims.gather(1, pos_idx[:, None]).squeeze(1)
    return (denom - positives).sum()


class ProjectionHead(nn.Module):
    """Optional 2-layer MLP applied framewise before instance mapping."""

    def __init__(self, dim: int, out_dim: int | None = None):
        super().__init__()
        out_dim = out_dim or dim
        self.net = nn.Sequential(nn.Linear(dim, dim), nn.ReLU(), nn.Linear(dim, out_dim))

    def forward(self, p: torch.Tensor) -> torch.Tensor:
        n, f, h, w = p.shape
        frames = p.reshape(n, f, h * w).transpose(1, 2)
        projected = self.net(frames)
        return projected.transpose(1, 2).reshape(n, -1, h, w)


def contrast_features(model, x: torch.Tensor, cfg: ContrastiveConfig,
                      projection: ProjectionHead | None = None) -> torch.Tensor:
    """Feature maps (N, F, H, W) at the configured tap point."""
    f_b = model.backbone_features(x)
    if cfg.tap_point == "backbone":
        p = f_b.permute(0, 3, 1, 2)
    else:  # post_attention: treat the T character slots as an (T, 1) map
        f_v, _ = model.position_attention(f_b)
        p = f_v.transpose(1, 2).unsqueeze(-1)
    if projection is not None:
        p = projection(p)
    return p


def vision_pretrain_loss(model, view_a: torch.Tensor, view_b: torch.Tensor,
                         targets: torch.Tensor | None, lengths: torch.Tensor | None,
                         n_labeled: int, cfg: ContrastiveConfig,
                         projection: ProjectionHead | None = None):
    """Unified pretraining objective: SeqCLR on all images + CE on labeled ones.

    Both views are strong augmentations of the same (labeled-first) batch; the
    supervised branch reads the vision decoder on view_a's labeled slice.
    Per-image sums are averaged over the batch so coefficients stay
    batch-size independent. Returns (total, components).
    """
    n = view_a.shape[0]
    device = view_a.device
    contrastive = torch.zeros((), device=device)
    if cfg.lambda_unsupervised > 0:
        both = torch.cat([view_a, view_b], dim=0)
        p = contrast_features(model, both, cfg, projection)
        z = instance_map(p, cfg.instances)
        z_a, z_b = z[: n * cfg.instances], z[n * cfg.instances:]
        contrastive = seqclr_loss(z_a, z_b, cfg.temperature) / n

    supervised = torch.zeros((), device=device)
    if cfg.lambda_supervised > 0 and n_labeled > 0:
        if targets is None or lengths is None:
            raise ValueError("labeled batch requires targets and lengths")
        vis = model(view_a[:n_labeled])
        supervised = sequence_ce(vis.logits, targets, lengths)

    total = cfg.lambda_unsupervised * contrastive + cfg.lambda_supervised * supervised
    return total, {"total": float(total.detach()),
                   "contrastive": float(contrastive.detach()),
                   "supervised": float(supervised.detach())}
