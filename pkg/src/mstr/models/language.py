"""Bidirectional cloze language model.

A stack of cross-attention layers reads an embedded character-probability
sequence while a diagonal-blocked attention mask keeps output position i from
ever seeing input position i. The query stream starts from fixed positional
encodings and never self-attends, so the cloze property is exact: output i is
a function of all inputs except input i. Masking attention this way trains
every position's cloze prediction in a single forward pass instead of one
masked pass per character.
"""

from __future__ import annotations

import os

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import ModelConfig, RunConfig
from .layers import sinusoid_encoding

SIMPLEX_TOL = 1e-4


def cloze_attention_mask(t_seq: int) -> torch.Tensor:
    """(T, T) additive mask whose diagonal is -inf."""
    mask = torch.zeros(t_seq, t_seq)
    mask.fill_diagonal_(float("-inf"))
    return mask


class ClozeLayer(nn.Module):
    """Cross-attention (stream -> embedded input) + feed-forward, post-norm."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.attn = nn.MultiheadAttention(dim, heads, dropout=0.0, batch_first=True)
        self.norm1 = nn.LayerNorm(dim)
        self.ff = nn.Sequential(nn.Linear(dim, 4 * dim), nn.ReLU(), nn.Linear(4 * dim, dim))
        self.norm2 = nn.LayerNorm(dim)

    def forward(self, stream, kv, mask):
        attended, _ = self.attn(stream, kv, kv, attn_mask=mask, need_weights=False)
        stream = self.norm1(stream + attended)
        return self.norm2(stream + self.ff(stream))


class LanguageModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Linear(cfg.n_classes, cfg.dim, bias=False)
        self.layers = nn.ModuleList(
            [ClozeLayer(cfg.dim, cfg.bcn_heads) for _ in range(cfg.bcn_layers)])
        self.classifier = nn.Linear(cfg.dim, cfg.n_classes)
        self.register_buffer("pos", sinusoid_encoding(cfg.t_seq, cfg.dim))
        self.register_buffer("mask", cloze_attention_mask(cfg.t_seq))

    def forward(self, y_in: torch.Tensor, validate: bool = True):
        """Contextual features and refined predictions from probability rows.

        Returns (f_l, logits, probs) with f_l of shape (N, T, C).
        """
        if y_in.ndim != 3 or y_in.shape[1] != self.cfg.t_seq \
                or y_in.shape[2] != self.cfg.n_classes:
            raise ValueError(f"expected (N, {self.cfg.t_seq}, {self.cfg.n_classes}) input, "
                             f"got {tuple(y_in.shape)}")
        if validate:
            sums = y_in.sum(dim=-1)
            if (sums - 1.0).abs().max() > SIMPLEX_TOL or y_in.min() < -SIMPLEX_TOL:
                raise ValueError("input rows must be probability vectors")
        kv = self.embed(y_in) + self.pos
        stream = self.pos.expand(y_in.shape[0], -1, -1)
        for layer in self.layers:
            stream = layer(stream, kv, self.mask)
        f_l = stream
        logits = self.classifier(f_l)
        return f_l, logits, torch.softmax(logits, dim=-1)


def bcn_forward(model: LanguageModel, y_in: torch.Tensor):
    """(F_l, Y_l) pair; `y_in` rows must be probability vectors."""
    f_l, _, probs = model(y_in, validate=True)
    return f_l, probs


def mlm_loss(model: LanguageModel, indices: torch.Tensor, padding_index: int) -> torch.Tensor:
    """Cloze objective: each position is predicted from all the others.

    Mean cross-entropy over non-padding positions; padding positions are
    excluded from the loss (they still participate as inputs).
    """
    if indices.ndim != 2 or indices.shape[0] == 0:
        raise ValueError("expected a non-empty (N, T) index batch")
    y_in = F.one_hot(indices, num_classes=model.cfg.n_classes).to(model.pos.dtype)
    _, logits, _ = model(y_in, validate=False)
    keep = indices != padding_index
    if not torch.any(keep):
        raise ValueError("batch contains only padding positions")
    losses = F.cross_entropy(logits.permute(0, 2, 1), indices, reduction="none")
    return losses[keep].mean()


def pretrain_language_model(corpus: list, cfg: RunConfig, charset, out_dir: str,
                            resume_from: str | None = None):
    """Train the cloze model on a word corpus; saves a checkpoint and a JSONL log.

    Returns (model, ckpt_dir). A held-out fraction of the corpus provides the
    validation loss written to the log.
    """
    from .. import checkpoint as ckpt_io
    from ..logio import JsonlLogger

    stage = cfg.stage2
    encoded = np.array([charset.encode(w, cfg.model.t_seq) for w in corpus], dtype=np.int64)
    if len(encoded) < 2:
        raise ValueError("corpus too small")
    n_val = max(1, int(len(encoded) * stage.val_fraction))
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(encoded))
    val_idx, train_idx = order[:n_val], order[n_val:]
    val_batch = torch.from_numpy(encoded[val_idx[:512]])

    torch.manual_seed(cfg.seed)
    model = LanguageModel(cfg.model)
    start_step = 0
    optimizer = torch.optim.Adam(model.parameters(), lr=stage.lr)
    if resume_from is not None:
        meta = ckpt_io.load_checkpoint(resume_from, model, optimizer,
                                       expect_charset_hash=charset.hash())
        start_step = meta.get("step", 0)

    drop_step = int(stage.lr_drop_at * stage.steps)
    os.makedirs(out_dir, exist_ok=True)
    pad = charset.padding_index
    with JsonlLogger(os.path.join(out_dir, "lm_train.jsonl")) as log:
        for step in range(start_step, stage.steps):
            lr = stage.lr * (stage.lr_decay if step >= drop_step else 1.0)
            for group in optimizer.param_groups:
                group["lr"] = lr
            step_rng = np.random.default_rng([cfg.seed, 2, step])
            idx = train_idx[step_rng.integers(0, len(train_idx), size=stage.batch_size)]
            batch = torch.from_numpy(encoded[idx])
            loss = mlm_loss(model, batch, pad)
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), stage.grad_clip)
            optimizer.step()
            if step % stage.log_every == 0 or step == stage.steps - 1:
                model.eval()
                with torch.no_grad():
                    val_loss = mlm_loss(model, val_batch, pad).item()
                model.train()
                log.log({"step": step, "loss": float(loss.item()),
                         "val_loss": val_loss, "lr": lr})

    ckpt_dir = os.path.join(out_dir, "lm_ckpt")
    ckpt_io.save_checkpoint(ckpt_dir, model, meta={
        "stage": "language_pretrain",
        "profile": cfg.profile,
        "charset_hash": charset.hash(),
        "step": stage.steps,
        "config_hash": cfg.hash(),
        "config": cfg.to_dict(),
    }, optimizer=optimizer)
    return model, ckpt_dir
