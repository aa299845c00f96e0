"""Dataset construction: corpus rendering, splits, and mixed-batch sampling.

Unlabeled samples never carry their transcription; the ground truth of the
unlabeled split is kept in a separate sidecar mapping used only for
diagnostics (e.g. pseudo-label precision reports).
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .charset import Charset, DEFAULT_CHARSET, DEFAULT_T_SEQ
from .rendering import IMG_HEIGHT, IMG_WIDTH, render_pixels

logger = logging.getLogger(__name__)


@dataclass
class ImageSample:
    pixels: np.ndarray          # 3 x 32 x 128 float32 in [0, 1]
    label: str | None = None    # None for unlabeled samples
    sample_id: str = ""

    def __post_init__(self):
        if self.pixels.shape != (3, IMG_HEIGHT, IMG_WIDTH):
            raise ValueError(f"expected pixels of shape (3, {IMG_HEIGHT}, {IMG_WIDTH}), "
                             f"got {self.pixels.shape}")


@dataclass
class DatasetSplits:
    labeled: list = field(default_factory=list)
    unlabeled: list = field(default_factory=list)
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)
    # sample_id -> transcription for the unlabeled split; diagnostics only,
    # never consumed by training code.
    unlabeled_truth: dict = field(default_factory=dict)
    seed: int = 0
    charset_hash: str = ""
    t_seq: int = DEFAULT_T_SEQ
    skipped_words: int = 0

    def split(self, name: str) -> list:
        return getattr(self, name)


@dataclass
class MixedBatch:
    labeled_part: list          # list of (ImageSample, label)
    unlabeled_part: list        # list of ImageSample

    @property
    def size(self) -> int:
        return len(self.labeled_part) + len(self.unlabeled_part)

    def images(self) -> np.ndarray:
        """Stacked pixels, labeled part first: (batch, 3, H, W) float32."""
        arrs = [s.pixels for s, _ in self.labeled_part] + [s.pixels for s in self.unlabeled_part]
        return np.stack(arrs, axis=0)

    def labels(self) -> list:
        return [t for _, t in self.labeled_part]


def render_word_image(text: str, style_seed: int, charset: Charset = DEFAULT_CHARSET,
                      t_seq: int = DEFAULT_T_SEQ, sample_id: str = "") -> ImageSample:
    """Render a labeled sample; deterministic in (text, style_seed)."""
    pixels = render_pixels(text, style_seed, charset=charset, t_seq=t_seq)
    return ImageSample(pixels=pixels, label=text, sample_id=sample_id)


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def build_toy_corpus(n_labeled: int, n_unlabeled: int, n_val: int, n_test: int,
                     word_source, seed: int, charset: Charset = DEFAULT_CHARSET,
                     t_seq: int = DEFAULT_T_SEQ) -> DatasetSplits:
    """Render disjoint labeled/unlabeled/val/test splits from a lexicon.

    Words violating the charset or the length limit are skipped with a
    warning count. Sample identities are unique across splits; the unlabeled
    split's transcriptions go into the sidecar mapping only.
    """
    for name, n in [("n_labeled", n_labeled), ("n_unlabeled", n_unlabeled),
                    ("n_val", n_val), ("n_test", n_test)]:
        if n < 0:
            raise ValueError(f"{name} must be >= 0")
    words = list(word_source)
    if not words:
        raise ValueError("word source is empty")

    valid, skipped = [], 0
    for w in words:
        if w and len(w) <= t_seq - 1 and charset.contains_text(w):
            valid.append(w)
        else:
            skipped += 1
    if skipped:
        logger.warning("skipped %d lexicon words violating charset/length constraints", skipped)
    if not valid:
        raise ValueError("no lexicon word satisfies the charset constraints")

    rng = np.random.default_rng(seed)
    splits = DatasetSplits(seed=seed, charset_hash=charset.hash(), t_seq=t_seq,
                           skipped_words=skipped)
    counter = 0
    for split_name, count, labeled in [("labeled", n_labeled, True),
                                       ("unlabeled", n_unlabeled, False),
                                       ("val", n_val, True),
                                       ("test", n_test, True)]:
        bucket = splits.split(split_name)
        for _ in range(count):
            word = valid[int(rng.integers(0, len(valid)))]
            style_seed = int(rng.integers(0, 2**31 - 1))
            sid = f"{seed}-{split_name}-{counter:06d}"
            counter += 1
            pixels = render_pixels(word, style_seed, charset=charset, t_seq=t_seq)
            if labeled:
                bucket.append(ImageSample(pixels=pixels, label=word, sample_id=sid))
            else:
                bucket.append(ImageSample(pixels=pixels, label=None, sample_id=sid))
                splits.unlabeled_truth[sid] = word
    return splits


def sample_mixed_batch(splits: DatasetSplits, batch_size: int, labeled_ratio: float,
                       rng: np.random.Generator) -> MixedBatch:
    """Draw a batch with round-half-up(batch_size * labeled_ratio) labeled samples.

    Draws with replacement whenever a split holds fewer samples than its
    share, without replacement otherwise.
    """
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2")
    if not 0.0 <= labeled_ratio <= 1.0:
        raise ValueError("labeled_ratio must be in [0, 1]")
    n_lab = round_half_up(batch_size * labeled_ratio)
    n_unl = batch_size - n_lab
    if n_lab > 0 and not splits.labeled:
        raise ValueError("labeled split is empty but labeled_ratio > 0")
    if n_unl > 0 and not splits.unlabeled:
        raise ValueError("unlabeled split is empty but labeled_ratio < 1")

    def draw(pool, k):
        replace = len(pool) < k
        idx = rng.choice(len(pool), size=k, replace=replace)
        return [pool[i] for i in idx]

    labeled = [(s, s.label) for s in draw(splits.labeled, n_lab)] if n_lab else []
    unlabeled = draw(splits.unlabeled, n_unl) if n_unl else []
    return MixedBatch(labeled_part=labeled, unlabeled_part=unlabeled)


def sample_labeled_batch(samples: list, batch_size: int, rng: np.random.Generator) -> MixedBatch:
    """All-labeled batch from an explicit sample list (supervised baselines)."""
    if not samples:
        raise ValueError("sample list is empty")
    replace = len(samples) < batch_size
    idx = rng.choice(len(samples), size=batch_size, replace=replace)
    return MixedBatch(labeled_part=[(samples[i], samples[i].label) for i in idx],
                      unlabeled_part=[])


# ---------------------------------------------------------------------------
# On-disk format: one directory per split with PNG images, a labels.tsv for
# labeled splits, a sidecar TSV for unlabeled ground truth, and a manifest.
# ---------------------------------------------------------------------------

def save_dataset(splits: DatasetSplits, out_dir: str) -> None:
    from PIL import Image

    os.makedirs(out_dir, exist_ok=True)
    counts = {}
    for name in ("labeled", "unlabeled", "val", "test"):
        split_dir = os.path.join(out_dir, name)
        os.makedirs(split_dir, exist_ok=True)
        rows = []
        for s in splits.split(name):
            fname = f"{s.sample_id}.png"
            arr = (s.pixels.transpose(1, 2, 0) * 255.0).round().astype(np.uint8)
            Image.fromarray(arr).save(os.path.join(split_dir, fname))
            if s.label is not None:
                rows.append(f"{fname}\t{s.label}")
        if rows:
            with open(os.path.join(split_dir, "labels.tsv"), "w", encoding="utf-8") as f:
                f.write("\n".join(rows) + "\n")
        counts[name] = len(splits.split(name))
    if splits.unlabeled_truth:
        with open(os.path.join(out_dir, "unlabeled_truth.tsv"), "w", encoding="utf-8") as f:
            for sid, text in sorted(splits.unlabeled_truth.items()):
                f.write(f"{sid}.png\t{text}\n")
    manifest = {
        "seed": splits.seed,
        "counts": counts,
        "charset_hash": splits.charset_hash,
        "t_seq": splits.t_seq,
        "skipped_words": splits.skipped_words,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)


def load_dataset(in_dir: str) -> DatasetSplits:
    from PIL import Image

    manifest_path = os.path.join(in_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"no manifest.json in {in_dir}")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = json.load(f)
    splits = DatasetSplits(seed=manifest["seed"], charset_hash=manifest["charset_hash"],
                           t_seq=manifest["t_seq"],
                           skipped_words=manifest.get("skipped_words", 0))

    def read_labels(split_dir):
        path = os.path.join(split_dir, "labels.tsv")
        table = {}
        if os.path.exists(path):
            with open(path, encoding="utf-8") as f:
                for line in f:
                    line = line.rstrip("\n")
                    if line:
                        fname, text = line.split("\t", 1)
                        table[fname] = text
        return table

    for name in ("labeled", "unlabeled", "val", "test"):
        split_dir = os.path.join(in_dir, name)
        if not os.path.isdir(split_dir):
            continue
        labels = read_labels(split_dir)
        bucket = splits.split(name)
        for fname in sorted(os.listdir(split_dir)):
            if not fname.endswith(".png"):
                continue
            arr = np.asarray(Image.open(os.path.join(split_dir, fname)), dtype=np.float32) / 255.0
            pixels = np.ascontiguousarray(arr.transpose(2, 0, 1))
            bucket.append(ImageSample(pixels=pixels, label=labels.get(fname),
                                      sample_id=fname[:-4]))

    sidecar = os.path.join(in_dir, "unlabeled_truth.tsv")
    if os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if line:
                    fname, text = line.split("\t", 1)
                    splits.unlabeled_truth[fname[:-4]] = text
    return splits
