"""Synthetic word-image renderer.

Draws a word onto a procedurally generated background (solid, gradient,
noise blotches, or photo-like texture) with a random font, size, colour and
placement. Everything is a pure function of (text, style_seed), which makes
datasets reproducible and lets unlabeled transcriptions live in a sidecar
file instead of the samples themselves.
"""

from __future__ import annotations

import functools
import glob
import os
import zlib

import cv2
import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .charset import Charset, DEFAULT_CHARSET, DEFAULT_T_SEQ

IMG_HEIGHT = 32
IMG_WIDTH = 128

_FONT_FAMILIES = (
    "DejaVuSans.ttf",
    "DejaVuSans-Bold.ttf",
    "DejaVuSans-Oblique.ttf",
    "DejaVuSerif.ttf",
    "DejaVuSerif-Bold.ttf",
    "DejaVuSerif-Italic.ttf",
    "DejaVuSansMono.ttf",
    "DejaVuSansMono-Bold.ttf",
)


@functools.lru_cache(maxsize=1)
def _font_paths() -> tuple:
    import matplotlib

    ttf_dir = os.path.join(matplotlib.get_data_path(), "fonts", "ttf")
    paths = [os.path.join(ttf_dir, name) for name in _FONT_FAMILIES]
    paths = [p for p in paths if os.path.exists(p)]
    if not paths:
        paths = sorted(glob.glob(os.path.join(ttf_dir, "*.ttf")))
    if not paths:
        raise RuntimeError("no TTF fonts found for rendering")
    return tuple(paths)


@functools.lru_cache(maxsize=256)
def _load_font(path: str, size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.truetype(path, size)


def _luminance(rgb: np.ndarray) -> float:
    return float(0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2])


def _background(rng: np.random.Generator) -> np.ndarray:
    """Random background, H x W x 3 float in [0, 1]."""
    kind = rng.choice(["solid", "hgradient", "vgradient", "noise", "texture"])
    h, w = IMG_HEIGHT, IMG_WIDTH
    c0 = rng.uniform(0.0, 1.0, size=3)
    c1 = rng.uniform(0.0, 1.0, size=3)
    if kind == "solid":
        bg = np.tile(c0, (h, w, 1))
    elif kind == "hgradient":
        t = np.linspace(0.0, 1.0, w)[None, :, None]
        bg = c0[None, None, :] * (1 - t) + c1[None, None, :] * t
        bg = np.tile(bg, (h, 1, 1))
    elif kind == "vgradient":
        t = np.linspace(0.0, 1.0, h)[:, None, None]
        bg = c0[None, None, :] * (1 - t) + c1[None, None, :] * t
        bg = np.tile(bg, (1, w, 1))
    elif kind == "noise":
        low = rng.uniform(0.0, 1.0, size=(4, 16, 3)).astype(np.float32)
        bg = cv2.resize(low, (w, h), interpolation=cv2.INTER_LINEAR).astype(np.float64)
    else:  # texture: two-tone blobs, crudely photo-like
        field = rng.uniform(0.0, 1.0, size=(8, 32)).astype(np.float32)
        field = cv2.resize(field, (w, h), interpolation=cv2.INTER_CUBIC)
        mask = (field > rng.uniform(0.3, 0.7)).astype(np.float64)[:, :, None]
        bg = c0[None, None, :] * mask + c1[None, None, :] * (1 - mask)
        bg += rng.normal(0.0, 0.04, size=(h, w, 3))
    return np.clip(bg, 0.0, 1.0)


def _text_color(rng: np.random.Generator, bg: np.ndarray) -> np.ndarray:
    bg_lum = _luminance(bg.reshape(-1, 3).mean(axis=0))
    for _ in range(8):
        color = rng.uniform(0.0, 1.0, size=3)
        if abs(_luminance(color) - bg_lum) >= 0.35:
            return color
    return np.zeros(3) if bg_lum > 0.5 else np.ones(3)


def _fit_font(text: str, rng: np.random.Generator) -> ImageFont.FreeTypeFont:
    path = _font_paths()[rng.integers(0, len(_font_paths()))]
    size = int(rng.integers(16, 27))
    while size > 7:
        font = _load_font(path, size)
        if font.getlength(text) <= IMG_WIDTH - 6:
            return font
        size -= 1
    return _load_font(path, 7)


def render_pixels(text: str, style_seed: int, charset: Charset = DEFAULT_CHARSET,
                  t_seq: int = DEFAULT_T_SEQ) -> np.ndarray:
    """Render a word; returns a 3 x 32 x 128 float32 array with values in [0, 1].

    Deterministic for a fixed (text, style_seed) pair; the seed controls font,
    colours, background and placement only.
    """
    if not text:
        raise ValueError("cannot render empty text")
    if len(text) > t_seq - 1:
        raise ValueError(f"text {text!r} exceeds the {t_seq - 1}-character limit")
    if not charset.contains_text(text):
        raise ValueError(f"text {text!r} contains symbols outside the charset")

    rng = np.random.default_rng([int(style_seed) & 0xFFFFFFFF, zlib.crc32(text.encode("utf-8"))])
    bg = _background(rng)
    color = _text_color(rng, bg)
    font = _fit_font(text, rng)

    # Text is drawn on a transparent overlay so it can be rotated slightly
    # before compositing.
    overlay = Image.new("RGBA", (IMG_WIDTH, IMG_HEIGHT), (0, 0, 0, 0))
    draw = ImageDraw.Draw(overlay)
    left, top, right, bottom = draw.textbbox((0, 0), text, font=font)
    text_w, text_h = right - left, bottom - top
    max_x = max(IMG_WIDTH - text_w - 2, 3)
    max_y = max(IMG_HEIGHT - text_h - 1, 1)
    x = int(rng.integers(2, max_x)) - left
    y = int(rng.integers(0, max_y)) - top
    rgb255 = tuple(int(round(255 * c)) for c in color)
    draw.text((x, y), text, font=font, fill=rgb255 + (255,))

    angle = float(rng.uniform(-4.0, 4.0))
    overlay = overlay.rotate(angle, resample=Image.BILINEAR, expand=False)

    over = np.asarray(overlay, dtype=np.float64) / 255.0
    alpha = over[:, :, 3:4]
    img = over[:, :, :3] * alpha + bg * (1 - alpha)

    noise_sigma = float(rng.uniform(0.0, 0.03))
    if noise_sigma > 0:
        img = img + rng.normal(0.0, noise_sigma, size=img.shape)

    img = np.clip(img, 0.0, 1.0).astype(np.float32)
    return np.ascontiguousarray(img.transpose(2, 0, 1))
