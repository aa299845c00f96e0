"""Strong and weak augmentation pipelines.

The strong pipeline is pure colour/texture/blur/noise: it contains no
geometric operation at all, so the left-to-right order of the characters is
untouched. The weak pipeline applies mild geometry (rotation up to 15
degrees, small affine jitter) plus mild photometric jitter; its perturbations
are small enough to keep well-separated glyphs in their column order.

All functions are pure in (image, rng): identical generator state yields
identical output.
"""

from __future__ import annotations

import cv2
import numpy as np

_KELVIN_TABLE = [
    (1000, (255, 56, 0)), (1500, (255, 109, 0)), (2000, (255, 137, 18)),
    (2500, (255, 161, 72)), (3000, (255, 180, 107)), (3500, (255, 196, 137)),
    (4000, (255, 209, 163)), (4500, (255, 219, 186)), (5000, (255, 228, 206)),
    (5500, (255, 236, 224)), (6000, (255, 243, 239)), (6500, (255, 249, 253)),
    (7000, (245, 243, 255)), (7500, (235, 238, 255)), (8000, (227, 233, 255)),
    (8500, (220, 229, 255)), (9000, (214, 225, 255)), (9500, (208, 222, 255)),
    (10000, (204, 219, 255)),
]


def _to_uint8(chw: np.ndarray) -> np.ndarray:
    return (np.clip(chw, 0.0, 1.0).transpose(1, 2, 0) * 255.0).round().astype(np.uint8)


def _to_float(hwc: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray((hwc.astype(np.float32) / 255.0).transpose(2, 0, 1))


def _check_image(chw: np.ndarray) -> None:
    if chw.ndim != 3 or chw.shape[0] != 3:
        raise ValueError(f"expected a (3, H, W) image, got shape {chw.shape}")


# -- strong pipeline ops (uint8 HWC in, uint8 HWC out) ----------------------

def _channel_shuffle(img, rng):
    if rng.uniform() < 0.35:
        return img[:, :, rng.permutation(3)]
    return img


def _grayscale(img, rng):
    alpha = rng.uniform(0.0, 1.0)
    gray = cv2.cvtColor(img, cv2.COLOR_RGB2GRAY)[:, :, None].repeat(3, axis=2)
    return np.clip((1 - alpha) * img + alpha * gray, 0, 255).astype(np.uint8)


def _kmeans_quantize(img, rng):
    k = int(rng.integers(2, 17))
    flat = img.reshape(-1, 3).astype(np.float32)
    centers = flat[rng.choice(flat.shape[0], size=k, replace=False)]
    for _ in range(4):
        d = ((flat[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d.argmin(axis=1)
        for j in range(k):
            sel = flat[assign == j]
            if len(sel):
                centers[j] = sel.mean(axis=0)
    d = ((flat[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    out = centers[d.argmin(axis=1)].reshape(img.shape)
    return np.clip(out, 0, 255).astype(np.uint8)


def _hist_equalize(img, rng):
    chans = [cv2.equalizeHist(img[:, :, c]) for c in range(3)]
    return np.stack(chans, axis=2)


def _dropout(img, rng):
    p = rng.uniform(0.0, 0.2)
    if rng.uniform() < 0.5:
        mask = rng.uniform(size=img.shape) >= p
    else:
        mask = (rng.uniform(size=img.shape[:2]) >= p)[:, :, None]
    return (img * mask).astype(np.uint8)

def _gamma_contrast(img, rng):
    gamma = rng.uniform(0.5, 2.0)
    return np.clip(((img / 255.0) ** gamma) * 255.0, 0, 255).astype(np.uint8)


def _brightness(img, rng):
    factor = rng.uniform(0.5, 1.5)
    hsv = cv2.cvtColor(img, cv2.COLOR_RGB2HSV).astype(np.float32)
    hsv[:, :, 2] = np.clip(hsv[:, :, 2] * factor, 0, 255)
    return cv2.cvtColor(hsv.astype(np.uint8), cv2.COLOR_HSV2RGB)


def _hue_saturation(img, rng):
    dh = rng.uniform(-50, 50)
    ds = rng.uniform(-50, 50)
    hsv = cv2.cvtColor(img, cv2.COLOR_RGB2HSV).astype(np.float32)
    hsv[:, :, 0] = (hsv[:, :, 0] + dh * 180.0 / 255.0) % 180.0
    hsv[:, :, 1] = np.clip(hsv[:, :, 1] + ds, 0, 255)
    return cv2.cvtColor(hsv.astype(np.uint8), cv2.COLOR_HSV2RGB)


def _color_temperature(img, rng):
    kelvin = rng.uniform(1100, 10000)
    ks = [k for k, _ in _KELVIN_TABLE]
    idx = int(np.searchsorted(ks, kelvin).clip(1, len(ks) - 1))
    k0, rgb0 = _KELVIN_TABLE[idx - 1]
    k1, rgb1 = _KELVIN_TABLE[idx]
    t = (kelvin - k0) / (k1 - k0)
    tint = (1 - t) * np.asarray(rgb0, dtype=np.float32) + t * np.asarray(rgb1, dtype=np.float32)
    out = img.astype(np.float32) * (tint[None, None, :] / 255.0)
    return np.clip(out, 0, 255).astype(np.uint8)


def _sharpen(img, rng):
    alpha = rng.uniform(0.0, 0.5)
    lightness = rng.uniform(0.0, 0.5)
    kernel = np.array([[-1, -1, -1], [-1, 8 + lightness, -1], [-1, -1, -1]], dtype=np.float32)
    sharp = cv2.filter2D(img, -1, kernel / max(kernel.sum(), 1e-3))
    return np.clip((1 - alpha) * img + alpha * sharp, 0, 255).astype(np.uint8)


def _gaussian_blur(img, rng):
    sigma = rng.uniform(0.5, 1.5)
    return cv2.GaussianBlur(img, (0, 0), sigmaX=sigma)


def _average_blur(img, rng):
    k = int(rng.integers(2, 7))
    return cv2.blur(img, (k, k))


def _median_blur(img, rng):
    k = int(rng.choice([3, 5, 7]))
    k = min(k, 2 * (min(img.shape[:2]) // 2) - 1)  # keep kernel feasible on 32-px images
    return cv2.medianBlur(img, k)


def _motion_blur(img, rng):
    k = 5
    kernel = np.zeros((k, k), dtype=np.float32)
    angle = rng.uniform(0, 180)
    c = (k - 1) / 2
    dx, dy = np.cos(np.deg2rad(angle)), np.sin(np.deg2rad(angle))
    for t in np.linspace(-c, c, 2 * k):
        x, y = int(round(c + t * dx)), int(round(c + t * dy))
        kernel[y, x] = 1.0
    kernel /= kernel.sum()
    return cv2.filter2D(img, -1, kernel)


def _emboss(img, rng):
    alpha = rng.uniform(0.0, 1.0)
    strength = rng.uniform(0.5, 1.5)
    kernel = np.array([[-1 - strength, 0 - strength, 0],
                       [0 - strength, 1, 0 + strength],
                       [0, 0 + strength, 1 + strength]], dtype=np.float32)
    embossed = cv2.filter2D(img, -1, kernel)
    return np.clip((1 - alpha) * img + alpha * embossed, 0, 255).astype(np.uint8)


def _gaussian_noise(img, rng):
    scale = rng.uniform(0.0, 0.2 * 255)
    noise = rng.normal(0.0, max(scale, 1e-9), size=img.shape)
    return np.clip(img + noise, 0, 255).astype(np.uint8)


def _impulse_noise(img, rng):
    p = 0.1
    mask = rng.uniform(size=img.shape[:2]) < p
    salt = rng.integers(0, 2, size=img.shape[:2]).astype(np.uint8) * 255
    out = img.copy()
    out[mask] = salt[mask, None]
    return out


def _multiply_elementwise(img, rng):
    factors = rng.uniform(0.5, 1.5, size=img.shape[:2])[:, :, None]
    return np.clip(img * factors, 0, 255).astype(np.uint8)


_COLOR_OPS = (_channel_shuffle, _grayscale, _kmeans_quantize, _hist_equalize,
              _dropout, _gamma_contrast, _brightness, _hue_saturation,
              _color_temperature)
_BLUR_OPS = (_gaussian_blur, _average_blur, _median_blur, _motion_blur)
_NOISE_OPS = (_emboss, _gaussian_noise, _impulse_noise, _multiply_elementwise)


def strong_augment(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Colour/texture/blur/noise pipeline; shape-preserving, order-preserving."""
    _check_image(image)
    img = _to_uint8(image)
    if rng.uniform() < 0.5:
        img = 255 - img
    img = _COLOR_OPS[rng.integers(0, len(_COLOR_OPS))](img, rng)
    if rng.uniform() < 0.5:
        img = _sharpen(img, rng)
    else:
        img = _BLUR_OPS[rng.integers(0, len(_BLUR_OPS))](img, rng)
    img = _NOISE_OPS[rng.integers(0, len(_NOISE_OPS))](img, rng)
    return _to_float(img)


def weak_augment(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Mild geometric + photometric jitter; identity when no op fires."""
    _check_image(image)
    h, w = image.shape[1], image.shape[2]
    applied = False
    img = None

    def materialize():
        nonlocal img, applied
        if img is None:
            img = _to_uint8(image)
        applied = True

    do_rotate = rng.uniform() < 0.5
    angle = rng.uniform(-15.0, 15.0)
    do_affine = rng.uniform() < 0.5
    tx, ty = rng.uniform(-3.0, 3.0), rng.uniform(-1.5, 1.5)
    shear = rng.uniform(-0.05, 0.05)
    do_bright = rng.uniform() < 0.5
    bfac = rng.uniform(0.8, 1.2)
    do_contrast = rng.uniform() < 0.5
    cfac = rng.uniform(0.8, 1.2)

    if do_rotate:
        materialize()
        m = cv2.getRotationMatrix2D((w / 2, h / 2), angle, 1.0)
        img = cv2.warpAffine(img, m, (w, h), flags=cv2.INTER_LINEAR,
                             borderMode=cv2.BORDER_REPLICATE)
    if do_affine:
        materialize()
        m = np.array([[1.0, shear, tx], [0.0, 1.0, ty]], dtype=np.float32)
        img = cv2.warpAffine(img, m, (w, h), flags=cv2.INTER_LINEAR,
                             borderMode=cv2.BORDER_REPLICATE)
    if do_bright:
        materialize()
        img = np.clip(img.astype(np.float32) * bfac, 0, 255).astype(np.uint8)
    if do_contrast:
        materialize()
        mean = img.mean()
        img = np.clip((img.astype(np.float32) - mean) * cfac + mean, 0, 255).astype(np.uint8)

    if not applied:
        return image.astype(np.float32).copy()
    return _to_float(img)


def augment_pair(image: np.ndarray, rng: np.random.Generator):
    """Two independent strong augmentations of the same image."""
    rng_a, rng_b = rng.spawn(2)
    return strong_augment(image, rng_a), strong_augment(image, rng_b)


def no_augment(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return image.astype(np.float32).copy()


PIPELINES = {"strong": strong_augment, "weak": weak_augment, "none": no_augment}
