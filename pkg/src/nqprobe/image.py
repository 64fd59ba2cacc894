"""Image buffers and PNG I/O.

Images are plain numpy arrays of shape (height, width, 3) in level units.
Two modes exist: integer mode (any integer dtype, values in [0, 255]) and
fractional mode (floating dtype, values in [0, 256)), used to exercise the
sub-level bias theory directly.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

LEVELS = 256


def is_integer_mode(image: np.ndarray) -> bool:
    return np.issubdtype(np.asarray(image).dtype, np.integer)


def validate_image(image: np.ndarray) -> np.ndarray:
    """Check shape and per-mode value ranges; returns the array unchanged."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (height, width, 3) image, got shape {image.shape}")
    if image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError("empty image")
    if is_integer_mode(image):
        if image.min() < 0 or image.max() > LEVELS - 1:
            raise ValueError("integer-mode image values must lie in [0, 255]")
    else:
        if not np.all(np.isfinite(image)):
            raise ValueError("fractional-mode image contains non-finite values")
        if image.min() < 0 or image.max() >= LEVELS:
            raise ValueError("fractional-mode image values must lie in [0, 256)")
    return image


def load_png(path) -> np.ndarray:
    """Load an image file as an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_png(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        if not is_integer_mode(image):
            raise ValueError("save_png expects integer-mode values")
        if image.min() < 0 or image.max() > 255:
            raise ValueError("integer image values must lie in [0, 255]")
        image = image.astype(np.uint8)
    Image.fromarray(image, mode="RGB").save(path, format="PNG")
