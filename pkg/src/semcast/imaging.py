"""Image-side evaluation: tile mosaics at mixed resolutions, PSNR, weighted PSNR.

A level assignment is rendered by downscaling each tile to its level's scale
fraction and upscaling it back, then reassembling the frame.  Downscaling is
exact box (area) averaging; upscaling is bilinear with half-pixel centers.
Both run in float64 and quantize once at the end (round half up), so the top
level reproduces the input byte for byte.

PSNR uses the 8-bit peak and caps at PSNR_CAP_DB when the images are
identical.
"""
from __future__ import annotations

import math
from typing import Mapping, Optional

import numpy as np
from PIL import Image

from .errors import DimensionMismatchError, ScenarioError
from .hetnet import ResolutionLadder
from .scene import TileGrid, TileId

PSNR_CAP_DB = 100.0


def load_png(path) -> np.ndarray:
    img = Image.open(path)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def save_png(image: np.ndarray, path) -> None:
    Image.fromarray(image).save(path, format="PNG")


def _check_image(image: np.ndarray) -> None:
    if image.dtype != np.uint8:
        raise DimensionMismatchError("image samples must be 8-bit")
    if image.ndim == 2:
        return
    if image.ndim == 3 and image.shape[2] in (1, 3):
        return
    raise DimensionMismatchError(f"unsupported image shape {image.shape}")


def _box_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) row-stochastic matrix of box-overlap weights."""
    w = np.zeros((n_out, n_in))
    step = n_in / n_out
    for i in range(n_out):
        lo = i * step
        hi = (i + 1) * step
        j0 = int(math.floor(lo))
        j1 = min(int(math.ceil(hi)), n_in)
        for j in range(j0, j1):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                w[i, j] = overlap / step
    return w


def downscale_area(tile: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Box-average a float64 tile (2D or 2D+channels) to (out_h, out_w)."""
    wr = _box_weights(tile.shape[0], out_h)
    wc = _box_weights(tile.shape[1], out_w)
    if tile.ndim == 2:
        return wr @ tile @ wc.T
    rows = np.tensordot(wr, tile, axes=(1, 0))  # (out_h, in_w, C)
    return np.tensordot(rows, wc, axes=(1, 1)).transpose(0, 2, 1)  # (out_h, out_w, C)


def _linear_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source indices and fractions for half-pixel-center linear interpolation."""
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1.0)
    i0 = np.floor(pos).astype(int)
    i0 = np.minimum(i0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = pos - i0
    return i0, i1, frac


def upscale_bilinear(tile: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a float64 tile to (out_h, out_w), edge-clamped."""
    y0, y1, fy = _linear_coords(tile.shape[0], out_h)
    x0, x1, fx = _linear_coords(tile.shape[1], out_w)
    fy = fy.reshape(-1, *([1] * (tile.ndim - 1)))
    rows = tile[y0] * (1.0 - fy) + tile[y1] * fy
    fx = fx.reshape(1, -1, *([1] * (tile.ndim - 2)))
    return rows[:, x0] * (1.0 - fx) + rows[:, x1] * fx


def scaled_size(n: int, scale: float) -> int:
    """Pixel count of one axis after downscaling; at least one pixel."""
    return max(1, round(n * scale))


def resample_tile(tile: np.ndarray, scale: float) -> np.ndarray:
    """Round-trip a float64 tile through its scaled size; identity at scale 1."""
    h, w = tile.shape[0], tile.shape[1]
    down_h = scaled_size(h, scale)
    down_w = scaled_size(w, scale)
    if down_h == h and down_w == w:
        return tile.copy()
    return upscale_bilinear(downscale_area(tile, down_h, down_w), h, w)


def quantize(image: np.ndarray) -> np.ndarray:
    """Round half up to 8-bit samples."""
    return np.clip(np.floor(image + 0.5), 0, 255).astype(np.uint8)


def apply_levels(
    image: np.ndarray,
    grid: TileGrid,
    assignment: Mapping[TileId, int],
    ladder: ResolutionLadder,
) -> np.ndarray:
    """Render a level assignment as a mosaic; unassigned tiles pass through."""
    _check_image(image)
    if image.shape[0] != grid.frame_height or image.shape[1] != grid.frame_width:
        raise DimensionMismatchError(
            f"image {image.shape[1]}x{image.shape[0]} does not match grid frame "
            f"{grid.frame_width}x{grid.frame_height}"
        )
    out = image.copy()
    for tile in sorted(assignment):
        x0, y0, x1, y1 = grid.tile_pixel_box(tile)
        scale = ladder.scale(assignment[tile])
        block = image[y0:y1, x0:x1].astype(np.float64)
        out[y0:y1, x0:x1] = quantize(resample_tile(block, scale))
    return out


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB between two 8-bit images."""
    _check_image(a)
    _check_image(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(255.0**2 / mse)


def per_tile_psnr(a: np.ndarray, b: np.ndarray, grid: TileGrid) -> dict[TileId, float]:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")
    out: dict[TileId, float] = {}
    for tile in grid.all_tiles():
        x0, y0, x1, y1 = grid.tile_pixel_box(tile)
        out[tile] = psnr(a[y0:y1, x0:x1], b[y0:y1, x0:x1])
    return out


def weighted_psnr(
    per_tile: Mapping[TileId, float], weights: Mapping[TileId, float]
) -> float:
    """Significance-weighted mean of per-tile PSNR values (capped tiles at the cap)."""
    num = 0.0
    den = 0.0
    for tile in sorted(per_tile):
        if tile not in weights:
            raise ScenarioError(f"missing significance weight for tile {tuple(tile)}")
        num += weights[tile] * per_tile[tile]
        den += weights[tile]
    if den == 0.0:
        raise ScenarioError("weighted PSNR undefined: total weight is zero")
    return num / den


def synthetic_frame(
    width: int, height: int, seed: int = 0, channels: int = 3
) -> np.ndarray:
    """Deterministic high-detail test frame: gradients, textures, noise, patches.

    Every region carries fine structure, so coarser ladder levels strictly
    lose fidelity on it.
    """
    if channels not in (1, 3):
        raise ScenarioError("synthetic frames support 1 or 3 channels")
    rng = np.random.default_rng(seed)
    y = np.linspace(0.0, 1.0, height)[:, None]
    x = np.linspace(0.0, 1.0, width)[None, :]
    planes = []
    for c in range(channels):
        base = 96.0 + 64.0 * (c / max(1, channels - 1) if channels > 1 else 0.5)
        img = base + 40.0 * np.sin(2 * np.pi * (3 + c) * x + c) * np.cos(
            2 * np.pi * (2 + c) * y
        )
        img += 25.0 * np.sin(2 * np.pi * (13 + 2 * c) * (x + y))
        img += 15.0 * np.sin(2 * np.pi * 37 * x * y + c)
        img += rng.normal(0.0, 12.0, size=(height, width))
        planes.append(img)
    frame = np.stack(planes, axis=2) if channels == 3 else planes[0]
    # A few brighter rectangles so content is not statistically uniform.
    for _ in range(6):
        h = int(rng.integers(height // 8, height // 3))
        w = int(rng.integers(width // 8, width // 3))
        r = int(rng.integers(0, height - h))
        c = int(rng.integers(0, width - w))
        frame[r : r + h, c : c + w] += float(rng.uniform(-35.0, 35.0))
    return quantize(frame)
