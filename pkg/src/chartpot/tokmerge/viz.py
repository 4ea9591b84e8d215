"""Merge-group visualization: label grids, CSV text, and PPM overlays."""

from __future__ import annotations

import numpy as np

from .tokens import TokenSet


class GridMismatch(ValueError):
    pass


# Fixed palette for labels 0..9; grids with more groups cycle through it.
PALETTE = (
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (250, 190, 190),
)
UNLABELED_COLOR = (40, 40, 40)


def merge_visualization(tokens: TokenSet, grid_w: int, grid_h: int, top_k: int = 10) -> np.ndarray:
    """Paint the largest merge groups onto their source-patch positions.

    Returns a (grid_h, grid_w) int array where the k-th largest group
    (ties broken by its lowest patch index) is labeled k and everything
    else is -1.
    """
    if grid_w * grid_h != tokens.total_patches:
        raise GridMismatch(
            f"grid {grid_w}x{grid_h} does not cover {tokens.total_patches} patches"
        )
    order = sorted(range(len(tokens)), key=lambda i: (-len(tokens.groups[i]), min(tokens.groups[i])))
    grid = np.full((grid_h, grid_w), -1, dtype=np.int64)
    for label, token_index in enumerate(order[:top_k]):
        for patch in tokens.groups[token_index]:
            grid[patch // grid_w, patch % grid_w] = label
    return grid


def grid_to_csv(grid: np.ndarray) -> str:
    return "\n".join(",".join(str(int(v)) for v in row) for row in grid) + "\n"


def write_ppm(grid: np.ndarray, path: str, cell_pixels: int = 8) -> None:
    """Write the label grid as a binary PPM image, one colored block per cell."""
    grid = np.asarray(grid)
    h, w = grid.shape
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[grid < 0] = UNLABELED_COLOR
    labels = grid >= 0
    if labels.any():
        palette = np.array(PALETTE, dtype=np.uint8)
        img[labels] = palette[grid[labels] % len(PALETTE)]
    img = np.repeat(np.repeat(img, cell_pixels, axis=0), cell_pixels, axis=1)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
