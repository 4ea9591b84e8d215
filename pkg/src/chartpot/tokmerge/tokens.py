"""Token sets: per-token features, patch counts, and source-group tracking."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class ImageTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class TokenSet:
    """A sequence of tokens threaded through merge layers.

    ``sizes[i]`` counts the source patches token ``i`` represents and
    ``groups[i]`` lists their raster indices; together they partition the
    initial patch grid, so ``sum(sizes)`` is constant across layers.
    """

    features: np.ndarray  # (T, d) float64
    sizes: np.ndarray     # (T,) int64, all >= 1
    groups: tuple[tuple[int, ...], ...]
    layer_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "sizes", np.asarray(self.sizes, dtype=np.int64))
        if self.features.ndim != 2:
            raise ValueError("features must be a T x d matrix")
        if self.sizes.shape != (self.features.shape[0],):
            raise ValueError("sizes must have one entry per token")
        if len(self.groups) != self.features.shape[0]:
            raise ValueError("groups must have one entry per token")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def total_patches(self) -> int:
        return int(self.sizes.sum())

    def validate(self) -> None:
        """Check the partition invariants; raises ValueError on violation."""
        if np.any(self.sizes < 1):
            raise ValueError("token sizes must be positive")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite entries")
        seen: set[int] = set()
        for i, group in enumerate(self.groups):
            if len(group) != self.sizes[i]:
                raise ValueError(f"token {i}: group of {len(group)} patches but size {self.sizes[i]}")
            for patch in group:
                if patch in seen:
                    raise ValueError(f"patch {patch} appears in two groups")
                seen.add(patch)
        if seen != set(range(self.total_patches)):
            raise ValueError("groups do not cover the patch grid exactly")


def patchify(image: np.ndarray, patch_size: int, embedding: np.ndarray | None = None) -> TokenSet:
    """Crop an image into non-overlapping patches, one token each.

    ``image`` is a (rows, cols) or (rows, cols, channels) real array; the
    result has ``(rows // patch_size) * (cols // patch_size)`` tokens in
    raster order.  Each token's feature is the flattened patch, projected
    by ``embedding`` (patch_size*patch_size*channels, d_model) when given.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.ndim != 3:
        raise ValueError("image must be a 2-D or 3-D array")
    rows, cols, channels = image.shape
    if rows < patch_size or cols < patch_size:
        raise ImageTooSmall(f"image {rows}x{cols} smaller than patch size {patch_size}")
    n_rows = rows // patch_size
    n_cols = cols // patch_size
    cropped = image[: n_rows * patch_size, : n_cols * patch_size, :]
    patches = (
        cropped.reshape(n_rows, patch_size, n_cols, patch_size, channels)
        .transpose(0, 2, 1, 3, 4)
        .reshape(n_rows * n_cols, patch_size * patch_size * channels)
    )
    if embedding is not None:
        embedding = np.asarray(embedding, dtype=np.float64)
        if embedding.shape[0] != patches.shape[1]:
            raise ValueError(
                f"embedding expects {embedding.shape[0]} inputs, patches have {patches.shape[1]}"
            )
        features = patches @ embedding
    else:
        features = patches
    n_tokens = n_rows * n_cols
    return TokenSet(
        features=features,
        sizes=np.ones(n_tokens, dtype=np.int64),
        groups=tuple((i,) for i in range(n_tokens)),
        layer_index=0,
    )


def with_layer(tokens: TokenSet, layer_index: int) -> TokenSet:
    return replace(tokens, layer_index=layer_index)
