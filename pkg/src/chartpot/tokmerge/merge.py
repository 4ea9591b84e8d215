"""Bipartite soft matching and size-weighted token merging.

Tokens at even positions form the source set A, odd positions the
destination set B.  Each A token is linked to its most cosine-similar B
token and the top-r edges (by similarity, ties to the lower source then
lower destination index) are merged, so every merge step removes exactly
``min(r, T // 2)`` tokens.  Merged features are the size-weighted mean of
their members, which keeps every token equal to the plain mean of its
source patches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tokens import TokenSet


class DegenerateKeys(ValueError):
    """Raised in strict mode when a key has zero norm (cosine undefined)."""


@dataclass(frozen=True)
class MergePlan:
    """Edges to merge, sorted by similarity descending."""

    edges: tuple[tuple[int, int, float], ...]  # (source, destination, score)
    r_effective: int

    def __post_init__(self):
        sources = [e[0] for e in self.edges]
        if len(sources) != len(set(sources)):
            raise ValueError("a source token cannot be merged twice")
        if len(self.edges) != self.r_effective:
            raise ValueError("plan must keep exactly r_effective edges")


def bipartite_soft_match(
    keys: np.ndarray,
    sizes: np.ndarray,
    r: int,
    strict: bool = False,
    protected: tuple[int, ...] = (),
) -> MergePlan:
    """Find the top-r most similar A-to-B token pairs.

    ``keys`` is the (T, d_k) head-averaged key matrix of the current
    layer; ``sizes`` is checked for length only (matching is purely
    feature-based).  Zero-norm keys score ``-inf`` against everything, or
    raise :class:`DegenerateKeys` when ``strict`` is set.  ``protected``
    indices never merge, as source or destination; with protection the
    plan may hold fewer than ``min(r, T // 2)`` edges.
    """
    keys = np.asarray(keys, dtype=np.float64)
    if keys.ndim != 2 or keys.shape[0] < 2:
        raise ValueError("need a (T, d_k) key matrix with T >= 2")
    t = keys.shape[0]
    if len(sizes) != t:
        raise ValueError("sizes length must match the token count")
    if r < 0:
        raise ValueError("r must be non-negative")
    protected_set = set(protected)
    if any(not 0 <= p < t for p in protected_set):
        raise ValueError("protected index out of range")

    if min(r, t // 2) == 0:
        return MergePlan(edges=(), r_effective=0)

    norms = np.linalg.norm(keys, axis=1)
    zero = norms == 0.0
    if strict and zero.any():
        raise DegenerateKeys(f"{int(zero.sum())} key(s) with zero norm")
    unit = np.divide(keys, norms[:, None], out=np.zeros_like(keys), where=norms[:, None] != 0)

    a_idx = np.arange(0, t, 2)
    b_idx = np.arange(1, t, 2)
    scores = unit[a_idx] @ unit[b_idx].T
    masked = zero[a_idx][:, None] | zero[b_idx][None, :]
    if protected_set:
        masked = masked | np.array([b in protected_set for b in b_idx])[None, :]
    scores = np.where(masked, -np.inf, scores)

    best_col = np.argmax(scores, axis=1)  # first maximum = lowest destination
    best_score = scores[np.arange(len(a_idx)), best_col]
    if protected_set:
        # sources that are protected, or whose only partners are, drop out
        candidates = [
            (float(best_score[i]), int(a_idx[i]), int(b_idx[best_col[i]]))
            for i in range(len(a_idx))
            if a_idx[i] not in protected_set and np.isfinite(best_score[i])
        ]
    else:
        # even -inf edges are kept so the length arithmetic
        # T -> T - min(r, T // 2) stays exact
        candidates = [
            (float(best_score[i]), int(a_idx[i]), int(b_idx[best_col[i]]))
            for i in range(len(a_idx))
        ]
    candidates.sort(key=lambda e: (-e[0], e[1], e[2]))
    kept = candidates[: min(r, t // 2)]
    return MergePlan(edges=tuple((src, dst, score) for score, src, dst in kept),
                     r_effective=len(kept))


def apply_merge(tokens: TokenSet, plan: MergePlan) -> TokenSet:
    """Pool each planned edge into its destination token.

    Features are averaged with size weights, sizes summed, and source
    patch groups concatenated.  Surviving tokens keep B-then-unmerged-A
    relative order, so the output has ``len(tokens) - r_effective`` tokens.
    """
    if plan.r_effective == 0:
        return tokens

    t = len(tokens)
    merged_into: dict[int, list[int]] = {}
    merged_sources = set()
    for src, dst, _ in plan.edges:
        if src >= t or dst >= t:
            raise ValueError("plan refers to tokens outside this set")
        merged_into.setdefault(dst, []).append(src)
        merged_sources.add(src)

    survivors = [i for i in range(1, t, 2)] + [i for i in range(0, t, 2) if i not in merged_sources]

    features = np.empty((len(survivors), tokens.features.shape[1]), dtype=np.float64)
    sizes = np.empty(len(survivors), dtype=np.int64)
    groups = []
    for out_i, tok_i in enumerate(survivors):
        members = [tok_i] + sorted(merged_into.get(tok_i, []))
        weights = tokens.sizes[members].astype(np.float64)
        features[out_i] = (weights[:, None] * tokens.features[members]).sum(axis=0) / weights.sum()
        sizes[out_i] = tokens.sizes[members].sum()
        group: list[int] = []
        for m in members:
            group.extend(tokens.groups[m])
        groups.append(tuple(group))

    return TokenSet(
        features=features,
        sizes=sizes,
        groups=tuple(groups),
        layer_index=tokens.layer_index,
    )
