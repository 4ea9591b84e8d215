"""A small vision-transformer stack with per-layer token merging.

Each layer runs proportional self-attention (key logits biased by the log
of each token's patch count), merges the r most similar token pairs found
on that layer's keys, then applies the feed-forward block.  Weights are
synthetic, seeded, and scaled by 1/sqrt(d); they can also be loaded from a
flat binary tensor container for reproducible fixtures.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .merge import bipartite_soft_match, apply_merge
from .tokens import TokenSet, patchify, with_layer


class ScheduleExhaustsTokens(ValueError):
    pass


def uniform_merge_schedule(n_layers: int, r: int, skip_last: bool = True) -> tuple[int, ...]:
    """The default schedule: merge r tokens in every layer but the last."""
    if n_layers < 1:
        raise ValueError("need at least one layer")
    if skip_last:
        return tuple([r] * (n_layers - 1) + [0])
    return tuple([r] * n_layers)


@dataclass(frozen=True)
class EncoderConfig:
    """Stack dimensions plus the per-layer merge schedule.

    ``protected_indices`` exempts token positions from merging; positions
    are interpreted against each layer's current token order, so non-empty
    protection is only meaningful for prefix tokens that merging never
    displaces.  The default (no protection) matches the encoder modeled
    here, which has no class token.
    """

    d_model: int
    n_heads: int
    n_layers: int
    merge_schedule: tuple[int, ...]
    patch_size: int = 14
    mlp_ratio: float = 4.0
    weight_seed: int = 0
    weight_source: str | None = None
    protected_indices: tuple[int, ...] = ()
    strict_keys: bool = False

    def __post_init__(self):
        object.__setattr__(self, "merge_schedule", tuple(int(r) for r in self.merge_schedule))
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if len(self.merge_schedule) != self.n_layers:
            raise ValueError("merge_schedule must have one entry per layer")
        if any(r < 0 for r in self.merge_schedule):
            raise ValueError("merge counts must be non-negative")
        object.__setattr__(self, "protected_indices", tuple(int(i) for i in self.protected_indices))


def proportional_attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    sizes: np.ndarray,
    n_heads: int = 1,
) -> np.ndarray:
    """softmax(QK^T / sqrt(d_k) + log s) V per head, concatenated.

    The log-size bias is added to each key token's column, so a token that
    stands for s patches attends exactly like s duplicated tokens.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    t, d = q.shape
    if k.shape != (t, d) or v.shape != (t, d):
        raise ValueError("q, k, v must share one (T, d) shape")
    if d % n_heads != 0:
        raise ValueError("d must be divisible by n_heads")
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.shape != (t,) or np.any(sizes < 1):
        raise ValueError("sizes must be positive, one per token")

    d_k = d // n_heads
    log_sizes = np.log(sizes)
    out = np.empty_like(q)
    for h in range(n_heads):
        sl = slice(h * d_k, (h + 1) * d_k)
        logits = (q[:, sl] @ k[:, sl].T) / np.sqrt(d_k) + log_sizes[None, :]
        logits -= logits.max(axis=1, keepdims=True)
        weights = np.exp(logits)
        weights /= weights.sum(axis=1, keepdims=True)
        out[:, sl] = weights @ v[:, sl]
    return out


def _layernorm(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    return (x - mean) / np.sqrt(var + 1e-6)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


_LAYER_TENSORS = ("wq", "wk", "wv", "wo", "w1", "w2")


def build_weights(cfg: EncoderConfig, in_dim: int) -> dict[str, np.ndarray]:
    """Seeded synthetic weights, or the contents of ``cfg.weight_source``.

    Returns a flat name-to-matrix mapping with an ``embed`` projection of
    shape (in_dim, d_model) plus per-layer attention and MLP matrices.
    """
    if cfg.weight_source is not None:
        weights = load_weights(cfg.weight_source)
        _validate_weights(weights, cfg, in_dim)
        return weights
    rng = np.random.default_rng(cfg.weight_seed)
    d = cfg.d_model
    hidden = int(round(cfg.mlp_ratio * d))
    weights = {"embed": rng.standard_normal((in_dim, d)) / np.sqrt(in_dim)}
    for layer in range(cfg.n_layers):
        for name in ("wq", "wk", "wv", "wo"):
            weights[f"layer{layer}.{name}"] = rng.standard_normal((d, d)) / np.sqrt(d)
        weights[f"layer{layer}.w1"] = rng.standard_normal((d, hidden)) / np.sqrt(d)
        weights[f"layer{layer}.w2"] = rng.standard_normal((hidden, d)) / np.sqrt(hidden)
    return weights


def _validate_weights(weights: dict[str, np.ndarray], cfg: EncoderConfig, in_dim: int) -> None:
    if "embed" not in weights or weights["embed"].shape != (in_dim, cfg.d_model):
        raise ValueError(f"weight container lacks an embed matrix of shape ({in_dim}, {cfg.d_model})")
    for layer in range(cfg.n_layers):
        for name in _LAYER_TENSORS:
            key = f"layer{layer}.{name}"
            if key not in weights:
                raise ValueError(f"weight container lacks tensor {key}")


_WEIGHT_MAGIC = b"FTC1"


def save_weights(path: str, weights: dict[str, np.ndarray]) -> None:
    """Write tensors to the flat binary container (see docs/formats.md)."""
    with open(path, "wb") as fh:
        fh.write(_WEIGHT_MAGIC)
        fh.write(struct.pack("<I", len(weights)))
        for name in sorted(weights):
            data = np.ascontiguousarray(weights[name], dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}Q", *data.shape))
            fh.write(data.tobytes())


def load_weights(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(4) != _WEIGHT_MAGIC:
            raise ValueError("not a tensor container file")
        (count,) = struct.unpack("<I", fh.read(4))
        weights = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
            n_items = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * n_items), dtype=np.float64).reshape(shape)
            weights[name] = data.copy()
    return weights


@dataclass
class ForwardResult:
    tokens: TokenSet
    trace: list[int] = field(default_factory=list)


def merge_length_trace(t0: int, merge_schedule: tuple[int, ...]) -> list[int]:
    """Token count after each layer: T <- T - min(r, T // 2).

    This is exact for the real forward pass because every merge step
    removes exactly ``min(r, T // 2)`` tokens regardless of content.
    """
    trace = []
    t = t0
    for r in merge_schedule:
        if r >= t:
            raise ScheduleExhaustsTokens(f"cannot merge r={r} of {t} tokens")
        t -= min(r, t // 2)
        trace.append(t)
    return trace


def encoder_forward(tokens: TokenSet, cfg: EncoderConfig, weights: dict[str, np.ndarray] | None = None) -> ForwardResult:
    """Run the full stack; returns final tokens and the per-layer lengths.

    Layer order is attention, then merging on that layer's keys, then the
    feed-forward block.
    """
    if weights is None:
        weights = build_weights(cfg, in_dim=tokens.features.shape[1])
    if tokens.features.shape[1] != cfg.d_model:
        x = tokens.features @ weights["embed"]
        tokens = TokenSet(x, tokens.sizes, tokens.groups, tokens.layer_index)

    d_k = cfg.d_model // cfg.n_heads
    trace: list[int] = []
    for layer in range(cfg.n_layers):
        r = cfg.merge_schedule[layer]
        t = len(tokens)
        if r >= t:
            raise ScheduleExhaustsTokens(f"layer {layer}: cannot merge r={r} of {t} tokens")

        x = tokens.features
        normed = _layernorm(x)
        q = normed @ weights[f"layer{layer}.wq"]
        k = normed @ weights[f"layer{layer}.wk"]
        v = normed @ weights[f"layer{layer}.wv"]
        attended = proportional_attention(q, k, v, tokens.sizes, cfg.n_heads)
        x = x + attended @ weights[f"layer{layer}.wo"]
        tokens = TokenSet(x, tokens.sizes, tokens.groups, layer)

        if r > 0:
            keys_by_head = k.reshape(t, cfg.n_heads, d_k)
            plan = bipartite_soft_match(
                keys_by_head.mean(axis=1), tokens.sizes, r,
                strict=cfg.strict_keys, protected=cfg.protected_indices,
            )
            tokens = apply_merge(tokens, plan)

        x = tokens.features
        hidden = _gelu(_layernorm(x) @ weights[f"layer{layer}.w1"])
        x = x + hidden @ weights[f"layer{layer}.w2"]
        tokens = TokenSet(x, tokens.sizes, tokens.groups, layer + 1)
        trace.append(len(tokens))

    return ForwardResult(tokens=with_layer(tokens, cfg.n_layers), trace=trace)


def encode_image(image: np.ndarray, cfg: EncoderConfig) -> ForwardResult:
    """Patchify then run the encoder with the configured weights."""
    raw = patchify(image, cfg.patch_size)
    in_dim = raw.features.shape[1]
    weights = build_weights(cfg, in_dim=in_dim)
    embedded = TokenSet(raw.features @ weights["embed"], raw.sizes, raw.groups, 0)
    return encoder_forward(embedded, cfg, weights=weights)


def flops_estimate(trace: list[int], d_model: int, n_heads: int, mlp_ratio: float) -> float:
    """Analytic multiply-accumulate count over the traced lengths.

    Per layer: 4*T*d^2 (QKVO projections) + 2*T^2*d (attention matrices)
    + 2*mlp_ratio*T*d^2 (MLP).  The head count does not change the MAC
    total; it is accepted for interface completeness.
    """
    if not trace:
        raise ValueError("trace must contain at least one layer length")
    del n_heads
    d = float(d_model)
    total = 0.0
    for t in trace:
        total += 4.0 * t * d * d + 2.0 * t * t * d + 2.0 * mlp_ratio * t * d * d
    return total
