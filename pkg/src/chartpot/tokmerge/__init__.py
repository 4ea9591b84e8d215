"""Visual token merging: matching, merging, proportional attention, and
the toy encoder stack used for sequence-length and cost accounting."""

from .tokens import ImageTooSmall, TokenSet, patchify
from .merge import DegenerateKeys, MergePlan, apply_merge, bipartite_soft_match
from .encoder import (
    EncoderConfig,
    ForwardResult,
    ScheduleExhaustsTokens,
    build_weights,
    encode_image,
    encoder_forward,
    flops_estimate,
    load_weights,
    merge_length_trace,
    proportional_attention,
    save_weights,
    uniform_merge_schedule,
)
from .viz import GridMismatch, grid_to_csv, merge_visualization, write_ppm

__all__ = [
    "ImageTooSmall",
    "TokenSet",
    "patchify",
    "DegenerateKeys",
    "MergePlan",
    "apply_merge",
    "bipartite_soft_match",
    "EncoderConfig",
    "ForwardResult",
    "ScheduleExhaustsTokens",
    "build_weights",
    "encode_image",
    "encoder_forward",
    "flops_estimate",
    "load_weights",
    "merge_length_trace",
    "proportional_attention",
    "save_weights",
    "uniform_merge_schedule",
    "GridMismatch",
    "grid_to_csv",
    "merge_visualization",
    "write_ppm",
]
