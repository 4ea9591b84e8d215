"""Visual token merging walkthrough.
==================================

Patchify an image, match and merge similar tokens, verify that a merged
token attends exactly like its duplicated sources, and account for the
sequence lengths and arithmetic cost of a full schedule.
"""

import numpy as np

from chartpot import tokmerge

rng = np.random.default_rng(7)

# An image becomes one token per patch: 384x384 at patch 14 -> 27x27 = 729.
image = rng.standard_normal((384, 384, 3))
tokens = tokmerge.patchify(image, 14)
print("tokens after patchify:", len(tokens), "(sizes all 1)")

# Matching links each even-position token to its most similar odd-position
# token by key cosine; the top-r edges merge, so length drops by exactly r.
small = tokmerge.patchify(rng.standard_normal((56, 56, 3)), 14)  # 16 tokens
keys = rng.standard_normal((16, 8))
plan = tokmerge.bipartite_soft_match(keys, small.sizes, r=5)
print("\nmerge plan (top edges):")
for src, dst, score in plan.edges[:3]:
    print(f"  {src} -> {dst}  cosine {score:.3f}")
merged = tokmerge.apply_merge(small, plan)
print("merged:", len(small), "->", len(merged), "tokens;",
      "patches conserved:", merged.total_patches == 16)

# Proportional attention biases each key by log(size): a token merged
# from s patches behaves exactly like s duplicates.
q, k, v = (rng.standard_normal((4, 8)) for _ in range(3))
sizes = np.array([3.0, 1.0, 1.0, 1.0])
expanded_k = np.concatenate([k, np.repeat(k[:1], 2, axis=0)])
expanded_v = np.concatenate([v, np.repeat(v[:1], 2, axis=0)])
expanded_q = np.concatenate([q, np.zeros((2, 8))])
merged_out = tokmerge.proportional_attention(q, k, v, sizes, n_heads=2)
expanded_out = tokmerge.proportional_attention(
    expanded_q, expanded_k, expanded_v, np.ones(6), n_heads=2)[:4]
print("\nduplicate-vs-merged max error:",
      float(np.abs(merged_out - expanded_out).max()))

# A 27-layer stack merging r=20 everywhere but the last layer takes a
# 512x512 input from 1296 tokens down to 776; lengths depend only on the
# schedule, which is what makes the arithmetic trace exact.
schedule = tokmerge.uniform_merge_schedule(27, 20)
trace = tokmerge.merge_length_trace(1296, schedule)
print("\nlength trace:", trace[:4], "...", trace[-3:])
macs_merged = tokmerge.flops_estimate(trace, 64, 4, 4.0)
macs_plain = tokmerge.flops_estimate([1296] * 27, 64, 4, 4.0)
print(f"cost with merging: {macs_merged:.3g} MACs "
      f"({macs_merged / macs_plain:.0%} of the unmerged stack)")

# The real forward pass reproduces the same lengths and tracks which
# source patches each surviving token represents.
cfg = tokmerge.EncoderConfig(
    d_model=16, n_heads=2, n_layers=5,
    merge_schedule=(6, 6, 6, 6, 0), patch_size=8,
)
result = tokmerge.encode_image(rng.standard_normal((64, 64, 3)), cfg)
print("\nreal forward trace:", result.trace)
result.tokens.validate()

grid = tokmerge.merge_visualization(result.tokens, 8, 8, top_k=5)
print("largest-group overlay (label grid, -1 = unlabeled):")
print(tokmerge.grid_to_csv(grid))
tokmerge.write_ppm(grid, "/tmp/merge_overlay.ppm")
print("wrote /tmp/merge_overlay.ppm")
