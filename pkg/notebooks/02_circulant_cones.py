# %% [markdown]
# # Circulant layers and their cones
#
# A single-channel convolution with wrap-around is a circulant matrix. All
# rows share the row sum a, so the planes meet on the identity line at
# (-b/a, ..., -b/a) and make equal angles with it.

# %%
import numpy as np

from cnnpreimage import (Kernel, check_contraction, check_nesting, check_shift_equivariance,
                         circulant_layer, cone_of, forward)

layer = circulant_layer(Kernel((0.6, 0.2, 0.2), -1.0), 3)
print(layer.weights)
cone = cone_of(layer)
print("apex", cone.apex, "half angle (deg)", np.degrees(cone.half_angle))
print("forward(apex)", forward(layer, cone.apex))
print("shift equivariance error", check_shift_equivariance(layer))

# %% [markdown]
# Nesting: from every intersection of planes, the positive span of the
# matching dual vectors has to cover the corresponding coordinate face.
# Kernels concentrated on one tap pass; near-uniform kernels open the cone
# too wide and fail, and then some regions gain dimension.

# %%
for taps, beta in [((1, 0, 0), -0.5), ((1.0, -0.1, 0.05), -0.2), ((0.34, 0.33, 0.33), -0.1)]:
    L = circulant_layer(Kernel(taps, beta), 3)
    rep = check_nesting(L)
    con = check_contraction(L)
    print(taps, "nested:", rep.fully_nested, "violated:", [v.subset for v in rep.violated_subsets],
          "contraction violations:", len(con.violations))

# per-subset counts allow a relaxed reading of nesting
rep = check_nesting(circulant_layer(Kernel((0.34, 0.33, 0.33), -0.1), 3), samples_per_subset=32)
for subset, (bad, total) in rep.per_subset.items():
    print(subset, f"{bad}/{total} failing samples")
