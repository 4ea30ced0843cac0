# %% [markdown]
# # Dual basis and single-layer preimages
#
# A ReLU layer y = max(0, Wx + b) cuts the input space with d hyperplanes.
# Dropping one plane leaves a line through the common apex; the unit
# directions of those lines, pointed towards the negative side of the
# dropped plane, form the dual basis. Preimages are built from it.

# %%
import numpy as np

from cnnpreimage import (LayerMap, build_dual_basis, forward, preimage, preimage_contains,
                         preimage_contains_batch, sample_preimage)

layer = LayerMap([[1.0, 0.4], [0.3, 1.0]], [-0.5, -0.6])
B = build_dual_basis(layer)
print("apex", B.apex)
print("dual vectors\n", B.vectors)

# w_j . e_i vanishes off the diagonal and is negative on it
print(np.round(layer.weights @ B.vectors.T, 12))

# %% [markdown]
# An output with a zero component has a half-line of preimages: the unique
# point x* on the shifted plane of the positive component and the plane of
# the zero component, plus non-negative multiples of the matching dual vector.

# %%
y = np.array([0.0, 0.3])
p = preimage(layer, y, B)
print("base", p.base, "generators", p.generators)

pts = sample_preimage(p, 5, seed=0)
for x in pts:
    print(np.round(x, 4), "->", forward(layer, x), preimage_contains(p, x))

# %% [markdown]
# The all-zero output pulls back to the whole negative cone at the apex,
# clipped to the non-negative orthant.

# %%
p0 = preimage(layer, [0.0, 0.0], B)
rng = np.random.default_rng(0)
X = rng.uniform(0, 2, size=(20_000, 2))
print("fraction of [0,2]^2 mapped to 0:", preimage_contains_batch(p0, X).mean())
