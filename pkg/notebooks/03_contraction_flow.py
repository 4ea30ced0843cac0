# %% [markdown]
# # Preimages through several layers
#
# Three 2-D layers that only differ in their bias. The preimage of the
# output (0, 0) grows with every layer we go back; most of the input square
# ends up there.

# %%
import numpy as np

from cnnpreimage import Kernel, Network, activations, circulant_layer, net_forward, net_preimage

net = Network(tuple(circulant_layer(Kernel((1.0, 0.0), b), 2) for b in (-0.3, -0.4, -0.5)))
pre = net_preimage(net, [0.0, 0.0])
print("pieces per layer input:", [len(s) for s in pre.stages])

X = np.random.default_rng(0).uniform(0, 1.5, size=(50_000, 2))
print("share of [0,1.5]^2 mapped to (0,0):", pre.contains_batch(X).mean())

# %% [markdown]
# Every piece links to the piece of the next layer it maps into.

# %%
for l, (stage, parents) in enumerate(zip(pre.stages, pre.parents)):
    print(f"layer {l}:", [(p.dim, parent) for p, parent in zip(stage, parents)])

# %% [markdown]
# Along a forward trajectory the number of zero components never drops for
# nested stacks: data concentrates on lower-dimensional subspaces.

# %%
for x in ([1.5, 0.2], [0.9, 1.8], [2.0, 2.0]):
    acts = activations(net, np.array(x))
    print([np.round(a, 3).tolist() for a in acts], "zeros:", [int(np.sum(a == 0)) for a in acts])
print(net_forward(net, [2.0, 2.0]))
