"""
The aspect transition graph
===========================

An ATG is a directed multigraph.  Nodes are *aspects* (what the robot currently
senses); edges are parametrized actions.  Every edge remembers each parameter
vector that produced its transition and keeps a Gaussian fitted to them.
"""

# %%
import math

import numpy as np

from atglearn import ORBIT, ATGModel, Experience, deserialize, export_dot, serialize
from atglearn.model import spectral_norm

model = ATGModel()
f0 = model.add_feature("ARtag", "0").id
f1 = model.add_feature("ARtag", "1").id
model.get_or_create_node("ARtag:0", [f0])
model.get_or_create_node("ARtag:0;ARtag:1", [f0, f1])

# %% [markdown]
# Recording experiences.  The first sample on an edge gives a very thin
# Gaussian; later samples refit it with the unbiased covariance.  The change in
# the covariance's spectral norm is what the learner uses as reward.

# %%
for rho in (0.70, 0.80, 0.90, 0.80):
    out = model.record_experience(Experience("ARtag:0", ORBIT, (rho,), "ARtag:0;ARtag:1"))
    print(f"rho={rho:.2f} novel_edge={out.novel_edge} |S_k|={out.norm_k:.5f} |S_k-1|={out.norm_km1}")

edge = model.edges[("ARtag:0", "ORBIT", "ARtag:0;ARtag:1")]
print("mean", edge.dist.mean, "var", edge.dist.cov.ravel(), "n", edge.dist.n_samples)
print("spectral norm of diag(4, 1, 0.25):", spectral_norm(np.diag([4.0, 1.0, 0.25])))

# %% [markdown]
# Angles are fitted on the circle, so samples straddling +-pi average to pi
# rather than to zero.

# %%
model.get_or_create_node("ARtag:2")
for rho in (math.pi - 0.05, -math.pi + 0.05):
    model.record_experience(Experience("ARtag:0", ORBIT, (rho,), "ARtag:2"))
print("seam edge mean:", model.edges[("ARtag:0", "ORBIT", "ARtag:2")].dist.mean)
print("p(s' | ARtag:0, ORBIT):", model.transition_dist("ARtag:0", "ORBIT"))

# %% [markdown]
# Models persist as YAML text and render to Graphviz DOT.

# %%
text = serialize(model, header="notebook demo")
print(text[:400], "...")
assert deserialize(text) == model
print(export_dot(model))
