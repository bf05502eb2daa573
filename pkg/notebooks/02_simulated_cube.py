"""
A robot orbiting a tagged cube
==============================

The simulator places the robot on a 1 m circle around a 29 cm cube with one
tag per side face.  Where the robot stands relative to the cube decides which
tags are visible: four face-on views show one tag, four corner views show two.
"""

# %%
import math

import numpy as np

from atglearn.model import GRASP, ORBIT, RELEASE
from atglearn.simworld import (
    ContactPair,
    SimConfig,
    WorldState,
    controller_step,
    grasp_residuals,
    step,
    true_aspect,
)

cfg = SimConfig()
quiet = cfg.noiseless()

# %% [markdown]
# Sweeping the relative angle through a full turn gives eight aspects.

# %%
keys = []
for beta in np.linspace(0, 2 * math.pi, 16, endpoint=False):
    key = true_aspect(WorldState(azimuth=beta, object_yaw=0.0), cfg)
    if not keys or keys[-1] != key:
        keys.append(key)
print(len(set(keys)), "aspects:", keys)

# %% [markdown]
# ORBIT moves the base; GRASP succeeds inside a box of hand offsets, snaps the
# base to face the grasped side, and adds a tactile feature; RELEASE goes back.

# %%
s = WorldState(azimuth=math.pi / 4, object_yaw=0.0)
print("start:   ", true_aspect(s, cfg))
g = step(s, GRASP, [0.02, -0.03, 0.01], quiet)
print("grasped: ", true_aspect(g.state, cfg))
o = step(g.state, ORBIT, [1.0], quiet)
print("orbit while held:", true_aspect(o.state, cfg))
r = step(o.state, RELEASE, [], quiet)
print("released:", true_aspect(r.state, cfg))
print("grasp outside the box fails:", step(s, GRASP, [0.11, 0.0, 0.0], quiet).failed)

# %% [markdown]
# A grasp is judged by its force and moment residuals, and hands move by
# gradient steps ``kappa * pinv(J) @ dphi``.

# %%
print("residuals of the grasp:", grasp_residuals(g.state.contacts))
z = np.zeros(3)
print("lone push:", grasp_residuals(ContactPair(np.array([1.0, 0, 0]), z, z, z)))
print("controller step:", controller_step(1.0, [[2.0]], 0.5))
