"""
Learning a model by curiosity
=============================

The learner explores each aspect with a Latin hypercube over action parameters
and is rewarded by how much an edge's parameter distribution changes.  As
distributions settle, reward and edge values drain away.  The baseline picks
actions uniformly at random and just memorizes what happened.
"""

# %%
import numpy as np

from atglearn import LearnerConfig, SimConfig, build_ground_truth, emit_curves, model_error
from atglearn.learner import run_baseline, run_learning
from atglearn.simworld import ARCubeWorld

gt = build_ground_truth(SimConfig(), "orbit")
print("ground truth:", len(gt.model.nodes), "nodes,", len(gt.model.edges), "edges")

# %%
errors = {"proposed": [], "baseline": []}
checkpoints = [50, 100, 200, 300, 500]


def tracker(name):
    def on_step(k, model, values):
        if k in checkpoints:
            errors[name].append(model_error(model, gt))
    return on_step


cfg = LearnerConfig(seed=11)
learned, logs = run_learning(ARCubeWorld(SimConfig(seed=11)), cfg, on_step=tracker("proposed"))
memorized, _ = run_baseline(ARCubeWorld(SimConfig(seed=11)), cfg, on_step=tracker("baseline"))
for c, p, b in zip(checkpoints, errors["proposed"], errors["baseline"]):
    print(f"{c:4d} actions  proposed {p:.4f} rad   baseline {b:.4f} rad")

# %% [markdown]
# Reward consumption and value depletion over the run.

# %%
rewards = np.array([l.reward for l in logs])
print("mean reward, first 50 steps:", rewards[:50].mean().round(4), " last 50:", rewards[-50:].mean().round(4))
print("mean Q at the end:", round(logs[-1].mean_q, 4), " edges:", logs[-1].edge_count)
curves = emit_curves(logs)
print(curves["value_curve.csv"].splitlines()[:3])

# %% [markdown]
# With GRASP and RELEASE added the graph grows to 12 aspects and 80 edges.

# %%
ext = LearnerConfig(seed=2, actions="orbit+grasp", max_actions=600)
model, logs = run_learning(ARCubeWorld(SimConfig(seed=2)), ext)
first = next(l.step for l in logs if l.edge_count == 80)
print(len(model.nodes), "nodes,", len(model.edges), "edges; complete after", first, "actions")
