"""
Comparing methods over seeded trials
====================================

Five trials per method, model error at every 50 actions, and a two-sided Welch
t-test per checkpoint.  Set ``ATG_THREADS`` to cap the worker pool.
"""

# %%
from atglearn import LearnerConfig, SimConfig, run_trials
from atglearn.evaluation import welch_p

table = run_trials(LearnerConfig(seed=0), SimConfig(), n_trials=5, checkpoints=range(50, 501, 50))
print(table.to_csv())

# %%
print("Welch p for clearly separated samples:", welch_p([0, 0, 0.0001], [10, 10, 10.0001]))
