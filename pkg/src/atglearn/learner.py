"""Intrinsically motivated structure learning over an ATG, plus the random baseline.

Each step the learner either explores (a random action kind with parameters
from that node's Latin hypercube grid) or exploits (parameters sampled from
the Gaussian of the highest-valued outgoing edge).  The reward is the change
in spectral norm of the touched edge's covariance, so it is consumed as edge
distributions settle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import (
    ACTION_SETS,
    ActionEdge,
    ActionKind,
    ATGModel,
    Experience,
    UpdateOutcome,
)
from .observe import Observer


@dataclass
class LearnerConfig:
    alpha: float = 0.5
    gamma: float = 0.1
    epsilon_explore: float = 0.9
    r_max: float = 1.0
    epsilon_stop: float = 0.01
    max_actions: int = 500
    lhs_strata: dict[str, int] = field(default_factory=lambda: {"ORBIT": 24, "GRASP": 4, "RELEASE": 1})
    thin_var: float = 1e-6
    wide_var: float = 10.0
    seed: int = 0
    actions: str = "orbit"
    coverage_first: bool = True
    record_noops: bool = False

    def __post_init__(self):
        checks = {
            "alpha": 0 < self.alpha <= 1,
            "gamma": 0 <= self.gamma < 1,
            "epsilon_explore": 0 <= self.epsilon_explore <= 1,
            "r_max": self.r_max > 0,
            "epsilon_stop": self.epsilon_stop >= 0,
            "max_actions": isinstance(self.max_actions, int) and self.max_actions >= 0,
            "thin_var": self.thin_var > 0,
            "wide_var": self.wide_var > self.thin_var,
            "actions": self.actions in ACTION_SETS,
            "lhs_strata": all(isinstance(v, int) and v >= 1 for v in self.lhs_strata.values()),
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"LearnerConfig.{name} out of range: {getattr(self, name)!r}")

    @property
    def action_kinds(self) -> tuple[ActionKind, ...]:
        return ACTION_SETS[self.actions]

    @property
    def q_bound(self) -> float:
        return self.r_max / (1.0 - self.gamma)

    def strata_for(self, kind: ActionKind) -> int:
        return self.lhs_strata.get(kind.name, 1)


class LHSGrid:
    """Latin hypercube over one action kind's parameter box, drawn without replacement.

    A cycle holds ``strata`` cells; in each dimension the cells use every
    stratum exactly once.  A new random pairing is made when a cycle runs out.
    """

    def __init__(self, kind: ActionKind, strata: int, seed=None):
        if strata < 1:
            raise ValueError("strata must be >= 1")
        self.kind = kind
        self.strata = strata if kind.param_dim else 1
        self.rng = np.random.default_rng(seed)
        self.cycles_completed = 0
        self.unused_cells: list[tuple[int, ...]] = []
        self._refill()

    def _refill(self) -> None:
        perms = [self.rng.permutation(self.strata) for _ in range(self.kind.param_dim)]
        self.unused_cells = [tuple(int(p[i]) for p in perms) for i in range(self.strata)]

    def cell_bounds(self, cell: Sequence[int]) -> list[tuple[float, float]]:
        out = []
        for (lo, hi), idx in zip(self.kind.bounds, cell):
            width = (hi - lo) / self.strata
            out.append((lo + idx * width, lo + (idx + 1) * width))
        return out

    def draw(self) -> np.ndarray:
        if not self.unused_cells:
            self._refill()
        cell = self.unused_cells.pop(int(self.rng.integers(len(self.unused_cells))))
        lo = self.kind.lower
        width = (self.kind.upper - lo) / self.strata
        rho = lo + (np.asarray(cell, dtype=float) + self.rng.random(self.kind.param_dim)) * width
        rho = np.minimum(rho, self.kind.upper)
        if not self.unused_cells:
            self.cycles_completed += 1
        return rho


def lhs_init(kind: ActionKind, strata: int, seed=None) -> LHSGrid:
    return LHSGrid(kind, strata, seed)


def lhs_draw(grid: LHSGrid) -> np.ndarray:
    return grid.draw()


class ValueTable:
    """Q-values per edge triple, mirrored onto ``ActionEdge.q``."""

    def __init__(self):
        self.q: dict[tuple[str, str, str], float] = {}

    def get(self, ident) -> float:
        return self.q.get(ident, 0.0)

    def set(self, edge: ActionEdge, value: float) -> None:
        self.q[edge.ident] = value
        edge.q = value

    def state_value(self, model: ATGModel, s: str) -> float:
        if s not in model.nodes:
            return 0.0
        return max((self.get(e.ident) for e in model.outgoing(s)), default=0.0)

    def max_q(self) -> float:
        return max(self.q.values(), default=0.0)

    def mean_q(self) -> float:
        return float(np.mean(list(self.q.values()))) if self.q else 0.0


@dataclass(frozen=True)
class StepLog:
    step: int
    s: str
    kind: str
    rho: tuple[float, ...]
    s_prime: str
    reward: float
    mode: str
    node_count: int
    edge_count: int
    max_q: float
    mean_q: float = 0.0


def intrinsic_reward(outcome: UpdateOutcome, config: LearnerConfig) -> float:
    if outcome.novel_edge or outcome.novel_node:
        return min(config.r_max, abs(config.wide_var - config.thin_var))
    return min(config.r_max, abs(outcome.norm_k - outcome.norm_km1))


def value_update(values: ValueTable, model: ATGModel, s: str, edge: ActionEdge, r: float,
                 config: LearnerConfig) -> float:
    """One sample-based Q step on ``edge``; V(s') is the best outgoing q of s'."""
    v_next = values.state_value(model, edge.dst)
    q = (1.0 - config.alpha) * values.get(edge.ident) + config.alpha * (r + config.gamma * v_next)
    values.set(edge, q)
    return q


def _sample_edge(edge: ActionEdge, rng: np.random.Generator) -> np.ndarray:
    d = edge.kind.param_dim
    if d == 0:
        return np.zeros(0)
    rho = rng.multivariate_normal(edge.dist.mean, edge.dist.cov, method="eigh")
    return edge.kind.clip(rho)


def best_edge(model: ATGModel, values: ValueTable, s: str) -> ActionEdge | None:
    edges = model.outgoing(s)
    if not edges:
        return None
    return min(edges, key=lambda e: (-values.get(e.ident), e.ident))


class Explorer:
    """Per-node LHS grids, created lazily with seeds from the learner's stream."""

    def __init__(self, config: LearnerConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.grids: dict[tuple[str, str], LHSGrid] = {}

    def grid(self, s: str, kind: ActionKind) -> LHSGrid:
        key = (s, kind.name)
        if key not in self.grids:
            self.grids[key] = LHSGrid(kind, self.config.strata_for(kind), int(self.rng.integers(2**63)))
        return self.grids[key]

    def covered(self, s: str) -> bool:
        """Node ``s`` has finished one LHS cycle for every action kind."""
        return all(
            (s, k.name) in self.grids and self.grids[(s, k.name)].cycles_completed >= 1
            for k in self.config.action_kinds
        )

    def full_pass(self, model: ATGModel) -> bool:
        """Every known node has finished one LHS cycle for every action kind."""
        return all(
            (s, k.name) in self.grids and self.grids[(s, k.name)].cycles_completed >= 1
            for s in model.nodes for k in self.config.action_kinds
        )


def select_action(model: ATGModel, values: ValueTable, s: str, config: LearnerConfig,
                  rng: np.random.Generator, explorer: Explorer | None = None):
    """Pick ``(kind, rho, mode)`` for the current aspect ``s``."""
    explorer = explorer or Explorer(config, rng)
    has_edges = s in model.nodes and bool(model.outgoing(s))
    must_explore = not has_edges or (config.coverage_first and not explorer.covered(s))
    if must_explore or rng.random() < config.epsilon_explore:
        kinds = config.action_kinds
        if config.coverage_first:
            pending = [k for k in kinds if explorer.grid(s, k).cycles_completed == 0]
            kinds = pending or kinds
        kind = kinds[int(rng.integers(len(kinds)))]
        return kind, explorer.grid(s, kind).draw(), "explore"
    edge = best_edge(model, values, s)
    return edge.kind, _sample_edge(edge, rng), "exploit"


class LearningAborted(RuntimeError):
    """The environment failed mid-run; ``model`` and ``logs`` hold what was learned so far."""

    def __init__(self, message: str, model: ATGModel, logs: list[StepLog]):
        super().__init__(message)
        self.model = model
        self.logs = logs


StepCallback = Callable[[int, ATGModel, ValueTable], None]


def _run(env, config: LearnerConfig, policy: str, on_step: StepCallback | None):
    rng = np.random.default_rng([config.seed, 0])
    env.reset(config.seed)
    model = ATGModel(thin_var=config.thin_var)
    observer = Observer()
    values = ValueTable()
    explorer = Explorer(config, rng)
    logs: list[StepLog] = []
    kinds = config.action_kinds

    s, ids = observer.observe(model, env.detections())
    model.get_or_create_node(s, ids)

    for k in range(1, config.max_actions + 1):
        if policy == "baseline":
            kind = kinds[int(rng.integers(len(kinds)))]
            rho = rng.uniform(kind.lower, kind.upper) if kind.param_dim else np.zeros(0)
            mode = "explore"
        else:
            kind, rho, mode = select_action(model, values, s, config, rng, explorer)
        rho = tuple(float(x) for x in rho)

        try:
            result = env.step(kind, rho)
            record = result.changed or config.record_noops
            s_prime, ids = observer.observe(model, env.detections())
        except Exception as exc:
            raise LearningAborted(f"environment failed at step {k}: {exc}", model, logs) from exc

        reward = 0.0
        if record:
            outcome = model.record_experience(Experience(s, kind, rho, s_prime), ids)
            reward = intrinsic_reward(outcome, config)
            if policy != "baseline":
                value_update(values, model, s, model.edges[outcome.edge], reward, config)

        logs.append(StepLog(k, s, kind.name, rho, s_prime, reward, mode,
                            len(model.nodes), len(model.edges), values.max_q(), values.mean_q()))
        s = s_prime
        if on_step is not None:
            on_step(k, model, values)
        if policy != "baseline" and values.q and values.max_q() <= config.epsilon_stop \
                and explorer.full_pass(model):
            break
    return model, logs


def run_learning(env, config: LearnerConfig, on_step: StepCallback | None = None):
    """Run the intrinsically motivated learner; returns ``(model, logs)``."""
    return _run(env, config, "proposed", on_step)


def run_baseline(env, config: LearnerConfig, on_step: StepCallback | None = None):
    """Uniform random action kind and parameters every step, memorizing every transition."""
    return _run(env, config, "baseline", on_step)
