"""Ground truth by exhaustive sweep, model error, multi-trial tables and curves."""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .learner import LearnerConfig, run_baseline, run_learning
from .model import ACTION_SETS, ORBIT, ActionEdge, ATGModel, fit_gaussian, wrap_angle
from .observe import Observer
from .simworld import ARCubeWorld, SimConfig, canonical_state, step, visible_detections

METHODS = ("proposed", "baseline")


@dataclass
class GroundTruthModel:
    model: ATGModel
    sweep_resolution: int


def _grid(kind, resolution: int) -> list[tuple[float, ...]]:
    if kind.param_dim == 0:
        return [()]
    axes = []
    for lo, hi in kind.bounds:
        width = (hi - lo) / resolution
        axes.append([lo + (i + 0.5) * width for i in range(resolution)])
    return list(itertools.product(*axes))


def build_ground_truth(config: SimConfig | None = None, actions: str = "orbit", resolution: int = 720,
                       grasp_resolution: int = 10, max_iterations: int = 64) -> GroundTruthModel:
    """Sweep every action over a dense grid from one canonical state per aspect.

    Orbit grids use ``resolution`` cell-centred points; the 3-D grasp grid uses
    ``grasp_resolution`` points per axis.  Aspects are expanded breadth first
    until no new aspect appears.
    """
    config = (config or SimConfig()).noiseless()
    kinds = ACTION_SETS[actions]
    model = ATGModel()
    observer = Observer()
    world = ARCubeWorld(config)

    start = canonical_state(world.reset(config.seed))
    s0, ids = observer.observe(model, visible_detections(start, config))
    model.get_or_create_node(s0, ids)
    frontier = [(s0, start)]
    expanded: set[str] = set()
    # samples are pooled per edge and fitted once, since refitting after every
    # one of thousands of sweep points would be quadratic
    pooled: dict[tuple[str, str, str], list[tuple[float, ...]]] = {}
    kind_of = {k.name: k for k in kinds}
    for _ in range(max_iterations):
        if not frontier:
            break
        next_frontier = []
        for key, state in frontier:
            if key in expanded:
                continue
            expanded.add(key)
            for kind in kinds:
                res = grasp_resolution if kind.param_dim > 1 else resolution
                for rho in _grid(kind, res):
                    result = step(state, kind, rho, config)
                    if not result.changed:
                        continue
                    dst, ids = observer.observe(model, visible_detections(result.state, config))
                    _, novel = model.get_or_create_node(dst, ids)
                    if novel:
                        next_frontier.append((dst, canonical_state(result.state)))
                    pooled.setdefault((key, kind.name, dst), []).append(tuple(rho))
        frontier = next_frontier
    else:
        if frontier:
            raise RuntimeError(f"reachable aspect set not closed after {max_iterations} iterations")
    for (src, name, dst), samples in pooled.items():
        kind = kind_of[name]
        model.add_edge(ActionEdge(src=src, dst=dst, kind=kind, samples=samples,
                                  dist=fit_gaussian(samples, model.thin_var, kind.circular),
                                  visit_count=len(samples)))
    return GroundTruthModel(model=model, sweep_resolution=resolution)


def _visual(key: str) -> bool:
    return "tactile" not in key


def model_error(learned: ATGModel, ground_truth) -> float:
    """Mean circular error of ORBIT edge means over ground-truth edges between visual aspects.

    Edges missing from ``learned`` count as pi.
    """
    gt = ground_truth.model if isinstance(ground_truth, GroundTruthModel) else ground_truth
    learned_kinds = {e.kind.name for e in learned.edges.values()}
    gt_kinds = {e.kind.name for e in gt.edges.values()}
    if learned_kinds - gt_kinds:
        raise ValueError(f"learned model has action kinds {sorted(learned_kinds - gt_kinds)} absent from ground truth")
    errors = []
    for ident, edge in gt.edges.items():
        if ident[1] != ORBIT.name or not (_visual(edge.src) and _visual(edge.dst)):
            continue
        mine = learned.edges.get(ident)
        if mine is None:
            errors.append(math.pi)
        else:
            errors.append(abs(wrap_angle(float(mine.dist.mean[0] - edge.dist.mean[0]))))
    if not errors:
        return 0.0  # nothing to get wrong
    return float(np.mean(errors))


def welch_p(xs, ys) -> float:
    """Two-sided Welch unequal-variance t-test p-value."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if xs.size < 2 or ys.size < 2:
        raise ValueError("welch_p needs at least two samples per group")
    vx, vy = xs.var(ddof=1) / xs.size, ys.var(ddof=1) / ys.size
    diff = xs.mean() - ys.mean()
    if vx + vy == 0.0:
        return 1.0 if diff == 0.0 else 0.0
    t = diff / math.sqrt(vx + vy)
    dof = (vx + vy) ** 2 / (vx**2 / (xs.size - 1) + vy**2 / (ys.size - 1))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), dof)))


@dataclass
class TrialCell:
    values: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float | None:
        return float(np.std(self.values, ddof=1)) if len(self.values) >= 2 else None


@dataclass
class TrialTable:
    checkpoints: list[int]
    cells: dict[tuple[str, int], TrialCell] = field(default_factory=dict)
    p_values: dict[int, float | None] = field(default_factory=dict)
    logs: dict[str, list] = field(default_factory=dict)
    models: dict[str, list] = field(default_factory=dict)

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            for line in header.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "p", "proposed_mean", "proposed_std", "baseline_mean", "baseline_std"])
        for c in self.checkpoints:
            row = [c, _fmt(self.p_values.get(c))]
            for m in METHODS:
                cell = self.cells.get((m, c))
                row += [_fmt(cell.mean if cell else None), _fmt(cell.std if cell else None)]
            w.writerow(row)
        return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _one_trial(args):
    method, learner_cfg, sim_cfg, checkpoints, gt = args
    errors: dict[int, float] = {}
    wanted = set(checkpoints)

    def snapshot(k, model, values):
        if k in wanted:
            errors[k] = model_error(model, gt)

    run = run_learning if method == "proposed" else run_baseline
    model, logs = run(ARCubeWorld(sim_cfg), learner_cfg, on_step=snapshot)
    final = model_error(model, gt)
    return [errors.get(c, final) for c in checkpoints], logs, model


def _workers(requested: int | None) -> int:
    cap = os.environ.get("ATG_THREADS")
    n = requested or (int(cap) if cap else os.cpu_count() or 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def trial_seeds(base_seed: int, n_trials: int) -> list[int]:
    return [base_seed * 1000 + i for i in range(n_trials)]


def run_trials(learner_cfg: LearnerConfig, sim_cfg: SimConfig | None, methods=METHODS, n_trials: int = 5,
               checkpoints=tuple(range(50, 501, 50)), ground_truth: GroundTruthModel | None = None,
               workers: int | None = None, keep_logs: bool = False,
               keep_models: bool = False) -> TrialTable:
    """Seeded trials per method with model error snapshots at each checkpoint."""
    if isinstance(methods, str):
        methods = (methods,)
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    checkpoints = sorted(int(c) for c in checkpoints)
    if checkpoints and checkpoints[-1] > learner_cfg.max_actions:
        raise ValueError(f"checkpoint {checkpoints[-1]} exceeds max_actions {learner_cfg.max_actions}")
    sim_cfg = sim_cfg or SimConfig()
    gt = ground_truth or build_ground_truth(sim_cfg, learner_cfg.actions)

    jobs = [(m, replace(learner_cfg, seed=seed), replace(sim_cfg, seed=seed), checkpoints, gt)
            for m in methods for seed in trial_seeds(learner_cfg.seed, n_trials)]
    n = _workers(workers)
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_one_trial, jobs))
    else:
        results = []
        for i, job in enumerate(jobs):
            try:
                results.append(_one_trial(job))
            except Exception as exc:
                raise RuntimeError(f"trial {i % n_trials} of {job[0]} failed: {exc}") from exc

    table = TrialTable(checkpoints=checkpoints)
    for mi, m in enumerate(methods):
        chunk = results[mi * n_trials:(mi + 1) * n_trials]
        for ci, c in enumerate(checkpoints):
            table.cells[(m, c)] = TrialCell([r[0][ci] for r in chunk])
        if keep_logs:
            table.logs[m] = [r[1] for r in chunk]
        if keep_models:
            table.models[m] = [r[2] for r in chunk]
    for c in checkpoints:
        if all((m, c) in table.cells for m in METHODS) and n_trials >= 2:
            table.p_values[c] = welch_p(table.cells[("proposed", c)].values, table.cells[("baseline", c)].values)
        else:
            table.p_values[c] = None
    return table


LOG_FLOOR = 1e-12


def emit_curves(logs, header: str | None = None) -> dict[str, str]:
    """Per-step curves across trials: log10 reward, mean model Q and edge count.

    ``logs`` is one step log per trial (a single log is accepted too).  Trials
    that stopped early are extended with their last value.
    """
    if logs and not isinstance(logs[0], (list, tuple)):
        logs = [logs]
    if not logs or not any(logs):
        raise ValueError("emit_curves needs at least one nonempty log")
    n = max(len(log) for log in logs)

    def column(attr, fn=float, pad_with_last=True):
        out = np.empty((len(logs), n))
        for i, log in enumerate(logs):
            vals = [fn(getattr(entry, attr)) for entry in log]
            if not vals:
                vals = [fn(0.0)]
            out[i] = vals + [vals[-1]] * (n - len(vals))
        return out

    log_r = column("reward", lambda r: math.log10(max(r, LOG_FLOOR)))
    mean_q = column("mean_q")
    edges = column("edge_count")

    def std(a):
        return a.std(axis=0, ddof=1) if a.shape[0] >= 2 else np.zeros(a.shape[1])

    def write(names, cols):
        buf = io.StringIO()
        if header:
            for line in header.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for k in range(n):
            w.writerow([k + 1] + [repr(float(c[k])) for c in cols])
        return buf.getvalue()

    return {
        "reward_curve.csv": write(["step", "log_reward_mean", "log_reward_std"],
                                  [log_r.mean(axis=0), std(log_r)]),
        "value_curve.csv": write(["step", "mean_q_mean", "mean_q_std", "edges_mean", "edges_std"],
                                 [mean_q.mean(axis=0), std(mean_q), edges.mean(axis=0), std(edges)]),
    }
