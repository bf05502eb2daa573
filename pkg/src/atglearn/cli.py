"""Command line: ``atg learn|baseline|ground-truth|evaluate|export-dot``."""
from __future__ import annotations

import argparse
import csv
import io
import re
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .evaluation import build_ground_truth, emit_curves, model_error, run_trials
from .learner import StepLog, run_baseline, run_learning
from .serialize import ModelFormatError, deserialize, export_dot, serialize
from .simworld import ARCubeWorld


def parse_checkpoints(text: str) -> list[int]:
    """``start..end:step`` or a comma separated list."""
    m = re.fullmatch(r"\s*(\d+)\.\.(\d+)(?::(\d+))?\s*", text)
    if m:
        start, end, stride = int(m[1]), int(m[2]), int(m[3] or 1)
        if stride < 1 or end < start:
            raise argparse.ArgumentTypeError(f"bad checkpoint range {text!r}")
        return list(range(start, end + 1, stride))
    try:
        return sorted(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad checkpoint list {text!r}") from None


def steps_csv(logs: list[StepLog], param_dim: int, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "s", "kind"] + [f"rho{i}" for i in range(param_dim)]
               + ["s_prime", "reward", "mode", "nodes", "edges", "max_q"])
    for log in logs:
        rho = [repr(x) for x in log.rho] + [""] * (param_dim - len(log.rho))
        w.writerow([log.step, log.s, log.kind] + rho
                   + [log.s_prime, repr(log.reward), log.mode, log.node_count, log.edge_count, repr(log.max_q)])
    return buf.getvalue()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atg", description="Aspect Transition Graph structure learning")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", type=Path, help="YAML config with learner/sim sections")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--actions", choices=["orbit", "orbit+grasp"])
        if seed:
            p.add_argument("--seed", type=int)
            p.add_argument("--max-actions", type=int, dest="max_actions")

    for name in ("learn", "baseline"):
        common(sub.add_parser(name, help=f"run the {'intrinsically motivated learner' if name == 'learn' else 'random baseline'}"))
    gt = sub.add_parser("ground-truth", help="build the ground-truth model by exhaustive sweep")
    common(gt, seed=False)
    gt.add_argument("--resolution", type=int, default=720)
    ev = sub.add_parser("evaluate", help="run both methods over several trials and write table1.csv")
    common(ev)
    ev.add_argument("--trials", type=int, default=5)
    ev.add_argument("--checkpoints", type=parse_checkpoints, default=list(range(50, 501, 50)))
    dot = sub.add_parser("export-dot", help="render a model file as Graphviz DOT")
    dot.add_argument("--model", type=Path, required=True)
    dot.add_argument("--out", type=Path, default=Path("out"))
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    changes = {}
    if getattr(args, "max_actions", None) is not None:
        changes["max_actions"] = args.max_actions
    if getattr(args, "actions", None):
        changes["actions"] = args.actions
    if changes:
        try:
            cfg = ExperimentConfig(replace(cfg.learner, **changes), cfg.sim)
        except ValueError as exc:
            raise ConfigError(next(iter(changes)), str(exc)) from exc
    return cfg


def _header(cfg: ExperimentConfig, what: str) -> str:
    return f"{what}\nseed={cfg.learner.seed} config_hash={cfg.digest()}"


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def _cmd_run(args, cfg: ExperimentConfig) -> str:
    runner = run_learning if args.command == "learn" else run_baseline
    model, logs = runner(ARCubeWorld(cfg.sim), cfg.learner)
    header = _header(cfg, f"atg {args.command}")
    _write(args.out, "model.atg", serialize(model, header))
    _write(args.out, "model.dot", export_dot(model, header))
    dim = max(k.param_dim for k in cfg.learner.action_kinds)
    _write(args.out, "steps.csv", steps_csv(logs, dim, header))
    gt = build_ground_truth(cfg.sim, cfg.learner.actions)
    err = model_error(model, gt)
    return f"{args.command}: nodes={len(model.nodes)} edges={len(model.edges)} steps={len(logs)} error={err:.4f} out={args.out}"


def _cmd_ground_truth(args, cfg: ExperimentConfig) -> str:
    gt = build_ground_truth(cfg.sim, cfg.learner.actions, resolution=args.resolution)
    header = _header(cfg, f"atg ground-truth resolution={args.resolution}")
    _write(args.out, "ground_truth.atg", serialize(gt.model, header))
    _write(args.out, "ground_truth.dot", export_dot(gt.model, header))
    return f"ground-truth: nodes={len(gt.model.nodes)} edges={len(gt.model.edges)} out={args.out}"


def _cmd_evaluate(args, cfg: ExperimentConfig) -> str:
    if args.trials < 1:
        raise ConfigError("trials", "must be >= 1")
    learner = cfg.learner
    if args.checkpoints and args.checkpoints[-1] > learner.max_actions:
        learner = replace(learner, max_actions=args.checkpoints[-1])
    table = run_trials(learner, cfg.sim, n_trials=args.trials, checkpoints=args.checkpoints,
                       keep_logs=True, keep_models=True)
    header = _header(cfg, f"atg evaluate trials={args.trials}")
    path = _write(args.out, "table1.csv", table.to_csv(header))
    for name, text in emit_curves(table.logs["proposed"], header).items():
        _write(args.out, name, text)
    for method, models in table.models.items():
        for i, model in enumerate(models):
            _write(args.out, f"{method}_trial{i}.dot", export_dot(model, header))
    return f"evaluate: trials={args.trials} checkpoints={len(table.checkpoints)} table={path}"


def _cmd_export_dot(args) -> str:
    if not args.model.is_file():
        raise FileNotFoundError(f"model file not found: {args.model}")
    model = deserialize(args.model.read_text(encoding="utf-8"))
    path = _write(args.out, args.model.stem + ".dot", export_dot(model, f"atg export-dot {args.model.name}"))
    return f"export-dot: nodes={len(model.nodes)} edges={len(model.edges)} dot={path}"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "export-dot":
            summary = _cmd_export_dot(args)
        else:
            cfg = _config(args)
            if args.command in ("learn", "baseline"):
                summary = _cmd_run(args, cfg)
            elif args.command == "ground-truth":
                summary = _cmd_ground_truth(args, cfg)
            else:
                summary = _cmd_evaluate(args, cfg)
    except ConfigError as exc:
        print(f"atg: config error in field {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"atg: file not found: {exc.filename}" if exc.filename else f"atg: {exc}", file=sys.stderr)
        return 1
    except (ModelFormatError, OSError, RuntimeError, ValueError) as exc:
        print(f"atg: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
