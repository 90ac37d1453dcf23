"""Command-line interface.

Subcommands: gen, train, posttrain, temp-train, eval, analyze, render,
convert. Metrics go to stdout; artifacts (config snapshot, metrics log,
checkpoints, reports, SVG) go to the run directory. Exit code is 0 only
when the command ran to completion.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .colouring import dump_colouring, kmeans_colouring, lloyd_colouring, default_colour_budget
from .costs import soc_metrics
from .errors import ParseError
from .evalkit import (
    attention_entropy,
    classify_failures,
    evaluate,
    generate_instances,
    joint_solver,
    load_scenario,
    parse_movingai,
    pibt_solver,
    policy_solver,
    radar_metrics,
    render_svg,
    scenario_cv,
    shapley_exact,
    to_movingai,
)
from .evalkit.analysis import ScenarioSpec
from .experts import pibt_expert, write_demonstration_log
from .grid import Instance, format_instance, parse_instance
from .hypergraphs import HypergraphStrategy
from .network import ArchConfig, ModelParams, aggregate_attention, load_checkpoint, policy_forward, save_checkpoint
from .rollout import run_policy
from .training import (
    Dataset,
    PpoConfig,
    TrainConfig,
    collect_dataset,
    collect_temperature_rollouts,
    dagger_round,
    evaluate_accuracy,
    il_epoch,
    post_train,
    ppo_update,
)
from .training.optim import Adam, AdamW


def _load_instances(path: str) -> list[Instance]:
    p = Path(path)
    files = sorted(p.glob("*.txt")) if p.is_dir() else [p]
    if not files:
        raise FileNotFoundError(f"no instance files under {path}")
    return [parse_instance(f.read_text()) for f in files]


def _strategy(args, seed_offset: int = 0) -> HypergraphStrategy:
    return HypergraphStrategy(args.strategy, seed=args.seed + seed_offset,
                              k_init=getattr(args, "k_init", None),
                              epsilon=getattr(args, "epsilon", 0.0))


def _run_dir(path: str, config: dict) -> Path:
    run = Path(path)
    run.mkdir(parents=True, exist_ok=True)
    (run / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True,
                                                default=str) + "\n")
    return run


def _log_metrics(run: Path, record: dict) -> None:
    with open(run / "metrics.jsonl", "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


# ------------------------------------------------------------------ commands

def cmd_gen(args) -> int:
    instances = generate_instances(args.kind, args.count,
                                   (args.size_min, args.size_max),
                                   args.agents, args.density, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, inst in enumerate(instances):
        (out / f"instance_{i:04d}.txt").write_text(format_instance(inst))
    print(f"wrote {len(instances)} instances to {out}")
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                       learning_rate=args.lr, weight_decay=args.weight_decay,
                       val_split=args.val_split, step_limit=args.step_limit,
                       seed=args.seed,
                       checkpoint_every=args.checkpoint_every)


def cmd_train(args) -> int:
    instances = _load_instances(args.instances)
    arch = ArchConfig(feature_dim=args.feature_dim, num_layers=args.layers,
                      r_obs=args.r_obs, r_comm=args.r_comm)
    params = ModelParams.init(arch, seed=args.seed)
    strategy = _strategy(args)
    config = _train_config(args)
    run = _run_dir(args.out, {"command": "train", "arch": dataclasses.asdict(arch),
                              "train": dataclasses.asdict(config),
                              "strategy": args.strategy,
                              "instances": args.instances})

    dataset, stats, demos = collect_dataset(instances, params, strategy,
                                            step_limit=config.step_limit)
    write_demonstration_log(run / "demonstrations.bin", demos)
    print(f"collected {len(dataset)} samples from {stats.collected} instances "
          f"({stats.skipped} skipped)")
    train_set, val_set = dataset.split(config.val_split, config.seed)

    optimizer = AdamW(params.trainable("policy"), config.learning_rate,
                      weight_decay=config.weight_decay)
    rng = np.random.default_rng(config.seed)
    for epoch in range(config.epochs):
        epoch_stats = il_epoch(params, optimizer, train_set, config, rng, val_set)
        record = {"epoch": epoch, "loss": epoch_stats.loss,
                  "accuracy": epoch_stats.accuracy,
                  "val_accuracy": epoch_stats.val_accuracy,
                  "samples": len(train_set)}
        if args.dagger_every and (epoch + 1) % args.dagger_every == 0:
            online = dagger_round(params, instances, train_set, config, strategy)
            record["dagger_success_rate"] = online.success_rate
            record["dagger_added"] = online.samples_added
        _log_metrics(run, record)
        print(f"epoch {epoch}: loss={epoch_stats.loss:.4f} "
              f"acc={epoch_stats.accuracy:.3f} val={epoch_stats.val_accuracy}")
        if (epoch + 1) % config.checkpoint_every == 0:
            save_checkpoint(run / f"checkpoint_{epoch + 1:04d}.ckpt", params)
    save_checkpoint(run / "checkpoint_final.ckpt", params)
    print(f"final checkpoint: {run / 'checkpoint_final.ckpt'}")
    return 0


def cmd_posttrain(args) -> int:
    params = load_checkpoint(args.checkpoint)
    instances = _load_instances(args.instances)
    strategy = _strategy(args)
    config = TrainConfig(post_epochs=args.epochs, batch_size=args.batch_size,
                         learning_rate=args.lr, step_limit=args.step_limit,
                         seed=args.seed)
    run = _run_dir(args.out, {"command": "posttrain",
                              "train": dataclasses.asdict(config),
                              "checkpoint": args.checkpoint})
    dataset, stats, _ = collect_dataset(instances, params, strategy,
                                        step_limit=config.step_limit)
    quality = Dataset()
    history = post_train(params, dataset, quality, instances, config, strategy,
                         expert_socs=stats.expert_socs)
    for epoch, item in enumerate(history):
        _log_metrics(run, {"epoch": epoch, "expert_calls": item.expert_calls,
                           "quality_samples": item.samples_added,
                           "success_rate": item.success_rate})
    save_checkpoint(run / "checkpoint_final.ckpt", params)
    print(f"post-training done; quality samples collected: {len(quality)}")
    return 0


def cmd_temp_train(args) -> int:
    params = load_checkpoint(args.checkpoint)
    instances = _load_instances(args.instances)
    strategy = _strategy(args)
    ppo = PpoConfig(clip_ratio=args.clip, discount=args.gamma,
                    gae_lambda=args.gae_lambda, learning_rate=args.lr,
                    batch_size=args.batch_size, epochs=args.epochs)
    run = _run_dir(args.out, {"command": "temp-train",
                              "ppo": dataclasses.asdict(ppo),
                              "checkpoint": args.checkpoint})
    optimizer = Adam(params.trainable("temperature"), ppo.learning_rate)
    for epoch in range(ppo.epochs):
        buffer, success_rate = collect_temperature_rollouts(
            params, instances, strategy, args.step_limit, seed=args.seed + epoch)
        stats = ppo_update(params, buffer, ppo, optimizer)
        _log_metrics(run, {"epoch": epoch, "success_rate": success_rate, **stats})
        print(f"epoch {epoch}: success={success_rate:.3f} "
              f"actor_loss={stats['actor_loss']:.4f}")
    save_checkpoint(run / "checkpoint_final.ckpt", params)
    return 0


def _solver_from_args(args):
    if args.checkpoint:
        params = load_checkpoint(args.checkpoint)
        return policy_solver(params, _strategy(args), name="policy")
    if args.solver == "pibt":
        return pibt_solver()
    if args.solver == "joint":
        return joint_solver()
    raise ValueError("pass --checkpoint or --solver pibt|joint")


def cmd_eval(args) -> int:
    instances = _load_instances(args.instances)
    solver = _solver_from_args(args)
    baseline = joint_solver() if args.baseline == "joint" else pibt_solver()
    report = evaluate(solver, instances, step_limit=args.step_limit,
                      time_limit=args.time_limit, baseline=baseline,
                      seed=args.seed)
    run = _run_dir(args.out, {"command": "eval", "solver": solver[0],
                              "baseline": baseline[0],
                              "step_limit": args.step_limit})
    header = ("index,map,agents,success,soc,baseline_soc,rel_soc,"
              "runtime,timed_out,steps")
    lines = [header]
    for r in report.rows:
        lines.append(f"{r.index},{r.map_label},{r.num_agents},{int(r.success)},"
                     f"{r.soc},{r.baseline_soc},{r.rel_soc:.6f},"
                     f"{r.runtime:.6f},{int(r.timed_out)},{r.steps}")
    (run / "rows.csv").write_text("\n".join(lines) + "\n")

    print(f"solver={report.solver_name} baseline={report.baseline_name} "
          f"(Rel. SoC is relative to the named baseline)")
    print(f"{'map':>12} {'n':>4} {'inst':>5} {'success':>8} "
          f"{'rel_soc':>16} {'runtime':>9}")
    for (label, n), agg in report.aggregates().items():
        print(f"{label:>12} {n:>4} {agg['instances']:>5} "
              f"{agg['success_rate']:>8.3f} "
              f"{agg['mean_rel_soc']:>8.3f}±{agg['rel_soc_ci95']:<7.3f} "
              f"{agg['mean_runtime']:>9.4f}")
    if args.rows:
        print("\n".join(lines))
    radar = radar_metrics(report)
    _log_metrics(run, {"aggregates": {f"{k[0]}/{k[1]}": v
                                      for k, v in report.aggregates().items()},
                       "radar_quality": {f"{k[0]}/{k[1]}": v for k, v
                                         in radar.solution_quality.items()}})
    return 0


def cmd_analyze(args) -> int:
    params = load_checkpoint(args.checkpoint)
    strategy = _strategy(args)
    out: dict = {"mode": args.mode}
    if args.mode == "entropy":
        instances = _load_instances(args.instances)
        records = []
        for k, inst in enumerate(instances):
            result = run_policy(params, inst, strategy, args.step_limit,
                                seed=args.seed + k, record_attention=True)
            records.extend(result.attention)
        report = attention_entropy(records, layer=args.layer)
        out.update({"mean_entropy": report.mean, "rows": report.included_rows,
                    "excluded": report.excluded_rows})
    elif args.mode == "cv":
        spec = _scenario_from_args(args)
        out["cv_percent"] = {k: {str(g): v for g, v in d.items()}
                             for k, d in scenario_cv(params, spec, strategy).items()}
    elif args.mode == "shapley":
        spec = _scenario_from_args(args)
        coalition = tuple(a for a in range(len(spec.starts)) if a != spec.target)
        report = shapley_exact(params, spec, spec.target, coalition, strategy)
        out["values"] = {str(k): v for k, v in report.values.items()}
        out["percentages"] = {str(k): v for k, v in report.percentages.items()}
        out["classes"] = list(report.classes)
    elif args.mode == "failures":
        instances = _load_instances(args.instances)
        counts = {"success": 0, "deadlock": 0, "livelock": 0, "timeout": 0}
        partial = []
        for k, inst in enumerate(instances):
            result = run_policy(params, inst, strategy, args.step_limit,
                                seed=args.seed + k)
            report = classify_failures(result.trajectory, inst)
            partial.append(report.partial_success_rate)
            for label in report.labels:
                counts[label] += 1
        out.update({"counts": counts,
                    "partial_success_rate": float(np.mean(partial))})
    else:
        raise ValueError(f"unknown analyze mode {args.mode!r}")
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.out:
        run = _run_dir(args.out, {"command": "analyze", "mode": args.mode})
        (run / f"{args.mode}.json").write_text(json.dumps(out, indent=2,
                                                          sort_keys=True) + "\n")
    return 0


def _scenario_from_args(args) -> ScenarioSpec:
    if args.scenario in ("scenario1", "scenario2"):
        return load_scenario(args.scenario)
    raise ValueError("scenario must be scenario1 or scenario2")


def cmd_render(args) -> int:
    instance = parse_instance(Path(args.instance).read_text())
    trajectory = None
    attention = None
    colouring = None
    if args.solve:
        trajectory = pibt_expert(instance, args.step_limit).trajectory
    if args.colouring:
        builder = kmeans_colouring if args.colouring == "kmeans" else lloyd_colouring
        colouring = builder(instance.grid, default_colour_budget(instance.grid),
                            seed=args.seed)
        if args.colouring_dump:
            Path(args.colouring_dump).write_text(
                dump_colouring(colouring, instance.grid))
    if args.checkpoint:
        params = load_checkpoint(args.checkpoint)
        _, record = policy_forward(params, instance, instance.starts,
                                   _strategy(args))
        matrices, _ = aggregate_attention(record)
        attention = matrices[args.layer]
    svg = render_svg(instance, trajectory=trajectory, colouring=colouring,
                     attention=attention)
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return 0


def cmd_convert(args) -> int:
    if args.map and args.scen:
        instance = parse_movingai(Path(args.map).read_text(),
                                  Path(args.scen).read_text(),
                                  num_agents=args.agents)
        Path(args.out).write_text(format_instance(instance))
        print(f"wrote {args.out} ({instance.num_agents} agents)")
        return 0
    if args.instance:
        instance = parse_instance(Path(args.instance).read_text())
        map_text, scen_text = to_movingai(instance)
        Path(args.out + ".map").write_text(map_text)
        Path(args.out + ".scen").write_text(scen_text)
        print(f"wrote {args.out}.map and {args.out}.scen")
        return 0
    raise ValueError("pass --map/--scen for ingestion or --instance for export")


# -------------------------------------------------------------------- parser

def _add_strategy_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", default="kmeans",
                   choices=["kmeans", "lloyd", "distance", "pairwise"])
    p.add_argument("--k-init", type=int, default=None, dest="k_init")
    p.add_argument("--epsilon", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypermapf",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate screened instances")
    p.add_argument("--kind", default="random", choices=["random", "maze", "room"])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--size-min", type=int, default=8)
    p.add_argument("--size-max", type=int, default=10)
    p.add_argument("--agents", type=int, default=4)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("train", help="imitation training")
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--val-split", type=float, default=0.1)
    p.add_argument("--step-limit", type=int, default=256)
    p.add_argument("--feature-dim", type=int, default=64)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--r-obs", type=int, default=5)
    p.add_argument("--r-comm", type=float, default=7.0)
    p.add_argument("--dagger-every", type=int, default=0)
    p.add_argument("--checkpoint-every", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_strategy_args(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("posttrain", help="quality-improvement post-training")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--step-limit", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    _add_strategy_args(p)
    p.set_defaults(fn=cmd_posttrain)

    p = sub.add_parser("temp-train", help="PPO on the temperature module")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--clip", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--gae-lambda", type=float, default=0.95)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--step-limit", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    _add_strategy_args(p)
    p.set_defaults(fn=cmd_temp_train)

    p = sub.add_parser("eval", help="benchmark a solver or checkpoint")
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--solver", choices=["pibt", "joint"])
    p.add_argument("--baseline", default="pibt", choices=["pibt", "joint"])
    p.add_argument("--step-limit", type=int, default=256)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--rows", action="store_true",
                   help="also print machine-readable CSV rows")
    p.add_argument("--seed", type=int, default=0)
    _add_strategy_args(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("analyze", help="entropy | cv | shapley | failures")
    p.add_argument("--mode", required=True,
                   choices=["entropy", "cv", "shapley", "failures"])
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--instances")
    p.add_argument("--scenario", default="scenario1")
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--step-limit", type=int, default=256)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    _add_strategy_args(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("render", help="render an instance to SVG")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--solve", action="store_true",
                   help="overlay the greedy expert trajectory")
    p.add_argument("--colouring", choices=["kmeans", "lloyd"])
    p.add_argument("--colouring-dump", help="also dump the colouring text")
    p.add_argument("--checkpoint", help="overlay aggregated attention")
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--step-limit", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    _add_strategy_args(p)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("convert", help="MovingAI <-> internal instance text")
    p.add_argument("--map")
    p.add_argument("--scen")
    p.add_argument("--agents", type=int)
    p.add_argument("--instance")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, ParseError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
