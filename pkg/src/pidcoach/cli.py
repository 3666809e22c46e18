"""Command-line entry point.

Subcommands:
  train         one training run per seed (coached per config)
  compare       paired coached-vs-uncoached experiment over the seed list
  evaluate      load a checkpoint and report its coach-free mean score
  pid-baseline  the controller alone from episode start (its mean score)

Output layout: <out>/<experiment-name>/<seed>/<arm>/{run.csv, config.json,
checkpoint.bin} with summary.json at the experiment root, so any run
directory alone reproduces its numbers.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ExperimentConfig, config_to_dict, parse_config, serialize_config
from .harness import (
    EpisodeLog,
    SeedOutcome,
    TrainingCurve,
    arm_metrics,
    evaluate,
    run_pid_baseline,
    run_training,
    summarize_pairs,
    write_run_csv,
)
from .ppo import load_checkpoint, save_checkpoint

CHECKPOINT_NAME = "checkpoint.bin"


def _arm_name(enabled: bool) -> str:
    return "coached" if enabled else "uncoached"


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    run = cfg.run
    if getattr(args, "seeds", None) is not None:
        run = dataclasses.replace(run, seeds=tuple(range(args.seeds)))
    if getattr(args, "seed_list", None):
        seeds = tuple(int(s) for s in args.seed_list.split(","))
        run = dataclasses.replace(run, seeds=seeds)
    if getattr(args, "episode_cap", None) is not None:
        run = dataclasses.replace(run, episode_cap=args.episode_cap)
    if getattr(args, "out", None) is not None:
        run = dataclasses.replace(run, out_dir=args.out)
    coach = cfg.coach
    if getattr(args, "no_coach", False):
        coach = dataclasses.replace(coach, enabled=False)
    return dataclasses.replace(cfg, run=run, coach=coach)


def _run_dir(cfg: ExperimentConfig, seed: int, enabled: bool) -> Path:
    return Path(cfg.run.out_dir) / cfg.name / str(seed) / _arm_name(enabled)


def _execute_arm(cfg: ExperimentConfig, seed: int, enabled: bool) -> TrainingCurve:
    """Train one arm, write its run directory, return the curve."""
    coach = dataclasses.replace(cfg.coach, enabled=enabled)
    result = run_training(
        cfg.env, coach, cfg.ppo, seed, cfg.stop_rule(), config_fingerprint=cfg.fingerprint()
    )
    out = _run_dir(cfg, seed, enabled)
    out.mkdir(parents=True, exist_ok=True)
    write_run_csv(out / "run.csv", result.curve)
    arm_cfg = dataclasses.replace(cfg, coach=coach, run=dataclasses.replace(cfg.run, seeds=(seed,)))
    serialize_config(arm_cfg, out / "config.json")
    save_checkpoint(out / CHECKPOINT_NAME, result.policy, result.value, result.obs_norm)
    return result.curve


def _arm_worker(cfg_doc: dict, seed: int, enabled: bool):
    # Module-level worker so ProcessPoolExecutor can pickle the call.
    from .config import config_from_dict

    cfg = config_from_dict(cfg_doc)
    curve = _execute_arm(cfg, seed, enabled)
    return seed, enabled, curve.episodes


def cmd_train(cfg: ExperimentConfig, args) -> int:
    for seed in cfg.run.seeds:
        curve = _execute_arm(cfg, seed, cfg.coach.enabled)
        metrics = arm_metrics(curve, cfg.stop_rule(), cfg.run.avg_window)
        print(
            f"seed {seed} [{_arm_name(cfg.coach.enabled)}]: {metrics.episodes_run} episodes, "
            f"win-streak at {metrics.win_streak_episode}, "
            f"avg-crossing at {metrics.average_crossing_episode}"
        )
    return 0


def cmd_compare(cfg: ExperimentConfig, args) -> int:
    jobs = max(1, args.jobs)
    tasks = [(seed, enabled) for seed in cfg.run.seeds for enabled in (True, False)]
    curves: dict[tuple[int, bool], list[EpisodeLog]] = {}
    if jobs == 1:
        for seed, enabled in tasks:
            curves[(seed, enabled)] = _execute_arm(cfg, seed, enabled).episodes
    else:
        doc = config_to_dict(cfg)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_arm_worker, doc, s, e) for s, e in tasks]
            for future in futures:
                seed, enabled, episodes = future.result()
                curves[(seed, enabled)] = episodes

    stop = cfg.stop_rule()
    outcomes = []
    for seed in cfg.run.seeds:
        coached = TrainingCurve(cfg.fingerprint(), seed, curves[(seed, True)])
        uncoached = TrainingCurve(cfg.fingerprint(), seed, curves[(seed, False)])
        outcomes.append(
            SeedOutcome(
                seed=seed,
                coached=arm_metrics(coached, stop, cfg.run.avg_window),
                uncoached=arm_metrics(uncoached, stop, cfg.run.avg_window),
            )
        )
    summary = summarize_pairs(cfg.run.seeds, outcomes, cfg.run.avg_window, stop.win_target)

    doc = {
        "config": config_to_dict(cfg),
        "fingerprint": cfg.fingerprint(),
        "seeds": list(cfg.run.seeds),
        "win_target": summary.win_target,
        "avg_window": summary.avg_window,
        "per_seed": [
            {
                "seed": o.seed,
                "coached": dataclasses.asdict(o.coached),
                "uncoached": dataclasses.asdict(o.uncoached),
            }
            for o in summary.outcomes
        ],
        "median_reduction_win_streak_pct": summary.median_reduction_win_streak,
        "median_reduction_average_pct": summary.median_reduction_average,
        "sign_test_win_streak": summary.sign_test_win_streak,
        "sign_test_average": summary.sign_test_average,
        "did_not_finish": summary.did_not_finish,
    }
    root = Path(cfg.run.out_dir) / cfg.name
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "summary.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(json.dumps({k: doc[k] for k in (
        "median_reduction_win_streak_pct",
        "sign_test_win_streak",
        "did_not_finish",
    )}, indent=2))
    print(f"summary written to {root / 'summary.json'}")
    return 0


def cmd_evaluate(cfg: ExperimentConfig, args) -> int:
    policy, _, obs_norm = load_checkpoint(args.checkpoint)
    episodes = args.episodes or cfg.run.eval_episodes
    seed = cfg.run.seeds[0]
    mean = evaluate(policy, obs_norm, cfg.env, episodes, seed)
    print(json.dumps({"checkpoint": str(args.checkpoint), "episodes": episodes, "mean_score": mean}))
    return 0


def cmd_pid_baseline(cfg: ExperimentConfig, args) -> int:
    scores = run_pid_baseline(cfg.env, cfg.coach, args.episodes, cfg.run.seeds[0])
    mean = sum(scores) / len(scores)
    print(
        json.dumps(
            {
                "episodes": args.episodes,
                "gains": {"kp": cfg.coach.gains.kp, "ki": cfg.coach.gains.ki, "kd": cfg.coach.gains.kd},
                "monitor": cfg.coach.monitor,
                "mean_score": mean,
                "scores": scores,
            }
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pidcoach", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the config list")
        p.add_argument("--seed-list", help="comma-separated seed list override")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--episode-cap", type=int, help="episode cap override")
        p.add_argument("--no-coach", action="store_true", help="force-disable the coach")

    p_train = sub.add_parser("train", help="single-arm training runs")
    common(p_train)

    p_compare = sub.add_parser("compare", help="paired coached-vs-uncoached experiment")
    common(p_compare)
    p_compare.add_argument("--jobs", type=int, default=1, help="parallel run workers")

    p_eval = sub.add_parser("evaluate", help="evaluate a checkpoint, coach-free")
    common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--episodes", type=int, default=None)

    p_pid = sub.add_parser("pid-baseline", help="standalone PID score")
    common(p_pid)
    p_pid.add_argument("--episodes", type=int, default=20)
    return parser


_COMMANDS = {
    "train": cmd_train,
    "compare": cmd_compare,
    "evaluate": cmd_evaluate,
    "pid-baseline": cmd_pid_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _apply_overrides(parse_config(args.config), args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
