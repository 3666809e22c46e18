"""Seeded training loops, acceleration metrics and paired experiments.

run_training interleaves coached rollout collection with PPO updates until
a win-streak stop rule or an episode cap. Everything is keyed off a single
integer seed: the environment stream, the network initialization and the
agent's action/shuffle stream are separate counter-based PRNG streams, so
a run is bit-reproducible and the deterministic coach cannot perturb the
agent's randomness.

paired_experiment runs coached and uncoached arms on shared seeds and
summarizes the two acceleration metrics: the episode of the fifth
consecutive win and the first crossing of a trailing score average.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from statistics import median
from typing import List, Optional, Sequence

import numpy as np

from .coach import CoachConfig, InterventionRecord, coached_step
from .environment import EnvConfig, episode_score, make_env
from .ppo import (
    AdamState,
    PolicyParams,
    PpoConfig,
    RewardScaler,
    RolloutBatch,
    RunningNorm,
    ValueParams,
    act,
    gae,
    greedy_action,
    init_policy,
    init_value,
    param_arrays,
    update,
    value_of,
)

# Distinct second key words so each consumer gets an independent Philox stream.
_INIT_STREAM = 0x5EED0001
_AGENT_STREAM = 0x5EED0002
_EVAL_STREAM = 0x5EED0003


def _stream(seed: int, which: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, which], dtype=np.uint64)))


@dataclass(frozen=True)
class EpisodeLog:
    episode: int
    agent_score: float
    env_score: float
    steps: int
    intervention_count: int
    interventions_failed: int


@dataclass
class TrainingCurve:
    config_fingerprint: str
    seed: int
    episodes: List[EpisodeLog] = field(default_factory=list)
    duration_seconds: float = 0.0

    def agent_scores(self) -> List[float]:
        return [e.agent_score for e in self.episodes]


@dataclass(frozen=True)
class StopRule:
    win_target: float
    win_streak: int = 5
    episode_cap: int = 2000

    def __post_init__(self) -> None:
        if self.win_streak < 1 or self.episode_cap < 1:
            raise ValueError("win_streak and episode_cap must be >= 1")


@dataclass
class TrainingRun:
    """A finished run: the curve plus the final agent and audit counters."""

    curve: TrainingCurve
    policy: PolicyParams
    value: ValueParams
    obs_norm: RunningNorm
    records: List[InterventionRecord]
    total_transitions: int
    total_decisions: int
    total_env_reward: float


def win_streak_episode(scores: Sequence[float], target: float, k: int) -> Optional[int]:
    """1-based episode index completing the first run of k consecutive
    scores strictly above target; None if it never happens."""
    if k < 1:
        raise ValueError("k must be >= 1")
    streak = 0
    for i, score in enumerate(scores, start=1):
        streak = streak + 1 if score > target else 0
        if streak == k:
            return i
    return None


def moving_average_crossing(
    scores: Sequence[float], target: float, window: int
) -> Optional[int]:
    """First 1-based index whose trailing window mean is strictly above
    target; None if it never happens."""
    if window < 1:
        raise ValueError("window must be >= 1")
    for i in range(window, len(scores) + 1):
        if sum(scores[i - window : i]) / window > target:
            return i
    return None


def _collect_episode(
    env,
    coach_cfg,
    policy,
    value,
    obs_norm,
    reward_scaler,
    ppo_cfg,
    agent_rng,
    episode_index,
    reset_seed=None,
):
    """Roll one coached episode; returns (per-episode batch pieces, log, records)."""
    raw_obs = env.reset(seed=reset_seed)
    obs_norm.update(raw_obs)
    norm_obs = obs_norm.normalize(raw_obs)
    norm_obs_list = [norm_obs]
    actions, logprobs, rewards, scaled_rewards = [], [], [], []
    records: List[InterventionRecord] = []
    decisions = 0
    terminal = False
    while not env.done:
        action, logprob = act(policy, norm_obs, agent_rng)
        transition, record = coached_step(
            env, float(action[0]), coach_cfg, episode=episode_index, step=decisions
        )
        decisions += 1
        if record is not None:
            records.append(record)
        obs_norm.update(transition.next_obs)
        norm_obs = obs_norm.normalize(transition.next_obs)
        norm_obs_list.append(norm_obs)
        actions.append(action)
        logprobs.append(logprob)
        rewards.append(transition.reward)
        scaled_rewards.append(
            reward_scaler.scale(transition.reward) if reward_scaler else transition.reward
        )
        terminal = transition.terminal
    if reward_scaler:
        reward_scaler.episode_end()

    stacked = np.asarray(norm_obs_list)
    values = value_of(value, stacked)
    advantages = gae(scaled_rewards, values, terminal, ppo_cfg.gamma, ppo_cfg.lam)
    returns = advantages + values[:-1]

    agent_score = episode_score(rewards)
    hidden = sum(r.hidden_reward for r in records)
    log = EpisodeLog(
        episode=episode_index,
        agent_score=agent_score,
        env_score=agent_score + hidden,
        steps=env.steps,
        intervention_count=len(records),
        interventions_failed=sum(1 for r in records if not r.success),
    )
    piece = RolloutBatch(
        obs=stacked[:-1],
        actions=np.asarray(actions),
        logprobs=np.asarray(logprobs),
        advantages=advantages,
        returns=returns,
    )
    return piece, log, records, decisions


def _merge_batches(pieces: List[RolloutBatch]) -> RolloutBatch:
    return RolloutBatch(
        obs=np.concatenate([p.obs for p in pieces]),
        actions=np.concatenate([p.actions for p in pieces]),
        logprobs=np.concatenate([p.logprobs for p in pieces]),
        advantages=np.concatenate([p.advantages for p in pieces]),
        returns=np.concatenate([p.returns for p in pieces]),
    )


def run_training(
    env_cfg: EnvConfig,
    coach_cfg: CoachConfig,
    ppo_cfg: PpoConfig,
    seed: int,
    stop: StopRule,
    config_fingerprint: str = "",
) -> TrainingRun:
    """Train one agent to the stop rule; fully deterministic given seed."""
    started = time.perf_counter()
    env = make_env(env_cfg)
    init_rng = _stream(seed, _INIT_STREAM)
    agent_rng = _stream(seed, _AGENT_STREAM)
    policy = init_policy(env.obs_dim, 1, ppo_cfg.hidden, init_rng)
    value = init_value(env.obs_dim, ppo_cfg.hidden, init_rng)
    obs_norm = RunningNorm(env.obs_dim)
    reward_scaler = RewardScaler(ppo_cfg.gamma) if ppo_cfg.scale_rewards else None
    adam = AdamState.for_params(param_arrays(policy, value))

    curve = TrainingCurve(config_fingerprint=config_fingerprint, seed=seed)
    all_records: List[InterventionRecord] = []
    total_transitions = 0
    total_decisions = 0
    total_env_reward = 0.0
    streak = 0
    episode = 0
    done = False
    while not done:
        pieces = []
        for _ in range(ppo_cfg.episodes_per_update):
            episode += 1
            piece, log, records, decisions = _collect_episode(
                env,
                coach_cfg,
                policy,
                value,
                obs_norm,
                reward_scaler,
                ppo_cfg,
                agent_rng,
                episode,
                reset_seed=seed if episode == 1 else None,  # key the env stream once
            )
            pieces.append(piece)
            curve.episodes.append(log)
            all_records.extend(records)
            total_transitions += len(piece)
            total_decisions += decisions
            total_env_reward += env.episode_return
            streak = streak + 1 if log.agent_score > stop.win_target else 0
            if streak >= stop.win_streak or episode >= stop.episode_cap:
                done = True
                break
        if not done:
            update(policy, value, _merge_batches(pieces), ppo_cfg, adam, agent_rng)

    curve.duration_seconds = time.perf_counter() - started
    return TrainingRun(
        curve=curve,
        policy=policy,
        value=value,
        obs_norm=obs_norm,
        records=all_records,
        total_transitions=total_transitions,
        total_decisions=total_decisions,
        total_env_reward=total_env_reward,
    )


def evaluate(
    policy: PolicyParams,
    obs_norm: RunningNorm,
    env_cfg: EnvConfig,
    episodes: int,
    seed: int,
) -> float:
    """Coach-free deterministic-policy evaluation: mean episode score.

    The observation normalizer is frozen (never updated) here."""
    env = make_env(env_cfg)
    eval_key = int(_stream(seed, _EVAL_STREAM).integers(0, 2**62))
    scores = []
    for i in range(episodes):
        obs = env.reset(seed=eval_key if i == 0 else None)
        rewards = []
        while not env.done:
            action = greedy_action(policy, obs_norm.normalize(obs))
            result = env.step(float(action[0]))
            rewards.append(result.reward)
            obs = result.observation
        scores.append(episode_score(rewards))
    return float(np.mean(scores))


@dataclass(frozen=True)
class ArmMetrics:
    win_streak_episode: Optional[int]
    average_crossing_episode: Optional[int]
    episodes_run: int
    final_eval: Optional[float] = None


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    coached: ArmMetrics
    uncoached: ArmMetrics


@dataclass
class ExperimentSummary:
    seeds: List[int]
    outcomes: List[SeedOutcome]
    median_reduction_win_streak: Optional[float]
    median_reduction_average: Optional[float]
    sign_test_win_streak: dict
    sign_test_average: dict
    did_not_finish: dict
    avg_window: int
    win_target: float


def reduction_percent(uncoached: float, coached: float) -> float:
    """Relative episode saving of the coached arm, in percent."""
    return 100.0 * (uncoached - coached) / uncoached


def _summarize_metric(pairs):
    """pairs: (coached_episode_or_None, uncoached_episode_or_None) per seed."""
    finished = [(c, u) for c, u in pairs if c is not None and u is not None]
    reductions = [reduction_percent(u, c) for c, u in finished]
    sign = {
        "coached_better": sum(1 for c, u in finished if c < u),
        "uncoached_better": sum(1 for c, u in finished if u < c),
        "ties": sum(1 for c, u in finished if c == u),
    }
    dnf = {
        "coached": sum(1 for c, _ in pairs if c is None),
        "uncoached": sum(1 for _, u in pairs if u is None),
    }
    med = median(reductions) if reductions else None
    return med, sign, dnf, reductions


def summarize_pairs(
    seeds: Sequence[int],
    outcomes: Sequence[SeedOutcome],
    avg_window: int,
    win_target: float,
) -> ExperimentSummary:
    streak_pairs = [(o.coached.win_streak_episode, o.uncoached.win_streak_episode) for o in outcomes]
    avg_pairs = [
        (o.coached.average_crossing_episode, o.uncoached.average_crossing_episode)
        for o in outcomes
    ]
    med_streak, sign_streak, dnf_streak, _ = _summarize_metric(streak_pairs)
    med_avg, sign_avg, dnf_avg, _ = _summarize_metric(avg_pairs)
    return ExperimentSummary(
        seeds=list(seeds),
        outcomes=list(outcomes),
        median_reduction_win_streak=med_streak,
        median_reduction_average=med_avg,
        sign_test_win_streak=sign_streak,
        sign_test_average=sign_avg,
        did_not_finish={
            "win_streak": dnf_streak,
            "average": dnf_avg,
        },
        avg_window=avg_window,
        win_target=win_target,
    )


def arm_metrics(curve: TrainingCurve, stop: StopRule, avg_window: int) -> ArmMetrics:
    scores = curve.agent_scores()
    return ArmMetrics(
        win_streak_episode=win_streak_episode(scores, stop.win_target, stop.win_streak),
        average_crossing_episode=moving_average_crossing(scores, stop.win_target, avg_window),
        episodes_run=len(scores),
    )


def paired_experiment(
    env_cfg: EnvConfig,
    coach_cfg: CoachConfig,
    ppo_cfg: PpoConfig,
    seeds: Sequence[int],
    stop: StopRule,
    avg_window: int,
    config_fingerprint: str = "",
    run_fn=None,
) -> ExperimentSummary:
    """Run coached and uncoached arms on every seed and summarize.

    run_fn allows callers (CLI, tests) to supply precomputed or parallel
    results; it must map (seed, coach_enabled) -> TrainingCurve.
    """
    if len(seeds) < 2:
        raise ValueError("paired_experiment needs at least 2 seeds")

    def default_run(seed: int, enabled: bool) -> TrainingCurve:
        cfg = replace(coach_cfg, enabled=enabled)
        return run_training(env_cfg, cfg, ppo_cfg, seed, stop, config_fingerprint).curve

    runner = run_fn or default_run
    outcomes = []
    for seed in seeds:
        coached_curve = runner(seed, True)
        uncoached_curve = runner(seed, False)
        outcomes.append(
            SeedOutcome(
                seed=seed,
                coached=arm_metrics(coached_curve, stop, avg_window),
                uncoached=arm_metrics(uncoached_curve, stop, avg_window),
            )
        )
    return summarize_pairs(seeds, outcomes, avg_window, stop.win_target)


def run_pid_baseline(env_cfg: EnvConfig, coach_cfg: CoachConfig, episodes: int, seed: int):
    """The controller alone, from episode start, driving the monitored
    quantity to zero. Returns the per-episode scores."""
    from .pid import pid_reset, pid_update

    env = make_env(env_cfg)
    scores = []
    for episode in range(episodes):
        env.reset(seed=seed if episode == 0 else None)
        memory = pid_reset()
        rewards = []
        while not env.done:
            error = getattr(env.state, coach_cfg.monitor)
            force, memory = pid_update(memory, error, env.params.dt, coach_cfg.gains)
            rewards.append(env.step(force).reward)
        scores.append(episode_score(rewards))
    return scores


def write_run_csv(path, curve: TrainingCurve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["episode", "agent_score", "env_score", "steps", "interventions", "interventions_failed"]
        )
        for e in curve.episodes:
            writer.writerow(
                [e.episode, e.agent_score, e.env_score, e.steps, e.intervention_count, e.interventions_failed]
            )


def read_run_csv(path) -> List[EpisodeLog]:
    logs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            logs.append(
                EpisodeLog(
                    episode=int(row["episode"]),
                    agent_score=float(row["agent_score"]),
                    env_score=float(row["env_score"]),
                    steps=int(row["steps"]),
                    intervention_count=int(row["interventions"]),
                    interventions_failed=int(row["interventions_failed"]),
                )
            )
    return logs
