#!/usr/bin/env python3
"""Train a coached agent on the inverted pendulum, end to end.

Takes a couple of minutes on one CPU core. Prints training milestones, the
win-streak episode, then evaluates the frozen policy with the coach off and
compares it against the standalone PID controller it was coached by.
"""

from statistics import mean

from pidcoach import (
    CoachConfig,
    EnvConfig,
    PpoConfig,
    StopRule,
    evaluate,
    run_pid_baseline,
    run_training,
    win_streak_episode,
)

env_cfg = EnvConfig("inverted_pendulum")
coach = CoachConfig(monitor="theta_dot", boundary=0.4)
ppo = PpoConfig(scale_rewards=False, max_grad_norm=0.0)
stop = StopRule(win_target=800, win_streak=5, episode_cap=600)

print("training (coach on, seed 0)...")
run = run_training(env_cfg, coach, ppo, seed=0, stop=stop)
scores = run.curve.agent_scores()
for lo in range(0, len(scores), 25):
    chunk = scores[lo : lo + 25]
    print(f"  episodes {lo + 1:3d}-{lo + len(chunk):3d}: mean score {mean(chunk):7.1f}")

streak = win_streak_episode(scores, stop.win_target, stop.win_streak)
interventions = sum(e.intervention_count for e in run.curve.episodes)
print(f"\nfive consecutive wins at episode {streak}")
print(f"the coach intervened {interventions} times; every one is absent from the training data")

eval_mean = evaluate(run.policy, run.obs_norm, env_cfg, episodes=10, seed=0)
pid_mean = mean(run_pid_baseline(env_cfg, coach, episodes=10, seed=0))
print(f"\ncoach-free evaluation of the trained agent: {eval_mean:.0f} / 1000")
print(f"the PID coach alone, for comparison:        {pid_mean:.0f} / 1000")
print("a barely functioning controller still accelerated the agent that outgrew it")
