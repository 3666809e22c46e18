#!/usr/bin/env python3
"""A clumsy scripted "novice" with and without the coach.

The novice is an overeager proportional controller plus noise: it rights
the pole but overshoots, so the angular velocity keeps spiking past the
0.4 rad/s boundary. With the coach on, the PID takes over at each spike
and walks the velocity back; the novice never finds out. The trace of the
first episode shows every intervention; the table at the end aggregates
twenty paired episodes.

Rescues are not guaranteed: once the pole is falling outright, damping the
velocity back to the boundary only postpones the end. The value of
coaching is statistical, which is exactly what the training benchmarks in
this package measure.
"""

import numpy as np

from pidcoach import CoachConfig, EnvConfig, coached_step, make_env

BOUNDARY = 0.4


def novice_episode(seed, enabled, verbose=False):
    env = make_env(EnvConfig("inverted_pendulum"))
    coach = CoachConfig(monitor="theta_dot", boundary=BOUNDARY, enabled=enabled)
    env.reset(seed=seed)
    rng = np.random.Generator(np.random.Philox(key=seed))
    visible = hidden = 0.0
    rescued = failed = decisions = 0
    while not env.done:
        action = 40.0 * env.state.theta + float(rng.normal(0.0, 1.5))
        transition, record = coached_step(env, action, coach, episode=seed, step=decisions)
        decisions += 1
        visible += transition.reward
        if record is not None:
            hidden += record.hidden_reward
            rescued += record.success
            failed += not record.success
            if verbose:
                outcome = "rescued" if record.success else "lost anyway"
                print(
                    f"  decision {record.trigger_step:3d}: coach drove {record.steps_used:2d} "
                    f"steps, {outcome}, hid {record.hidden_reward:.0f} reward"
                )
    return decisions, env.steps, visible, hidden, rescued, failed


print("First coached episode, blow by blow:")
novice_episode(seed=11, enabled=True, verbose=True)

print("\nTwenty paired episodes, same novice, same seeds:")
print(f"  {'':10} {'env steps':>10} {'agent sees':>11} {'hidden':>7} {'rescued':>8}")
for enabled, label in ((False, "coach off"), (True, "coach on")):
    steps = visible = hidden = rescued = 0
    for seed in range(20):
        _, ep_steps, ep_visible, ep_hidden, ep_rescued, _ = novice_episode(seed, enabled)
        steps += ep_steps
        visible += ep_visible
        hidden += ep_hidden
        rescued += ep_rescued
    print(f"  {label:10} {steps / 20:10.1f} {visible / 20:11.1f} {hidden / 20:7.1f} {rescued:8d}")

print("\nEvery hidden step and reward above is invisible to the novice's")
print("training data; its transitions stitch straight across interventions.")
