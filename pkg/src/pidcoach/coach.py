"""Controller-based coaching: PID takeover outside the critical region.

The coach watches one physics quantity (pendulum: pole angular velocity;
double pendulum: lower link angle). While |monitored| stays at or below the
boundary the agent explores freely. The step after the agent first pushes
it strictly past the boundary, the PID controller takes over and steps the
environment until the quantity is back at the boundary, a step budget runs
out, or the episode ends.

Everything the controller does is invisible to the agent: the stitched
AgentTransition jumps straight from the pre-step observation to the
post-intervention observation, carries only the agent's own step reward,
and structurally has no field that could encode the intervention. Rewards
earned while the controller drives accumulate in the InterventionRecord as
hidden_reward and never reach a training buffer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pid import PidGains, pid_reset, pid_update

MONITORS = ("theta_dot", "theta1")


@dataclass(frozen=True)
class CoachConfig:
    monitor: str = "theta_dot"
    boundary: float = 0.4
    gains: PidGains = PidGains(3.0, 0.5, 0.1)
    max_intervention_steps: int = 50
    enabled: bool = True

    def __post_init__(self) -> None:
        if not self.boundary > 0.0:
            raise ValueError("boundary must be positive")
        if self.max_intervention_steps < 1:
            raise ValueError("max_intervention_steps must be >= 1")


@dataclass(frozen=True)
class InterventionRecord:
    """Outcome of one maximal run of controller-driven steps."""

    episode: int
    trigger_step: int
    steps_used: int
    success: bool
    hidden_reward: float
    terminal_during: bool


@dataclass(frozen=True)
class AgentTransition:
    """One agent-visible experience tuple.

    Deliberately has no field that could mark an intervention: buffer
    purity is enforced by the type itself.
    """

    obs: np.ndarray
    action: float
    reward: float
    next_obs: np.ndarray
    terminal: bool
    truncated: bool


def monitor_value(state, cfg: CoachConfig) -> float:
    return getattr(state, cfg.monitor)


def is_critical(state, cfg: CoachConfig) -> bool:
    """Strictly past the boundary; sitting exactly on it is still legal."""
    return abs(monitor_value(state, cfg)) > cfg.boundary


def intervene(env, cfg: CoachConfig, *, episode: int = 0, trigger_step: int = 0) -> InterventionRecord:
    """Drive the monitored quantity back to the boundary with the PID.

    The error fed to the controller is the signed distance past the
    boundary, so the setpoint is the boundary itself, not zero. PID memory
    starts fresh for every intervention. All env rewards earned here are
    tallied as hidden_reward; the env step counter advances normally, so
    interventions consume episode budget.
    """
    if not is_critical(env.state, cfg):
        raise RuntimeError("intervene() called while the state is not critical")
    memory = pid_reset()
    dt = env.params.dt
    hidden_reward = 0.0
    steps_used = 0
    success = False
    terminal_during = False
    while steps_used < cfg.max_intervention_steps:
        value = monitor_value(env.state, cfg)
        error = value - math.copysign(cfg.boundary, value)
        force, memory = pid_update(memory, error, dt, cfg.gains)
        result = env.step(force)
        hidden_reward += result.reward
        steps_used += 1
        if result.terminal or result.truncated:
            terminal_during = True
            break
        if not is_critical(env.state, cfg):
            success = True
            break
    return InterventionRecord(
        episode=episode,
        trigger_step=trigger_step,
        steps_used=steps_used,
        success=success,
        hidden_reward=hidden_reward,
        terminal_during=terminal_during,
    )


def coached_step(
    env, action: float, cfg: CoachConfig, *, episode: int = 0, step: int = 0
) -> tuple[AgentTransition, InterventionRecord | None]:
    """Apply the agent's action; let the coach clean up if it lands critically.

    Returns the agent-visible transition and the intervention record, if
    any. With the coach disabled (or the state non-critical) this is a
    plain env step and next_obs is the raw post-action observation,
    bit for bit.
    """
    obs_before = env.observe()
    result = env.step(action)
    record = None
    terminal = result.terminal
    truncated = result.truncated
    next_obs = result.observation
    if cfg.enabled and not terminal and not truncated and is_critical(env.state, cfg):
        record = intervene(env, cfg, episode=episode, trigger_step=step)
        terminal = env.terminated
        truncated = env.truncated
        next_obs = env.observe()
    transition = AgentTransition(
        obs=obs_before,
        action=float(action),
        reward=result.reward,
        next_obs=next_obs,
        terminal=terminal,
        truncated=truncated,
    )
    return transition, record
