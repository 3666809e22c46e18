"""Episode semantics over the dynamics kernels.

Gym-flavored environments: seeded resets near the upright equilibrium,
one RK4 step per control decision, per-step rewards, angle/height-based
termination and a hard 1000-step truncation cap.

An environment instance is single-owner and sequential; independent
instances never share state, so experiments parallelize across instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    CartPoleState,
    DoubleCartPoleState,
    MechanismParams,
    double_pendulum_params,
    rk4_step,
    single_pendulum_params,
)

INVERTED_PENDULUM = "inverted_pendulum"
DOUBLE_PENDULUM = "double_pendulum"

ENV_IDS = (INVERTED_PENDULUM, DOUBLE_PENDULUM)


@dataclass(frozen=True)
class EnvConfig:
    """Episode-level knobs; reward constants only apply to the double pendulum."""

    env_id: str = INVERTED_PENDULUM
    max_steps: int = 1000
    init_noise: float = 0.01
    alive_bonus: float = 10.0
    x_vel_penalty: float = 0.01
    ang_vel_penalty: float = 0.05

    def __post_init__(self) -> None:
        if self.env_id not in ENV_IDS:
            raise ValueError(f"env_id must be one of {ENV_IDS}, got {self.env_id!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not math.isfinite(self.init_noise) or self.init_noise < 0.0:
            raise ValueError("init_noise must be finite and >= 0")


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    terminal: bool
    truncated: bool


def _philox(seed: int) -> np.random.Generator:
    # Counter-based PRNG so every seed keys an independent stream.
    return np.random.Generator(np.random.Philox(key=seed))


class _CartEnvBase:
    """Shared reset/step machinery; subclasses define observation,
    reward and the terminal predicate."""

    obs_dim: int
    state_cls: type

    def __init__(self, cfg: EnvConfig, params: MechanismParams):
        self.cfg = cfg
        self.params = params
        self._rng = _philox(0)
        self._state = None
        self.steps = 0
        self.episode_return = 0.0
        self._done = True
        self._terminated = False
        self._truncated = False

    @property
    def state(self):
        return self._state

    @property
    def done(self) -> bool:
        return self._done

    @property
    def terminated(self) -> bool:
        return self._terminated

    @property
    def truncated(self) -> bool:
        return self._truncated

    def set_state(self, state) -> np.ndarray:
        """Overwrite the physics state mid-episode (testing and demos)."""
        if self._done:
            raise RuntimeError("cannot set state on a finished episode")
        if not isinstance(state, self.state_cls):
            raise TypeError(f"expected {self.state_cls.__name__}")
        self._state = state
        return self.observe()

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Start a new episode near upright; a given seed re-keys the PRNG,
        None continues the current stream."""
        if seed is not None:
            self._rng = _philox(seed)
        n = len(self.state_cls._fields)
        noise = self._rng.uniform(-self.cfg.init_noise, self.cfg.init_noise, size=n)
        self._state = self.state_cls(*(float(v) for v in noise))
        self.steps = 0
        self.episode_return = 0.0
        self._done = False
        self._terminated = False
        self._truncated = False
        return self.observe()

    def step(self, action: float) -> StepResult:
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        if not math.isfinite(action):
            raise ValueError("non-finite action")
        limit = self.params.force_limit
        force = min(max(float(action), -limit), limit)
        self._state = rk4_step(self._state, force, self.params)
        self.steps += 1
        terminal = self._terminal(self._state)
        reward = 0.0 if terminal else self._reward(self._state)
        truncated = not terminal and self.steps >= self.cfg.max_steps
        self._terminated = terminal
        self._truncated = truncated
        self._done = terminal or truncated
        self.episode_return += reward
        return StepResult(self.observe(), reward, terminal, truncated)

    def observe(self) -> np.ndarray:
        raise NotImplementedError

    def _reward(self, state) -> float:
        raise NotImplementedError

    def _terminal(self, state) -> bool:
        raise NotImplementedError


class InvertedPendulumEnv(_CartEnvBase):
    """Single pole on a cart: 1 per surviving step, dead past |theta| > 0.2 rad."""

    obs_dim = 4
    state_cls = CartPoleState
    terminal_angle = 0.2

    def __init__(self, cfg: EnvConfig | None = None, params: MechanismParams | None = None):
        super().__init__(cfg or EnvConfig(INVERTED_PENDULUM), params or single_pendulum_params())

    def observe(self) -> np.ndarray:
        s = self._state
        return np.array([s.x, s.x_dot, s.theta, s.theta_dot])

    def _reward(self, state) -> float:
        return 1.0

    def _terminal(self, state) -> bool:
        return abs(state.theta) > self.terminal_angle


class DoublePendulumEnv(_CartEnvBase):
    """Double pole on a cart: ~10 per surviving step minus velocity penalties,
    dead once the tip drops below 1 m above the cart pivot."""

    obs_dim = 11
    state_cls = DoubleCartPoleState
    terminal_tip_height = 1.0

    def __init__(self, cfg: EnvConfig | None = None, params: MechanismParams | None = None):
        super().__init__(cfg or EnvConfig(DOUBLE_PENDULUM), params or double_pendulum_params())

    def observe(self) -> np.ndarray:
        s = self._state
        # Constraint-force slots are fixed at zero: these dynamics do not
        # compute them, but the 11-dim layout is kept.
        return np.array(
            [
                s.x,
                math.sin(s.theta1),
                math.sin(s.theta2),
                math.cos(s.theta1),
                math.cos(s.theta2),
                s.x_dot,
                s.theta1_dot,
                s.theta2_dot,
                0.0,
                0.0,
                0.0,
            ]
        )

    def tip_height(self, state=None) -> float:
        s = state if state is not None else self._state
        l1, l2 = self.params.pole_lengths
        return l1 * math.cos(s.theta1) + l2 * math.cos(s.theta2)

    def _reward(self, state) -> float:
        return (
            self.cfg.alive_bonus
            - self.cfg.x_vel_penalty * state.x_dot**2
            - self.cfg.ang_vel_penalty * (state.theta1_dot**2 + state.theta2_dot**2)
        )

    def _terminal(self, state) -> bool:
        return self.tip_height(state) < self.terminal_tip_height


def make_env(cfg: EnvConfig, params: MechanismParams | None = None) -> _CartEnvBase:
    if cfg.env_id == INVERTED_PENDULUM:
        return InvertedPendulumEnv(cfg, params)
    return DoublePendulumEnv(cfg, params)


def episode_score(rewards) -> float:
    """Episode score: plain sum of its rewards."""
    return float(sum(rewards))
