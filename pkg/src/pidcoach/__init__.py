"""Controller-based coaching for reinforcement learning on pendulum tasks.

A weak PID controller ("the coach") takes over whenever the agent leaves a
critical-state region, nudges it back, and everything the controller did,
including the rewards it earned, stays invisible to the agent's training
data. The package provides the simulated mechanisms, the environments, the
coach, a from-scratch PPO agent and a benchmarking harness that measures
whether coaching accelerates training.
"""

from .coach import AgentTransition, CoachConfig, InterventionRecord, coached_step, intervene, is_critical
from .dynamics import (
    CartPoleState,
    DoubleCartPoleState,
    MechanismParams,
    cartpole_derivatives,
    double_derivatives,
    double_pendulum_params,
    rk4_step,
    single_pendulum_params,
)
from .environment import (
    DOUBLE_PENDULUM,
    INVERTED_PENDULUM,
    DoublePendulumEnv,
    EnvConfig,
    InvertedPendulumEnv,
    StepResult,
    episode_score,
    make_env,
)
from .harness import (
    EpisodeLog,
    ExperimentSummary,
    StopRule,
    TrainingCurve,
    TrainingRun,
    evaluate,
    moving_average_crossing,
    paired_experiment,
    run_pid_baseline,
    run_training,
    win_streak_episode,
)
from .pid import PidGains, PidMemory, pid_reset, pid_update
from .ppo import (
    PolicyParams,
    PpoConfig,
    RolloutBatch,
    RunningNorm,
    ValueParams,
    act,
    clipped_objective,
    gae,
    gaussian_logprob,
    greedy_action,
    load_checkpoint,
    save_checkpoint,
    update,
)
from .config import ConfigError, ExperimentConfig, parse_config

__version__ = "0.1.0"
