"""Proximal Policy Optimization for continuous control, from scratch in numpy.

Gaussian policy and value function are two-hidden-layer tanh MLPs. The
policy outputs the action mean; a state-independent log-standard-deviation
vector (clamped to [-5, 2]) completes the distribution. Training minimizes
the clipped surrogate objective plus the value MSE minus an entropy bonus,
with Adam updates over shuffled minibatches.

Gradients are computed by hand-written backpropagation and are verified
against central finite differences in the test suite; that check is the
load-bearing numerical property of this module.

Checkpoint format (see save_checkpoint): an ASCII header listing array
names and shapes, followed by the raw little-endian float64 array data
concatenated in header order, row-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)
LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_NORM_CLIP = 10.0

CHECKPOINT_MAGIC = "pidcoach-checkpoint v1"


@dataclass
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    epochs: int = 10
    minibatch: int = 64
    learning_rate: float = 3e-4
    entropy_coef: float = 0.0
    hidden: int = 64
    episodes_per_update: int = 10
    max_grad_norm: float = 0.5
    scale_rewards: bool = True
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must be in [0, 1]")
        if self.clip_eps <= 0.0:
            raise ValueError("clip_eps must be positive")
        if min(self.epochs, self.minibatch, self.hidden, self.episodes_per_update) < 1:
            raise ValueError("epochs, minibatch, hidden and episodes_per_update must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.entropy_coef < 0.0:
            raise ValueError("entropy_coef must be >= 0")
        if self.max_grad_norm < 0.0:
            raise ValueError("max_grad_norm must be >= 0 (0 disables clipping)")


@dataclass
class PolicyParams:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    log_std: np.ndarray


@dataclass
class ValueParams:
    weights: List[np.ndarray]
    biases: List[np.ndarray]


@dataclass
class RolloutBatch:
    """Flattened on-policy data for one update.

    obs are the network inputs as seen at collection time (i.e. already
    normalized); advantages are raw here and normalized inside update().
    """

    obs: np.ndarray
    actions: np.ndarray
    logprobs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return self.obs.shape[0]


def _orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((rows, cols))
    transpose = rows < cols
    if transpose:
        a = a.T
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diagonal(r))
    if transpose:
        q = q.T
    return gain * q


def _init_mlp(sizes: Sequence[int], rng: np.random.Generator, out_gain: float):
    weights, biases = [], []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        gain = out_gain if i == len(sizes) - 2 else math.sqrt(2.0)
        weights.append(_orthogonal(rng, n_in, n_out, gain))
        biases.append(np.zeros(n_out))
    return weights, biases


def init_policy(obs_dim: int, act_dim: int, hidden: int, rng: np.random.Generator) -> PolicyParams:
    """Near-zero-mean policy at init: the output layer is scaled down so
    early exploration comes from the unit standard deviation."""
    weights, biases = _init_mlp((obs_dim, hidden, hidden, act_dim), rng, out_gain=0.01)
    return PolicyParams(weights=weights, biases=biases, log_std=np.zeros(act_dim))


def init_value(obs_dim: int, hidden: int, rng: np.random.Generator) -> ValueParams:
    weights, biases = _init_mlp((obs_dim, hidden, hidden, 1), rng, out_gain=1.0)
    return ValueParams(weights=weights, biases=biases)


def mlp_forward(weights, biases, x: np.ndarray):
    """Tanh MLP forward pass; returns (output, activations) with the
    activation list keeping layer inputs for backprop."""
    acts = [x]
    h = x
    for w, b in zip(weights[:-1], biases[:-1]):
        h = np.tanh(h @ w + b)
        acts.append(h)
    return h @ weights[-1] + biases[-1], acts


def mlp_backward(weights, acts, grad_out: np.ndarray):
    """Backpropagate grad_out (d loss / d output) through the MLP."""
    grad_w = [None] * len(weights)
    grad_b = [None] * len(weights)
    g = grad_out
    for i in reversed(range(len(weights))):
        grad_w[i] = acts[i].T @ g
        grad_b[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ weights[i].T) * (1.0 - acts[i] ** 2)
    return grad_w, grad_b


def gaussian_logprob(mean: np.ndarray, log_std: np.ndarray, action: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density, summed over action dimensions."""
    z = (action - mean) / np.exp(log_std)
    return -0.5 * np.sum(z * z + 2.0 * log_std + LOG_2PI, axis=-1)


def gae(rewards, values, terminal: bool, gamma: float, lam: float) -> np.ndarray:
    """Generalized advantage estimates, computed backward.

    values must hold one bootstrap entry beyond the rewards; when the
    episode ended in a terminal state the bootstrap is taken as zero.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(values) != len(rewards) + 1:
        raise ValueError(
            f"need len(values) == len(rewards)+1, got {len(values)} and {len(rewards)}"
        )
    n = len(rewards)
    advantages = np.empty(n)
    next_value = 0.0 if terminal else values[-1]
    acc = 0.0
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        acc = delta + gamma * lam * acc
        advantages[t] = acc
        next_value = values[t]
    return advantages


def clipped_objective(logprob_new, logprob_old, advantage, clip_eps: float) -> np.ndarray:
    """Per-sample PPO-clip loss: -min(ratio*A, clip(ratio)*A)."""
    ratio = np.exp(np.asarray(logprob_new) - np.asarray(logprob_old))
    advantage = np.asarray(advantage)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    return -np.minimum(ratio * advantage, clipped * advantage)


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    """Batch-normalize to mean 0, std 1; degenerate spread only recenters."""
    mu = advantages.mean()
    sigma = advantages.std()
    if sigma < 1e-8:
        return advantages - mu
    return (advantages - mu) / sigma


class RewardScaler:
    """Scales rewards by the running standard deviation of the discounted
    return, leaving their sign and relative structure intact.

    Purely agent-internal preprocessing for value-target conditioning;
    logged scores always use raw environment rewards.
    """

    def __init__(self, gamma: float):
        self.gamma = gamma
        self._ret = 0.0
        self._mean = 0.0
        self._m2 = 0.0
        self.count = 0.0

    def scale(self, reward: float) -> float:
        self._ret = self.gamma * self._ret + reward
        self.count += 1.0
        delta = self._ret - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (self._ret - self._mean)
        if self.count < 2.0:
            return reward
        std = math.sqrt(self._m2 / self.count)
        return reward / max(std, 1e-8)

    def episode_end(self) -> None:
        self._ret = 0.0


class RunningNorm:
    """Welford running mean/variance used to normalize observations.

    Updated online during training; evaluation freezes it by simply not
    calling update(). Normalized values are clipped to +-10.
    """

    def __init__(self, dim: int):
        self.mean = np.zeros(dim)
        self._m2 = np.zeros(dim)
        self.count = 0.0

    def update(self, x: np.ndarray) -> None:
        self.count += 1.0
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    @property
    def var(self) -> np.ndarray:
        if self.count < 1.0:
            return np.ones_like(self.mean)
        return self._m2 / self.count

    def normalize(self, x: np.ndarray) -> np.ndarray:
        std = np.sqrt(self.var)
        std = np.where(std < 1e-8, 1.0, std)
        return np.clip((x - self.mean) / std, -_NORM_CLIP, _NORM_CLIP)


def act(policy: PolicyParams, obs: np.ndarray, rng: np.random.Generator):
    """Sample an action and its log-probability for one observation."""
    mean, _ = mlp_forward(policy.weights, policy.biases, obs[None, :])
    mean = mean[0]
    std = np.exp(policy.log_std)
    action = mean + std * rng.standard_normal(mean.shape[0])
    return action, float(gaussian_logprob(mean, policy.log_std, action))


def greedy_action(policy: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Evaluation-mode action: the policy mean, no sampling."""
    mean, _ = mlp_forward(policy.weights, policy.biases, obs[None, :])
    return mean[0]


def value_of(value: ValueParams, obs: np.ndarray) -> np.ndarray:
    """Value estimates for a batch of observations, shape (B,)."""
    out, _ = mlp_forward(value.weights, value.biases, obs)
    return out[:, 0]


def param_arrays(policy: PolicyParams, value: ValueParams) -> List[np.ndarray]:
    """Canonical flat ordering of every trainable array (shared by the
    Adam state, the gradient list and the checkpoint layout)."""
    arrays: List[np.ndarray] = []
    for w, b in zip(policy.weights, policy.biases):
        arrays.extend((w, b))
    arrays.append(policy.log_std)
    for w, b in zip(value.weights, value.biases):
        arrays.extend((w, b))
    return arrays


def loss_and_grads(policy, value, obs, actions, logprob_old, advantages, returns, cfg: PpoConfig):
    """Total loss and its gradient w.r.t. every parameter array.

    Returns (loss, grads) with grads ordered like param_arrays().
    """
    batch = obs.shape[0]
    mean, policy_acts = mlp_forward(policy.weights, policy.biases, obs)
    std = np.exp(policy.log_std)
    z = (actions - mean) / std
    logprob_new = -0.5 * np.sum(z * z + 2.0 * policy.log_std + LOG_2PI, axis=1)

    ratio = np.exp(logprob_new - logprob_old)
    surr_raw = ratio * advantages
    surr_clip = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantages
    policy_loss = -np.minimum(surr_raw, surr_clip).mean()

    entropy = float(np.sum(policy.log_std + 0.5 * (1.0 + LOG_2PI)))

    v_out, value_acts = mlp_forward(value.weights, value.biases, obs)
    v = v_out[:, 0]
    value_loss = np.mean((v - returns) ** 2)

    loss = policy_loss + value_loss - cfg.entropy_coef * entropy

    # Where the raw surrogate is the active minimum its derivative w.r.t.
    # the ratio is the advantage; the clipped branch is flat in ratio.
    active = (surr_raw <= surr_clip).astype(float)
    d_logprob = -(advantages * ratio * active) / batch
    grad_mean = d_logprob[:, None] * (z / std)
    grad_log_std = (d_logprob[:, None] * (z * z - 1.0)).sum(axis=0)
    grad_log_std -= cfg.entropy_coef
    gpw, gpb = mlp_backward(policy.weights, policy_acts, grad_mean)

    grad_v = (2.0 / batch) * (v - returns)
    gvw, gvb = mlp_backward(value.weights, value_acts, grad_v[:, None])

    grads: List[np.ndarray] = []
    for w, b in zip(gpw, gpb):
        grads.extend((w, b))
    grads.append(grad_log_std)
    for w, b in zip(gvw, gvb):
        grads.extend((w, b))
    return float(loss), grads


@dataclass
class AdamState:
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, arrays: List[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(a) for a in arrays],
            v=[np.zeros_like(a) for a in arrays],
            t=0,
        )


def clip_grad_norm(grads, max_norm: float) -> None:
    """Scale the gradient list in place so its global L2 norm is at most
    max_norm; max_norm == 0 disables clipping."""
    if max_norm <= 0.0:
        return
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > max_norm:
        factor = max_norm / total
        for g in grads:
            g *= factor


def adam_step(arrays, grads, state: AdamState, cfg: PpoConfig) -> None:
    """One Adam update, in place, with bias correction."""
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    correction1 = 1.0 - b1**state.t
    correction2 = 1.0 - b2**state.t
    for array, grad, m, v in zip(arrays, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        array -= cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.adam_eps)


def update(
    policy: PolicyParams,
    value: ValueParams,
    batch: RolloutBatch,
    cfg: PpoConfig,
    adam: AdamState,
    rng: np.random.Generator,
) -> None:
    """PPO update over the batch: epochs x shuffled minibatches, in place."""
    if len(batch) == 0:
        raise ValueError("empty rollout batch")
    advantages = normalize_advantages(batch.advantages)
    arrays = param_arrays(policy, value)
    n = len(batch)
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.minibatch):
            idx = perm[start : start + cfg.minibatch]
            loss, grads = loss_and_grads(
                policy,
                value,
                batch.obs[idx],
                batch.actions[idx],
                batch.logprobs[idx],
                advantages[idx],
                batch.returns[idx],
                cfg,
            )
            if not math.isfinite(loss):
                raise RuntimeError(
                    f"non-finite PPO loss ({loss}) at adam step {adam.t}; "
                    "training signal diverged"
                )
            clip_grad_norm(grads, cfg.max_grad_norm)
            adam_step(arrays, grads, adam, cfg)
            np.clip(policy.log_std, LOG_STD_MIN, LOG_STD_MAX, out=policy.log_std)


def _checkpoint_entries(policy: PolicyParams, value: ValueParams, obs_norm: RunningNorm):
    entries = []
    for i, (w, b) in enumerate(zip(policy.weights, policy.biases)):
        entries.append((f"policy.w{i}", w))
        entries.append((f"policy.b{i}", b))
    entries.append(("policy.log_std", policy.log_std))
    for i, (w, b) in enumerate(zip(value.weights, value.biases)):
        entries.append((f"value.w{i}", w))
        entries.append((f"value.b{i}", b))
    entries.append(("obs_norm.mean", obs_norm.mean))
    entries.append(("obs_norm.m2", obs_norm._m2))
    entries.append(("obs_norm.count", np.array([obs_norm.count])))
    return entries


def save_checkpoint(path, policy: PolicyParams, value: ValueParams, obs_norm: RunningNorm) -> None:
    """Write parameters to the flat header+binary checkpoint layout.

    Header (ASCII, newline-terminated): the magic line, "arrays=<n>", then
    one "<name> <comma-separated shape>" line per array. Body: each
    array's float64 little-endian bytes, row-major, in header order.
    """
    entries = _checkpoint_entries(policy, value, obs_norm)
    with open(path, "wb") as fh:
        fh.write(f"{CHECKPOINT_MAGIC}\n".encode())
        fh.write(f"arrays={len(entries)}\n".encode())
        for name, array in entries:
            shape = ",".join(str(d) for d in array.shape)
            fh.write(f"{name} {shape}\n".encode())
        for _, array in entries:
            fh.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint.

    Returns (policy, value, obs_norm)."""
    with open(path, "rb") as fh:
        magic = fh.readline().decode().strip()
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a pidcoach checkpoint: {magic!r}")
        count_line = fh.readline().decode().strip()
        if not count_line.startswith("arrays="):
            raise ValueError("malformed checkpoint header")
        n = int(count_line.split("=", 1)[1])
        specs = []
        for _ in range(n):
            name, shape_text = fh.readline().decode().strip().split(" ")
            shape = tuple(int(d) for d in shape_text.split(",")) if shape_text else ()
            specs.append((name, shape))
        arrays = {}
        for name, shape in specs:
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(size * 8), dtype="<f8").astype(float)
            arrays[name] = data.reshape(shape)

    def collect(prefix):
        weights, biases = [], []
        i = 0
        while f"{prefix}.w{i}" in arrays:
            weights.append(arrays[f"{prefix}.w{i}"])
            biases.append(arrays[f"{prefix}.b{i}"])
            i += 1
        return weights, biases

    pw, pb = collect("policy")
    vw, vb = collect("value")
    policy = PolicyParams(weights=pw, biases=pb, log_std=arrays["policy.log_std"])
    value = ValueParams(weights=vw, biases=vb)
    norm = RunningNorm(arrays["obs_norm.mean"].shape[0])
    norm.mean = arrays["obs_norm.mean"]
    norm._m2 = arrays["obs_norm.m2"]
    norm.count = float(arrays["obs_norm.count"][0])
    return policy, value, norm
