"""Proximal policy optimisation over the scheduling environment.

Separate policy and value networks; clipped surrogate with an entropy bonus and
a fixed-coefficient KL(old || new) penalty; GAE advantages standardised per batch.
"""
from __future__ import annotations

import json
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorruptFile, NonFiniteGradient, ShapeMismatch, VersionMismatch
from .nn import MlpParams, backward, forward, init_mlp, log_softmax, make_optimizer, softmax
from .seeding import derive_seed

CHECKPOINT_FORMAT = "fidsched-policy"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PpoConfig:
    learning_rate: float = 1e-4
    value_learning_rate: float = 1e-3
    gamma: float = 0.9
    gae_lambda: float = 0.95
    clip: float = 0.3
    entropy_coef: float = 0.01
    kl_coef: float = 1.0
    train_batch: int = 180
    minibatch_size: int = 60
    epochs: int = 10
    workers: int = 4
    iterations: int | None = None  # None: run until ``episodes`` training episodes finish
    episodes: int = 800
    hidden: tuple[int, ...] = (64, 64)
    optimizer: str = "adam"
    parallel: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError("gae_lambda must be in [0, 1]")
        if not self.clip > 0:
            raise ValueError("clip must be positive")
        if self.learning_rate < 0 or self.value_learning_rate < 0:
            raise ValueError("learning rates must be non-negative")
        if min(self.entropy_coef, self.kl_coef) < 0:
            raise ValueError("entropy_coef and kl_coef must be non-negative")
        if self.minibatch_size <= 0 or self.train_batch % self.minibatch_size:
            raise ValueError("train_batch must be divisible by minibatch_size")
        if self.workers <= 0 or self.train_batch % self.workers:
            raise ValueError("train_batch must be divisible by workers")
        if self.epochs <= 0 or self.episodes <= 0:
            raise ValueError("epochs and episodes must be positive")
        if self.iterations is not None and self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if not self.hidden or min(self.hidden) <= 0:
            raise ValueError("hidden sizes must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> PpoConfig:
        extra = set(data) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown ppo fields: {sorted(extra)}")
        return cls(**data)


# ---------------------------------------------------------------------------
# distributions and advantages

def policy_forward(params: MlpParams, obs: np.ndarray) -> np.ndarray:
    """Action probabilities for one observation (1-D) or a batch (2-D)."""
    obs = np.asarray(obs, dtype=float)
    if obs.ndim not in (1, 2):
        raise ShapeMismatch(f"observation must be 1-D or 2-D, got shape {obs.shape}")
    logits, _ = forward(params, obs)
    return softmax(logits)


def value_forward(params: MlpParams, obs: np.ndarray) -> np.ndarray:
    out, _ = forward(params, obs)
    return out[..., 0]


def entropy(probs: np.ndarray) -> np.ndarray:
    return -np.sum(probs * np.log(np.maximum(probs, 1e-300)), axis=-1)


def compute_gae(rewards, values, dones, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and returns for one contiguous segment.

    ``values`` has one more entry than ``rewards``: the bootstrap value of the
    state after the last step (ignored when that step ended an episode).
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    T = len(rewards)
    if values.shape != (T + 1,) or dones.shape != (T,):
        raise ShapeMismatch("values must have len(rewards)+1 entries and dones len(rewards)")
    adv = np.zeros(T)
    running = 0.0
    for t in range(T - 1, -1, -1):
        live = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * values[t + 1] * live - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
    return adv, adv + values[:T]


@dataclass
class Trajectory:
    obs: list[np.ndarray] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    dones: list[bool] = field(default_factory=list)
    bootstrap: float = 0.0
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.rewards)

    def add(self, obs, action, reward, log_prob, value, done):
        self.obs.append(obs)
        self.actions.append(action)
        self.rewards.append(reward)
        self.log_probs.append(log_prob)
        self.values.append(value)
        self.dones.append(done)

    def finish(self, gamma: float, lam: float) -> None:
        self.advantages, self.returns = compute_gae(
            self.rewards, self.values + [self.bootstrap], self.dones, gamma, lam)


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    old_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    def subset(self, idx) -> Batch:
        return Batch(self.obs[idx], self.actions[idx], self.log_probs[idx], self.old_probs[idx],
                     self.advantages[idx], self.returns[idx])


def make_batch(trajs: list[Trajectory], old_params: MlpParams, standardize: bool = True) -> Batch:
    obs = np.asarray([o for t in trajs for o in t.obs], dtype=float)
    adv = np.concatenate([t.advantages for t in trajs])
    if standardize and len(adv) > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return Batch(obs=obs,
                 actions=np.asarray([a for t in trajs for a in t.actions], dtype=int),
                 log_probs=np.asarray([lp for t in trajs for lp in t.log_probs]),
                 old_probs=policy_forward(old_params, obs),
                 advantages=adv,
                 returns=np.concatenate([t.returns for t in trajs]))


# ---------------------------------------------------------------------------
# losses and gradients

@dataclass
class LossInfo:
    loss: float
    surrogate: float
    entropy: float
    kl: float
    clip_fraction: float


def policy_loss_and_grad(params: MlpParams, batch: Batch, cfg: PpoConfig) -> tuple[LossInfo, MlpParams]:
    """Total policy loss ``-(L_clip + c_ent * H - kl_coef * KL)`` averaged over the batch."""
    logits, acts = forward(params, batch.obs)
    logp_all = log_softmax(logits)
    p = np.exp(logp_all)
    n, m = p.shape
    rows = np.arange(n)
    logp = logp_all[rows, batch.actions]
    ratio = np.exp(logp - batch.log_probs)
    A = batch.advantages
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    unclipped_term = ratio * A
    clipped_term = clipped * A
    surr = np.minimum(unclipped_term, clipped_term)
    H = -np.sum(p * logp_all, axis=1)
    old = batch.old_probs
    kl = np.sum(old * (np.log(np.maximum(old, 1e-300)) - logp_all), axis=1)
    loss = -surr.mean() - cfg.entropy_coef * H.mean() + cfg.kl_coef * kl.mean()

    onehot = np.zeros_like(p)
    onehot[rows, batch.actions] = 1.0
    # the min picks the unclipped branch whenever it is not larger; written so NaN propagates
    dS_dr = np.where(unclipped_term > clipped_term, 0.0, A)
    dS = (dS_dr * ratio)[:, None] * (onehot - p)
    dH = -p * (logp_all + H[:, None])
    dKL = p - old
    dlogits = (-dS - cfg.entropy_coef * dH + cfg.kl_coef * dKL) / n
    grads = backward(params, acts, dlogits)
    frac = float(np.mean(np.abs(ratio - 1.0) > cfg.clip))
    return LossInfo(float(loss), float(surr.mean()), float(H.mean()), float(kl.mean()), frac), grads


def value_loss_and_grad(params: MlpParams, obs: np.ndarray, returns: np.ndarray) -> tuple[float, MlpParams]:
    """Half mean squared error of the value head."""
    out, acts = forward(params, obs)
    err = out[:, 0] - returns
    loss = 0.5 * float(np.mean(err * err))
    grads = backward(params, acts, (err / len(err))[:, None])
    return loss, grads


def _check_finite(grads: MlpParams, what: str, info) -> None:
    if not grads.is_finite():
        raise NonFiniteGradient(f"non-finite {what} gradient; last stats: {info}")


@dataclass
class TrainStats:
    policy_loss: float = 0.0
    value_loss: float = 0.0
    entropy: float = 0.0
    kl: float = 0.0
    clip_fraction: float = 0.0


class PpoLearner:
    """Owns both networks and their optimisers; the only writer of parameters."""

    def __init__(self, obs_dim: int, n_actions: int, cfg: PpoConfig,
                 policy: MlpParams | None = None, value: MlpParams | None = None):
        self.cfg = cfg
        rng = np.random.default_rng(derive_seed(cfg.seed, "init"))
        self.policy = policy or init_mlp((obs_dim, *cfg.hidden, n_actions), rng, out_scale=0.01)
        self.value = value or init_mlp((obs_dim, *cfg.hidden, 1), rng, out_scale=1.0)
        self.pi_opt = make_optimizer(cfg.optimizer, self.policy, cfg.learning_rate)
        self.v_opt = make_optimizer(cfg.optimizer, self.value, cfg.value_learning_rate)
        self.rng = np.random.default_rng(derive_seed(cfg.seed, "minibatch"))

    def update(self, batch: Batch) -> TrainStats:
        cfg = self.cfg
        n = len(batch)
        infos, vlosses = [], []
        for _ in range(cfg.epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                mb = batch.subset(order[start:start + cfg.minibatch_size])
                info, g = policy_loss_and_grad(self.policy, mb, cfg)
                _check_finite(g, "policy", info)
                vl, gv = value_loss_and_grad(self.value, mb.obs, mb.returns)
                _check_finite(gv, "value", vl)
                self.pi_opt.step(self.policy, g)
                self.v_opt.step(self.value, gv)
                infos.append(info)
                vlosses.append(vl)
        # report divergence from the pre-update policy on the whole batch
        final, _ = policy_loss_and_grad(self.policy, batch, cfg)
        return TrainStats(policy_loss=float(np.mean([i.loss for i in infos])),
                          value_loss=float(np.mean(vlosses)),
                          entropy=final.entropy, kl=final.kl, clip_fraction=final.clip_fraction)


def ppo_update(policy: MlpParams, value: MlpParams, batch: Batch, cfg: PpoConfig) -> tuple[MlpParams, MlpParams, TrainStats]:
    """One PPO update with fresh optimiser state; returns updated copies."""
    learner = PpoLearner(policy.weights[0].shape[0], policy.weights[-1].shape[1], cfg,
                         policy.copy(), value.copy())
    stats = learner.update(batch)
    return learner.policy, learner.value, stats


# ---------------------------------------------------------------------------
# rollouts and training

class Worker:
    """One environment plus its own sampling stream; episodes run on across iterations."""

    def __init__(self, env, index: int, seed: int):
        self.env = env
        self.index = index
        self.seed = seed
        self.rng = np.random.default_rng(derive_seed(seed, "worker", index, "actions"))
        self.episode = 0
        self.obs = None
        self.ep_rewards: list[float] = []

    def _reset(self):
        self.obs = self.env.reset(derive_seed(self.seed, "worker", self.index, "episode", self.episode))
        self.ep_rewards = []

    def collect(self, policy: MlpParams, value: MlpParams, steps: int) -> tuple[Trajectory, list[float]]:
        """Run ``steps`` transitions; returns the segment and per-step mean reward of finished episodes."""
        if self.obs is None:
            self._reset()
        traj = Trajectory()
        finished = []
        for _ in range(steps):
            probs = policy_forward(policy, self.obs)
            a = int(self.rng.choice(len(probs), p=probs))
            v = float(value_forward(value, self.obs))
            out = self.env.step(a)
            traj.add(self.obs, a, out.reward, math.log(probs[a]), v, out.done)
            self.ep_rewards.append(out.reward)
            if out.done:
                finished.append(float(np.mean(self.ep_rewards)))
                self.episode += 1
                self._reset()
            else:
                self.obs = out.observation
        traj.bootstrap = 0.0 if traj.dones[-1] else float(value_forward(value, self.obs))
        return traj, finished


LOG_COLUMNS = ("iteration", "episode", "mean_reward", "entropy", "kl", "clip_fraction")


@dataclass
class TrainResult:
    policy: MlpParams
    value: MlpParams
    log: list[dict]
    iterations: int

    @property
    def episode_rewards(self) -> list[float]:
        return [row["mean_reward"] for row in self.log]


def train(env_factory: Callable[[int], object], cfg: PpoConfig,
          progress: Callable[[int, int, TrainStats], None] | None = None) -> TrainResult:
    """Collect ``train_batch`` steps across ``workers`` envs, then update; repeat.

    ``env_factory(i)`` must return an independent environment for worker ``i``.
    Stops after ``cfg.iterations`` iterations, or once ``cfg.episodes`` episodes
    have finished when ``iterations`` is None.
    """
    workers = [Worker(env_factory(i), i, cfg.seed) for i in range(cfg.workers)]
    env0 = workers[0].env
    learner = PpoLearner(env0.observation_size, env0.num_nodes, cfg)
    per_worker = cfg.train_batch // cfg.workers
    log: list[dict] = []
    pool = ThreadPoolExecutor(cfg.workers) if cfg.parallel and cfg.workers > 1 else None
    it = 0
    try:
        while True:
            snapshot_pi, snapshot_v = learner.policy.copy(), learner.value.copy()
            if pool:
                results = list(pool.map(lambda w: w.collect(snapshot_pi, snapshot_v, per_worker), workers))
            else:
                results = [w.collect(snapshot_pi, snapshot_v, per_worker) for w in workers]
            trajs = [r[0] for r in results]
            for t in trajs:
                t.finish(cfg.gamma, cfg.gae_lambda)
            stats = learner.update(make_batch(trajs, snapshot_pi))
            it += 1
            for _, finished in results:
                for r in finished:
                    log.append({"iteration": it, "episode": len(log) + 1, "mean_reward": r,
                                "entropy": stats.entropy, "kl": stats.kl,
                                "clip_fraction": stats.clip_fraction})
            if progress:
                progress(it, len(log), stats)
            if cfg.iterations is not None:
                if it >= cfg.iterations:
                    break
            elif len(log) >= cfg.episodes:
                del log[cfg.episodes:]
                break
    finally:
        if pool:
            pool.shutdown()
    return TrainResult(learner.policy, learner.value, log, it)


# ---------------------------------------------------------------------------
# checkpoints

def _params_to_json(p: MlpParams) -> dict:
    return {"weights": [w.tolist() for w in p.weights], "biases": [b.tolist() for b in p.biases]}


def _params_from_json(d: dict) -> MlpParams:
    ws = [np.asarray(w, dtype=float) for w in d["weights"]]
    bs = [np.asarray(b, dtype=float) for b in d["biases"]]
    if len(ws) != len(bs) or any(w.ndim != 2 for w in ws):
        raise CorruptFile("malformed weight arrays")
    for k, (w, b) in enumerate(zip(ws, bs)):
        if b.shape != (w.shape[1],) or (k and ws[k - 1].shape[1] != w.shape[0]):
            raise CorruptFile("inconsistent layer shapes")
    p = MlpParams(ws, bs)
    if not p.is_finite():
        raise CorruptFile("non-finite weights")
    return p


@dataclass
class Checkpoint:
    policy: MlpParams
    value: MlpParams | None
    config: dict
    meta: dict


def save_policy(path, policy: MlpParams, *, value: MlpParams | None = None,
                config: PpoConfig | None = None, meta: dict | None = None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "obs_dim": policy.sizes[0],
        "n_actions": policy.sizes[-1],
        "hidden": list(policy.sizes[1:-1]),
        "config": config.to_dict() if config else {},
        "meta": meta or {},
        "policy": _params_to_json(policy),
        "value": _params_to_json(value) if value is not None else None,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_policy(path, *, n_actions: int | None = None, obs_dim: int | None = None) -> Checkpoint:
    """Load a checkpoint, checking it against the expected fleet size and observation width."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: not a valid checkpoint ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CorruptFile(f"{path}: not a policy checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise VersionMismatch(f"{path}: checkpoint version {doc.get('version')}, "
                              f"expected {CHECKPOINT_VERSION}")
    try:
        policy = _params_from_json(doc["policy"])
        value = _params_from_json(doc["value"]) if doc.get("value") is not None else None
        sizes = (doc["obs_dim"], *doc["hidden"], doc["n_actions"])
        config, meta = doc["config"], doc["meta"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: missing or malformed field ({exc})") from exc
    if policy.sizes != tuple(sizes):
        raise CorruptFile(f"{path}: header sizes {sizes} disagree with weights {policy.sizes}")
    if n_actions is not None and policy.sizes[-1] != n_actions:
        raise VersionMismatch(f"{path}: policy has {policy.sizes[-1]} actions, fleet has {n_actions} nodes")
    if obs_dim is not None and policy.sizes[0] != obs_dim:
        raise VersionMismatch(f"{path}: policy expects {policy.sizes[0]} inputs, environment gives {obs_dim}")
    return Checkpoint(policy, value, config, meta)
