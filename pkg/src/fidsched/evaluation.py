"""Policy evaluation over seeded episodes and CSV summaries."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .env import QCloudEnv, TraceWriter
from .policies import DecisionContext, Policy
from .seeding import derive_seed

METRICS = ("fidelity_score", "t_exec", "t_total", "failures", "reward")
EPISODE_COLUMNS = ("episode",) + METRICS


@dataclass(frozen=True)
class EpisodeMetrics:
    episode: int
    fidelity_score: float  # mean over successful steps
    t_exec: float
    t_total: float
    failures: int
    reward: float  # mean over all steps

    def row(self) -> list:
        return [self.episode, repr(self.fidelity_score), repr(self.t_exec), repr(self.t_total),
                self.failures, repr(self.reward)]


def eval_seeds(master: int, episodes: int) -> list[int]:
    """Workload seeds shared by every policy, so comparisons are paired."""
    return [derive_seed(master, "eval", k) for k in range(episodes)]


def _mean(xs) -> float:
    return float(np.mean(xs)) if xs else math.nan


def run_episode(env: QCloudEnv, policy: Policy, seed: int, episode: int = 0,
                trace: TraceWriter | None = None) -> EpisodeMetrics:
    obs = env.reset(seed)
    policy.reset()
    fid, tex, ttot, rew = [], [], [], []
    failures = 0
    step = 0
    while not env.done:
        action = policy.act(obs, DecisionContext.from_env(env))
        out = env.step(action)
        b = out.info["breakdown"]
        if trace is not None:
            trace.write(episode, step, out.info)
        rew.append(b.reward)
        if b.success:
            fid.append(b.fidelity_score)
            tex.append(b.t_exec)
            ttot.append(b.t_total)
        else:
            failures += 1
        obs = out.observation
        step += 1
    return EpisodeMetrics(episode, _mean(fid), _mean(tex), _mean(ttot), failures, _mean(rew))


def evaluate(env: QCloudEnv, policy: Policy, seeds, trace: TraceWriter | None = None) -> list[EpisodeMetrics]:
    return [run_episode(env, policy, s, k, trace) for k, s in enumerate(seeds)]


def summarize(episodes: list[EpisodeMetrics]) -> dict[str, tuple[float, float]]:
    """Mean and population std of each metric over episode means."""
    out = {}
    for m in METRICS:
        vals = np.asarray([getattr(e, m) for e in episodes], dtype=float)
        out[m] = (float(vals.mean()), float(vals.std()))
    return out


def format_summary(summary: dict[str, tuple[float, float]]) -> list[str]:
    return [f"{summary[m][0]!r}±{summary[m][1]!r}" for m in METRICS]


def write_episode_csv(path, episodes: list[EpisodeMetrics]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPISODE_COLUMNS)
        for e in episodes:
            w.writerow(e.row())
        w.writerow(["mean±std"] + format_summary(summarize(episodes)))
