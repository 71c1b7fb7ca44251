"""Experiment configuration: one JSON document, validated before anything runs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .estimator import ScoreWeights
from .policies import POLICY_NAMES
from .ppo import PpoConfig
from .seeding import derive_seed
from .workload import WorkloadManifest, bundled_fleet_manifest

BETA_PRESETS = (0.5, 1.0)


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"'{name}' must be an object")
    try:
        return cls.from_dict(data) if hasattr(cls, "from_dict") else cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    fleet: str | None = None  # None selects the bundled fixture fleet
    workload: WorkloadManifest = field(default_factory=WorkloadManifest)
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    policy: str = "rr"
    episodes: int = 100  # evaluation episodes
    out_dir: str = "out"
    seed: int = 0
    checkpoints: dict[str, str] = field(default_factory=dict)  # beta label -> path
    mask_infeasible: bool = False

    KEYS = ("fleet", "workload", "weights", "ppo", "policy", "episodes", "out_dir", "seed",
            "checkpoints", "mask_infeasible")

    @property
    def fleet_path(self) -> Path:
        return Path(self.fleet) if self.fleet else bundled_fleet_manifest()

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)

    def checkpoint_for(self, beta: float) -> Path:
        label = beta_label(beta)
        if label in self.checkpoints:
            return Path(self.checkpoints[label])
        return self.out_path / f"qfor_beta{label}.json"

    def train_config(self, beta: float) -> PpoConfig:
        return replace(self.ppo, seed=derive_seed(self.seed, "train", beta_label(beta)))

    def with_overrides(self, **kw) -> ExperimentConfig:
        kw = {k: v for k, v in kw.items() if v is not None}
        if "beta" in kw:
            kw["weights"] = self.weights.replace(beta=kw.pop("beta"))
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.policy not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {list(POLICY_NAMES)}")
        if self.episodes <= 0:
            raise ConfigError("episodes must be positive")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.fleet_path.is_file():
            raise ConfigError(f"fleet manifest {self.fleet_path} not found")
        if not self.workload.corpus_path.is_dir():
            raise ConfigError(f"corpus directory {self.workload.corpus_path} not found")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(data) - set(cls.KEYS)
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")

        def rel(p):
            if p is None or base_dir is None or Path(p).is_absolute():
                return p
            return str(base_dir / p)

        workload = _section(WorkloadManifest, data.get("workload"), "workload")
        if workload.corpus_dir:
            workload = replace(workload, corpus_dir=rel(workload.corpus_dir))
        weights = data.get("weights")
        try:
            weights = ScoreWeights(**weights) if weights is not None else ScoreWeights()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid 'weights' section: {exc}") from exc
        checkpoints = data.get("checkpoints", {})
        if not isinstance(checkpoints, dict):
            raise ConfigError("'checkpoints' must map beta labels to paths")
        try:
            cfg = cls(
                fleet=rel(data.get("fleet")),
                workload=workload,
                weights=weights,
                ppo=_section(PpoConfig, data.get("ppo"), "ppo"),
                policy=str(data.get("policy", "rr")),
                episodes=int(data.get("episodes", 100)),
                out_dir=data.get("out_dir", "out"),
                seed=int(data.get("seed", 0)),
                checkpoints={beta_label(float(k)): rel(v) for k, v in checkpoints.items()},
                mask_infeasible=bool(data.get("mask_infeasible", False)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "fleet": self.fleet, "workload": self.workload.to_dict(),
            "weights": self.weights.to_dict(), "ppo": self.ppo.to_dict(),
            "policy": self.policy, "episodes": self.episodes, "out_dir": self.out_dir,
            "seed": self.seed, "checkpoints": dict(self.checkpoints),
            "mask_infeasible": self.mask_infeasible,
        }


def beta_label(beta: float) -> str:
    return repr(float(beta))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
    return ExperimentConfig.from_dict(data, base_dir=path.parent)
