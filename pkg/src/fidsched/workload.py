"""Task workloads: a QASM corpus sampled with Poisson arrivals."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .circuit import Circuit, CircuitFeatures, extract_features, load_qasm
from .errors import CircuitError, EmptyCorpus

DEFAULT_SHOTS = (1024, 2048, 4096, 8192)
DEFAULT_ARRIVAL_RATE = 20.0


def bundled_corpus_dir() -> Path:
    return Path(str(resources.files("fidsched") / "data" / "corpus"))


def bundled_fleet_manifest() -> Path:
    return Path(str(resources.files("fidsched") / "data" / "fixtures" / "fleet.json"))


@dataclass(frozen=True)
class QTask:
    id: int
    arrival: float
    circuit: Circuit
    features: CircuitFeatures
    shots: int

    @property
    def key(self) -> str:
        return self.circuit.source_name


@dataclass(frozen=True)
class WorkloadManifest:
    corpus_dir: str | None = None  # None selects the bundled corpus
    n_tasks: int = 60
    arrival_rate: float = DEFAULT_ARRIVAL_RATE
    shots_choices: tuple[int, ...] = DEFAULT_SHOTS
    seed: int = 0
    D_corpus_max: int | None = None
    G_corpus_max: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "shots_choices", tuple(int(s) for s in self.shots_choices))
        if self.n_tasks <= 0:
            raise ValueError("n_tasks must be positive")
        if not self.arrival_rate > 0:
            raise ValueError("arrival_rate must be positive")
        if not self.shots_choices or min(self.shots_choices) <= 0:
            raise ValueError("shots_choices must hold positive counts")

    @property
    def corpus_path(self) -> Path:
        return Path(self.corpus_dir) if self.corpus_dir else bundled_corpus_dir()

    def with_seed(self, seed: int) -> WorkloadManifest:
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shots_choices"] = list(self.shots_choices)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> WorkloadManifest:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown workload fields: {sorted(extra)}")
        return cls(**data)


@lru_cache(maxsize=16)
def _load_corpus(path: str) -> tuple[Circuit, ...]:
    files = sorted(Path(path).glob("*.qasm"))
    circuits = []
    for f in files:
        try:
            circuits.append(load_qasm(f))
        except CircuitError as exc:
            raise CircuitError(f"{f.name}: {exc}") from exc
    if not circuits:
        raise EmptyCorpus(f"no .qasm files in {path}")
    return tuple(circuits)


def load_corpus(corpus_dir=None) -> tuple[Circuit, ...]:
    """Parse every ``*.qasm`` file in the directory, sorted by file name."""
    path = Path(corpus_dir) if corpus_dir else bundled_corpus_dir()
    if not path.is_dir():
        raise EmptyCorpus(f"corpus directory {path} does not exist")
    return _load_corpus(str(path.resolve()))


def corpus_stats(circuits) -> dict:
    feats = [extract_features(c) for c in circuits]
    return {
        "D_corpus_max": max(f.depth for f in feats),
        "G_corpus_max": max(f.g1 + f.g2 for f in feats),
        "Q_corpus_max": max(f.num_qubits for f in feats),
    }


def generate_workload(manifest: WorkloadManifest) -> list[QTask]:
    """Sample ``n_tasks`` circuits with replacement; exponential inter-arrival gaps."""
    corpus = load_corpus(manifest.corpus_dir)
    feats = [extract_features(c) for c in corpus]
    rng = np.random.default_rng(manifest.seed)
    n = manifest.n_tasks
    picks = rng.integers(0, len(corpus), size=n)
    arrivals = np.cumsum(rng.exponential(1.0 / manifest.arrival_rate, size=n))
    shots = rng.choice(np.asarray(manifest.shots_choices), size=n)
    tasks = []
    for i in range(n):
        c = corpus[picks[i]]
        f = feats[picks[i]]
        s = int(shots[i])
        tasks.append(QTask(id=i, arrival=float(arrivals[i]), circuit=c,
                           features=CircuitFeatures(f.num_qubits, f.depth, f.g1, f.g2,
                                                    f.measures, s, f.multi),
                           shots=s))
    return tasks


def write_manifest(manifest: WorkloadManifest, path) -> WorkloadManifest:
    """Record corpus maxima into the manifest and write it as JSON."""
    stats = corpus_stats(load_corpus(manifest.corpus_dir))
    manifest = replace(manifest, D_corpus_max=stats["D_corpus_max"],
                       G_corpus_max=stats["G_corpus_max"])
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=1) + "\n", encoding="utf-8")
    return manifest
