"""Seeded synthetic calibration fixtures for a five-node heterogeneous fleet.

Node personalities (median error and duration levels) are fixed; the seed only
drives per-qubit and per-edge jitter around them. Values stay inside typical
superconducting-device ranges.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backend import QNodeSpec

# 27-qubit heavy-hex (Falcon-style) coupling map, 28 edges
FALCON_27_EDGES = (
    (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10),
    (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14), (14, 16),
    (15, 18), (16, 19), (17, 18), (18, 21), (19, 20), (19, 22), (21, 23),
    (22, 25), (23, 24), (24, 25), (25, 26),
)

ERR_1Q = (1e-4, 2e-3)
ERR_2Q = (5e-3, 3e-2)
ERR_RO = (5e-3, 5e-2)
DUR_1Q = 35e-9
DUR_CX = (250e-9, 660e-9)
DUR_RO = (700e-9, 1400e-9)


def heavy_hex_127() -> list[tuple[int, int]]:
    """127-qubit heavy-hex (Eagle-style) lattice with 144 edges.

    Seven rows of data qubits (14, 15, 15, 15, 15, 15, 14) joined by rows of four
    bridge qubits; bridges alternate between grid columns 0,4,8,12 and 2,6,10,14.
    """
    row_cols = [range(0, 14)] + [range(0, 15)] * 5 + [range(1, 15)]
    edges: list[tuple[int, int]] = []
    next_q = 0
    prev_row: dict[int, int] | None = None
    for r, cols in enumerate(row_cols):
        if prev_row is not None:
            bridge_cols = (0, 4, 8, 12) if (r - 1) % 2 == 0 else (2, 6, 10, 14)
            bridges = {c: next_q + k for k, c in enumerate(bridge_cols)}
            next_q += len(bridge_cols)
        row = {c: next_q + k for k, c in enumerate(cols)}
        next_q += len(cols)
        for c in cols:
            if c + 1 in row:
                edges.append((row[c], row[c + 1]))
        if prev_row is not None:
            for c, b in bridges.items():
                edges.append((prev_row[c], b))
                edges.append((b, row[c]))
        prev_row = row
    assert next_q == 127
    return sorted(tuple(sorted(e)) for e in edges)


@dataclass(frozen=True)
class NodeProfile:
    name: str
    num_qubits: int
    err_1q: float
    err_2q: float
    err_ro: float
    dur_cx: float
    dur_ro: float


# index order is the action order
DEFAULT_PROFILES = (
    NodeProfile("node_a_27q", 27, 3.0e-4, 0.0100, 0.028, 400e-9, 1000e-9),
    NodeProfile("node_b_27q", 27, 4.0e-4, 0.0180, 0.025, 260e-9, 720e-9),
    NodeProfile("node_c_27q", 27, 2.0e-4, 0.0065, 0.040, 300e-9, 800e-9),
    NodeProfile("node_d_127q", 127, 1.0e-3, 0.0240, 0.006, 600e-9, 1100e-9),
    NodeProfile("node_e_127q", 127, 3.0e-4, 0.0070, 0.030, 480e-9, 1200e-9),
)


def _jitter(rng: np.random.Generator, median: float, sigma: float, bounds: tuple[float, float]) -> float:
    v = median * float(np.exp(rng.normal(0.0, sigma)))
    return float(f"{min(max(v, bounds[0]), bounds[1]):.4g}")


def generate_node(profile: NodeProfile, rng: np.random.Generator) -> dict:
    n = profile.num_qubits
    if n == 27:
        coupling = list(FALCON_27_EDGES)
    elif n == 127:
        coupling = heavy_hex_127()
    else:
        raise ValueError(f"no lattice for {n} qubits")
    gates: dict[str, list] = {"sx": [], "x": [], "rz": [], "cx": []}
    for q in range(n):
        e = _jitter(rng, profile.err_1q, 0.35, ERR_1Q)
        gates["sx"].append({"qubits": [q], "error": e, "duration_s": DUR_1Q})
        gates["x"].append({"qubits": [q], "error": e, "duration_s": DUR_1Q})
        gates["rz"].append({"qubits": [q], "error": 0.0, "duration_s": 0.0})
    for a, b in coupling:
        gates["cx"].append({
            "qubits": [a, b],
            "error": _jitter(rng, profile.err_2q, 0.3, ERR_2Q),
            "duration_s": _jitter(rng, profile.dur_cx, 0.12, DUR_CX),
        })
    readout = [
        {"qubit": q,
         "error": _jitter(rng, profile.err_ro, 0.35, ERR_RO),
         "duration_s": _jitter(rng, profile.dur_ro, 0.08, DUR_RO)}
        for q in range(n)
    ]
    return {
        "name": profile.name,
        "num_qubits": n,
        "coupling": [list(e) for e in coupling],
        "gates": gates,
        "readout": readout,
    }


def generate_fleet_data(seed: int, profiles=DEFAULT_PROFILES) -> list[dict]:
    rng = np.random.default_rng(seed)
    return [generate_node(p, rng) for p in profiles]


def write_fixtures(out_dir, seed: int, profiles=DEFAULT_PROFILES) -> list[Path]:
    """Write one calibration file per node plus ``fleet.json``; returns the node paths.

    Every file is validated by round-tripping through :class:`QNodeSpec` before
    anything is written.
    """
    out = Path(out_dir)
    data = generate_fleet_data(seed, profiles)
    for d in data:
        QNodeSpec.from_dict(d)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for d in data:
        p = out / f"{d['name']}.json"
        p.write_text(json.dumps(d, indent=1) + "\n", encoding="utf-8")
        paths.append(p)
    (out / "fleet.json").write_text(
        json.dumps([p.name for p in paths], indent=1) + "\n", encoding="utf-8")
    return paths
