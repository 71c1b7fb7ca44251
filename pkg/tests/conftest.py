import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fidsched.backend import QNodeSpec, load_fleet  # noqa: E402
from fidsched.workload import bundled_fleet_manifest, load_corpus  # noqa: E402


def toy_node_dict(n=3, edges=None, e1=1e-3, e2=1e-2, ero=2e-2, d1=35e-9, d2=300e-9, dro=800e-9,
                  name="toy"):
    edges = [(i, i + 1) for i in range(n - 1)] if edges is None else edges
    gates = {"sx": [], "x": [], "rz": [], "cx": []}
    for q in range(n):
        gates["sx"].append({"qubits": [q], "error": e1, "duration_s": d1})
        gates["x"].append({"qubits": [q], "error": e1, "duration_s": d1})
        gates["rz"].append({"qubits": [q], "error": 0.0, "duration_s": 0.0})
    for a, b in edges:
        gates["cx"].append({"qubits": [a, b], "error": e2, "duration_s": d2})
    return {"name": name, "num_qubits": n, "coupling": [list(e) for e in edges], "gates": gates,
            "readout": [{"qubit": q, "error": ero, "duration_s": dro} for q in range(n)]}


def toy_node(n=3, **kw) -> QNodeSpec:
    return QNodeSpec.from_dict(toy_node_dict(n, **kw))


@pytest.fixture(scope="session")
def fleet():
    return load_fleet(bundled_fleet_manifest())


@pytest.fixture(scope="session")
def raw_calibrations():
    manifest = bundled_fleet_manifest()
    names = json.loads(manifest.read_text())
    return [json.loads((manifest.parent / n).read_text()) for n in names]


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()
