"""Independent reference implementations used only by the tests.

Nothing here imports the code under test beyond plain data types, so a bug in
the package cannot hide behind a shared helper.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

# ---------------------------------------------------------------------------
# dense unitary simulation

I2 = np.eye(2, dtype=complex)


def _rz(t):
    return np.diag([cmath.exp(-0.5j * t), cmath.exp(0.5j * t)])


def _rx(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _u(t, p, l):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -cmath.exp(1j * l) * s],
                     [cmath.exp(1j * p) * s, cmath.exp(1j * (p + l)) * c]])


def _controlled(u: np.ndarray, n_ctrl: int) -> np.ndarray:
    dim = 2 ** (n_ctrl + 1)
    m = np.eye(dim, dtype=complex)
    m[dim - 2:, dim - 2:] = u
    return m


X = np.array([[0, 1], [1, 0]], dtype=complex)
FIXED = {
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "x": X,
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.diag([1, -1]).astype(complex),
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
    "t": np.diag([1, cmath.exp(1j * math.pi / 4)]),
    "tdg": np.diag([1, cmath.exp(-1j * math.pi / 4)]),
    "sx": np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]) / 2,
    "cx": _controlled(X, 1),
    "cz": _controlled(np.diag([1, -1]).astype(complex), 1),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
    "ccx": _controlled(X, 2),
}
PARAM = {"rz": _rz, "rx": _rx, "ry": _ry, "u": _u}


def gate_matrix(kind: str, params) -> np.ndarray:
    if kind in FIXED:
        return FIXED[kind]
    return PARAM[kind](*params)


def apply(state: np.ndarray, mat: np.ndarray, qubits, n: int) -> np.ndarray:
    """Apply ``mat`` (first listed qubit most significant) to axes of an n-qubit tensor.

    ``state`` has shape (2,)*n + (cols,); qubit q is axis q.
    """
    k = len(qubits)
    t = np.moveaxis(state, list(qubits), list(range(k)))
    shape = t.shape
    t = (mat @ t.reshape(2 ** k, -1)).reshape(shape)
    return np.moveaxis(t, list(range(k)), list(qubits))


def unitary(ops, n: int, wires=None) -> np.ndarray:
    """Unitary of the gate ops (barriers and measures skipped).

    ``wires`` maps op qubit labels to axes 0..n-1 (identity by default). The
    returned matrix uses axis 0 as the most significant bit.
    """
    dim = 2 ** n
    state = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for op in ops:
        if op.kind in ("barrier", "measure"):
            continue
        axes = [wires[q] if wires is not None else q for q in op.qubits]
        state = apply(state, gate_matrix(op.kind, op.params), axes, n)
    return state.reshape(dim, dim)


def permutation_matrix(perm, n: int) -> np.ndarray:
    """Matrix sending basis bit on axis ``i`` to axis ``perm[i]``."""
    dim = 2 ** n
    P = np.zeros((dim, dim))
    for idx in range(dim):
        bits = [(idx >> (n - 1 - i)) & 1 for i in range(n)]
        out = [0] * n
        for i, b in enumerate(bits):
            out[perm[i]] = b
        j = 0
        for b in out:
            j = (j << 1) | b
        P[j, idx] = 1
    return P


def phase_fidelity(A: np.ndarray, B: np.ndarray) -> float:
    """|tr(A^dagger B)| / dim: 1 exactly when A and B agree up to global phase."""
    return abs(np.trace(A.conj().T @ B)) / A.shape[0]


def transpiled_equivalence(original, tc) -> float:
    """Phase fidelity between a logical circuit and its transpiled form.

    Works on the physical qubits the routed circuit touches (plus the
    logical qubits' start and end homes). Logical qubit v starts on
    ``layout[v]`` and ends on ``final_layout[v]``; ancillas start in any
    state, so the comparison is of full unitaries, ancillas included.
    """
    v2p0 = tc.layout.virtual_to_physical
    v2p1 = tc.final_layout.virtual_to_physical
    n_log = tc.layout.num_logical
    touched = set(v2p0[:n_log]) | set(v2p1[:n_log])
    for op in tc.ops:
        touched.update(op.qubits)
    phys = sorted(touched)
    axis = {p: i for i, p in enumerate(phys)}
    k = len(phys)
    p2v0 = {p: v for v, p in enumerate(v2p0)}
    virtuals = [p2v0[p] for p in phys]
    assert {v2p1[v] for v in virtuals} == set(phys), "routing left the touched set"
    # virtual frame: axis i <-> virtuals[i]; logical qubits must be among them
    vaxis = {v: i for i, v in enumerate(virtuals)}
    U_virtual = unitary(original.ops, k, wires={q: vaxis[q] for q in range(original.num_qubits)})
    V = unitary(tc.ops, k, wires=axis)
    # physical-in -> virtual frame via the initial layout, back out via the final layout
    P_in = permutation_matrix([vaxis[p2v0[p]] for p in phys], k)
    P_out = permutation_matrix([axis[v2p1[v]] for v in virtuals], k)
    expected = P_out @ U_virtual @ P_in
    return phase_fidelity(V, expected)


# ---------------------------------------------------------------------------
# paths, advantages, fidelity products, gradients

def all_paths(n: int, edges) -> list[list[int]]:
    """Every source-to-sink path in a DAG given by explicit edges."""
    succ = {i: sorted({b for a, b in edges if a == i}) for i in range(n)}
    has_pred = {b for _, b in edges}
    out: list[list[int]] = []

    def walk(path):
        nxt = succ[path[-1]]
        if not nxt:
            out.append(list(path))
            return
        for s in nxt:
            path.append(s)
            walk(path)
            path.pop()

    for s in range(n):
        if s not in has_pred:
            walk([s])
    return out


def brute_force_critical_path(n: int, edges, weights) -> tuple[list[int], float]:
    """Maximum-weight path; ties broken by the lexicographically smallest index sequence."""
    if n == 0:
        return [], 0.0
    best_path, best = None, None
    for p in all_paths(n, edges):
        total = sum(weights[i] for i in p)
        if best is None or total > best or (total == best and p < best_path):
            best_path, best = p, total
    return best_path, best


def gae_double_sum(rewards, values, dones, gamma, lam) -> np.ndarray:
    """Direct evaluation of sum_l (gamma*lam)^l delta_{t+l}, cut at the first episode end."""
    T = len(rewards)
    deltas = []
    for t in range(T):
        nv = 0.0 if dones[t] else values[t + 1]
        deltas.append(rewards[t] + gamma * nv - values[t])
    adv = np.zeros(T)
    for t in range(T):
        acc = 0.0
        for l in range(T - t):
            acc += (gamma * lam) ** l * deltas[t + l]
            if dones[t + l]:
                break
        adv[t] = acc
    return adv


def naive_fidelity(ops, raw_calibration: dict) -> float:
    """Sequential product of (1 - error) looked up directly in the raw calibration JSON."""
    table = {}
    for kind, entries in raw_calibration["gates"].items():
        for e in entries:
            table[(kind, tuple(sorted(e["qubits"])))] = e["error"]
    ro = {e["qubit"]: e["error"] for e in raw_calibration["readout"]}
    f = 1.0
    for op in ops:
        if op.kind == "barrier":
            continue
        if op.kind == "measure":
            f *= 1.0 - ro[op.qubits[0]]
        else:
            f *= 1.0 - table[(op.kind, tuple(sorted(op.qubits)))]
    return f


def central_difference(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def enumerate_layers(ops) -> int:
    """Longest unit-weight chain through shared-qubit dependencies (barriers weigh 0)."""
    n = len(ops)
    longest = [0] * n
    for i, op in enumerate(ops):
        w = 0 if op.kind == "barrier" else 1
        best = 0
        for j in range(i):
            if set(ops[j].qubits) & set(op.qubits):
                best = max(best, longest[j])
        longest[i] = best + w
    return max(longest, default=0)

