"""Parametric benchmark circuits used as the bundled QASM corpus.

Run ``python -m fidsched.corpus OUT_DIR`` to regenerate the bundled files.
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

from .circuit import Circuit, GateOp, extract_features, to_qasm

PI = math.pi


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.ops: list[GateOp] = []

    def g(self, kind: str, *qubits: int, params=()):
        self.ops.append(GateOp(kind, qubits, tuple(params)))
        return self

    def cp(self, theta: float, a: int, b: int):
        # controlled phase via rz/cx, since cp is outside the supported set
        self.g("rz", a, params=(theta / 2,))
        self.g("cx", a, b)
        self.g("rz", b, params=(-theta / 2,))
        self.g("cx", a, b)
        self.g("rz", b, params=(theta / 2,))

    def cry(self, theta: float, c: int, t: int):
        self.g("ry", t, params=(theta / 2,))
        self.g("cx", c, t)
        self.g("ry", t, params=(-theta / 2,))
        self.g("cx", c, t)

    def measure_all(self, name: str) -> Circuit:
        self.ops.append(GateOp("barrier", tuple(range(self.n))))
        for q in range(self.n):
            self.ops.append(GateOp("measure", (q,), clbits=(q,)))
        return Circuit(self.n, tuple(self.ops), self.n, name)


def bell() -> Circuit:
    return _Builder(2).g("h", 0).g("cx", 0, 1).measure_all("bell_n2")


def ghz(n: int) -> Circuit:
    b = _Builder(n).g("h", 0)
    for q in range(n - 1):
        b.g("cx", q, q + 1)
    return b.measure_all(f"ghz_n{n}")


def deutsch_jozsa(n: int) -> Circuit:
    anc = n - 1
    b = _Builder(n).g("x", anc)
    for q in range(n):
        b.g("h", q)
    for q in range(anc):
        if q % 2:
            b.g("x", q)
        b.g("cx", q, anc)
        if q % 2:
            b.g("x", q)
    for q in range(anc):
        b.g("h", q)
    return b.measure_all(f"dj_n{n}")


def bernstein_vazirani(n: int, rng: np.random.Generator) -> Circuit:
    anc = n - 1
    secret = rng.integers(0, 2, size=anc)
    secret[0] = 1
    b = _Builder(n).g("x", anc).g("h", anc)
    for q in range(anc):
        b.g("h", q)
    for q in range(anc):
        if secret[q]:
            b.g("cx", q, anc)
    for q in range(anc):
        b.g("h", q)
    return b.measure_all(f"bv_n{n}")


def qft(n: int) -> Circuit:
    b = _Builder(n)
    for j in range(n):
        b.g("h", j)
        for k in range(j + 1, n):
            b.cp(PI / 2 ** (k - j), k, j)
    for j in range(n // 2):
        b.g("swap", j, n - 1 - j)
    return b.measure_all(f"qft_n{n}")


def graph_state(n: int) -> Circuit:
    b = _Builder(n)
    for q in range(n):
        b.g("h", q)
    for q in range(0, n - 1, 2):
        b.g("cz", q, q + 1)
    for q in range(1, n - 1, 2):
        b.g("cz", q, q + 1)
    b.g("cz", n - 1, 0)
    return b.measure_all(f"graphstate_n{n}")


def w_state(n: int) -> Circuit:
    b = _Builder(n).g("x", 0)
    for k in range(n - 1):
        b.cry(2 * math.acos(math.sqrt(1 / (n - k))), k, k + 1)
        b.g("cx", k + 1, k)
    return b.measure_all(f"wstate_n{n}")


def qaoa_ring(n: int, rng: np.random.Generator, p: int = 1) -> Circuit:
    b = _Builder(n)
    for q in range(n):
        b.g("h", q)
    for _ in range(p):
        gamma, beta = rng.uniform(0.1, PI, size=2)
        for start in (0, 1):
            for q in range(start, n, 2):
                a, c = q, (q + 1) % n
                if a == c or (n % 2 and start == 0 and q == n - 1):
                    continue
                b.g("cx", a, c).g("rz", c, params=(2 * gamma,)).g("cx", a, c)
        if n % 2:
            b.g("cx", n - 1, 0).g("rz", 0, params=(2 * gamma,)).g("cx", n - 1, 0)
        for q in range(n):
            b.g("rx", q, params=(2 * beta,))
    return b.measure_all(f"qaoa_n{n}")


def real_amplitudes(n: int, reps: int, rng: np.random.Generator) -> Circuit:
    b = _Builder(n)
    for r in range(reps + 1):
        for q in range(n):
            b.g("ry", q, params=(float(rng.uniform(-PI, PI)),))
        if r < reps:
            for q in range(n - 1):
                b.g("cx", q, q + 1)
    return b.measure_all(f"realamp_n{n}")


def random_circuit(n: int, layers: int, rng: np.random.Generator) -> Circuit:
    """Random layers of 1q gates and long-range cx pairs."""
    b = _Builder(n)
    one_q = ("h", "x", "sx", "t", "s", "rz", "ry")
    for _ in range(layers):
        perm = rng.permutation(n)
        for i in range(0, n - 1, 2):
            a, c = int(perm[i]), int(perm[i + 1])
            if rng.random() < 0.6:
                b.g("cx", a, c)
            else:
                for q in (a, c):
                    kind = one_q[rng.integers(len(one_q))]
                    params = (float(rng.uniform(-PI, PI)),) if kind in ("rz", "ry") else ()
                    b.g(kind, q, params=params)
    return b.measure_all(f"random_n{n}")


def grover3() -> Circuit:
    b = _Builder(3)
    for q in range(3):
        b.g("h", q)
    for _ in range(2):
        # oracle marks |111>
        b.g("h", 2).g("ccx", 0, 1, 2).g("h", 2)
        for q in range(3):
            b.g("h", q).g("x", q)
        b.g("h", 2).g("ccx", 0, 1, 2).g("h", 2)
        for q in range(3):
            b.g("x", q).g("h", q)
    return b.measure_all("grover_n3")


def toffoli_adder(n: int) -> Circuit:
    """Ripple-carry style chain of Toffolis and CNOTs on n qubits."""
    b = _Builder(n)
    for q in range(0, n - 1, 2):
        b.g("x", q)
    for q in range(0, n - 2, 2):
        b.g("ccx", q, q + 1, q + 2)
        b.g("cx", q, q + 1)
    return b.measure_all(f"adder_n{n}")


def hardware_efficient(n: int, reps: int, rng: np.random.Generator) -> Circuit:
    b = _Builder(n)
    for _ in range(reps):
        for q in range(n):
            b.g("u", q, params=tuple(float(v) for v in rng.uniform(-PI, PI, size=3)))
        for q in range(0, n - 1, 2):
            b.g("cz", q, q + 1)
        for q in range(1, n - 1, 2):
            b.g("cz", q, q + 1)
    return b.measure_all(f"hea_n{n}")


def ising_trotter(n: int, steps: int, rng: np.random.Generator) -> Circuit:
    b = _Builder(n)
    J, h = rng.uniform(0.2, 1.0, size=2)
    for _ in range(steps):
        for start in (0, 1):
            for q in range(start, n - 1, 2):
                b.g("cx", q, q + 1).g("rz", q + 1, params=(2 * J * 0.1,)).g("cx", q, q + 1)
        for q in range(n):
            b.g("rx", q, params=(2 * h * 0.1,))
    return b.measure_all(f"ising_n{n}")


def swap_test(n_reg: int) -> Circuit:
    n = 1 + 2 * n_reg
    b = _Builder(n).g("h", 0)
    for q in range(1, n_reg + 1):
        b.g("ry", q, params=(0.3 * q,))
        b.g("ry", q + n_reg, params=(0.5 * q,))
    for q in range(1, n_reg + 1):
        a, c = q, q + n_reg
        b.g("cx", c, a).g("ccx", 0, a, c).g("cx", c, a)
    b.g("h", 0)
    return b.measure_all(f"swaptest_n{n}")


def qpe(n_count: int) -> Circuit:
    n = n_count + 1
    tgt = n_count
    b = _Builder(n).g("x", tgt)
    for q in range(n_count):
        b.g("h", q)
    for q in range(n_count):
        b.cp(2 * PI * 0.3125 * 2 ** q, q, tgt)
    # inverse QFT on the counting register (without final swaps)
    for j in reversed(range(n_count)):
        for k in reversed(range(j + 1, n_count)):
            b.cp(-PI / 2 ** (k - j), k, j)
        b.g("h", j)
    return b.measure_all(f"qpe_n{n}")


def default_corpus(seed: int = 11) -> list[Circuit]:
    rng = np.random.default_rng(seed)
    circuits = [
        bell(), ghz(3), ghz(5), ghz(8), ghz(12), ghz(20), ghz(27),
        deutsch_jozsa(4), deutsch_jozsa(9), deutsch_jozsa(16),
        bernstein_vazirani(5, rng), bernstein_vazirani(12, rng), bernstein_vazirani(21, rng),
        qft(3), qft(4),
        graph_state(6), graph_state(14), graph_state(25),
        w_state(3), w_state(5),
        qaoa_ring(4, rng), qaoa_ring(10, rng), qaoa_ring(18, rng, p=2),
        real_amplitudes(4, 2, rng), real_amplitudes(8, 2, rng), real_amplitudes(13, 1, rng),
        random_circuit(4, 6, rng), random_circuit(7, 10, rng), random_circuit(10, 12, rng),
        random_circuit(15, 10, rng), random_circuit(22, 8, rng),
        grover3(), toffoli_adder(4), toffoli_adder(7),
        hardware_efficient(5, 3, rng), hardware_efficient(9, 4, rng),
        ising_trotter(6, 3, rng), ising_trotter(16, 2, rng),
        swap_test(1), swap_test(2), qpe(3),
    ]
    return circuits


def write_corpus(out_dir, seed: int = 11) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for c in default_corpus(seed):
        feats = extract_features(c)
        if not 3 <= feats.depth <= 30:
            raise ValueError(f"{c.source_name}: depth {feats.depth} outside 3..30")
        p = out / f"{c.source_name}.qasm"
        p.write_text(to_qasm(c), encoding="utf-8")
        paths.append(p)
    return paths


if __name__ == "__main__":  # pragma: no cover
    for path in write_corpus(sys.argv[1] if len(sys.argv) > 1 else "."):
        print(path)
