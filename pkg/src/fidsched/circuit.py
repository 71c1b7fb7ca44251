"""Circuit intermediate representation.

An OpenQASM 2.0 subset is parsed into an immutable :class:`Circuit`, from
which a dependency DAG, scheduling features and weighted critical paths are
derived.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingWeight, QasmSyntaxError, RegisterError, UnsupportedGate

# name -> (qubit arity, param arity); barrier arity is variable
GATE_SPECS: dict[str, tuple[int | None, int]] = {
    "h": (1, 0), "x": (1, 0), "y": (1, 0), "z": (1, 0),
    "s": (1, 0), "sdg": (1, 0), "t": (1, 0), "tdg": (1, 0), "sx": (1, 0),
    "rx": (1, 1), "ry": (1, 1), "rz": (1, 1), "u": (1, 3),
    "cx": (2, 0), "cz": (2, 0), "swap": (2, 0),
    "ccx": (3, 0),
    "barrier": (None, 0),
    "measure": (1, 0),
}


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    clbits: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_SPECS:
            raise UnsupportedGate(self.kind)
        nq, np_ = GATE_SPECS[self.kind]
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "clbits", tuple(int(c) for c in self.clbits))
        if nq is not None and len(self.qubits) != nq:
            raise ValueError(f"{self.kind} acts on {nq} qubit(s), got {self.qubits}")
        if not self.qubits:
            raise ValueError(f"{self.kind} needs at least one qubit")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.kind}{self.qubits}")
        if len(self.params) != np_:
            raise ValueError(f"{self.kind} takes {np_} parameter(s), got {len(self.params)}")
        if self.kind == "measure":
            if len(self.clbits) != 1:
                raise ValueError("measure needs exactly one classical bit")
        elif self.clbits:
            raise ValueError(f"{self.kind} does not take classical bits")

    @property
    def is_barrier(self) -> bool:
        return self.kind == "barrier"

    def __str__(self) -> str:
        p = f"({', '.join(f'{v:.6g}' for v in self.params)})" if self.params else ""
        s = f"{self.kind}{p} {','.join(f'q[{q}]' for q in self.qubits)}"
        if self.clbits:
            s += f" -> c[{self.clbits[0]}]"
        return s


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    num_clbits: int = 0
    source_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 0 or self.num_clbits < 0:
            raise RegisterError("register sizes must be non-negative")
        for op in self.ops:
            if any(q < 0 or q >= self.num_qubits for q in op.qubits):
                raise RegisterError(f"{op} addresses a qubit outside q[{self.num_qubits}]")
            if any(c < 0 or c >= self.num_clbits for c in op.clbits):
                raise RegisterError(f"{op} addresses a bit outside c[{self.num_clbits}]")

    def __len__(self) -> int:
        return len(self.ops)

    def with_ops(self, ops) -> Circuit:
        return Circuit(self.num_qubits, tuple(ops), self.num_clbits, self.source_name)


@dataclass(frozen=True)
class CircuitDag:
    """Dependency DAG; node ``i`` is ``ops[i]`` and every edge goes forward in op order."""

    ops: tuple[GateOp, ...]
    edges: tuple[tuple[int, int], ...]
    preds: tuple[tuple[int, ...], ...] = field(repr=False)
    succs: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return len(self.ops)

    def sources(self) -> list[int]:
        return [i for i, p in enumerate(self.preds) if not p]

    def sinks(self) -> list[int]:
        return [i for i, s in enumerate(self.succs) if not s]


@dataclass(frozen=True)
class CircuitFeatures:
    num_qubits: int
    depth: int
    g1: int
    g2: int
    measures: int
    shots: int = 0
    multi: int = 0  # >=3-qubit gates, kept out of g1/g2

    @property
    def gate_count(self) -> int:
        return self.g1 + self.g2


# ---------------------------------------------------------------------------
# QASM parsing

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_ARG_RE = re.compile(rf"\s*({_IDENT})\s*(?:\[\s*(\d+)\s*\])?\s*$")
_REG_RE = re.compile(rf"(qreg|creg)\s+({_IDENT})\s*\[\s*(\d+)\s*\]$")
_HEADER_RE = re.compile(r"OPENQASM\s+(\d+(?:\.\d+)?)$")
_INCLUDE_RE = re.compile(r'include\s+"[^"]*"$')
_NAME_RE = re.compile(rf"({_IDENT})")

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt}


def eval_angle(expr: str) -> float:
    """Evaluate a QASM parameter expression (``pi``, literals, + - * / ^, unary minus)."""
    try:
        tree = ast.parse(expr.replace("^", "**").strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"bad expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"bad expression {expr!r}")

    try:
        return float(ev(tree))
    except ZeroDivisionError as exc:
        raise ValueError(f"division by zero in {expr!r}") from exc


def _strip_comments(text: str) -> str:
    # blank out // comments but keep offsets so positions stay valid
    return re.sub(r"//[^\n]*", lambda m: " " * len(m.group(0)), text)


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _split_params(rest: str) -> tuple[str | None, str]:
    """Split ``(expr, ...) args`` into the parenthesised part and the remainder."""
    if not rest.startswith("("):
        return None, rest
    depth = 0
    for i, ch in enumerate(rest):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return rest[1:i], rest[i + 1:]
    raise ValueError("unbalanced parentheses")


def _split_top_level(s: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


class _Parser:
    def __init__(self, text: str, source_name: str):
        self.raw = text
        self.text = _strip_comments(text)
        self.source_name = source_name
        self.qreg: tuple[str, int] | None = None
        self.creg: tuple[str, int] | None = None
        self.implicit_creg = False
        self.ops: list[GateOp] = []

    def error(self, msg: str, offset: int) -> QasmSyntaxError:
        line, col = _position(self.text, offset)
        return QasmSyntaxError(msg, line, col)

    def statements(self):
        text = self.text
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                return
            end = text.find(";", pos)
            brace = text.find("{", pos)
            if brace != -1 and (end == -1 or brace < end):
                # gate/opaque definition bodies are not part of the subset
                head = text[pos:brace].split()
                if head and head[0] in ("gate", "opaque") and len(head) > 1:
                    raise UnsupportedGate(_NAME_RE.match(head[1]).group(1))
                raise self.error("unexpected '{'", brace)
            if end == -1:
                raise self.error("missing ';'", len(text.rstrip()))
            yield pos, text[pos:end].strip()
            pos = end + 1

    def parse(self) -> Circuit:
        for offset, stmt in self.statements():
            self.statement(offset, stmt)
        if self.qreg is None:
            raise RegisterError("no quantum register declared")
        ncl = self.creg[1] if self.creg else 0
        return Circuit(self.qreg[1], tuple(self.ops), ncl, self.source_name)

    def statement(self, offset: int, stmt: str):
        if not stmt:
            raise self.error("empty statement", offset)
        m = _HEADER_RE.match(stmt)
        if m:
            if not m.group(1).startswith("2"):
                raise self.error(f"unsupported OPENQASM version {m.group(1)}", offset)
            return
        if stmt.startswith("OPENQASM"):
            raise self.error("malformed OPENQASM header", offset)
        if stmt.startswith("include"):
            if not _INCLUDE_RE.match(stmt):
                raise self.error("malformed include", offset)
            return
        m = _REG_RE.match(stmt)
        if m:
            kind, name, size = m.group(1), m.group(2), int(m.group(3))
            if kind == "qreg":
                if self.qreg is not None:
                    raise RegisterError(f"multiple quantum registers ({self.qreg[0]}, {name})")
                self.qreg = (name, size)
            else:
                if self.creg is not None and not self.implicit_creg:
                    raise RegisterError(f"multiple classical registers ({self.creg[0]}, {name})")
                self.creg = (name, size)
                self.implicit_creg = False
            return
        if stmt.startswith(("qreg", "creg")):
            raise self.error("malformed register declaration", offset)
        if stmt.startswith("if") and re.match(r"if\s*\(", stmt):
            raise UnsupportedGate("if")
        m = _NAME_RE.match(stmt)
        if not m:
            raise self.error(f"cannot parse statement {stmt!r}", offset)
        name = m.group(1)
        if name == "measure":
            self.measure(offset, stmt[m.end():])
            return
        if name not in GATE_SPECS:
            raise UnsupportedGate(name)
        self.gate(offset, name, stmt[m.end():].strip())

    def qubit_arg(self, offset: int, arg: str) -> list[int]:
        m = _ARG_RE.match(arg)
        if not m:
            raise self.error(f"bad qubit argument {arg.strip()!r}", offset)
        if self.qreg is None:
            raise RegisterError("gate used before any qreg declaration")
        reg, idx = m.group(1), m.group(2)
        if reg != self.qreg[0]:
            raise RegisterError(f"unknown quantum register {reg!r}")
        if idx is None:
            return list(range(self.qreg[1]))
        if int(idx) >= self.qreg[1]:
            raise RegisterError(f"index {reg}[{idx}] out of range (size {self.qreg[1]})")
        return [int(idx)]

    def clbit_arg(self, offset: int, arg: str) -> list[int]:
        m = _ARG_RE.match(arg)
        if not m:
            raise self.error(f"bad classical argument {arg.strip()!r}", offset)
        reg, idx = m.group(1), m.group(2)
        if self.creg is None or (self.implicit_creg and reg == self.creg[0]):
            # lenient: measuring into an undeclared register declares it implicitly
            if idx is None:
                raise RegisterError(f"undeclared classical register {reg!r}")
            size = max(int(idx) + 1, self.creg[1] if self.creg else 0)
            self.creg = (reg, size)
            self.implicit_creg = True
            return [int(idx)]
        if reg != self.creg[0]:
            raise RegisterError(f"unknown classical register {reg!r}")
        if idx is None:
            return list(range(self.creg[1]))
        if int(idx) >= self.creg[1]:
            raise RegisterError(f"index {reg}[{idx}] out of range (size {self.creg[1]})")
        return [int(idx)]

    def measure(self, offset: int, rest: str):
        if "->" not in rest:
            raise self.error("measure needs '->'", offset)
        left, right = rest.split("->", 1)
        qs = self.qubit_arg(offset, left)
        cs = self.clbit_arg(offset, right)
        if len(qs) != len(cs):
            raise RegisterError("measure register sizes differ")
        for q, c in zip(qs, cs):
            self.ops.append(GateOp("measure", (q,), clbits=(c,)))

    def gate(self, offset: int, name: str, rest: str):
        try:
            ptext, rest = _split_params(rest)
        except ValueError:
            raise self.error("unbalanced parentheses", offset) from None
        params: list[float] = []
        if ptext is not None and ptext.strip():
            for expr in _split_top_level(ptext):
                try:
                    params.append(eval_angle(expr))
                except ValueError as exc:
                    raise self.error(str(exc), offset) from None
        nq, np_ = GATE_SPECS[name]
        if len(params) != np_:
            raise self.error(f"{name} takes {np_} parameter(s), got {len(params)}", offset)
        if not rest.strip():
            raise self.error(f"{name} has no qubit arguments", offset)
        args = [self.qubit_arg(offset, a) for a in rest.split(",")]
        if name == "barrier":
            qubits = []
            for a in args:
                qubits.extend(q for q in a if q not in qubits)
            self.ops.append(GateOp("barrier", tuple(qubits)))
            return
        if len(args) != nq:
            raise self.error(f"{name} takes {nq} qubit argument(s), got {len(args)}", offset)
        width = max(len(a) for a in args)
        if any(len(a) not in (1, width) for a in args):
            raise RegisterError("register broadcast sizes differ")
        for k in range(width):
            qubits = tuple(a[k] if len(a) > 1 else a[0] for a in args)
            if len(set(qubits)) != len(qubits):
                raise RegisterError(f"{name} repeats a qubit: {qubits}")
            self.ops.append(GateOp(name, qubits, tuple(params)))


def parse_qasm(text: str, source_name: str = "") -> Circuit:
    """Parse OpenQASM 2.0 source (single qreg, at most one creg) into a :class:`Circuit`.

    ``include`` lines are accepted and ignored; the supported gates are built in.
    Whole-register arguments broadcast as in OpenQASM 2.
    """
    return _Parser(text, source_name).parse()


def load_qasm(path) -> Circuit:
    p = Path(path)
    return parse_qasm(p.read_text(encoding="utf-8"), source_name=p.stem)


def to_qasm(circuit: Circuit) -> str:
    """Serialize to OpenQASM 2.0. Angles use ``repr`` so parsing is exact."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    if circuit.num_clbits:
        lines.append(f"creg c[{circuit.num_clbits}];")
    for op in circuit.ops:
        if op.kind == "measure":
            lines.append(f"measure q[{op.qubits[0]}] -> c[{op.clbits[0]}];")
            continue
        p = f"({','.join(repr(v) for v in op.params)})" if op.params else ""
        lines.append(f"{op.kind}{p} {','.join(f'q[{q}]' for q in op.qubits)};")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# DAG, features, critical path

def build_dag(circuit: Circuit | tuple[GateOp, ...] | list[GateOp]) -> CircuitDag:
    """Link each op to the latest earlier op on each of its qubits."""
    ops = tuple(circuit.ops if isinstance(circuit, Circuit) else circuit)
    last: dict[int, int] = {}
    preds: list[list[int]] = [[] for _ in ops]
    succs: list[list[int]] = [[] for _ in ops]
    edges: list[tuple[int, int]] = []
    for i, op in enumerate(ops):
        for q in op.qubits:
            j = last.get(q)
            if j is not None and j not in preds[i]:
                preds[i].append(j)
                succs[j].append(i)
                edges.append((j, i))
            last[q] = i
    return CircuitDag(
        ops=ops,
        edges=tuple(edges),
        preds=tuple(tuple(sorted(p)) for p in preds),
        succs=tuple(tuple(sorted(s)) for s in succs),
    )


def circuit_depth(ops) -> int:
    """Layer count; barriers synchronize their qubits but add no layer."""
    level: dict[int, int] = {}
    depth = 0
    for op in ops:
        lv = max((level.get(q, 0) for q in op.qubits), default=0)
        if not op.is_barrier:
            lv += 1
        for q in op.qubits:
            level[q] = lv
        depth = max(depth, lv)
    return depth


def extract_features(circuit: Circuit, shots: int = 0) -> CircuitFeatures:
    g1 = g2 = measures = multi = 0
    for op in circuit.ops:
        if op.kind == "barrier":
            continue
        if op.kind == "measure":
            measures += 1
        elif len(op.qubits) == 1:
            g1 += 1
        elif len(op.qubits) == 2:
            g2 += 1
        else:
            multi += 1
    return CircuitFeatures(
        num_qubits=circuit.num_qubits,
        depth=circuit_depth(circuit.ops),
        g1=g1, g2=g2, measures=measures, shots=int(shots), multi=multi,
    )


Weights = Mapping[int, float] | Callable[[GateOp], float]


def _weight_vector(dag: CircuitDag, weight: Weights) -> list[float]:
    out = []
    for i, op in enumerate(dag.ops):
        if op.is_barrier:
            out.append(0.0)
            continue
        try:
            w = weight(op) if callable(weight) else weight[i]
        except KeyError:
            raise MissingWeight(i, op) from None
        if w is None:
            raise MissingWeight(i, op)
        out.append(float(w))
    return out


def critical_path(dag: CircuitDag, weight: Weights) -> tuple[list[int], float]:
    """Maximum-weight source-to-sink path through ``dag``.

    ``weight`` is either a mapping from node index to duration or a callable on
    the op; barriers always weigh 0. Among equal-weight paths the
    lexicographically smallest node-index sequence wins.
    """
    n = dag.num_nodes
    if n == 0:
        return [], 0.0
    w = _weight_vector(dag, weight)
    total = [0.0] * n
    nxt = [-1] * n
    # op order is a topological order, so sweep backwards
    for v in range(n - 1, -1, -1):
        best, arg = 0.0, -1
        for s in dag.succs[v]:  # ascending, so the first maximum is the smallest index
            if arg == -1 or total[s] > best:
                best, arg = total[s], s
        total[v] = w[v] + best
        nxt[v] = arg
    start, best = -1, 0.0
    for v in dag.sources():
        if start == -1 or total[v] > best:
            start, best = v, total[v]
    path = [start]
    while nxt[path[-1]] != -1:
        path.append(nxt[path[-1]])
    return path, total[start]
