import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidsched.circuit import (Circuit, GateOp, build_dag, circuit_depth, critical_path,
                              eval_angle, extract_features, parse_qasm, to_qasm)
from fidsched.errors import MissingWeight, QasmSyntaxError, RegisterError, UnsupportedGate
from oracles import brute_force_critical_path, enumerate_layers

HDR = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'
GHZ3 = Circuit(3, (GateOp("h", (0,)), GateOp("cx", (0, 1)), GateOp("cx", (1, 2))))


def test_parse_bell_with_measure():
    c = parse_qasm(HDR + "qreg q[2]; creg c[2]; h q[0]; cx q[0],q[1]; measure q[0]->c[0];")
    assert c.num_qubits == 2 and c.num_clbits == 2
    assert [(o.kind, o.qubits) for o in c.ops] == [("h", (0,)), ("cx", (0, 1)), ("measure", (0,))]
    assert c.ops[2].clbits == (0,)


def test_parse_measure_into_undeclared_register():
    c = parse_qasm("qreg q[2]; h q[0]; cx q[0],q[1]; measure q[0]->c[0];")
    assert c.num_clbits == 1 and c.ops[-1].kind == "measure"


def test_parse_angle_expression():
    c = parse_qasm("qreg q[1]; rz(pi/2) q[0];")
    assert c.ops[0].kind == "rz" and c.ops[0].qubits == (0,)
    assert c.ops[0].params[0] == pytest.approx(1.5707963267948966, abs=1e-15)


@pytest.mark.parametrize("expr,value", [
    ("pi", math.pi), ("-pi/4", -math.pi / 4), ("2*pi/3", 2 * math.pi / 3),
    ("0.5", 0.5), ("1e-3", 1e-3), ("pi^2", math.pi ** 2), ("cos(0)", 1.0), ("-(pi - 1)", 1 - math.pi),
])
def test_eval_angle(expr, value):
    assert eval_angle(expr) == pytest.approx(value)


@pytest.mark.parametrize("expr", ["__import__('os')", "pi pi", "x", "1/0", "True"])
def test_eval_angle_rejects(expr):
    with pytest.raises(ValueError):
        eval_angle(expr)


def test_unknown_gate_is_named():
    with pytest.raises(UnsupportedGate) as err:
        parse_qasm("qreg q[1]; mygate q[0];")
    assert err.value.name == "mygate"


def test_gate_definition_unsupported():
    with pytest.raises(UnsupportedGate):
        parse_qasm("qreg q[1]; gate foo a { h a; } foo q[0];")


def test_classical_control_unsupported():
    with pytest.raises(UnsupportedGate):
        parse_qasm("qreg q[1]; creg c[1]; if(c==1) x q[0];")


@pytest.mark.parametrize("src", [
    "qreg q[2]; qreg r[2];",
    "qreg q[2]; h q[2];",
    "qreg q[2]; h r[0];",
    "qreg q[2]; creg c[1]; creg d[1];",
    "qreg q[2]; creg c[1]; measure q[1] -> c[3];",
    "h q[0];",
])
def test_register_errors(src):
    with pytest.raises(RegisterError):
        parse_qasm(src)


def test_syntax_error_has_position():
    with pytest.raises(QasmSyntaxError) as err:
        parse_qasm("qreg q[2];\nh q[0]\n")
    assert err.value.line is not None


@pytest.mark.parametrize("src", ["qreg q[1]; rz q[0];", "qreg q[2]; cx q[0];", "qreg q[1]; rz(pi q[0];",
                                 "qreg q[1]; measure q[0];", "OPENQASM 3.0; qreg q[1];"])
def test_syntax_errors(src):
    with pytest.raises(QasmSyntaxError):
        parse_qasm(src)


def test_broadcast_and_comments():
    c = parse_qasm("// header\nqreg q[3]; creg c[3];\nh q; // all\nmeasure q -> c;")
    assert [o.kind for o in c.ops] == ["h"] * 3 + ["measure"] * 3
    assert [o.clbits for o in c.ops[3:]] == [(0,), (1,), (2,)]


def test_gateop_invariants():
    with pytest.raises(ValueError):
        GateOp("cx", (1, 1))
    with pytest.raises(ValueError):
        GateOp("rz", (0,), ())
    with pytest.raises(ValueError):
        GateOp("barrier", (0,), (1.0,))
    with pytest.raises(UnsupportedGate):
        GateOp("foo", (0,))
    with pytest.raises(RegisterError):
        Circuit(1, (GateOp("x", (1,)),))


def test_dag_ghz_chain():
    dag = build_dag(GHZ3)
    assert set(dag.edges) == {(0, 1), (1, 2)}


def test_dag_empty_and_parallel():
    assert build_dag(Circuit(2)).num_nodes == 0 and build_dag(Circuit(2)).edges == ()
    dag = build_dag(Circuit(2, (GateOp("h", (0,)), GateOp("h", (1,)))))
    assert dag.num_nodes == 2 and dag.edges == ()


def test_barrier_creates_edges_but_not_counts():
    c = Circuit(2, (GateOp("h", (0,)), GateOp("barrier", (0, 1)), GateOp("x", (1,))))
    assert set(build_dag(c).edges) == {(0, 1), (1, 2)}
    f = extract_features(c)
    assert (f.g1, f.g2, f.depth) == (2, 0, 2)


def test_features_examples():
    f = extract_features(GHZ3)
    assert (f.num_qubits, f.depth, f.g1, f.g2, f.measures) == (3, 3, 1, 2, 0)
    bell = parse_qasm("qreg q[2]; creg c[2]; h q[0]; cx q[0],q[1]; measure q -> c;")
    f = extract_features(bell, shots=1024)
    assert (f.num_qubits, f.depth, f.g1, f.g2, f.measures, f.shots) == (2, 3, 1, 1, 2, 1024)
    f = extract_features(Circuit(4))
    assert (f.num_qubits, f.depth, f.g1, f.g2, f.measures) == (4, 0, 0, 0, 0)


def test_ccx_counted_separately():
    f = extract_features(Circuit(3, (GateOp("ccx", (0, 1, 2)), GateOp("h", (0,)))))
    assert (f.g1, f.g2, f.multi) == (1, 0, 1)


def test_critical_path_examples():
    w = {"h": 35e-9, "cx": 300e-9}
    path, total = critical_path(build_dag(GHZ3), lambda op: w[op.kind])
    assert path == [0, 1, 2] and total == pytest.approx(635e-9, rel=1e-12)
    par = Circuit(2, (GateOp("h", (0,)), GateOp("h", (1,))))
    path, total = critical_path(build_dag(par), lambda op: 35e-9)
    assert total == pytest.approx(35e-9) and path == [0]


def test_critical_path_missing_weight():
    with pytest.raises(MissingWeight) as err:
        critical_path(build_dag(GHZ3), {0: 1.0, 1: 2.0})
    assert err.value.index == 2


def test_critical_path_barrier_weight_zero():
    c = Circuit(2, (GateOp("x", (0,)), GateOp("barrier", (0, 1)), GateOp("x", (1,))))
    _, total = critical_path(build_dag(c), {0: 1.0, 2: 2.0})
    assert total == 3.0


# --- property tests -------------------------------------------------------

ONE_Q = ["h", "x", "y", "z", "s", "sdg", "t", "tdg", "sx", "rx", "ry", "rz", "u"]
TWO_Q = ["cx", "cz", "swap"]


@st.composite
def circuits(draw, max_qubits=5, max_ops=12):
    n = draw(st.integers(1, max_qubits))
    ops = []
    for _ in range(draw(st.integers(0, max_ops))):
        choice = draw(st.integers(0, 9))
        if choice < 5 or n == 1:
            kind = draw(st.sampled_from(ONE_Q))
            k = {"rx": 1, "ry": 1, "rz": 1, "u": 3}.get(kind, 0)
            params = draw(st.lists(st.floats(-7, 7, allow_nan=False), min_size=k, max_size=k))
            ops.append(GateOp(kind, (draw(st.integers(0, n - 1)),), tuple(params)))
        elif choice < 8 or n < 3:
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            ops.append(GateOp(draw(st.sampled_from(TWO_Q)), (a, b)))
        elif choice == 8:
            qs = draw(st.lists(st.integers(0, n - 1), min_size=3, max_size=3, unique=True))
            ops.append(GateOp("ccx", tuple(qs)))
        else:
            qs = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
            ops.append(GateOp("barrier", tuple(qs)))
    if draw(st.booleans()):
        ops += [GateOp("measure", (q,), clbits=(q,)) for q in range(n)]
        return Circuit(n, tuple(ops), n)
    return Circuit(n, tuple(ops))


@given(circuits())
def test_qasm_round_trip(c):
    again = parse_qasm(to_qasm(c))
    assert again.ops == c.ops and again.num_qubits == c.num_qubits
    assert parse_qasm(to_qasm(again)) == again


@given(circuits())
def test_dag_acyclic_and_forward(c):
    dag = build_dag(c)
    assert all(a < b for a, b in dag.edges)
    assert len(dag.edges) <= sum(len(op.qubits) for op in c.ops)


@given(circuits())
def test_depth_matches_unit_weight_paths(c):
    assert circuit_depth(c.ops) == enumerate_layers(c.ops)
    f = extract_features(c)
    assert f.depth <= len(c.ops)
    if any(not op.is_barrier for op in c.ops):
        assert f.depth >= 1


@given(circuits(), st.floats(1e-9, 1e-6))
def test_equal_weights_give_depth(c, w):
    dag = build_dag(c)
    _, total = critical_path(dag, lambda op: w)
    assert total == pytest.approx(circuit_depth(c.ops) * w, rel=1e-12)


@settings(max_examples=200)
@given(circuits(max_qubits=4, max_ops=12), st.data())
def test_critical_path_matches_enumeration(c, data):
    dag = build_dag(c)
    weights = [0 if op.is_barrier else data.draw(st.integers(0, 5)) for op in c.ops]
    path, total = critical_path(dag, dict(enumerate(weights)))
    want_path, want_total = brute_force_critical_path(dag.num_nodes, dag.edges, weights)
    assert total == want_total
    assert path == want_path
