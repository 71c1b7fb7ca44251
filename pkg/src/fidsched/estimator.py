"""Fidelity, time and reward scoring for one task placed on one node."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .backend import FleetAverages, QNodeSpec
from .circuit import CircuitFeatures, build_dag, critical_path
from .errors import DegenerateExpected, MissingCalibration, RangeError
from .transpiler import TranspiledCircuit


@dataclass(frozen=True)
class ScoreWeights:
    alpha1: float = 0.8
    alpha2: float = 0.1
    alpha3: float = 0.1
    w_d: float = 0.5
    w_g: float = 0.5
    beta: float = 0.5
    D_max: float = 500.0
    G_max: float = 2000.0
    T_max: float = 100.0
    p_fail: float = -1.0
    rf_clip: float = 2.0  # upper clamp on the relative-fidelity ratio

    def __post_init__(self):
        alphas = (self.alpha1, self.alpha2, self.alpha3)
        if any(a < 0 for a in alphas) or not math.isclose(sum(alphas), 1.0, abs_tol=1e-9):
            raise ValueError(f"alpha weights must be non-negative and sum to 1, got {alphas}")
        if min(self.w_d, self.w_g, self.beta) < 0:
            raise ValueError("w_d, w_g and beta must be non-negative")
        if min(self.D_max, self.G_max, self.T_max) <= 0:
            raise ValueError("D_max, G_max and T_max must be positive")
        if not self.p_fail < 0:
            raise ValueError("p_fail must be negative")
        if not self.rf_clip > 0:
            raise ValueError("rf_clip must be positive")

    def replace(self, **changes) -> ScoreWeights:
        return ScoreWeights(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RewardBreakdown:
    fidelity: float = 0.0
    expected_fidelity: float = 0.0
    r_rf: float = 0.0
    r_cb: float = 0.0
    r_rb: float = 0.0
    fidelity_score: float = 0.0
    t_exec: float = 0.0
    t_wait: float = 0.0
    t_total: float = 0.0
    time_penalty: float = 0.0
    reward: float = 0.0
    success: bool = False


def _op_error(op, node: QNodeSpec) -> float:
    if op.kind == "rz":
        return 0.0  # virtual gate
    err = node.error_of(op.kind, op.qubits)
    if err is None:
        raise MissingCalibration(f"{node.name}: no error entry for {op}")
    return err


def estimate_fidelity(tc: TranspiledCircuit, node: QNodeSpec) -> float:
    """Product of (1 - error) over all non-barrier ops, summed in log space."""
    log_f = math.fsum(math.log1p(-_op_error(op, node)) for op in tc.ops if not op.is_barrier)
    return math.exp(log_f)


def expected_fidelity(tc: TranspiledCircuit, avg: FleetAverages) -> float:
    """Fidelity the same gate counts would get on a fleet-average device."""
    return ((1.0 - avg.mean_1q_error) ** tc.g1_t
            * (1.0 - avg.mean_2q_error) ** tc.g2_t
            * (1.0 - avg.mean_readout_error) ** tc.measures_t)


def relative_fidelity(fidelity: float, expected: float, clip: float = 2.0) -> float:
    if expected <= 1e-300:
        raise DegenerateExpected(f"expected fidelity {expected} too small")
    return min(max(fidelity / expected, 0.0), clip)


def complexity_bonus(features: CircuitFeatures, w: ScoreWeights) -> float:
    return (w.w_d * min(features.depth / w.D_max, 1.0)
            + w.w_g * min((features.g1 + features.g2) / w.G_max, 1.0))


def ranking_bonus(fidelity: float, best: float, worst: float, tol: float = 1e-12) -> float:
    """Min-max position of ``fidelity`` among the feasible nodes; 1.0 when all tie."""
    if fidelity < worst - tol or fidelity > best + tol:
        raise RangeError(f"fidelity {fidelity} outside [{worst}, {best}]")
    span = best - worst
    if span < 1e-12:
        return 1.0
    return min(max((fidelity - worst) / span, 0.0), 1.0)


def fidelity_score(r_rf: float, r_cb: float, r_rb: float, w: ScoreWeights) -> float:
    return w.alpha1 * r_rf + w.alpha2 * r_cb + w.alpha3 * r_rb


def _op_duration(op, node: QNodeSpec) -> float:
    d = node.duration_of(op.kind, op.qubits)
    if d is None:
        if op.kind == "rz":
            return 0.0
        raise MissingCalibration(f"{node.name}: no duration entry for {op}")
    return d


def critical_path_duration(tc: TranspiledCircuit, node: QNodeSpec) -> float:
    """Duration of one shot: the longest weighted dependency chain."""
    dag = build_dag(tc.ops)
    _, total = critical_path(dag, lambda op: _op_duration(op, node))
    return total


def estimate_exec_time(tc: TranspiledCircuit, node: QNodeSpec, shots: int) -> float:
    return shots * critical_path_duration(tc, node)


def time_penalty(t_total: float, w: ScoreWeights) -> float:
    return min(t_total / w.T_max, 1.0)


def reward(score: float, penalty: float, success: bool, w: ScoreWeights) -> float:
    return score - w.beta * penalty if success else w.p_fail


def score_assignment(
    *,
    fidelity: float,
    expected: float,
    features: CircuitFeatures,
    best: float,
    worst: float,
    t_exec: float,
    t_wait: float,
    w: ScoreWeights,
) -> RewardBreakdown:
    """Combine every component for a successful placement."""
    r_rf = relative_fidelity(fidelity, expected, w.rf_clip)
    r_cb = complexity_bonus(features, w)
    r_rb = ranking_bonus(fidelity, best, worst)
    score = fidelity_score(r_rf, r_cb, r_rb, w)
    t_total = t_wait + t_exec
    pen = time_penalty(t_total, w)
    return RewardBreakdown(
        fidelity=fidelity, expected_fidelity=expected,
        r_rf=r_rf, r_cb=r_cb, r_rb=r_rb, fidelity_score=score,
        t_exec=t_exec, t_wait=t_wait, t_total=t_total, time_penalty=pen,
        reward=reward(score, pen, True, w), success=True,
    )


def failure(w: ScoreWeights) -> RewardBreakdown:
    return RewardBreakdown(reward=w.p_fail, success=False)
