"""Exact reliability evaluation of small circuits under gate noise.

Each gate fails independently: its noiseless output is flipped with the
gate's failure probability.  With the circuit a tree and the input pattern
fixed, gate output distributions are independent, so the exact output
distribution propagates bottom-up in one pass (linear in circuit size per
pattern).  A brute-force enumeration over all flip patterns serves as the
test oracle.

Reports sweep every input pattern: worst-case error probability, the
conditional error entropy H(E|X) under uniform inputs (the performance
measure used for allocation comparisons), and for all-XOR circuits the
parity closed form (1 - prod(1 - 2*eps_g)) / 2, which depends only on the
multiset of gate failure probabilities, not the topology.

The information audit checks, per sensitized input, the chain
1 - h(P_e) <= I(X;Y) <= prod over the input's path of (1 - 2*eps_g)**2:
Fano's inequality from below, the product of per-gate contraction factors
from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

from .circuits import CircuitError, GateTree, input_fanout, input_path
from .info import binary_entropy, mutual_information

BRUTEFORCE_GATE_CAP = 20
REPORT_INPUT_CAP = 20


def _pattern_bits(tree: GateTree, pattern) -> tuple[int, ...]:
    """Accept an int bitmask (bit i = input i) or a bit sequence."""
    n = tree.n_inputs
    if isinstance(pattern, int):
        if not (0 <= pattern < (1 << n)):
            raise CircuitError(f"pattern {pattern} outside 0..2^{n}-1")
        return tuple((pattern >> i) & 1 for i in range(n))
    bits = tuple(int(b) for b in pattern)
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise CircuitError(f"pattern width {len(bits)} != {n} inputs (bits must be 0/1)")
    return bits


def _check_eps(tree: GateTree, eps) -> tuple[float, ...]:
    eps = tuple(float(e) for e in eps)
    if len(eps) != tree.n_gates:
        raise CircuitError(f"{len(eps)} eps values for {tree.n_gates} gates")
    for g, e in enumerate(eps):
        if not (0.0 <= e < 1.0):
            raise CircuitError(f"gate {g}: eps must be in [0, 1), got {e!r}")
    return eps


def true_value(tree: GateTree, pattern) -> int:
    """Noiseless circuit output for the pattern."""
    bits = _pattern_bits(tree, pattern)
    val: list[int] = [0] * tree.n_gates
    for g in tree.gates:
        child_bits = tuple(
            val[r.index] if r.kind == "gate"
            else (bits[r.index] if r.kind == "input" else r.index)
            for r in g.children)
        val[g.id] = g.output(child_bits)
    return val[tree.root]


def output_probability(tree: GateTree, eps, pattern) -> float:
    """Exact P(output = 1) under the given per-gate failure probabilities."""
    eps = _check_eps(tree, eps)
    bits = _pattern_bits(tree, pattern)
    p_one: list[float] = [0.0] * tree.n_gates
    for g in tree.gates:
        child_p = [
            p_one[r.index] if r.kind == "gate"
            else float(bits[r.index] if r.kind == "input" else r.index)
            for r in g.children]
        pre = 0.0
        for combo in product((0, 1), repeat=g.arity):
            w = 1.0
            for b, p in zip(combo, child_p):
                w *= p if b else (1.0 - p)
                if w == 0.0:
                    break
            if w and g.output(combo):
                pre += w
        e = eps[g.id]
        p_one[g.id] = pre * (1.0 - e) + (1.0 - pre) * e
    return p_one[tree.root]


def error_probability(tree: GateTree, eps, pattern) -> float:
    """Exact P(output != true value) for one input pattern."""
    p1 = output_probability(tree, eps, pattern)
    return 1.0 - p1 if true_value(tree, pattern) else p1


def error_probability_bruteforce(tree: GateTree, eps, pattern) -> float:
    """Oracle: enumerate all 2^gates flip patterns and sum their weights."""
    if tree.n_gates > BRUTEFORCE_GATE_CAP:
        raise CircuitError(f"brute force capped at {BRUTEFORCE_GATE_CAP} gates")
    eps = _check_eps(tree, eps)
    bits = _pattern_bits(tree, pattern)
    truth = true_value(tree, pattern)
    total = 0.0
    val: list[int] = [0] * tree.n_gates
    for flips in range(1 << tree.n_gates):
        weight = 1.0
        for g in tree.gates:
            child_bits = tuple(
                val[r.index] if r.kind == "gate"
                else (bits[r.index] if r.kind == "input" else r.index)
                for r in g.children)
            flipped = (flips >> g.id) & 1
            val[g.id] = g.output(child_bits) ^ flipped
            weight *= eps[g.id] if flipped else (1.0 - eps[g.id])
        if val[tree.root] != truth:
            total += weight
    return total


@dataclass(frozen=True)
class EvalReport:
    n_inputs: int
    per_input_error: tuple[float, ...]   # indexed by pattern integer
    worst_delta: float
    cond_error_entropy: float            # H(E|X) in bits, X uniform
    parity_closed_form: float | None     # set for all-XOR circuits


def reliability_report(tree: GateTree, eps) -> EvalReport:
    """Sweep all input patterns; exact worst case and conditional entropy."""
    if tree.n_inputs > REPORT_INPUT_CAP:
        raise CircuitError(f"report capped at {REPORT_INPUT_CAP} inputs")
    eps = _check_eps(tree, eps)
    per = tuple(error_probability(tree, eps, x) for x in range(1 << tree.n_inputs))
    entropy = sum(binary_entropy(p) for p in per) / len(per)
    parity = None
    if all(g.kind == "XOR" for g in tree.gates):
        parity = 0.5 * (1.0 - math.prod(1.0 - 2.0 * e for e in eps))
    return EvalReport(tree.n_inputs, per, max(per), entropy, parity)


@dataclass(frozen=True)
class InfoAuditRow:
    """One sensitized configuration of an input: Fano vs mutual information
    vs the path contraction product."""

    input_index: int
    config: tuple[int, ...]          # other-input bits; audited slot held at 0
    error_probability: float
    mutual_information: float        # I(X;Y), X uniform over the audited input
    fano_lhs: float                  # 1 - h(P_e)
    sdpi_rhs: float | None           # None when the input fans out
    fano_ok: bool
    sdpi_ok: bool | None


def info_audit(tree: GateTree, eps, input_index: int, *,
               all_configs: bool = False) -> list[InfoAuditRow]:
    """Audit the information chain for one input.

    Searches the other inputs (lexicographically) for configurations where
    the noiseless function switches with the audited input.  An empty list
    means the function is insensitive to the input, i.e. it is really a
    function of n-1 inputs.  The path-product upper bound applies only when
    the input feeds a single gate; fan-out rows carry ``sdpi_rhs = None``.
    """
    eps = _check_eps(tree, eps)
    n = tree.n_inputs
    if not (0 <= input_index < n):
        raise CircuitError(f"unknown input index {input_index}")
    if n > REPORT_INPUT_CAP:
        raise CircuitError(f"audit capped at {REPORT_INPUT_CAP} inputs")

    rhs = None
    if input_fanout(tree, input_index) == 1:
        rhs = math.prod((1.0 - 2.0 * eps[g]) ** 2 for g in input_path(tree, input_index))

    others = [i for i in range(n) if i != input_index]
    rows: list[InfoAuditRow] = []
    for combo in range(1 << len(others)):
        base = 0
        for j, pos in enumerate(others):
            if (combo >> j) & 1:
                base |= 1 << pos
        x0, x1 = base, base | (1 << input_index)
        f0, f1 = true_value(tree, x0), true_value(tree, x1)
        if f0 == f1:
            continue
        q0 = output_probability(tree, eps, x0)
        q1 = output_probability(tree, eps, x1)
        joint = [[0.5 * (1.0 - q0), 0.5 * q0],
                 [0.5 * (1.0 - q1), 0.5 * q1]]
        mi = mutual_information(joint)
        p_err = 0.5 * ((1.0 - q0 if f0 else q0) + (1.0 - q1 if f1 else q1))
        fano = 1.0 - binary_entropy(p_err)
        rows.append(InfoAuditRow(
            input_index=input_index,
            config=tuple((base >> i) & 1 for i in range(n)),
            error_probability=p_err,
            mutual_information=mi,
            fano_lhs=fano,
            sdpi_rhs=rhs,
            fano_ok=fano <= mi + 1e-12,
            sdpi_ok=None if rhs is None else mi <= rhs + 1e-12,
        ))
        if not all_configs:
            break
    return rows


@dataclass(frozen=True)
class SdpiCheck:
    lhs: float    # I(Z; noisy output)
    rhs: float    # (1 - 2 eps)^2 * I(Z; clean output)
    passed: bool


def sdpi_check(joint, eps: float) -> SdpiCheck:
    """Contraction of mutual information through one flip channel.

    ``joint`` is a 2x2 matrix over (Z, U); the noisy observation flips U
    with probability ``eps``.  Checks I(Z; noisy U) <= (1-2*eps)^2 * I(Z;U).
    """
    if not (0.0 <= eps <= 0.5):
        raise ValueError(f"eps must be in [0, 0.5], got {eps!r}")
    rows = [list(map(float, r)) for r in joint]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValueError("joint must be a 2x2 matrix")
    flat = [p for r in rows for p in r]
    if any(p < -1e-15 for p in flat) or abs(sum(flat) - 1.0) > 1e-9:
        raise ValueError("joint must be nonnegative and sum to 1")
    noisy = [[r[0] * (1.0 - eps) + r[1] * eps, r[1] * (1.0 - eps) + r[0] * eps]
             for r in rows]
    lhs = mutual_information(noisy)
    rhs = (1.0 - 2.0 * eps) ** 2 * mutual_information(rows)
    return SdpiCheck(lhs, rhs, lhs <= rhs + 1e-12)
