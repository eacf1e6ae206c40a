"""Shared helpers: deterministic random circuit generation."""

from __future__ import annotations

import json
import random

from noisygates import GateTree, parse_circuit

GATE_KINDS = ("AND", "OR", "XOR", "NAND", "NOR")


def random_tree(rng: random.Random, max_gates: int, max_arity: int = 3,
                kinds=GATE_KINDS, const_prob: float = 0.0) -> GateTree:
    """Grow a random formula with at most ``max_gates`` gates.

    Every primary input feeds exactly one gate (no fan-out), so the trees are
    valid subjects for the single-path information audit.
    """
    budget = [max_gates]
    records: list[dict] = []
    next_input = [0]

    def grow() -> int:
        my = len(records)
        records.append({})
        budget[0] -= 1
        arity = rng.randint(1, max_arity)
        children = []
        for _ in range(arity):
            if budget[0] > 0 and rng.random() < 0.55:
                children.append({"gate": grow()})
            elif const_prob and rng.random() < const_prob:
                children.append({"const": rng.randint(0, 1)})
            else:
                children.append({"input": next_input[0]})
                next_input[0] += 1
        records[my] = {"id": my, "kind": rng.choice(kinds), "children": children}
        return my

    grow()
    if next_input[0] == 0:   # all-const leaf fringe; force one real input
        records[-1]["children"][0] = {"input": 0}
        next_input[0] = 1
    doc = {"n_inputs": next_input[0], "root": 0, "gates": records}
    return parse_circuit(json.dumps(doc))
