"""Small information-theoretic helpers shared across modules (all in bits)."""

from __future__ import annotations

import math


def binary_entropy(p: float) -> float:
    """h(p) = -p log2 p - (1-p) log2 (1-p), with h(0) = h(1) = 0."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"probability must be in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def mutual_information(joint) -> float:
    """I(A;B) in bits from a joint probability matrix (rows A, columns B)."""
    row = [sum(r) for r in joint]
    col = [sum(r[j] for r in joint) for j in range(len(joint[0]))]
    info = 0.0
    for i, r in enumerate(joint):
        for j, p in enumerate(r):
            if p > 0.0:
                info += p * math.log2(p / (row[i] * col[j]))
    return info
