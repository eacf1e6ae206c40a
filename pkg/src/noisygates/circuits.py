"""Rooted-tree circuits of logic gates (formulas).

A circuit here is always a formula: the gate-to-gate wiring is a directed
rooted tree, so no gate output fans out to another gate.  Primary inputs may
feed several gates and constants are allowed as gate children.

The JSON file format::

    {"k_max": 2, "n_inputs": 4, "root": 2,
     "gates": [{"id": 0, "kind": "AND", "children": [{"input": 0}, {"input": 1}]},
               {"id": 1, "kind": "AND", "children": [{"input": 2}, {"input": 3}]},
               {"id": 2, "kind": "AND", "children": [{"gate": 0}, {"gate": 1}]}]}

``kind`` is one of AND/OR/XOR/NAND/NOR or ``{"table": "0001"}`` where the
truth-table string is indexed by the children's bits with the first child as
the most significant bit.  Constant children are written ``{"const": 0}``.
Gate ids are renumbered densely in topological order (children before
parents) at load time, so gate ``i`` always sits at ``tree.gates[i]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

NAMED_KINDS = ("AND", "OR", "XOR", "NAND", "NOR")
TABLE = "TABLE"

MAX_GENERATED_INPUTS = 2 ** 20


class CircuitError(ValueError):
    """Malformed circuit text or an invalid structural query."""


@dataclass(frozen=True)
class Ref:
    """A gate's child: another gate, a primary input, or a constant bit."""

    kind: str   # "gate" | "input" | "const"
    index: int

    def __post_init__(self):
        if self.kind not in ("gate", "input", "const"):
            raise CircuitError(f"bad child reference kind {self.kind!r}")
        if self.kind == "const" and self.index not in (0, 1):
            raise CircuitError(f"constant child must be 0 or 1, got {self.index!r}")


@dataclass(frozen=True)
class GateNode:
    id: int
    kind: str                       # named kind or TABLE
    children: tuple[Ref, ...]
    table: tuple[int, ...] | None = None   # present iff kind == TABLE

    @property
    def arity(self) -> int:
        return len(self.children)

    def gate_children(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.children if r.kind == "gate")

    def output(self, bits: tuple[int, ...]) -> int:
        """Noiseless output for the given child bits (first child first)."""
        if self.kind == TABLE:
            idx = 0
            for b in bits:
                idx = (idx << 1) | b
            return self.table[idx]
        ones = sum(bits)
        if self.kind == "AND":
            return int(ones == len(bits))
        if self.kind == "NAND":
            return int(ones != len(bits))
        if self.kind == "OR":
            return int(ones > 0)
        if self.kind == "NOR":
            return int(ones == 0)
        return ones & 1   # XOR


@dataclass(frozen=True)
class GateTree:
    """An immutable formula: gates in topological order, children first."""

    gates: tuple[GateNode, ...]
    root: int
    n_inputs: int
    k_max: int
    depth: int

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    def parent_of(self) -> dict[int, int]:
        parents: dict[int, int] = {}
        for g in self.gates:
            for c in g.gate_children():
                parents[c] = g.id
        return parents


# -- construction and validation -------------------------------------------

def _build_tree(raw_gates, root, n_inputs, k_max_declared) -> GateTree:
    """Validate raw (id, kind, children, table) records and renumber them."""
    by_id: dict[int, tuple] = {}
    for rec in raw_gates:
        gid = rec[0]
        if gid in by_id:
            raise CircuitError(f"gate {gid}: duplicate gate id")
        by_id[gid] = rec
    if root not in by_id:
        raise CircuitError(f"root gate {root} is not defined")

    parents: dict[int, list[int]] = {gid: [] for gid in by_id}
    for gid, kind, children, table in by_id.values():
        if len(children) == 0:
            raise CircuitError(f"gate {gid}: arity 0")
        for ref in children:
            if ref.kind == "gate":
                if ref.index not in by_id:
                    raise CircuitError(f"gate {gid}: dangling reference to gate {ref.index}")
                parents[ref.index].append(gid)
            elif ref.kind == "input":
                if not (0 <= ref.index < n_inputs):
                    raise CircuitError(
                        f"gate {gid}: input index {ref.index} outside 0..{n_inputs - 1}")
        if kind == TABLE:
            if table is None or len(table) != 2 ** len(children):
                got = 0 if table is None else len(table)
                raise CircuitError(
                    f"gate {gid}: truth table length {got} != 2^{len(children)}")
        elif kind not in NAMED_KINDS:
            raise CircuitError(f"gate {gid}: unknown kind {kind!r}")

    if parents[root]:
        raise CircuitError(f"gate {root}: cycle detected (root is referenced as a child)")
    for gid, ps in parents.items():
        if gid == root:
            continue
        if len(ps) > 1:
            raise CircuitError(f"gate {gid}: duplicate parent (gates {ps[0]} and {ps[1]})")
        if len(ps) == 0:
            raise CircuitError(f"gate {gid}: unreachable (no parent and not the root)")

    # Children-before-parents numbering via iterative post-order from the root.
    order: list[int] = []
    seen: set[int] = set()
    stack: list[tuple[int, bool]] = [(root, False)]
    while stack:
        gid, expanded = stack.pop()
        if expanded:
            order.append(gid)
            continue
        if gid in seen:
            raise CircuitError(f"gate {gid}: cycle detected")
        seen.add(gid)
        stack.append((gid, True))
        _, _, children, _ = by_id[gid]
        for ref in reversed(children):
            if ref.kind == "gate":
                stack.append((ref.index, False))
    if len(order) != len(by_id):
        missing = sorted(set(by_id) - set(order))
        raise CircuitError(f"gate {missing[0]}: cycle detected")

    remap = {old: new for new, old in enumerate(order)}
    gates = []
    seen_inputs: set[int] = set()
    max_arity = 0
    for old in order:
        _, kind, children, table = by_id[old]
        new_children = tuple(
            Ref("gate", remap[r.index]) if r.kind == "gate" else r for r in children)
        seen_inputs.update(r.index for r in children if r.kind == "input")
        max_arity = max(max_arity, len(children))
        gates.append(GateNode(remap[old], kind, new_children, table))

    missing_inputs = sorted(set(range(n_inputs)) - seen_inputs)
    if missing_inputs:
        raise CircuitError(f"input {missing_inputs[0]} is never used")
    if k_max_declared is not None and max_arity > k_max_declared:
        raise CircuitError(f"gate arity {max_arity} exceeds declared k_max {k_max_declared}")
    k_max = k_max_declared if k_max_declared is not None else max_arity

    # Depth = gates on the longest root-to-leaf-gate path, minus one.
    longest: dict[int, int] = {}
    for g in gates:
        kids = g.gate_children()
        longest[g.id] = 1 + max((longest[c] for c in kids), default=0)
    depth = longest[remap[root]] - 1

    return GateTree(tuple(gates), remap[root], n_inputs, k_max, depth)


def _parse_ref(obj, gid) -> Ref:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise CircuitError(f"gate {gid}: child must be one of {{gate|input|const}}: {obj!r}")
    key, value = next(iter(obj.items()))
    if key not in ("gate", "input", "const"):
        raise CircuitError(f"gate {gid}: unknown child key {key!r}")
    if not isinstance(value, int) or isinstance(value, bool):
        raise CircuitError(f"gate {gid}: child {key} index must be an integer: {value!r}")
    return Ref(key, value)


def parse_circuit(text: str) -> GateTree:
    """Parse and validate the JSON circuit format."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitError(f"invalid JSON: {exc}") from None
    for key in ("gates", "root", "n_inputs"):
        if key not in doc:
            raise CircuitError(f"missing top-level key {key!r}")
    raw = []
    for g in doc["gates"]:
        gid = g.get("id")
        if not isinstance(gid, int):
            raise CircuitError(f"gate record without integer id: {g!r}")
        kind = g.get("kind")
        table = None
        if isinstance(kind, dict):
            bits = kind.get("table")
            if not isinstance(bits, str) or set(bits) - {"0", "1"}:
                raise CircuitError(f"gate {gid}: truth table must be a 0/1 string")
            table = tuple(int(b) for b in bits)
            kind = TABLE
        children = tuple(_parse_ref(c, gid) for c in g.get("children", ()))
        raw.append((gid, kind, children, table))
    return _build_tree(raw, doc["root"], doc["n_inputs"], doc.get("k_max"))


def circuit_to_json(tree: GateTree) -> str:
    """Serialize a tree back to the circuit file format (stable bytes)."""
    gates = []
    for g in tree.gates:
        kind = {"table": "".join(str(b) for b in g.table)} if g.kind == TABLE else g.kind
        children = [{r.kind: r.index} for r in g.children]
        gates.append({"id": g.id, "kind": kind, "children": children})
    doc = {"k_max": tree.k_max, "n_inputs": tree.n_inputs, "root": tree.root,
           "gates": gates}
    return json.dumps(doc, indent=2)


# -- generators for the canonical shapes ------------------------------------

def balanced_tree(k: int, depth: int, kind: str = "AND") -> GateTree:
    """Full symmetric k-ary tree of the given depth; k**(depth+1) inputs."""
    if k < 1:
        raise CircuitError(f"arity k must be >= 1, got {k}")
    if depth < 0:
        raise CircuitError(f"depth must be >= 0, got {depth}")
    n_inputs = k ** (depth + 1)
    if n_inputs > MAX_GENERATED_INPUTS:
        raise CircuitError(f"k**(depth+1) = {n_inputs} exceeds the 2**20 generator cap")
    raw = []
    next_id = 0
    prev_level: list[int] = []
    for level in range(depth, -1, -1):
        ids = []
        for pos in range(k ** level):
            if level == depth:
                children = tuple(Ref("input", pos * k + t) for t in range(k))
            else:
                children = tuple(Ref("gate", prev_level[pos * k + t]) for t in range(k))
            raw.append((next_id, kind, children, None))
            ids.append(next_id)
            next_id += 1
        prev_level = ids
    return _build_tree(raw, next_id - 1, n_inputs, k)


def line_circuit(m: int, kind: str = "AND") -> GateTree:
    """Chain of m two-input gates; gate i takes gate i-1 and input i+1."""
    if m < 1:
        raise CircuitError(f"line circuit needs at least one gate, got m={m}")
    if m + 1 > MAX_GENERATED_INPUTS:
        raise CircuitError(f"m+1 = {m + 1} inputs exceeds the 2**20 generator cap")
    raw = [(0, kind, (Ref("input", 0), Ref("input", 1)), None)]
    for i in range(1, m):
        raw.append((i, kind, (Ref("gate", i - 1), Ref("input", i + 1)), None))
    return _build_tree(raw, m - 1, m + 1, 2)


# -- structural queries ------------------------------------------------------

def leaf_gate_ids(tree: GateTree) -> tuple[int, ...]:
    """Gates all of whose children are inputs or constants."""
    return tuple(g.id for g in tree.gates if not g.gate_children())


def _path_to_root(tree: GateTree, gid: int, parents: dict[int, int]) -> tuple[int, ...]:
    path = [gid]
    while path[-1] != tree.root:
        path.append(parents[path[-1]])
    return tuple(path)


def maximal_paths(tree: GateTree) -> tuple[tuple[int, ...], ...]:
    """All root-to-leaf-gate paths, each listed leaf first, ordered by leaf id."""
    parents = tree.parent_of()
    return tuple(_path_to_root(tree, leaf, parents) for leaf in leaf_gate_ids(tree))


def input_path(tree: GateTree, input_index: int) -> tuple[int, ...]:
    """Gate path from the gate fed by this input up to the root.

    If the input fans out to several gates, the deepest occurrence (longest
    path, ties broken by smallest gate id) is returned: that occurrence is
    the binding one for path-sum reliability constraints.
    """
    receivers = [g.id for g in tree.gates
                 if any(r.kind == "input" and r.index == input_index for r in g.children)]
    if not receivers:
        raise CircuitError(f"unknown input index {input_index}")
    parents = tree.parent_of()
    paths = [_path_to_root(tree, gid, parents) for gid in sorted(receivers)]
    return max(paths, key=len)


def input_fanout(tree: GateTree, input_index: int) -> int:
    """How many gate child slots this primary input feeds."""
    return sum(1 for g in tree.gates for r in g.children
               if r.kind == "input" and r.index == input_index)
