"""Command-line interface.

Subcommands: ``bound``, ``alloc``, ``evaluate``, ``sweep``, ``gen``,
``validate-model``.  Data outputs are deterministic (CSV with 12 significant
digits, stable JSON); the version banner goes to stderr only.  The ``sweep``
subcommand can additionally render the summary figures behind the sweep to
PNG files next to the CSV.

Exit codes: 0 success/certified, 1 internal failure, 2 domain or usage
error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .allocation import ConvergenceError, max_reliability_alloc, min_energy_alloc
from .bounds import (ReliabilityTarget, circuit_energy_bound, format_bound_csv,
                     invert_path_budget, universal_energy_bound,
                     universal_energy_bound_printed)
from .circuits import (balanced_tree, circuit_to_json, line_circuit,
                       maximal_paths, parse_circuit)
from .energy import parse_model, validate_physical
from .info import binary_entropy
from .reliability import info_audit, reliability_report

_G = ".12g"


def _load_circuit(source: str):
    parts = source.split(":")
    if parts[0] == "balanced":
        if len(parts) not in (3, 4):
            raise ValueError(f"circuit spec {source!r}: want balanced:k:d[:kind]")
        kind = parts[3] if len(parts) == 4 else "AND"
        return balanced_tree(int(parts[1]), int(parts[2]), kind)
    if parts[0] == "line":
        if len(parts) not in (2, 3):
            raise ValueError(f"circuit spec {source!r}: want line:m[:kind]")
        kind = parts[2] if len(parts) == 3 else "AND"
        return line_circuit(int(parts[1]), kind)
    with open(source, "r", encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parse_grid(spec: str) -> list[float]:
    try:
        start, stop, steps = spec.split(":")
        start, stop, steps = float(start), float(stop), int(steps)
    except ValueError:
        raise ValueError(f"grid spec {spec!r}: want start:stop:steps") from None
    if steps < 1 or stop < start:
        raise ValueError(f"grid spec {spec!r}: empty or inverted")
    if steps == 1:
        return [start]
    return [start + (stop - start) * i / (steps - 1) for i in range(steps)]


# -- subcommands -------------------------------------------------------------

def cmd_bound(args) -> int:
    model = parse_model(args.model)
    target = ReliabilityTarget.from_delta(args.delta)
    reports = []
    if args.circuit:
        tree = _load_circuit(args.circuit)
        reports.append(circuit_energy_bound(tree, model, target))
    ns = []
    if args.n is not None:
        ns.append(args.n)
    if args.n_list:
        ns.extend(int(v) for v in args.n_list.split(","))
    for n in ns:
        reports.append(universal_energy_bound(n, args.k, model, target))
        reports.append(universal_energy_bound_printed(n, args.k, model, target))
    if not reports:
        raise ValueError("give --circuit and/or --n (with --k)")
    _emit(format_bound_csv(reports), args.output)
    return 0


def _alloc_payload(tree, model, alloc, kkt, y, delta):
    return {
        "total_energy": alloc.total_energy,
        "gates": [{"id": g, "eps": alloc.eps[g], "energy": alloc.energy[g]}
                  for g in range(tree.n_gates)],
        "kkt": {"child_sum": kkt.max_child_sum_residual,
                "path_sum": kkt.max_path_residual,
                "budget": kkt.budget_residual},
        "y_min": y,
        "delta_min": delta,
    }


def cmd_alloc(args) -> int:
    model = parse_model(args.model)
    tree = _load_circuit(args.circuit)
    chosen = [v for v in (args.gamma, args.delta, args.budget) if v is not None]
    if len(chosen) != 1:
        raise ValueError("give exactly one of --gamma, --delta, --budget")
    if args.budget is not None:
        res = max_reliability_alloc(tree, model, args.budget,
                                    theta=args.theta, eta=args.eta)
        alloc, kkt, y, delta = res.allocation, res.kkt, res.y_min, res.delta_min
    else:
        gamma = args.gamma if args.gamma is not None \
            else ReliabilityTarget.from_delta(args.delta).path_budget
        alloc, kkt = min_energy_alloc(tree, model, gamma, eta=args.eta)
        y, delta = gamma, invert_path_budget(gamma)
    _emit(json.dumps(_alloc_payload(tree, model, alloc, kkt, y, delta), indent=2)
          + "\n", args.output)
    return 0 if kkt.certified(args.eta, theta=args.theta) else 3


def cmd_evaluate(args) -> int:
    tree = _load_circuit(args.circuit)
    if (args.eps is None) == (args.uniform_eps is None):
        raise ValueError("give exactly one of --eps, --uniform-eps")
    if args.eps is not None:
        eps = [float(v) for v in args.eps.split(",")]
    else:
        eps = [args.uniform_eps] * tree.n_gates
    report = reliability_report(tree, eps)
    payload = {
        "n_inputs": report.n_inputs,
        "per_input_error": list(report.per_input_error),
        "worst_delta": report.worst_delta,
        "cond_error_entropy": report.cond_error_entropy,
        "parity_closed_form": report.parity_closed_form,
    }
    if args.audit is not None:
        rows = info_audit(tree, eps, args.audit, all_configs=args.all_configs)
        payload["audits"] = [{
            "input": r.input_index, "config": list(r.config),
            "error_probability": r.error_probability,
            "mutual_information": r.mutual_information,
            "fano_lhs": r.fano_lhs, "sdpi_rhs": r.sdpi_rhs,
            "fano_ok": r.fano_ok, "sdpi_ok": r.sdpi_ok,
        } for r in rows]
        if not rows:
            payload["insensitive_input"] = args.audit
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    return 0


def _sweep_rows(model, kind, grid, structures, allocations, theta, eta):
    shapes = {"tree": balanced_tree(2, 1, kind), "line": line_circuit(3, kind)}
    rows = []
    for ce in grid:
        budget = ce / model.c
        for structure in sorted(structures):
            tree = shapes[structure]
            heur = max_reliability_alloc(tree, model, budget, theta=theta, eta=eta)
            for allocation in sorted(allocations):
                if allocation == "heuristic":
                    eps = heur.allocation.eps
                    energy = heur.allocation.energy
                else:
                    e_gate = budget / tree.n_gates
                    eps = tuple(model.failure(e_gate) for _ in range(tree.n_gates))
                    energy = tuple(e_gate for _ in range(tree.n_gates))
                y = max(sum(eps[g] for g in p) for p in maximal_paths(tree))
                delta_bound = invert_path_budget(y)
                rep = reliability_report(tree, eps)
                rows.append({
                    "budget_ce": ce, "structure": structure, "allocation": allocation,
                    "y_path_bound": y, "delta_bound": delta_bound,
                    "worst_entropy_limit": binary_entropy(delta_bound),
                    "cond_error_entropy": rep.cond_error_entropy,
                    "worst_delta": rep.worst_delta,
                    "eps": eps, "energy": energy,
                })
    return rows


def _sweep_csv(rows) -> str:
    n = len(rows[0]["eps"])
    head = (["budget_ce", "structure", "allocation", "y_path_bound", "delta_bound",
             "worst_entropy_limit", "cond_error_entropy", "worst_delta"]
            + [f"eps{g}" for g in range(n)] + [f"e{g}" for g in range(n)])
    lines = [",".join(head)]
    for r in rows:
        cells = [format(r["budget_ce"], _G), r["structure"], r["allocation"]]
        cells += [format(r[k], _G) for k in ("y_path_bound", "delta_bound",
                                             "worst_entropy_limit",
                                             "cond_error_entropy", "worst_delta")]
        cells += [format(v, _G) for v in r["eps"]]
        cells += [format(v, _G) for v in r["energy"]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _sweep_figures(rows, model, kind, outdir) -> None:
    import os
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    pick = lambda s, a: [r for r in rows if r["structure"] == s and r["allocation"] == a]

    fig, ax = plt.subplots(figsize=(6, 4))
    tree_h = pick("tree", "heuristic")
    if tree_h:
        ces = [r["budget_ce"] for r in tree_h]
        for g in range(len(tree_h[0]["energy"])):
            ax.plot(ces, [model.c * r["energy"][g] for r in tree_h],
                    marker="o", label=f"tree gate {g}")
    line_h = pick("line", "heuristic")
    if line_h:
        ax.plot([r["budget_ce"] for r in line_h],
                [model.c * r["energy"][0] for r in line_h],
                marker="s", linestyle="--", label="line (uniform)")
    ax.set_xlabel("energy budget cE")
    ax.set_ylabel("per-gate energy c*e")
    ax.set_title(f"{kind}: per-gate energy allocation")
    ax.legend()
    fig.savefig(os.path.join(outdir, "energy_allocation.png"), bbox_inches="tight")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for s in ("tree", "line"):
        sel = pick(s, "heuristic")
        if sel:
            ax.plot([r["budget_ce"] for r in sel],
                    [r["worst_entropy_limit"] for r in sel], marker="o", label=s)
    ax.set_xlabel("energy budget cE")
    ax.set_ylabel("worst-case error entropy limit")
    ax.set_title(f"{kind}: worst-case entropy bound")
    ax.legend()
    fig.savefig(os.path.join(outdir, "worst_case_entropy.png"), bbox_inches="tight")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    styles = {("tree", "heuristic"): "-o", ("tree", "uniform"): "-^",
              ("line", "heuristic"): "--s", ("line", "uniform"): "--v"}
    for (s, a), fmt in styles.items():
        sel = pick(s, a)
        if sel:
            ax.plot([r["budget_ce"] for r in sel],
                    [r["cond_error_entropy"] for r in sel], fmt, label=f"{s} {a}")
    ax.set_xlabel("energy budget cE")
    ax.set_ylabel("conditional error entropy H(E|X)")
    ax.set_title(f"{kind}: exact conditional error entropy")
    ax.legend()
    fig.savefig(os.path.join(outdir, "cond_error_entropy.png"), bbox_inches="tight")
    plt.close(fig)


def cmd_sweep(args) -> int:
    model = parse_model(args.model)
    grid = _parse_grid(args.grid)
    structures = [s.strip() for s in args.structures.split(",")]
    allocations = [a.strip() for a in args.allocations.split(",")]
    if not set(structures) <= {"tree", "line"}:
        raise ValueError(f"structures must be from tree,line: {args.structures!r}")
    if not set(allocations) <= {"heuristic", "uniform"}:
        raise ValueError(f"allocations must be from heuristic,uniform: {args.allocations!r}")
    rows = _sweep_rows(model, args.kind, grid, structures, allocations,
                       args.theta, args.eta)
    _emit(_sweep_csv(rows), args.output)
    if args.figures:
        _sweep_figures(rows, model, args.kind, args.figures)
    return 0


def cmd_gen(args) -> int:
    tree = _load_circuit(args.circuit)
    _emit(circuit_to_json(tree) + "\n", args.output)
    return 0


def cmd_validate_model(args) -> int:
    model = parse_model(args.model)
    rep = validate_physical(model)
    lines = [
        f"model: {args.model}",
        f"grid: [{rep.grid_lo:g}, {rep.grid_hi:g}] x {rep.points} points",
        f"monotone_violations: {rep.monotone_violations}",
        f"convexity_violations: {rep.convexity_violations}",
        f"low_limit_gap: {format(rep.low_limit_gap, _G)}",
        f"high_limit_value: {format(rep.high_limit_value, _G)}",
        f"result: {'pass' if rep.passed else 'fail'}",
    ]
    _emit("\n".join(lines) + "\n", args.output)
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisygates",
        description="Energy-reliability bounds and allocation for noisy boolean formulas")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="energy lower bounds")
    p.add_argument("--model", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n-list", help="comma-separated input counts for a scaling table")
    p.add_argument("--circuit", help="circuit file or balanced:k:d[:kind] / line:m[:kind]")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("alloc", help="per-gate energy allocation")
    p.add_argument("--circuit", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--gamma", type=float, help="per-path failure budget")
    p.add_argument("--delta", type=float, help="reliability target")
    p.add_argument("--budget", type=float, help="total energy budget")
    p.add_argument("--eta", type=float, default=1e-8)
    p.add_argument("--theta", type=float, default=1e-6)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_alloc)

    p = sub.add_parser("evaluate", help="exact reliability of a small circuit")
    p.add_argument("--circuit", required=True)
    p.add_argument("--eps", help="comma-separated per-gate failure probabilities")
    p.add_argument("--uniform-eps", type=float)
    p.add_argument("--audit", type=int, help="audit the information chain for this input")
    p.add_argument("--all-configs", action="store_true")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="budget sweep over the 4-input tree/line pair")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", default="AND", choices=["AND", "OR", "XOR", "NAND", "NOR"])
    p.add_argument("--grid", required=True, help="cE grid as start:stop:steps")
    p.add_argument("--structures", default="tree,line")
    p.add_argument("--allocations", default="heuristic,uniform")
    p.add_argument("--eta", type=float, default=1e-8)
    p.add_argument("--theta", type=float, default=1e-6)
    p.add_argument("--figures", help="directory for PNG figures of the sweep")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="emit a circuit file")
    p.add_argument("--circuit", required=True, help="balanced:k:d[:kind] or line:m[:kind]")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate-model", help="certify a model is physical")
    p.add_argument("--model", required=True)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_validate_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    print(f"noisygates {__version__}", file=sys.stderr)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # pragma: no cover - unexpected
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
