"""Per-gate energy allocation on tree circuits.

Two convex problems are solved on the gate tree:

* minimum total energy subject to a per-path failure budget (every
  root-to-leaf path's failure probabilities must sum to at most the budget),
* maximum reliability (smallest achievable path sum) for a total energy
  budget.

Both are governed by the same two optimality conditions, which are necessary
and sufficient here:

* child-sum: energy_prime(eps_parent) = sum of energy_prime over the
  parent's gate children, at every internal gate;
* equal path sums: every maximal path's failure probabilities sum to the
  same value (the budget, resp. the achieved optimum).

For the exponential and polynomial families the child-sum equation is
positively homogeneous, so each subtree's optimal root failure probability
is exactly linear in the subtree's path-sum budget.  The solver exploits
that: one bottom-up pass composes the per-subtree ratios, one top-down pass
distributes the budget.  That is the same fixed point a per-node bisection
would converge to, computed exactly in O(gates).

The stretched-exponential family is not scale invariant; there the solver
runs the nested bisection directly (per subtree, bisect the children's
common budget so the subtree's path sum matches), with single-gate-child
chains contracted since the child-sum condition forces their failure
probabilities equal.  Cost grows with the branching depth, which is fine at
the circuit sizes this model family is used with.

The allocations optimize necessary conditions for delta-reliability, so the
totals are certified lower bounds and the allocations themselves heuristics,
not reliability guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy.optimize import brentq

from .bounds import ReliabilityTarget, invert_path_budget
from .circuits import GateTree, maximal_paths
from .energy import EnergyFailureModel, EXPONENTIAL, POLYNOMIAL


class AllocationError(ValueError):
    """Base class for allocation failures."""


class InfeasibleError(AllocationError):
    """The equal-path-sum system has no solution with eps <= eps0."""

    def __init__(self, message: str, gate: int | None = None):
        super().__init__(message)
        self.gate = gate


class ConvergenceError(AllocationError):
    """Iteration cap hit; carries the best iterate found."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class Allocation:
    """Per-gate failure probabilities and energies, indexed by gate id."""

    eps: tuple[float, ...]
    energy: tuple[float, ...]
    total_energy: float

    @classmethod
    def from_eps(cls, model: EnergyFailureModel, eps) -> "Allocation":
        energy = tuple(model.energy(e) for e in eps)
        return cls(tuple(eps), energy, sum(energy))


@dataclass(frozen=True)
class KKTReport:
    """Primal residuals of the optimality conditions (all relative)."""

    max_child_sum_residual: float
    max_path_residual: float
    budget_residual: float | None = None
    iterations: int = 0

    def certified(self, eta: float, theta: float | None = None) -> bool:
        """Child-sum and path-sum residuals within 10*eta; the budget
        residual (when present) within theta, the budget search accuracy."""
        ok = (self.max_child_sum_residual <= 10.0 * eta
              and self.max_path_residual <= 10.0 * eta)
        if self.budget_residual is not None:
            ok = ok and self.budget_residual <= (theta if theta is not None
                                                 else 10.0 * eta)
        return ok


class MaxReliabilityResult(NamedTuple):
    allocation: Allocation
    y_min: float
    delta_min: float
    kkt: KKTReport


def _as_path_budget(target) -> float:
    if isinstance(target, ReliabilityTarget):
        return target.path_budget
    return float(target)


def _check_tolerance(name: str, value: float) -> None:
    if not (0.0 < value <= 1e-2):
        raise ValueError(f"{name} must be in (0, 1e-2], got {value!r}")


# -- child-sum combiners -----------------------------------------------------

def _ratio_exponent(model: EnergyFailureModel, variant: str) -> float:
    """Exponent p such that the child-sum condition reads
    eps_parent**p = sum(eps_child**p)."""
    if model.family == EXPONENTIAL:
        return -1.0
    if model.family != POLYNOMIAL:
        raise ValueError(f"no homogeneous child-sum exponent for family {model.family!r}")
    if variant == "derivative":
        return -(1.0 + model.beta) / model.beta
    if variant == "printed":
        # The exponent 1/beta - 1 as printed alongside the polynomial family;
        # inconsistent with energy_prime, kept for diagnostics only.
        if model.beta == 1.0:
            raise ValueError("printed polynomial child-sum exponent is undefined at beta=1")
        return 1.0 / model.beta - 1.0
    raise ValueError(f"unknown child-sum variant {variant!r}")


def symmetric_level_ratio(k: int, model: EnergyFailureModel,
                          variant: str = "derivative") -> float:
    """Parent/child failure-probability ratio on a symmetric k-ary tree."""
    p = _ratio_exponent(model, variant)
    return float(k) ** (1.0 / p)


# -- exact solver for scale-invariant families -------------------------------

def _ratio_profile(tree: GateTree, model: EnergyFailureModel,
                   variant: str = "derivative") -> list[float]:
    """Per-gate eps for a unit path budget (the solution is linear in it)."""
    p = _ratio_exponent(model, variant)
    ratio = [0.0] * tree.n_gates     # eps_g / (subtree path-sum budget of g)
    child_frac = [0.0] * tree.n_gates
    for g in tree.gates:
        kids = g.gate_children()
        if not kids:
            ratio[g.id] = 1.0
            continue
        rho = sum(ratio[c] ** p for c in kids) ** (1.0 / p)
        ratio[g.id] = rho / (1.0 + rho)
        child_frac[g.id] = 1.0 / (1.0 + rho)
    profile = [0.0] * tree.n_gates
    budget = [0.0] * tree.n_gates
    budget[tree.root] = 1.0
    for g in reversed(tree.gates):
        profile[g.id] = ratio[g.id] * budget[g.id]
        for c in g.gate_children():
            budget[c] = budget[g.id] * child_frac[g.id]
    return profile


def _solve_ratio(tree, model, gamma, variant="derivative"):
    profile = _ratio_profile(tree, model, variant)
    eps = []
    for g, share in enumerate(profile):
        e = share * gamma
        if e > model.eps0 * (1.0 + 1e-12):
            raise InfeasibleError(
                f"gate {g}: optimal failure probability {e:.6g} exceeds eps0="
                f"{model.eps0:.6g}; the eps <= eps0 box constraint would bind", gate=g)
        eps.append(min(e, model.eps0))
    return eps, 2 * tree.n_gates


# -- nested bisection for the general (stretched-exponential) case -----------

def _child_sum_root(model, child_eps, counter) -> float:
    """Solve energy_prime(x) = sum(energy_prime(child_eps)) for x."""
    if len(child_eps) == 1:
        return child_eps[0]
    s = sum(model.energy_prime(e) for e in child_eps)
    hi = min(min(child_eps), model.eps0)
    if model.energy_prime(hi) - s <= 0.0:
        return hi
    lo = hi
    for _ in range(400):
        lo *= 0.1
        if model.energy_prime(lo) - s < 0.0:
            break
    else:
        raise ConvergenceError("child-sum bracket search failed")
    x, info = brentq(lambda t: model.energy_prime(t) - s, lo, hi,
                     rtol=1e-14, maxiter=200, full_output=True)
    counter[0] += info.iterations
    return float(x)


def _solve_nested(tree, model, gamma, eta):
    eps = [0.0] * tree.n_gates
    counter = [0]
    gate_children = [g.gate_children() for g in tree.gates]
    eps0 = model.eps0

    def solve(top: int, sigma: float) -> float:
        # Contract the run of single-gate-child nodes: the child-sum condition
        # forces them all to the same failure probability.
        segment = [top]
        cur = top
        while len(gate_children[cur]) == 1:
            cur = gate_children[cur][0]
            segment.append(cur)
        kids = gate_children[cur]
        count = len(segment)
        if not kids:
            x = sigma / count
            if x > eps0 * (1.0 + 1e-9):
                raise InfeasibleError(
                    f"gate {cur}: needs eps {x:.6g} > eps0 {eps0:.6g}", gate=cur)
            x = min(x, eps0)
            for gid in segment:
                eps[gid] = x
            return x

        def trial(sub_budget: float) -> tuple[float, float]:
            child_eps = [solve(c, sub_budget) for c in kids]
            x = _child_sum_root(model, child_eps, counter)
            return count * x + sub_budget - sigma, x

        lo, hi = sigma * 1e-12, sigma * (1.0 - 1e-12)
        best = None
        last_mid = None
        for _ in range(200):
            counter[0] += 1
            mid = 0.5 * (lo + hi)
            try:
                fval, x = trial(mid)
            except InfeasibleError:
                hi = mid
                last_mid = None
                continue
            last_mid = mid
            if best is None or abs(fval) < abs(best[1]):
                best = (mid, fval, x)
            if abs(fval) <= 1e-13 * sigma:
                break
            if fval < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * sigma:
                break
        if best is None:
            raise InfeasibleError(
                f"subtree at gate {top} cannot absorb path budget {sigma:.6g}", gate=top)
        mid, fval, x = best
        if abs(fval) > max(eta, 1e-9) * sigma:
            if fval < 0.0:
                raise InfeasibleError(
                    f"subtree at gate {top} cannot absorb path budget {sigma:.6g}; "
                    f"the eps <= eps0 box constraint would bind", gate=top)
            raise ConvergenceError(
                f"budget split at gate {top} did not converge (residual {fval:.3g})")
        if last_mid != mid:
            _, x = trial(mid)   # rewrite descendants at the accepted split
        for gid in segment:
            eps[gid] = x
        return x

    solve(tree.root, gamma)
    return eps, counter[0]


def _solve_eps(tree, model, gamma, eta, variant="derivative"):
    if model.family in (EXPONENTIAL, POLYNOMIAL):
        return _solve_ratio(tree, model, gamma, variant)
    if variant != "derivative":
        raise ValueError("child-sum variants exist only for the polynomial family")
    return _solve_nested(tree, model, gamma, eta)


# -- public operations --------------------------------------------------------

def certify_kkt(tree: GateTree, model: EnergyFailureModel, alloc: Allocation, *,
                path_budget: float | None = None,
                energy_budget: float | None = None,
                iterations: int = 0) -> KKTReport:
    """Relative residuals of the optimality conditions for an allocation."""
    child = 0.0
    for g in tree.gates:
        kids = g.gate_children()
        if not kids:
            continue
        lhs = model.energy_prime(alloc.eps[g.id])
        rhs = sum(model.energy_prime(alloc.eps[c]) for c in kids)
        child = max(child, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    path = 0.0
    if path_budget is not None:
        for p in maximal_paths(tree):
            s = sum(alloc.eps[g] for g in p)
            path = max(path, abs(s - path_budget) / path_budget)
    budget = None
    if energy_budget is not None:
        budget = abs(alloc.total_energy - energy_budget) / energy_budget
    return KKTReport(child, path, budget, iterations)


def min_energy_alloc(tree: GateTree, model: EnergyFailureModel, target, *,
                     eta: float = 1e-8) -> tuple[Allocation, KKTReport]:
    """Minimum-total-energy allocation meeting a per-path failure budget.

    ``target`` is a :class:`ReliabilityTarget` or a bare path budget.  The
    returned total energy is a certified lower bound on the energy of any
    delta-reliable realization of the tree; the allocation itself is the
    matching heuristic.  Rejects budgets so large that even zero-energy gates
    satisfy the shortest path's constraint (the problem is vacuous there).
    """
    _check_tolerance("eta", eta)
    gamma = _as_path_budget(target)
    if not math.isfinite(gamma) or gamma <= 0.0:
        raise ValueError(f"path budget must be finite and > 0, got {gamma!r}")
    min_len = min(len(p) for p in maximal_paths(tree))
    cap = model.eps0 * min_len
    if gamma > cap * (1.0 + 1e-12):
        raise InfeasibleError(
            f"path budget {gamma:.6g} >= eps0 * shortest path length = {cap:.6g}: "
            "the reliability constraint is vacuous (zero energy satisfies it)")
    eps, iterations = _solve_eps(tree, model, gamma, eta)
    alloc = Allocation.from_eps(model, eps)
    kkt = certify_kkt(tree, model, alloc, path_budget=gamma, iterations=iterations)
    return alloc, kkt


def printed_childsum_alloc(tree: GateTree, model: EnergyFailureModel,
                           target) -> Allocation:
    """Diagnostic allocation using the printed polynomial child-sum exponent.

    Satisfies equal path sums but not the derivative-consistent child-sum
    condition, so its total energy exceeds the true optimum; kept so the two
    exponent variants can be compared against an independent solver.
    """
    gamma = _as_path_budget(target)
    eps, _ = _solve_ratio(tree, model, gamma, variant="printed")
    return Allocation.from_eps(model, eps)


def _feasible_budget_cap(tree, model) -> float:
    """Largest path budget the equal-path-sum system can absorb."""
    min_len = min(len(p) for p in maximal_paths(tree))
    if model.family in (EXPONENTIAL, POLYNOMIAL):
        profile = _ratio_profile(tree, model)
        return model.eps0 / max(profile)
    # Stretched exponential: stay in the regime where boxes are provably
    # inactive (budget <= eps0, i.e. energy budget >= threshold_energy).
    return min(model.eps0, model.eps0 * min_len)


def max_reliability_alloc(tree: GateTree, model: EnergyFailureModel,
                          budget: float, *, theta: float = 1e-6,
                          eta: float = 1e-8) -> MaxReliabilityResult:
    """Best achievable path-sum (and its delta) for a total energy budget.

    Binary search over the path budget, re-solving the minimum-energy problem
    until the spent energy matches ``budget`` within ``theta`` relative; the
    two problems are inverses of each other, so the matched path budget is
    the optimum y_min(E).
    """
    _check_tolerance("theta", theta)
    _check_tolerance("eta", eta)
    if not math.isfinite(budget) or budget <= 0.0:
        raise ValueError(f"energy budget must be finite and > 0, got {budget!r}")

    iterations = 0

    def solve(gamma: float):
        nonlocal iterations
        eps, it = _solve_eps(tree, model, gamma, eta)
        iterations += it
        return eps

    hi = _feasible_budget_cap(tree, model) * (1.0 - 1e-12)
    eps_hi = solve(hi)
    e_hi = sum(model.energy(e) for e in eps_hi)
    if e_hi > budget * (1.0 + theta):
        raise InfeasibleError(
            f"budget {budget:.6g} is below the smallest solvable budget "
            f"{e_hi:.6g} for this tree (see threshold_energy for the point where "
            "the eps <= eps0 constraints go inactive)")

    lo = hi
    e_lo = e_hi
    for _ in range(200):
        if e_lo >= budget:
            break
        lo *= 0.5
        e_lo = sum(model.energy(e) for e in solve(lo))
    else:
        raise ConvergenceError("could not bracket the energy budget")

    gamma_star, eps_star, spent = hi, eps_hi, e_hi
    if abs(e_hi - budget) > theta * budget:
        converged = False
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            eps_mid = solve(mid)
            e_mid = sum(model.energy(e) for e in eps_mid)
            gamma_star, eps_star, spent = mid, eps_mid, e_mid
            if abs(e_mid - budget) <= theta * budget:
                converged = True
                break
            if e_mid > budget:
                lo = mid
            else:
                hi = mid
        if not converged:
            best = Allocation.from_eps(model, eps_star)
            raise ConvergenceError(
                f"budget search stalled at spent={spent:.6g} for budget={budget:.6g}",
                best=best)

    alloc = Allocation.from_eps(model, eps_star)
    kkt = certify_kkt(tree, model, alloc, path_budget=gamma_star,
                      energy_budget=budget, iterations=iterations)
    return MaxReliabilityResult(alloc, gamma_star, invert_path_budget(gamma_star), kkt)


def threshold_energy(tree: GateTree, model: EnergyFailureModel) -> float:
    """Energy above which the eps <= eps0 box constraints are inactive.

    Computed by running the minimum-energy allocation at a path budget equal
    to eps0.
    """
    alloc, _ = min_energy_alloc(tree, model, model.eps0)
    return alloc.total_energy


# -- closed forms for symmetric trees -----------------------------------------

@dataclass(frozen=True)
class SymmetricLevels:
    """Per-level optimum on a full k-ary tree; level 0 is the root."""

    k: int
    depth: int
    model: EnergyFailureModel
    level_eps: tuple[float, ...]
    level_counts: tuple[int, ...]
    path_sum: float
    total_energy: float
    level_ratio: float                 # eps(parent level) / eps(child level)
    printed_level_ratio: float | None  # the inconsistent printed variant

    def gate_eps(self, tree: GateTree) -> tuple[float, ...]:
        """Expand levels to per-gate eps for a matching balanced tree."""
        if tree.depth != self.depth:
            raise ValueError(f"tree depth {tree.depth} != levels depth {self.depth}")
        dist = [0] * tree.n_gates
        for g in reversed(tree.gates):
            for c in g.gate_children():
                dist[c] = dist[g.id] + 1
        return tuple(self.level_eps[dist[g]] for g in range(tree.n_gates))


def closed_form_symmetric(k: int, depth: int, model: EnergyFailureModel, *,
                          path_budget: float | None = None,
                          energy_budget: float | None = None) -> SymmetricLevels:
    """Exact per-level solution on a symmetric k-ary tree.

    Exactly one of ``path_budget`` (minimum-energy mode) and
    ``energy_budget`` (maximum-reliability mode) must be given.  Supports the
    exponential and polynomial families, whose level profile is geometric in
    the depth.
    """
    if (path_budget is None) == (energy_budget is None):
        raise ValueError("give exactly one of path_budget and energy_budget")
    if k < 2 or depth < 0:
        raise ValueError(f"need k >= 2 and depth >= 0, got k={k}, depth={depth}")
    if model.family not in (EXPONENTIAL, POLYNOMIAL):
        raise ValueError("closed forms exist for the exponential and polynomial families")

    ktilde = symmetric_level_ratio(k, model)
    printed = None
    if model.family == POLYNOMIAL and model.beta != 1.0:
        printed = symmetric_level_ratio(k, model, variant="printed")
    geo = (1.0 - ktilde ** (depth + 1)) / (1.0 - ktilde)
    counts = tuple(k ** i for i in range(depth + 1))
    n_gates = sum(counts)

    if path_budget is not None:
        if not (path_budget > 0.0):
            raise ValueError(f"path budget must be > 0, got {path_budget!r}")
        deepest = path_budget / geo
    elif model.family == EXPONENTIAL:
        # Invert the budget identity E = sum_i k^i * energy(eps(i)) with
        # eps(i) = eps(d) / k^(d-i).
        num = sum(k ** i * math.log(model.eps0 * k ** (depth - i))
                  for i in range(depth + 1))
        deepest = math.exp((num - model.c * energy_budget) / n_gates)
    else:
        b = model.beta
        t = sum(k ** i * ktilde ** ((i - depth) / b) for i in range(depth + 1))
        deepest = (model.eps0 ** (1.0 / b) * t / (energy_budget + n_gates)) ** b

    levels = tuple(deepest * ktilde ** (depth - i) for i in range(depth + 1))
    for i, e in enumerate(levels):
        if not (0.0 < e <= model.eps0 * (1.0 + 1e-12)):
            raise ValueError(
                f"level {i} failure probability {e:.6g} outside (0, eps0={model.eps0}]")
    levels = tuple(min(e, model.eps0) for e in levels)
    total = sum(c * model.energy(e) for c, e in zip(counts, levels))
    return SymmetricLevels(k, depth, model, levels, counts, sum(levels), total,
                           ktilde, printed)


# -- independent reference solver ---------------------------------------------

def oracle_min_energy(tree: GateTree, model: EnergyFailureModel,
                      target) -> Allocation:
    """Reference solution of the minimum-energy program for small trees.

    Solves the raw convex program (total energy subject to path-sum
    constraints and 0 < eps <= eps0) with SciPy's SLSQP, making no use of the
    child-sum machinery; used in tests to adjudicate the production solver.
    """
    if tree.n_gates > 12:
        raise ValueError(f"oracle capped at 12 gates, tree has {tree.n_gates}")
    from scipy.optimize import minimize
    import numpy as np

    gamma = _as_path_budget(target)
    paths = maximal_paths(tree)
    n = tree.n_gates

    # Optimize over z = log(eps).  The program stays convex and the steep
    # polynomial objectives become well conditioned.
    def objective(z):
        return sum(model.energy(math.exp(v)) for v in z)

    def gradient(z):
        return np.array([model.energy_prime(math.exp(v)) * math.exp(v) for v in z])

    masks = []
    for p in paths:
        mask = np.zeros(n)
        for g in p:
            mask[g] = 1.0
        masks.append(mask)
    constraints = [{
        "type": "ineq",
        "fun": (lambda z, m=mask: gamma - float(m @ np.exp(z))),
        "jac": (lambda z, m=mask: -m * np.exp(z)),
    } for mask in masks]
    depth_of = np.ones(n)
    for p in paths:
        for g in p:
            depth_of[g] = max(depth_of[g], len(p))
    import warnings
    x0 = np.log(gamma / (2.0 * depth_of))
    lo, hi = math.log(gamma * 1e-7), math.log(model.eps0)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Values in x were outside bounds")
        res = minimize(objective, np.minimum(x0, hi), jac=gradient, method="SLSQP",
                       bounds=[(lo, hi)] * n, constraints=constraints,
                       options={"maxiter": 2000, "ftol": 1e-14})
    if not res.success and res.status != 8:   # 8: linesearch stall at optimum
        raise ConvergenceError(f"reference solver failed: {res.message}")
    x = res.x

    if max(float(m @ np.exp(x)) for m in masks) > gamma * (1.0 + 1e-9):
        # SLSQP can land slightly outside the feasible set, biasing the
        # objective low; polish with the slower but feasibility-accurate
        # interior-point method.
        from scipy.optimize import NonlinearConstraint
        tc = [NonlinearConstraint(
                (lambda z, m=mask: float(m @ np.exp(z))), -np.inf, gamma,
                jac=(lambda z, m=mask: (m * np.exp(z)).reshape(1, -1)))
              for mask in masks]
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="delta_grad == 0.0")
            res = minimize(objective, x, jac=gradient, method="trust-constr",
                           bounds=[(lo, hi)] * n, constraints=tc,
                           options={"maxiter": 3000, "gtol": 1e-12, "xtol": 1e-14})
        x = res.x
    return Allocation.from_eps(model, [math.exp(float(v)) for v in x])
