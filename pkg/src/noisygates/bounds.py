"""Lower bounds on total energy when every gate shares one operating point.

The reliability target delta maps to a per-path failure budget
``path_budget = (1/4) ln(1/(1 - h(delta)))``: any delta-reliable realization
must keep the sum of gate failure probabilities below it along every
input-to-root path.  Combining that with the gate count gives

* a realization-specific bound  |V| * energy(budget / longest_path), and
* the function-agnostic bound   (n/k) * energy(budget * ln k / ln n)
  over all n-input functions built from gates of arity at most k < n,

plus the printed closed forms of the latter for the stretched-exponential
and polynomial families.  Degenerate regimes are reported as flags rather
than exceptions so parameter sweeps stay total: delta = 0 needs infinite
energy, while a budget above eps0 makes the constraint vacuous (bound 0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.optimize import brentq

from .circuits import GateTree, maximal_paths
from .energy import EnergyFailureModel, EXPONENTIAL, POLYNOMIAL, model_spec
from .info import binary_entropy

GRAPH_BOUND = "graph"
UNIVERSAL_BOUND = "universal"
UNIVERSAL_CLOSED_FORM = "universal-closed-form"

SATURATED_DELTA = 0.5 - 1e-12


@dataclass(frozen=True)
class ReliabilityTarget:
    """delta together with its error entropy h(delta) and per-path budget."""

    delta: float
    error_entropy: float
    path_budget: float

    @classmethod
    def from_delta(cls, delta: float) -> "ReliabilityTarget":
        if not (0.0 <= delta < 0.5):
            raise ValueError(f"delta must be in [0, 0.5), got {delta!r}")
        h = binary_entropy(delta)
        budget = -0.25 * math.log1p(-h)
        return cls(delta, h, budget)

    @classmethod
    def from_path_budget(cls, budget: float) -> "ReliabilityTarget":
        delta = invert_path_budget(budget)
        return cls(delta, binary_entropy(delta), budget)


def invert_path_budget(budget: float) -> float:
    """The delta whose path budget equals the given value.

    Saturates at delta = 0.5 - 1e-12 (with a RuntimeWarning) once the budget
    is so large that 1 - exp(-4*budget) rounds to 1.
    """
    if not math.isfinite(budget) or budget < 0.0:
        raise ValueError(f"path budget must be finite and >= 0, got {budget!r}")
    if budget == 0.0:
        return 0.0
    h_target = -math.expm1(-4.0 * budget)
    if h_target >= 1.0 - 1e-15:
        warnings.warn(f"path budget {budget} saturates delta at 0.5", RuntimeWarning)
        return SATURATED_DELTA
    return float(brentq(lambda d: binary_entropy(d) - h_target, 0.0, 0.5,
                        xtol=1e-12, maxiter=200))


@dataclass(frozen=True)
class BoundReport:
    bound_energy: float
    bound_kind: str
    n: int
    k: int
    max_path_len: int | None
    model: EnergyFailureModel
    target: ReliabilityTarget
    infinite: bool = False
    vacuous: bool = False

    @property
    def bound_per_input(self) -> float:
        return self.bound_energy / self.n


def _finish(arg: float, scale: float, kind: str, n, k, max_path, model, target) -> BoundReport:
    """Common flag handling: arg is the failure probability fed to energy()."""
    if arg <= 0.0:
        return BoundReport(math.inf, kind, n, k, max_path, model, target, infinite=True)
    if arg > model.eps0:
        return BoundReport(0.0, kind, n, k, max_path, model, target, vacuous=True)
    return BoundReport(scale * model.energy(arg), kind, n, k, max_path, model, target)


def circuit_energy_bound(tree: GateTree, model: EnergyFailureModel,
                         target: ReliabilityTarget) -> BoundReport:
    """Realization-specific lower bound |V| * energy(budget / longest path)."""
    max_path = max(len(p) for p in maximal_paths(tree))
    arg = target.path_budget / max_path
    return _finish(arg, tree.n_gates, GRAPH_BOUND, tree.n_inputs, tree.k_max,
                   max_path, model, target)


def universal_energy_bound(n: int, k: int, model: EnergyFailureModel,
                           target: ReliabilityTarget) -> BoundReport:
    """Function-agnostic bound (n/k) * energy(budget * ln k / ln n), k < n."""
    if not (2 <= k < n):
        raise ValueError(f"need 2 <= k < n, got k={k}, n={n}")
    arg = target.path_budget * math.log(k) / math.log(n)
    return _finish(arg, n / k, UNIVERSAL_BOUND, n, k, None, model, target)


def universal_energy_bound_printed(n: int, k: int, model: EnergyFailureModel,
                                   target: ReliabilityTarget) -> BoundReport:
    """The closed forms exactly as printed for the two device families.

    The polynomial form drops the per-gate "-1" of the exact inverse, so it
    exceeds :func:`universal_energy_bound` by exactly n/k; both numbers are
    reported on purpose.  The pure exponential family is the beta = 1
    stretched-exponential case, for which the closed form is exact.
    """
    if not (2 <= k < n):
        raise ValueError(f"need 2 <= k < n, got k={k}, n={n}")
    kind = UNIVERSAL_CLOSED_FORM
    if target.error_entropy >= 1.0 or target.path_budget == 0.0:
        return BoundReport(math.inf, kind, n, k, None, model, target, infinite=True)
    log_ratio = 4.0 * target.path_budget   # ln(1/(1 - h(delta)))
    if model.family == POLYNOMIAL:
        inner = 4.0 * model.eps0 * math.log(n) / (math.log(k) * log_ratio)
        if inner <= 0.0:
            return BoundReport(0.0, kind, n, k, None, model, target, vacuous=True)
        return BoundReport((n / k) * inner ** (1.0 / model.beta), kind, n, k,
                           None, model, target)
    beta = 1.0 if model.family == EXPONENTIAL else model.beta
    bracket = math.log(4.0 * model.eps0 * math.log(n) / math.log(k)) - math.log(log_ratio)
    if bracket <= 0.0:
        return BoundReport(0.0, kind, n, k, None, model, target, vacuous=True)
    scale = n / (k * model.c ** (1.0 / beta))
    return BoundReport(scale * bracket ** (1.0 / beta), kind, n, k, None, model, target)


@dataclass(frozen=True)
class ScalingRow:
    n: int
    bound_energy: float
    bound_per_input: float


def scaling_table(model: EnergyFailureModel, k: int, delta: float,
                  ns) -> list[ScalingRow]:
    """Universal bound across input counts; exhibits the superlinear growth."""
    target = ReliabilityTarget.from_delta(delta)
    rows = []
    for n in ns:
        rep = universal_energy_bound(n, k, model, target)
        rows.append(ScalingRow(n, rep.bound_energy, rep.bound_per_input))
    return rows


def format_bound_csv(reports) -> str:
    """CSV rows (n, k, delta, model, kind, bound, bound_per_input)."""
    lines = ["n,k,delta,model,kind,bound,bound_per_input"]
    for r in reports:
        lines.append(",".join([
            str(r.n), str(r.k), format(r.target.delta, ".12g"), model_spec(r.model),
            r.bound_kind, format(r.bound_energy, ".12g"),
            format(r.bound_per_input, ".12g")]))
    return "\n".join(lines) + "\n"
