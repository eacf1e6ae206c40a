"""Energy-failure models for unreliable logic gates.

A model maps the energy ``e`` spent by a single gate to its failure
probability ``failure(e)``, which decreases from ``eps0`` at zero energy
toward zero as the energy grows.  Three analytic families cover the usual
device behaviours:

* ``exp``   exponential decay        eps0 * exp(-c * e)
* ``poly``  polynomial decay         eps0 / (1 + e)**beta
* ``sexp``  stretched exponential    eps0 * exp(-c * e**beta)

Every family carries an exact inverse ``energy(eps)`` (the energy needed to
hit a target failure probability) and its exact derivative
``energy_prime(eps)``.  The allocation solvers call these in inner loops, so
they are analytic, never numeric inversions.

All three families are "physical": strictly decreasing, convex and
differentiable, with failure(0) = eps0 and failure(e) -> 0 as e -> inf.
``validate_physical`` certifies those properties numerically on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EXPONENTIAL = "exp"
POLYNOMIAL = "poly"
STRETCHED_EXP = "sexp"

FAMILIES = (EXPONENTIAL, POLYNOMIAL, STRETCHED_EXP)


class ModelError(ValueError):
    """Invalid model parameters, spec string, or out-of-domain query."""


@dataclass(frozen=True)
class EnergyFailureModel:
    """One gate's energy-to-failure-probability curve.

    ``eps0`` is the zero-energy failure probability; in practice it is at
    least 0.5 because an unpowered gate floats to a random output.  ``c`` is
    the decay rate (unused by the polynomial family) and ``beta`` the decay
    exponent (unused by the pure exponential family).
    """

    family: str
    eps0: float = 0.5
    c: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ModelError(f"unknown model family {self.family!r}")
        if not (0.0 < self.eps0 <= 1.0) or not math.isfinite(self.eps0):
            raise ModelError(f"eps0 must be in (0, 1], got {self.eps0!r}")
        if not (self.c > 0.0) or not math.isfinite(self.c):
            raise ModelError(f"c must be positive and finite, got {self.c!r}")
        if not (self.beta > 0.0) or not math.isfinite(self.beta):
            raise ModelError(f"beta must be positive and finite, got {self.beta!r}")
        if self.family == STRETCHED_EXP and self.beta > 1.0:
            raise ModelError(f"stretched-exponential beta must be <= 1, got {self.beta!r}")

    @classmethod
    def exponential(cls, eps0: float = 0.5, c: float = 1.0) -> "EnergyFailureModel":
        return cls(EXPONENTIAL, eps0, c, 1.0)

    @classmethod
    def polynomial(cls, eps0: float = 0.5, beta: float = 1.0) -> "EnergyFailureModel":
        return cls(POLYNOMIAL, eps0, 1.0, beta)

    @classmethod
    def stretched_exponential(cls, eps0: float = 0.5, c: float = 1.0,
                              beta: float = 0.5) -> "EnergyFailureModel":
        return cls(STRETCHED_EXP, eps0, c, beta)

    # -- forward curve ----------------------------------------------------

    def failure(self, e: float) -> float:
        """Failure probability of a gate that consumes energy ``e`` >= 0."""
        if not math.isfinite(e) or e < 0.0:
            raise ModelError(f"energy must be finite and >= 0, got {e!r}")
        if self.family == EXPONENTIAL:
            return self.eps0 * math.exp(-self.c * e)
        if self.family == POLYNOMIAL:
            return self.eps0 / (1.0 + e) ** self.beta
        return self.eps0 * math.exp(-self.c * e ** self.beta)

    # -- exact inverse and its derivative ---------------------------------

    def _check_eps(self, eps: float) -> float:
        if not math.isfinite(eps) or eps <= 0.0:
            raise ModelError(f"failure probability must be in (0, eps0], got {eps!r}")
        if eps > self.eps0:
            # Tolerate round-off overshoot from upstream arithmetic.
            if eps <= self.eps0 * (1.0 + 1e-9):
                return self.eps0
            raise ModelError(
                f"failure probability {eps!r} exceeds the model ceiling eps0={self.eps0!r}")
        return eps

    def energy(self, eps: float) -> float:
        """Energy required to reach failure probability ``eps`` in (0, eps0]."""
        eps = self._check_eps(eps)
        if self.family == EXPONENTIAL:
            return math.log(self.eps0 / eps) / self.c
        if self.family == POLYNOMIAL:
            return (self.eps0 / eps) ** (1.0 / self.beta) - 1.0
        return (math.log(self.eps0 / eps) / self.c) ** (1.0 / self.beta)

    def energy_prime(self, eps: float) -> float:
        """Exact derivative d energy / d eps.  Negative on (0, eps0)."""
        eps = self._check_eps(eps)
        if self.family == EXPONENTIAL:
            return -1.0 / (self.c * eps)
        if self.family == POLYNOMIAL:
            b = self.beta
            return -(1.0 / b) * self.eps0 ** (1.0 / b) * eps ** (-1.0 / b - 1.0)
        b = self.beta
        u = math.log(self.eps0 / eps) / self.c
        return -(1.0 / b) * u ** (1.0 / b - 1.0) / (self.c * eps)


# -- CLI / configuration spec strings -------------------------------------

def parse_model(spec: str) -> EnergyFailureModel:
    """Parse ``family:eps0:c`` / ``poly:eps0:beta`` / ``sexp:eps0:c:beta``."""
    parts = spec.strip().split(":")
    family = parts[0]
    if family not in FAMILIES:
        raise ModelError(f"unknown model family {family!r} in spec {spec!r}")
    want = {EXPONENTIAL: ("eps0", "c"),
            POLYNOMIAL: ("eps0", "beta"),
            STRETCHED_EXP: ("eps0", "c", "beta")}[family]
    if len(parts) - 1 != len(want):
        raise ModelError(
            f"model spec {spec!r} needs fields {':'.join(want)} after the family")
    values = {}
    for name, raw in zip(want, parts[1:]):
        try:
            values[name] = float(raw)
        except ValueError:
            raise ModelError(f"model spec field {name!r} is not a number: {raw!r}") from None
    if family == EXPONENTIAL:
        return EnergyFailureModel.exponential(values["eps0"], values["c"])
    if family == POLYNOMIAL:
        return EnergyFailureModel.polynomial(values["eps0"], values["beta"])
    return EnergyFailureModel.stretched_exponential(values["eps0"], values["c"], values["beta"])


def model_spec(model: EnergyFailureModel) -> str:
    """Inverse of :func:`parse_model`, used to echo models into reports."""
    g = lambda x: format(x, ".12g")
    if model.family == EXPONENTIAL:
        return f"exp:{g(model.eps0)}:{g(model.c)}"
    if model.family == POLYNOMIAL:
        return f"poly:{g(model.eps0)}:{g(model.beta)}"
    return f"sexp:{g(model.eps0)}:{g(model.c)}:{g(model.beta)}"


# -- numeric certification of the "physical" class ------------------------

@dataclass(frozen=True)
class PhysicalValidation:
    """Grid diagnostics for monotonicity, convexity and limit behaviour."""

    model: EnergyFailureModel
    grid_lo: float
    grid_hi: float
    points: int
    monotone_violations: int
    convexity_violations: int
    worst_convexity_gap: float
    low_limit_gap: float      # eps0 - failure(grid_lo), should be ~0
    high_limit_value: float   # failure(grid_hi), should be ~0

    @property
    def passed(self) -> bool:
        return (self.monotone_violations == 0
                and self.convexity_violations == 0
                and self.low_limit_gap <= 0.01 * self.model.eps0
                and self.high_limit_value <= 0.01 * self.model.eps0)


def validate_physical(model: EnergyFailureModel, *, grid_lo: float = 1e-6,
                      grid_hi: float = 1e6, points: int = 200) -> PhysicalValidation:
    """Sample the failure curve on a log grid and check the physical-class axioms.

    Convexity is checked through divided differences (the grid is not
    uniform), flagging slope decreases below -1e-12.  The limit checks are
    necessarily grid-bounded: very slow polynomial decays (beta well below
    ~0.5) reach the high end of the grid before coming within 1% of zero and
    are reported as such.
    """
    ratio = (grid_hi / grid_lo) ** (1.0 / (points - 1))
    es = [grid_lo * ratio ** i for i in range(points)]
    fs = [model.failure(e) for e in es]

    # Once the curve underflows to exactly 0.0 it has reached its limit;
    # equal zero tails are not monotonicity violations.
    monotone = sum(1 for a, b in zip(fs, fs[1:]) if a > 0.0 and not (a > b))
    convex = 0
    worst = 0.0
    for i in range(points - 2):
        s1 = (fs[i + 1] - fs[i]) / (es[i + 1] - es[i])
        s2 = (fs[i + 2] - fs[i + 1]) / (es[i + 2] - es[i + 1])
        gap = s2 - s1
        if gap < -1e-12:
            convex += 1
            worst = min(worst, gap)
    return PhysicalValidation(
        model=model, grid_lo=grid_lo, grid_hi=grid_hi, points=points,
        monotone_violations=monotone, convexity_violations=convex,
        worst_convexity_gap=worst,
        low_limit_gap=model.eps0 - fs[0],
        high_limit_value=fs[-1],
    )
