"""Problem data for the MMPP/M/1 service-rate control model.

A :class:`Scenario` bundles the phase process (generator and per-phase
arrival rates), the cost model and the numerical settings.  Everything here
is immutable; the solvers only read from these objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import SingularSystem, ValidationError

ROW_SUM_TOL = 1e-12

# Queue-length truncation at n = N:
#   "block": an arrival in state N is lost (self-loop); a proper finite chain.
#   "extrapolate": values beyond N continue linearly, v(N+1) = 2 v(N) - v(N-1),
#       which keeps the value function convex up to the boundary.
BOUNDARIES = ("extrapolate", "block")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Service (effort) cost families
# ---------------------------------------------------------------------------


class ServiceCost:
    """Strictly convex, increasing cost rate c(mu) of running the server."""

    name = "abstract"

    def __call__(self, mu):
        raise NotImplementedError

    def derivative(self, mu):
        raise NotImplementedError

    def inverse_derivative(self, y):
        """Analytic (c')^{-1}, or ``None`` when only bisection is available."""
        return None

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class ExponentialCost(ServiceCost):
    """c(mu) = exp(mu) - 1."""

    name = "exponential"

    def __call__(self, mu):
        return np.expm1(mu)

    def derivative(self, mu):
        return np.exp(mu)

    def inverse_derivative(self, y):
        return np.log(y)


@dataclass(frozen=True)
class QuadraticCost(ServiceCost):
    """c(mu) = mu**2 / 2 + offset.

    The offset moves c but not c', so the optimal rate is unaffected by it.
    """

    offset: float = 0.0
    name = "quadratic"

    def __call__(self, mu):
        return 0.5 * np.square(mu) + self.offset

    def derivative(self, mu):
        return np.asarray(mu, dtype=float) * 1.0

    def inverse_derivative(self, y):
        return np.asarray(y, dtype=float) * 1.0

    def params(self) -> dict:
        return {"offset": self.offset}


@dataclass(frozen=True)
class PowerSeriesCost(ServiceCost):
    """c(mu) = sum_k a_k mu**k with non-negative coefficients a_0, a_1, ..."""

    coefficients: tuple
    name = "power_series"

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coefficients)
        if any(a < 0 for a in coeffs):
            raise ValidationError("power series coefficients must be non-negative")
        if not any(a > 0 for a in coeffs[2:]):
            raise ValidationError("power series cost needs a positive coefficient of degree >= 2")
        object.__setattr__(self, "coefficients", coeffs)

    def __call__(self, mu):
        return np.polynomial.polynomial.polyval(mu, self.coefficients)

    def derivative(self, mu):
        d = np.polynomial.polynomial.polyder(self.coefficients)
        return np.polynomial.polynomial.polyval(mu, d)

    def params(self) -> dict:
        return {"coefficients": list(self.coefficients)}


# ---------------------------------------------------------------------------
# Holding cost families
# ---------------------------------------------------------------------------


class HoldingCost:
    """Non-decreasing convex holding cost rate h(n)."""

    name = "abstract"

    def __call__(self, n):
        raise NotImplementedError

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class LinearHolding(HoldingCost):
    name = "linear"

    def __call__(self, n):
        return np.asarray(n, dtype=float) * 1.0


@dataclass(frozen=True)
class ShiftedLinearHolding(HoldingCost):
    """h(n) = (n - k)^+."""

    k: int = 0
    name = "shifted_linear"

    def __post_init__(self):
        if self.k < 0 or int(self.k) != self.k:
            raise ValidationError("shift k must be a non-negative integer")

    def __call__(self, n):
        return np.maximum(np.asarray(n, dtype=float) - self.k, 0.0)

    def params(self) -> dict:
        return {"k": int(self.k)}


@dataclass(frozen=True)
class PowerHolding(HoldingCost):
    """h(n) = C * n**p."""

    C: float = 1.0
    p: int = 1
    name = "power"

    def __post_init__(self):
        if self.C < 0:
            raise ValidationError("holding coefficient C must be >= 0")
        if self.p < 1 or int(self.p) != self.p:
            raise ValidationError("holding exponent p must be a positive integer")

    def __call__(self, n):
        return self.C * np.power(np.asarray(n, dtype=float), int(self.p))

    def params(self) -> dict:
        return {"C": self.C, "p": int(self.p)}


@dataclass(frozen=True)
class CostModel:
    service: ServiceCost
    holding: HoldingCost
    u_max: float

    def __post_init__(self):
        if not (self.u_max > 0 and math.isfinite(self.u_max)):
            raise ValidationError("u_max must be a positive finite number")
        grid = np.linspace(0.0, self.u_max, 257)
        dc = np.asarray(self.service.derivative(grid), dtype=float)
        if not np.all(np.isfinite(dc)) or np.any(np.diff(dc) <= 0):
            raise ValidationError("service cost derivative must be strictly increasing on [0, u_max]")
        if dc[0] < 0:
            raise ValidationError("service cost must be non-decreasing at 0")

    def check_holding(self, N: int) -> None:
        h = np.asarray(self.holding(np.arange(N + 1)), dtype=float)
        if h[0] != 0:
            raise ValidationError("holding cost must vanish at n = 0")
        d = np.diff(h)
        if np.any(d < -1e-12) or np.any(np.diff(d) < -1e-9 * (1 + np.abs(h[2:]))):
            raise ValidationError("holding cost must be non-decreasing and convex")


# ---------------------------------------------------------------------------
# Phase process
# ---------------------------------------------------------------------------


def is_irreducible(Q: np.ndarray) -> bool:
    adjacency = (Q > 0) & ~np.eye(len(Q), dtype=bool)
    n_comp, _ = connected_components(adjacency, directed=True, connection="strong")
    return n_comp == 1


@dataclass(frozen=True)
class PhaseProcess:
    """Modulating CTMC with generator ``Q`` and arrival rate ``lambdas[s]`` in phase s.

    Phases are re-ordered so that ``lambdas`` is non-decreasing unless
    ``sort=False``; ``permutation[i]`` is the input index of sorted phase i.
    """

    Q: np.ndarray
    lambdas: np.ndarray
    sort: bool = True
    permutation: tuple = field(init=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        lam = np.array(self.lambdas, dtype=float).ravel()
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != lam.size or lam.size == 0:
            raise ValidationError(f"Q must be L x L matching {lam.size} arrival rates")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(lam))):
            raise ValidationError("Q and lambdas must be finite")
        if np.any(lam < 0):
            raise ValidationError("arrival rates must be non-negative")
        off = Q[~np.eye(len(Q), dtype=bool)]
        if np.any(off < 0):
            raise ValidationError("off-diagonal generator entries must be >= 0")
        if np.any(np.diag(Q) > 0):
            raise ValidationError("diagonal generator entries must be <= 0")
        if np.max(np.abs(Q.sum(axis=1))) > ROW_SUM_TOL * max(1.0, np.abs(Q).max()):
            raise ValidationError("generator rows must sum to zero")
        if not is_irreducible(Q):
            raise ValidationError("phase process is not irreducible")
        if self.sort:
            perm = np.argsort(lam, kind="stable")
        else:
            perm = np.arange(lam.size)
        object.__setattr__(self, "Q", _frozen(Q[np.ix_(perm, perm)]))
        object.__setattr__(self, "lambdas", _frozen(lam[perm]))
        object.__setattr__(self, "permutation", tuple(int(i) for i in perm))

    @property
    def L(self) -> int:
        return self.lambdas.size

    @classmethod
    def from_rates(cls, rates: np.ndarray, lambdas: Sequence[float], sort: bool = True) -> "PhaseProcess":
        """Build the generator from an off-diagonal rate matrix."""
        R = np.array(rates, dtype=float)
        np.fill_diagonal(R, 0.0)
        return cls(R - np.diag(R.sum(axis=1)), lambdas, sort=sort)


@dataclass(frozen=True)
class Scenario:
    phase: PhaseProcess
    cost: CostModel
    truncation_N: int = 50
    alpha: float = 0.0
    tolerance: float = 1e-8
    uniformization_slack: float = 1.0
    max_iterations: int = 1_000_000
    boundary: str = "extrapolate"

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValidationError(f"boundary must be one of {BOUNDARIES}")
        if int(self.truncation_N) != self.truncation_N or self.truncation_N < 2:
            raise ValidationError("truncation_N must be an integer >= 2")
        if self.alpha < 0:
            raise ValidationError("alpha must be non-negative")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.uniformization_slack < 0:
            raise ValidationError("uniformization_slack must be non-negative")
        self.cost.check_holding(self.truncation_N)

    def replace(self, **changes) -> "Scenario":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class UniformizedModel:
    scenario: Scenario
    eta_bar: float
    slack: float
    nu: float
    Q_bar: np.ndarray


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    mean_rate: float
    u_max: float


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def stationary_generator_solve(G: np.ndarray) -> np.ndarray:
    """Stationary law of a dense irreducible generator (one balance row replaced by normalization)."""
    n = G.shape[0]
    A = np.array(G, dtype=float).T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        p = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(p)):
        raise SingularSystem("non-finite stationary distribution")
    return p


def stationary_distribution(phase: PhaseProcess) -> np.ndarray:
    p = stationary_generator_solve(phase.Q)
    if np.any(p <= 0):
        raise SingularSystem("stationary distribution has non-positive mass")
    return p / p.sum()


def mean_arrival_rate(phase: PhaseProcess) -> float:
    return float(stationary_distribution(phase) @ phase.lambdas)


def stability_check(scenario: Scenario) -> StabilityReport:
    mean = mean_arrival_rate(scenario.phase)
    u = float(scenario.cost.u_max)
    return StabilityReport(stable=u > mean, mean_rate=mean, u_max=u)


def uniformize(scenario: Scenario, slack: Optional[float] = None) -> UniformizedModel:
    phase = scenario.phase
    kappa = scenario.uniformization_slack if slack is None else float(slack)
    eta = float(np.max(-np.diag(phase.Q)))
    nu = float(phase.lambdas.max()) + eta + scenario.cost.u_max + kappa
    Q_bar = _frozen(eta * np.eye(phase.L) + phase.Q)
    return UniformizedModel(scenario=scenario, eta_bar=eta, slack=kappa, nu=nu, Q_bar=Q_bar)
