"""Service-rate control under periodic non-homogeneous Poisson arrivals.

The period [0, T) is cut into Z = T / dt slots.  States are ``(n, z)``; in
each slot at most one uniformized event (probability ``1 - exp(-nu dt)``)
moves the queue, and the clock then advances to ``z + dt`` (cyclically).
Because the clock is periodic the plain relative value iteration oscillates,
so the averaged map ``v <- (1 - tau) v + tau T v`` is iterated instead.

An approximating MMPP is built by averaging the rate over a partition of the
period and cycling through the pieces with exponential holding times whose
means equal the piece widths.  Its optimal policy, read off along the clock,
gives a "lifted" NHPP policy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .conjugate import ConjugatePair, psi
from .errors import DegeneratePartition, NonConvergence, Unstable, ValidationError
from .model import CostModel, PhaseProcess
from .solver import Policy, fmt

DAMPING = 0.5
MAX_NU_DT = 5.0


@dataclass(frozen=True)
class PiecewiseConstant:
    """Rate ``rates[i]`` on ``[breakpoints[i], breakpoints[i+1])``; breakpoints run from 0 to T."""

    breakpoints: tuple
    rates: tuple

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if b.ndim != 1 or r.ndim != 1 or b.size != r.size + 1 or r.size == 0:
            raise ValidationError("need len(breakpoints) == len(rates) + 1 >= 2")
        if b[0] != 0.0 or not np.all(np.diff(b) > 0):
            raise ValidationError("breakpoints must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValidationError("rates must be finite and non-negative")
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in b))
        object.__setattr__(self, "rates", tuple(float(x) for x in r))

    @classmethod
    def equal_levels(cls, rates: Sequence[float], period_T: float) -> "PiecewiseConstant":
        return cls(tuple(np.linspace(0.0, period_T, len(rates) + 1)), tuple(rates))

    @property
    def period_T(self) -> float:
        return self.breakpoints[-1]

    @property
    def max_rate(self) -> float:
        return max(self.rates)

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), self.period_T)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        out = np.asarray(self.rates)[np.clip(idx, 0, len(self.rates) - 1)]
        return out if out.ndim else float(out)

    def integral(self, a: float, b: float) -> float:
        """Integral of the rate over ``[a, b]`` with ``0 <= a <= b <= T``."""
        bp = np.asarray(self.breakpoints)
        lo = np.clip(bp[:-1], a, b)
        hi = np.clip(bp[1:], a, b)
        return float(np.sum((hi - lo) * np.asarray(self.rates)))


@dataclass(frozen=True)
class Sinusoid:
    """``amplitude * sin(2 pi t / T) + offset`` with ``offset >= amplitude >= 0``."""

    amplitude: float
    offset: float
    period_T: float

    def __post_init__(self):
        if not (self.period_T > 0 and math.isfinite(self.period_T)):
            raise ValidationError("period_T must be positive")
        if not 0 <= self.amplitude <= self.offset:
            raise ValidationError("need offset >= amplitude >= 0 so the rate stays non-negative")

    @property
    def max_rate(self) -> float:
        return self.amplitude + self.offset

    def __call__(self, t):
        out = self.amplitude * np.sin(2 * np.pi * np.asarray(t, dtype=float) / self.period_T) + self.offset
        return out if np.ndim(out) else float(out)

    def integral(self, a: float, b: float) -> float:
        w = 2 * np.pi / self.period_T
        return float(self.offset * (b - a) + self.amplitude / w * (np.cos(w * a) - np.cos(w * b)))


RateFunction = Union[PiecewiseConstant, Sinusoid]


def mean_rate(rate: RateFunction) -> float:
    return rate.integral(0.0, rate.period_T) / rate.period_T


@dataclass(frozen=True)
class NhppScenario:
    rate: RateFunction
    cost: CostModel
    delta_t: float
    truncation_N: int = 50
    tolerance: float = 1e-8
    max_iterations: int = 2_000_000

    def __post_init__(self):
        T = self.rate.period_T
        if not self.delta_t > 0:
            raise ValidationError("delta_t must be positive")
        slots = T / self.delta_t
        if abs(slots - round(slots)) > 1e-9 * max(1.0, slots) or round(slots) < 1:
            raise ValidationError(f"period {T} is not an integer number of slots of width {self.delta_t}")
        if int(self.truncation_N) < 2:
            raise ValidationError("truncation_N must be at least 2")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if not self.nu * self.delta_t < MAX_NU_DT:
            raise ValidationError(f"nu * delta_t = {self.nu * self.delta_t:.4g} must stay below {MAX_NU_DT}")
        self.cost.check_holding(int(self.truncation_N))

    @property
    def nu(self) -> float:
        return float(self.rate.max_rate + self.cost.u_max)

    @property
    def slots(self) -> int:
        return int(round(self.rate.period_T / self.delta_t))

    def z_grid(self) -> np.ndarray:
        return np.arange(self.slots) * self.delta_t

    def replace(self, **changes) -> "NhppScenario":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class NhppPolicy:
    """Service rates ``rates[n, k]`` at queue length ``n`` during slot ``k`` (clock ``k * delta_t``)."""

    rates: np.ndarray
    delta_t: float

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float)
        if rates.ndim != 2:
            raise ValueError("NHPP policy rates must be an (N+1) x Z matrix")
        if np.any(rates[0] != 0):
            raise ValueError("the server must idle in an empty queue")
        if np.any(rates < 0):
            raise ValueError("service rates must be non-negative")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    def z_grid(self) -> np.ndarray:
        return np.arange(self.rates.shape[1]) * self.delta_t


@dataclass
class NhppResult:
    policy: NhppPolicy
    gain: float
    residual: float
    iterations: int
    values: np.ndarray


class _SlotOperator:
    """One-slot Bellman map acting on all clock slots at once."""

    def __init__(self, sc: NhppScenario):
        self.sc = sc
        self.pair = ConjugatePair(sc.cost)
        N, dt, nu = sc.truncation_N, sc.delta_t, sc.nu
        self.move = -math.expm1(-nu * dt)  # P(an event in the slot)
        self.hdt = (np.asarray(sc.cost.holding(np.arange(N + 1)), dtype=float) * dt)[:, None]
        self.arrive = (self.move * np.asarray(sc.rate(sc.z_grid()), dtype=float) / nu)[None, :]
        self.price_scale = self.move / (nu * dt)

    def _next(self, v: np.ndarray):
        w = np.roll(v, -1, axis=1)  # w[:, k] = v[:, k+1 mod Z]
        up = np.empty_like(w)
        up[:-1] = w[1:] - w[:-1]
        up[-1] = 0.0  # arrivals blocked at N
        down = w[1:] - w[:-1]
        return w, up, down

    def greedy(self, v: np.ndarray) -> np.ndarray:
        _, _, down = self._next(v)
        mu = np.zeros_like(v)
        mu[1:] = psi(self.pair, self.price_scale * down)
        return mu

    def optimal(self, v: np.ndarray) -> np.ndarray:
        w, up, down = self._next(v)
        y = self.price_scale * down
        mu = np.asarray(psi(self.pair, y))
        conj = mu * y - np.asarray(self.sc.cost.service(mu))
        out = self.hdt + w + self.arrive * up
        out[1:] -= self.sc.delta_t * conj
        return out

    def fixed(self, v: np.ndarray, rates: np.ndarray, service_cost: np.ndarray) -> np.ndarray:
        w, up, down = self._next(v)
        out = self.hdt + w + self.arrive * up
        out[1:] += self.sc.delta_t * service_cost[1:] - (self.move / self.sc.nu) * rates[1:] * down
        return out


def _damped_rvi(sc: NhppScenario, step, tau: float = DAMPING):
    v = np.zeros((sc.truncation_N + 1, sc.slots))
    dt = sc.delta_t
    for k in range(1, sc.max_iterations + 1):
        new = (1.0 - tau) * v + tau * step(v)
        diff = new - v
        lo, hi = float(diff.min()), float(diff.max())
        if (hi - lo) / tau < sc.tolerance * dt:
            gain = 0.5 * (lo + hi) / (tau * dt)
            return v, gain, (hi - lo) / (tau * dt), k
        v = new - new[0, 0]
    raise NonConvergence(f"damped relative value iteration did not converge in {sc.max_iterations} sweeps")


def solve_nhpp_average(sc: NhppScenario) -> NhppResult:
    avg = mean_rate(sc.rate)
    if not sc.cost.u_max > avg:
        raise Unstable(f"u_max={sc.cost.u_max} does not exceed the time-averaged rate {avg:.6g}")
    op = _SlotOperator(sc)
    v, gain, residual, k = _damped_rvi(sc, op.optimal)
    return NhppResult(NhppPolicy(op.greedy(v), sc.delta_t), gain, residual, k, v)


def evaluate_nhpp_policy(sc: NhppScenario, policy: NhppPolicy) -> float:
    """Long-run cost per unit time of a slot-indexed policy."""
    rates = np.asarray(policy.rates)
    if rates.shape != (sc.truncation_N + 1, sc.slots):
        raise ValueError(f"policy shape {rates.shape} does not match ({sc.truncation_N + 1}, {sc.slots})")
    avg = mean_rate(sc.rate)
    if not float(rates[-1].mean()) > avg:
        raise Unstable("time-averaged service rate at the top queue level does not exceed the arrival rate")
    op = _SlotOperator(sc)
    service_cost = np.asarray(sc.cost.service(rates), dtype=float)
    _, gain, _, _ = _damped_rvi(sc, lambda v: op.fixed(v, rates, service_cost))
    return float(gain)


def partition_points(rate: RateFunction, partitions: int, cut_points: Optional[Sequence[float]] = None) -> np.ndarray:
    """Boundaries ``0 = t_0 < ... < t_l = T``.

    ``cut_points`` may list only the interior points (length ``l - 1``) or all
    ``l + 1`` boundaries.
    """
    T = rate.period_T
    l = int(partitions)
    if l < 1:
        raise DegeneratePartition("need at least one partition")
    if cut_points is None:
        t = np.linspace(0.0, T, l + 1)
    else:
        c = np.asarray(cut_points, dtype=float)
        if c.size == l - 1:
            t = np.concatenate([[0.0], c, [T]])
        elif c.size == l + 1 and c[0] == 0.0 and math.isclose(c[-1], T):
            t = c.copy()
            t[-1] = T
        else:
            raise DegeneratePartition(f"{c.size} cut points do not describe {l} partitions of [0, {T}]")
    widths = np.diff(t)
    if np.any(widths <= 0):
        raise DegeneratePartition(f"partition widths must be positive, got {widths.tolist()}")
    return t


def build_mmpp_approximation(
    rate: RateFunction, partitions: int, cut_points: Optional[Sequence[float]] = None
) -> PhaseProcess:
    """Cyclic MMPP whose phase s carries the average rate over the s-th piece of the period."""
    t = partition_points(rate, partitions, cut_points)
    widths = np.diff(t)
    l = widths.size
    lambdas = np.array([rate.integral(t[i], t[i + 1]) / widths[i] for i in range(l)])
    Q = np.zeros((l, l))
    if l > 1:
        for i in range(l):
            Q[i, (i + 1) % l] = 1.0 / widths[i]
            Q[i, i] = -1.0 / widths[i]
    return PhaseProcess(Q, lambdas, sort=False)


def lift_policy(mmpp_policy: Policy, cut_points: Sequence[float], sc: NhppScenario) -> NhppPolicy:
    """Run the phase-s column of the MMPP policy while the clock is in ``[t_{s-1}, t_s)``."""
    rates = np.asarray(mmpp_policy.rates)
    l = rates.shape[1]
    t = partition_points(sc.rate, l, cut_points)
    if rates.shape[0] != sc.truncation_N + 1:
        raise ValueError("MMPP policy and NHPP scenario use different truncation levels")
    # a small relative guard keeps z = t_s from landing in piece s through round-off
    z = sc.z_grid() * (1 + 1e-12) + 1e-15
    s = np.clip(np.searchsorted(t, z, side="right") - 1, 0, l - 1)
    return NhppPolicy(rates[:, s], sc.delta_t)


def write_nhpp_policy_csv(path, policy: NhppPolicy) -> None:
    z = policy.z_grid()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "z", "mu"])
        for n in range(policy.rates.shape[0]):
            for k in range(policy.rates.shape[1]):
                w.writerow([n, fmt(z[k]), fmt(policy.rates[n, k])])
