"""Simple comparison policies for the MMPP/M/1 control problem.

* ARM (average rate method): the optimal M/M/1 policy for the long-run mean
  arrival rate, applied in every phase.
* PRM (phase rate method): in phase s, the optimal M/M/1 policy for rate
  lambda_s.
* Fixed rate: the best single service rate, run regardless of the state
  (the server pays c(mu) even when the queue is empty).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import Unstable
from .model import PhaseProcess, Scenario, mean_arrival_rate
from .solver import Policy, evaluate_policy, fmt, solve_average, stationary_state_distribution

HEURISTICS = ("arm", "prm", "fixed")
COMPARISON_HEADER = ["case", "c", "optimal", "arm", "arm_pct", "prm", "prm_pct", "fixed", "fixed_pct"]

INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class HeuristicGain:
    gain: float
    pct_suboptimal: float


@dataclass
class ComparisonRow:
    label: str
    optimal_gain: float
    heuristic_gains: Dict[str, HeuristicGain] = field(default_factory=dict)

    def add(self, name: str, gain: float) -> None:
        pct = 100.0 * (gain - self.optimal_gain) / self.optimal_gain
        self.heuristic_gains[name] = HeuristicGain(float(gain), pct)

    def csv_fields(self, case: str, c) -> list:
        out = [case, fmt(c) if not isinstance(c, str) else c, fmt(self.optimal_gain)]
        for name in HEURISTICS:
            hg = self.heuristic_gains[name]
            out += [fmt(hg.gain), fmt(hg.pct_suboptimal)]
        return out


@dataclass(frozen=True)
class FixedRateResult:
    mu_star: float
    gain: float


def single_phase_scenario(scenario: Scenario, rate: float) -> Scenario:
    """The stationary M/M/1 problem with Poisson arrivals at ``rate`` and the same costs."""
    return scenario.replace(phase=PhaseProcess(np.zeros((1, 1)), [rate]))


def _single_phase_rates(scenario: Scenario, rate: float) -> np.ndarray:
    if not scenario.cost.u_max > rate:
        raise Unstable(f"u_max={scenario.cost.u_max} does not exceed arrival rate {rate:.6g}")
    return np.asarray(solve_average(single_phase_scenario(scenario, rate)).policy.rates[:, 0])


def arm_policy(scenario: Scenario) -> Policy:
    mu = _single_phase_rates(scenario, mean_arrival_rate(scenario.phase))
    return Policy(np.tile(mu[:, None], (1, scenario.phase.L)))


def prm_policy(scenario: Scenario) -> Policy:
    lam = scenario.phase.lambdas
    for s, rate in enumerate(lam, start=1):
        if not scenario.cost.u_max > rate:
            raise Unstable(f"phase {s}: u_max={scenario.cost.u_max} does not exceed lambda_{s}={rate:.6g}")
    cache: Dict[float, np.ndarray] = {}
    cols = []
    for rate in lam:
        if float(rate) not in cache:
            cache[float(rate)] = _single_phase_rates(scenario, float(rate))
        cols.append(cache[float(rate)])
    return Policy(np.column_stack(cols))


def fixed_rate_gain(scenario: Scenario, mu: float) -> float:
    """Average cost when the server always runs at ``mu``.

    Uses the stationary distribution of the truncated chain (arrivals blocked
    at N); effort cost ``c(mu)`` accrues in every state.
    """
    N, L = scenario.truncation_N, scenario.phase.L
    pi = stationary_state_distribution(scenario, Policy.constant(mu, N, L).rates)
    h = np.asarray(scenario.cost.holding(np.arange(N + 1)), dtype=float)
    return float(pi.sum(axis=1) @ h + scenario.cost.service(mu))


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-4) -> Tuple[float, float]:
    """Minimize a unimodal ``f`` on [a, b]; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def fixed_rate_policy(
    scenario: Scenario, truncation_N: Optional[int] = None, grid_points: int = 64, tol: float = 1e-4
) -> FixedRateResult:
    """Best constant service rate in (mean arrival rate, u_max].

    A coarse scan picks the bracket, then golden-section search refines it.
    """
    if truncation_N is not None:
        scenario = scenario.replace(truncation_N=truncation_N)
    lo = mean_arrival_rate(scenario.phase)
    hi = float(scenario.cost.u_max)
    if not hi > lo:
        raise Unstable(f"u_max={hi} does not exceed mean arrival rate {lo:.6g}")
    grid = np.linspace(lo, hi, grid_points + 1)[1:]
    values = [fixed_rate_gain(scenario, m) for m in grid]
    k = int(np.argmin(values))
    a = grid[k - 1] if k > 0 else lo + 1e-12 * max(1.0, hi)
    b = grid[min(k + 1, grid_points - 1)]
    x, fx = golden_section(lambda m: fixed_rate_gain(scenario, m), a, b, tol)
    if values[k] <= fx:
        x, fx = grid[k], values[k]
    return FixedRateResult(mu_star=float(x), gain=float(fx))


def compare_heuristics(scenario: Scenario, label: str = "", fixed_truncation_N: Optional[int] = None) -> ComparisonRow:
    optimal = solve_average(scenario)
    row = ComparisonRow(label=label, optimal_gain=float(optimal.gain))
    row.add("arm", evaluate_policy(scenario, arm_policy(scenario)))
    row.add("prm", evaluate_policy(scenario, prm_policy(scenario)))
    row.add("fixed", fixed_rate_policy(scenario, truncation_N=fixed_truncation_N).gain)
    return row
