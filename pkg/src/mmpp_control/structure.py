"""Stochastic monotonicity of phase generators and monotonicity checks on policies."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .model import PhaseProcess
from .solver import Policy, fmt

GENERATOR_TOL = 1e-12
POLICY_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    n: int
    s: int  # 1-based phase index
    value_low: float
    value_high: float


@dataclass(frozen=True)
class MonotonicityReport:
    direction: str
    violations: List[Violation] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return not self.violations

    def queue_lengths(self) -> set:
        return {v.n for v in self.violations}

    def summary(self) -> str:
        if self.monotone:
            return f"monotone in {self.direction}: yes"
        ns = sorted(self.queue_lengths())
        return f"monotone in {self.direction}: no ({len(self.violations)} violations at n={ns})"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "s", "mu_low", "mu_high"])
            for v in self.violations:
                w.writerow([v.n, v.s, fmt(v.value_low), fmt(v.value_high)])
            fh.write(f"# {self.summary()}\n")


def tail_transform(Q: np.ndarray) -> np.ndarray:
    """``T^{-1} Q T`` with ``T`` lower-triangular ones."""
    L = len(Q)
    T = np.tril(np.ones((L, L)))
    T_inv = np.eye(L) - np.eye(L, k=-1)
    return T_inv @ np.asarray(Q, dtype=float) @ T


def check_generator_monotone(phase: PhaseProcess) -> bool:
    """True iff the phase CTMC is stochastically monotone in the phase order."""
    M = tail_transform(phase.Q)
    off = ~np.eye(len(M), dtype=bool)
    return bool(np.all(M[off] >= -GENERATOR_TOL))


def _rates(policy) -> np.ndarray:
    return policy.rates if isinstance(policy, Policy) else np.asarray(policy, dtype=float)


def verify_monotone_in_n(policy) -> MonotonicityReport:
    mu = _rates(policy)
    bad = np.argwhere(mu[1:] < mu[:-1] - POLICY_TOL)
    return MonotonicityReport(
        "n", [Violation(int(n), int(s) + 1, float(mu[n, s]), float(mu[n + 1, s])) for n, s in bad]
    )


def verify_monotone_in_s(policy) -> MonotonicityReport:
    mu = _rates(policy)
    bad = np.argwhere(mu[:, 1:] < mu[:, :-1] - POLICY_TOL)
    return MonotonicityReport(
        "s", [Violation(int(n), int(s) + 1, float(mu[n, s]), float(mu[n, s + 1])) for n, s in bad]
    )
