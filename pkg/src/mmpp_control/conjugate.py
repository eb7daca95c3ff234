"""Convex conjugate of the service cost restricted to [0, u_max].

``phi(y) = max_{mu in [0, u]} {mu*y - c(mu)}`` and ``psi(y)`` is the maximizer.
Both turn the per-state minimization over service rates into a closed form:
for a price ``y`` (a first difference of the value function),
``min_mu {c(mu) - mu*y} = -phi(y)`` is attained at ``mu = psi(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CostModel

BISECTION_TOL = 1e-12


@dataclass(frozen=True)
class ConjugatePair:
    cost: CostModel
    mode: str = "auto"
    c_prime_at_0: float = field(init=False)
    c_prime_at_umax: float = field(init=False)
    inverse_mode: str = field(init=False)

    def __post_init__(self):
        service = self.cost.service
        d0 = float(service.derivative(0.0))
        du = float(service.derivative(self.cost.u_max))
        if not d0 < du:
            raise ValueError("c'(0) must be strictly below c'(u_max)")
        has_analytic = service.inverse_derivative(np.array([du])) is not None
        if self.mode == "auto":
            inverse = "analytic" if has_analytic else "numeric"
        elif self.mode == "analytic":
            if not has_analytic:
                raise ValueError(f"{service.name} cost has no analytic inverse derivative")
            inverse = "analytic"
        elif self.mode == "numeric":
            inverse = "numeric"
        else:
            raise ValueError(f"unknown inverse mode {self.mode!r}")
        object.__setattr__(self, "c_prime_at_0", d0)
        object.__setattr__(self, "c_prime_at_umax", du)
        object.__setattr__(self, "inverse_mode", inverse)

    @property
    def u_max(self) -> float:
        return float(self.cost.u_max)

    def _invert(self, y: np.ndarray) -> np.ndarray:
        if self.inverse_mode == "analytic":
            return np.asarray(self.cost.service.inverse_derivative(y), dtype=float)
        # bisection on c'(mu) = y; c' is strictly increasing so this always converges
        lo = np.zeros_like(y)
        hi = np.full_like(y, self.u_max)
        dc = self.cost.service.derivative
        while np.any(hi - lo > BISECTION_TOL):
            mid = 0.5 * (lo + hi)
            below = dc(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def psi(pair: ConjugatePair, y):
    """Maximizing service rate for price ``y``; a non-decreasing map into [0, u_max]."""
    y_arr = np.asarray(y, dtype=float)
    lo, hi = pair.c_prime_at_0, pair.c_prime_at_umax
    if pair.inverse_mode == "analytic":
        out = np.clip(pair._invert(np.clip(y_arr, lo, hi)), 0.0, pair.u_max)
        out = np.where(y_arr <= lo, 0.0, np.where(y_arr >= hi, pair.u_max, out))
    else:
        out = np.zeros_like(y_arr)
        out[y_arr >= hi] = pair.u_max
        interior = (y_arr > lo) & (y_arr < hi)
        if np.any(interior):
            out[interior] = np.clip(pair._invert(y_arr[interior]), 0.0, pair.u_max)
    return out if out.ndim else float(out)


def phi(pair: ConjugatePair, y):
    """Conjugate value ``psi(y)*y - c(psi(y))``.

    For costs with c(0) = 0 this is 0 for every y <= c'(0), in particular for y < 0.
    """
    y_arr = np.asarray(y, dtype=float)
    mu = np.asarray(psi(pair, y_arr), dtype=float)
    out = mu * y_arr - np.asarray(pair.cost.service(mu), dtype=float)
    return out if out.ndim else float(out)
