"""Solvers for the truncated, uniformized MMPP/M/1 control problem.

States are ``(n, s)`` with queue length ``n`` in ``0..N`` and phase ``s``;
arrays are laid out as ``values[n, s]``.  What an arrival does at ``n = N``
depends on ``Scenario.boundary`` (see :mod:`mmpp_control.model`).  The
minimization over service rates is never searched: it is replaced by ``-phi(y)`` with maximizer ``psi(y)``, where ``y``
is the first difference of the value function in ``n``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .conjugate import ConjugatePair, phi, psi
from .errors import NonConvergence, ReducibleChain, SingularSystem, StabilityWarning, Unstable
from .model import Scenario, UniformizedModel, stability_check, uniformize


@dataclass(frozen=True)
class ValueFunction:
    values: np.ndarray
    mode: str  # "discounted" or "relative"
    alpha: float = 0.0
    reference_state: Optional[tuple] = None


@dataclass(frozen=True)
class Policy:
    rates: np.ndarray

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float)
        if rates.ndim != 2:
            raise ValueError("policy rates must be an (N+1) x L matrix")
        if np.any(rates[0] != 0):
            raise ValueError("the server must idle in an empty queue: rates[0, :] == 0")
        if np.any(rates < 0):
            raise ValueError("service rates must be non-negative")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    @property
    def N(self) -> int:
        return self.rates.shape[0] - 1

    @property
    def L(self) -> int:
        return self.rates.shape[1]

    @classmethod
    def constant(cls, rate: float, N: int, L: int) -> "Policy":
        rates = np.full((N + 1, L), float(rate))
        rates[0] = 0.0
        return cls(rates)


@dataclass
class SolveResult:
    value: ValueFunction
    policy: Policy
    gain: Optional[float]
    iterations: int
    residual: float
    warnings: list = field(default_factory=list)


def first_difference(value: Union[ValueFunction, np.ndarray]) -> np.ndarray:
    v = value.values if isinstance(value, ValueFunction) else np.asarray(value, dtype=float)
    y = np.zeros_like(v)
    y[1:] = v[1:] - v[:-1]
    return y


class _Operator:
    """Undiscounted uniformized Bellman map, cached per scenario."""

    def __init__(self, scenario: Scenario, model: Optional[UniformizedModel] = None):
        self.scenario = scenario
        self.model = model or uniformize(scenario)
        self.pair = ConjugatePair(scenario.cost)
        N = scenario.truncation_N
        lam = scenario.phase.lambdas
        self.lam = lam
        self.h = np.asarray(scenario.cost.holding(np.arange(N + 1)), dtype=float)[:, None] * np.ones(lam.size)
        self.QbarT = np.array(self.model.Q_bar).T
        self.stay = self.model.nu - self.model.eta_bar - lam
        self.extrapolate = scenario.boundary == "extrapolate"

    def policy(self, v: np.ndarray) -> np.ndarray:
        mu = np.asarray(psi(self.pair, first_difference(v)), dtype=float).reshape(v.shape)
        mu[0] = 0.0
        return mu

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``h - phi(y) + lam*v(n+1) + Qbar v + (nu - eta - lam) v`` (not yet divided)."""
        conj = np.asarray(phi(self.pair, first_difference(v)), dtype=float).reshape(v.shape)
        conj[0] = 0.0  # no decision, and no effort cost, in an empty queue
        up = np.empty_like(v)
        up[:-1] = v[1:]
        up[-1] = 2.0 * v[-1] - v[-2] if self.extrapolate else v[-1]
        return self.h - conj + self.lam * up + v @ self.QbarT + self.stay * v


def solve_discounted(scenario: Scenario, slack: Optional[float] = None) -> SolveResult:
    alpha = scenario.alpha
    if not alpha > 0:
        raise ValueError("solve_discounted needs alpha > 0")
    notes = []
    report = stability_check(scenario)
    if not report.stable:
        msg = f"u_max={report.u_max} does not exceed mean arrival rate {report.mean_rate:.6g}"
        warnings.warn(msg, StabilityWarning, stacklevel=2)
        notes.append(StabilityWarning(msg))
    op = _Operator(scenario, uniformize(scenario, slack))
    nu = op.model.nu
    beta = nu / (alpha + nu)
    threshold = scenario.tolerance * (1 - beta) / (2 * beta)
    v = np.zeros((scenario.truncation_N + 1, scenario.phase.L))
    for k in range(1, scenario.max_iterations + 1):
        new = op.apply(v) / (alpha + nu)
        delta = float(np.max(np.abs(new - v)))
        v = new
        if delta < threshold:
            break
    else:
        raise NonConvergence(f"discounted value iteration did not converge in {scenario.max_iterations} sweeps")
    return SolveResult(
        value=ValueFunction(v, "discounted", alpha=alpha),
        policy=Policy(op.policy(v)),
        gain=None,
        iterations=k,
        residual=delta * 2 * beta / (1 - beta),
        warnings=notes,
    )


def dcoe_residual(scenario: Scenario, values: np.ndarray, slack: Optional[float] = None) -> np.ndarray:
    """Per-state ``|v - T v|`` for the discounted optimality equation."""
    op = _Operator(scenario, uniformize(scenario, slack))
    return np.abs(values - op.apply(values) / (scenario.alpha + op.model.nu))


def solve_average(scenario: Scenario, slack: Optional[float] = None) -> SolveResult:
    report = stability_check(scenario)
    if not report.stable:
        raise Unstable(f"u_max={report.u_max} does not exceed mean arrival rate {report.mean_rate:.6g}")
    op = _Operator(scenario, uniformize(scenario, slack))
    nu = op.model.nu
    v = np.zeros((scenario.truncation_N + 1, scenario.phase.L))
    ref = None
    for k in range(1, scenario.max_iterations + 1):
        new = op.apply(v) / nu
        diff = new - v
        lo, hi = float(diff.min()), float(diff.max())
        if ref is None:
            ref = (0, int(np.argmin(new[0])))
        if hi - lo < scenario.tolerance / nu:
            break
        v = new - new[ref]
    else:
        raise NonConvergence(f"relative value iteration did not converge in {scenario.max_iterations} sweeps")
    # v is the iterate the last update was greedy with respect to
    return SolveResult(
        value=ValueFunction(v - v[ref], "relative", reference_state=ref),
        policy=Policy(op.policy(v)),
        gain=nu * 0.5 * (lo + hi),
        iterations=k,
        residual=nu * (hi - lo),
    )


# ---------------------------------------------------------------------------
# Exact evaluation of stationary policies
# ---------------------------------------------------------------------------


def policy_generator(scenario: Scenario, rates: np.ndarray, boundary: str = "block") -> sp.csr_matrix:
    """Generator of the truncated CTMC induced by service rates ``rates[n, s]``.

    With ``boundary="extrapolate"`` the rows at ``n = N`` carry the linear
    continuation ``lambda_s (w(N) - w(N-1))`` for arrivals; rows still sum to
    zero but ``(N, s) -> (N-1, s)`` may be negative, so this is then only a
    generator-like operator.
    """
    N, L = scenario.truncation_N, scenario.phase.L
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (N + 1, L):
        raise ValueError(f"policy shape {rates.shape} does not match ({N + 1}, {L})")
    lam = scenario.phase.lambdas
    up = sp.eye(N + 1, k=1, format="csr")
    down = sp.eye(N + 1, k=-1, format="csr")
    Q = np.array(scenario.phase.Q)
    np.fill_diagonal(Q, 0.0)
    G = (
        sp.kron(up, sp.diags(lam))
        + sp.diags(rates.ravel()) @ sp.kron(down, sp.eye(L))
        + sp.kron(sp.eye(N + 1), sp.csr_matrix(Q))
    ).tocsr()
    G = G - sp.diags(np.asarray(G.sum(axis=1)).ravel())
    if boundary == "extrapolate":
        last = N * L + np.arange(L)
        G = G + sp.csr_matrix((np.concatenate([lam, -lam]), (np.concatenate([last, last]), np.concatenate([last, last - L]))), shape=G.shape)
    G = G.tocsr()
    G.eliminate_zeros()
    return G


def _closed_class(G: sp.csr_matrix) -> np.ndarray:
    off = (G - sp.diags(G.diagonal())).tocsr()
    off.data = (off.data > 0).astype(float)
    off.eliminate_zeros()
    n_comp, labels = connected_components(off, directed=True, connection="strong")
    if n_comp == 1:
        return np.arange(G.shape[0])
    coo = off.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_classes = np.unique(labels[coo.row[leaving]])
    closed = np.setdiff1d(np.arange(n_comp), open_classes)
    if closed.size != 1:
        raise ReducibleChain(f"policy induces {closed.size} closed classes")
    return np.flatnonzero(labels == closed[0])


def _solve(A: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            x = spla.spsolve(A.tocsc(), b)
    except (spla.MatrixRankWarning, RuntimeError) as exc:
        raise SingularSystem(str(exc)) from exc
    x = np.atleast_1d(x)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("linear solve returned non-finite values")
    return x


def stationary_law(G: sp.csr_matrix) -> np.ndarray:
    """Stationary distribution of a generator, restricted to its unique closed class."""
    keep = _closed_class(G)
    sub = G[keep][:, keep]
    A = sub.T.tolil()
    A[A.shape[0] - 1, :] = 1.0
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    p = _solve(A, b)
    if np.min(p) < -1e-9:
        raise SingularSystem("stationary solve returned negative probabilities")
    full = np.zeros(G.shape[0])
    full[keep] = np.clip(p, 0.0, None)
    return full / full.sum()


def poisson_gain(G: sp.csr_matrix, cost: np.ndarray, keep: Optional[np.ndarray] = None) -> float:
    """Gain ``g`` solving ``G w + cost = g`` with ``w`` pinned to 0 at the first kept state."""
    if keep is not None:
        G = G[keep][:, keep]
        cost = cost[keep]
    S = G.shape[0]
    pin = sp.csr_matrix(([1.0], ([0], [0])), shape=(1, S))
    A = sp.bmat([[G, sp.csr_matrix(-np.ones((S, 1)))], [pin, None]])
    x = _solve(A, np.concatenate([-cost, [0.0]]))
    return float(x[-1])


def stationary_state_distribution(scenario: Scenario, rates: np.ndarray) -> np.ndarray:
    """Stationary probabilities ``pi[n, s]`` of the blocking chain under fixed service rates."""
    G = policy_generator(scenario, rates, "block")
    return stationary_law(G).reshape(scenario.truncation_N + 1, scenario.phase.L)


def stage_cost(scenario: Scenario, rates: np.ndarray) -> np.ndarray:
    """``h(n) + c(mu(n, s))`` with no effort cost charged in an empty queue."""
    N = scenario.truncation_N
    h = np.asarray(scenario.cost.holding(np.arange(N + 1)), dtype=float)[:, None]
    c = np.asarray(scenario.cost.service(rates), dtype=float)
    c[0] = 0.0
    return h + c


def evaluate_policy(scenario: Scenario, policy: Policy) -> float:
    """Long-run average cost per unit time of a stationary policy on the truncated model.

    The boundary at ``n = N`` follows ``scenario.boundary`` so that the optimal
    policy evaluates to the gain reported by :func:`solve_average`.
    """
    rates = policy.rates
    cost = stage_cost(scenario, rates)
    if scenario.boundary == "block":
        pi = stationary_state_distribution(scenario, rates)
        return float(np.sum(pi * cost))
    L = scenario.phase.L
    keep = _closed_class(policy_generator(scenario, rates, "block"))
    G = policy_generator(scenario, rates, "extrapolate")
    if keep.size < G.shape[0]:
        inside = np.zeros(G.shape[0], dtype=bool)
        inside[keep] = True
        boundary_rows = keep[keep >= scenario.truncation_N * L]
        if np.any(~inside[boundary_rows - L]):
            raise Unstable("policy lets the queue run into the truncation level")
        return poisson_gain(G, cost.ravel(), keep)
    return poisson_gain(G, cost.ravel())


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def fmt(x: float) -> str:
    return f"{float(x) + 0.0:.12g}"


def _write_table(path, header, table: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for n in range(table.shape[0]):
            for s in range(table.shape[1]):
                w.writerow([n, s + 1, fmt(table[n, s])])


def write_policy_csv(path, policy: Policy) -> None:
    _write_table(path, ["n", "s", "mu"], policy.rates)


def write_value_csv(path, value: ValueFunction) -> None:
    _write_table(path, ["n", "s", "v"], value.values)


def read_table_csv(path, column: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = np.array([int(r["n"]) for r in rows])
    s = np.array([int(r["s"]) for r in rows])
    out = np.zeros((n.max() + 1, s.max()))
    out[n, s - 1] = [float(r[column]) for r in rows]
    return out


def read_policy_csv(path) -> Policy:
    return Policy(read_table_csv(path, "mu"))
