import numpy as np


def random_generator(rng: np.random.Generator, L: int, density: float = 0.6) -> np.ndarray:
    """Irreducible generator: a random cycle plus random extra edges."""
    R = np.where(rng.random((L, L)) < density, rng.uniform(0.05, 3.0, (L, L)), 0.0)
    order = rng.permutation(L)
    R[order, np.roll(order, -1)] += rng.uniform(0.05, 3.0, L)
    np.fill_diagonal(R, 0.0)
    return R - np.diag(R.sum(axis=1))


def random_birth_death(rng: np.random.Generator, L: int) -> np.ndarray:
    R = np.zeros((L, L))
    i = np.arange(L - 1)
    R[i, i + 1] = rng.uniform(0.1, 3.0, L - 1)
    R[i + 1, i] = rng.uniform(0.1, 3.0, L - 1)
    return R - np.diag(R.sum(axis=1))


def tail_sum_monotone(Q: np.ndarray, tol: float = 1e-12) -> bool:
    """Row-wise stochastic ordering of the uniformized matrix I + Q / eta'."""
    Q = np.asarray(Q, dtype=float)
    eta = 10.0 * max(float(np.max(-np.diag(Q))), 1e-300)
    P = np.eye(len(Q)) + Q / eta
    tails = np.cumsum(P[:, ::-1], axis=1)[:, ::-1]
    return bool(np.all(tails[1:] - tails[:-1] >= -tol))


def grid_value_iteration(scenario, points: int = 1001, tol: float = 1e-11, max_sweeps: int = 200_000):
    """Discounted value iteration with an explicit minimum over a finite rate grid.

    Written state by state and independent of the solver's vectorized
    operator; it uses the same truncation rule at ``n = N``.
    """
    N, L = scenario.truncation_N, scenario.phase.L
    Q = np.asarray(scenario.phase.Q)
    lam = np.asarray(scenario.phase.lambdas)
    u = scenario.cost.u_max
    grid = np.linspace(0.0, u, points)
    cgrid = np.asarray(scenario.cost.service(grid), dtype=float)
    h = np.asarray(scenario.cost.holding(np.arange(N + 1)), dtype=float)
    nu = lam.max() + np.max(-np.diag(Q)) + u + 1.0
    alpha = scenario.alpha
    v = np.zeros((N + 1, L))
    policy = np.zeros((N + 1, L))
    for _ in range(max_sweeps):
        new = np.empty_like(v)
        for n in range(N + 1):
            for s in range(L):
                if n < N:
                    up = v[n + 1, s]
                elif scenario.boundary == "extrapolate":
                    up = 2 * v[N, s] - v[N - 1, s]
                else:
                    up = v[N, s]
                phase_part = sum(Q[s, t] * v[n, t] for t in range(L) if t != s)
                out_rate = lam[s] + sum(Q[s, t] for t in range(L) if t != s)
                base = h[n] + lam[s] * up + phase_part
                if n == 0:
                    total = base + (nu - out_rate) * v[n, s]
                    policy[n, s] = 0.0
                else:
                    cand = cgrid + grid * v[n - 1, s] + (nu - out_rate - grid) * v[n, s]
                    k = int(np.argmin(cand))
                    total = base + cand[k]
                    policy[n, s] = grid[k]
                new[n, s] = total / (alpha + nu)
        done = np.max(np.abs(new - v)) < tol
        v = new
        if done:
            break
    return v, policy, grid[1] - grid[0]


def random_scenario(rng: np.random.Generator, monotone: bool, truncation_N: int = 40):
    """Stable scenario with exponential effort cost and linear holding cost.

    ``monotone=True`` draws a birth-death phase chain with non-decreasing rates,
    which is stochastically monotone; otherwise the generator is arbitrary.
    """
    from mmpp_control import CostModel, ExponentialCost, LinearHolding, PhaseProcess, Scenario, mean_arrival_rate

    L = int(rng.integers(2, 7))
    Q = random_birth_death(rng, L) if monotone else random_generator(rng, L)
    lam = rng.uniform(0, 3, L)
    phase = PhaseProcess(Q, np.sort(lam) if monotone else lam, sort=not monotone)
    u = max(mean_arrival_rate(phase) / rng.uniform(0.3, 0.8), 0.5)
    return Scenario(phase, CostModel(ExponentialCost(), LinearHolding(), u), truncation_N=truncation_N)
