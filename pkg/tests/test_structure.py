import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_birth_death, random_generator, random_scenario, tail_sum_monotone
from mmpp_control import PhaseProcess, Policy, check_generator_monotone, solve_average, solve_discounted
from mmpp_control.experiments import EXAMPLE_3_1_Q, EXAMPLE_3_2_Q
from mmpp_control.structure import MonotonicityReport, Violation, tail_transform, verify_monotone_in_n, verify_monotone_in_s


def test_generator_examples():
    assert check_generator_monotone(PhaseProcess(EXAMPLE_3_1_Q, [0.5, 1.0, 1.25]))
    assert not check_generator_monotone(PhaseProcess(EXAMPLE_3_2_Q, [0.5, 1.0, 1.25]))


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_two_state_generators_are_monotone(a, b):
    if a == 0 and b == 0:
        return  # not irreducible
    Q = np.array([[-a, a], [b, -b]])
    if a == 0 or b == 0:
        assert np.all(tail_transform(Q)[~np.eye(2, dtype=bool)] >= 0)
        return
    assert check_generator_monotone(PhaseProcess(Q, [1.0, 2.0]))
    M = tail_transform(Q)
    assert M[0, 1] == pytest.approx(a) and M[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_tail_transform_inverse_is_explicit():
    L = 5
    T = np.tril(np.ones((L, L)))
    T_inv = np.eye(L) - np.eye(L, k=-1)
    assert np.allclose(T_inv @ T, np.eye(L))


@pytest.mark.parametrize("monotone_family", [True, False])
def test_generator_test_matches_tail_sum_oracle(monotone_family):
    rng = np.random.default_rng(99 if monotone_family else 100)
    for _ in range(300):
        L = int(rng.integers(2, 7))
        Q = random_birth_death(rng, L) if monotone_family else random_generator(rng, L, density=rng.uniform(0.1, 0.9))
        phase = PhaseProcess(Q, np.arange(L, dtype=float), sort=False)
        assert check_generator_monotone(phase) == tail_sum_monotone(Q)
        if monotone_family:
            assert check_generator_monotone(phase)


def test_constant_policy_is_monotone():
    pol = Policy.constant(2.5, 10, 4)
    assert verify_monotone_in_n(pol).monotone and verify_monotone_in_s(pol).monotone


def test_violations_are_reported_with_one_based_phase():
    rates = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 1.5], [0.5, 2.5, 3.0]])
    in_s = verify_monotone_in_s(rates)
    assert in_s.violations == [Violation(1, 2, 2.0, 1.5)]
    in_n = verify_monotone_in_n(rates)
    assert in_n.violations == [Violation(1, 1, 1.0, 0.5)]
    assert in_n.summary() == "monotone in n: no (1 violations at n=[1])"


def test_report_csv(tmp_path):
    rep = MonotonicityReport("s", [Violation(4, 2, 3.0, 2.5)])
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines == ["n,s,mu_low,mu_high", "4,2,3,2.5", "# monotone in s: no (1 violations at n=[4])"]


def test_policies_monotone_in_queue_length_for_arbitrary_generators():
    rng = np.random.default_rng(31)
    for _ in range(100):
        sc = random_scenario(rng, monotone=False)
        for pol in (solve_average(sc).policy, solve_discounted(sc.replace(alpha=0.1)).policy):
            assert verify_monotone_in_n(pol).monotone
