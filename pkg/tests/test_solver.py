import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crsf.scoring import CoefficientMatrix
from crsf.solver import (Assignment, Budget, InstanceError, SelectionInstance, assignment_from_vector,
                         brute_force, build_instance, solve_baseline, solve_exact, solve_greedy,
                         verify_assignment)

from conftest import random_instance

C3 = [[10, 9], [8, 1], [7, 5]]


def enumerate_optimum(c, feasible, u, cap):
    """Plain itertools enumeration, independent of the package's brute force."""
    c = np.asarray(c, float)
    r_count, m_count = c.shape
    best, best_vec = 0.0, (-1,) * r_count
    for vec in itertools.product(range(-1, m_count), repeat=r_count):
        load = [0.0] * m_count
        ok = True
        val = 0.0
        for r, m in enumerate(vec):
            if m < 0:
                continue
            if not feasible[r][m]:
                ok = False
                break
            load[m] += u[r]
            val += c[r][m]
        if ok and all(load[m] <= cap[m] + 1e-12 for m in range(m_count)) and val > best + 1e-12:
            best, best_vec = val, vec
    return best, best_vec


def inst(c, feasible=None, u=None, cap=None):
    c = np.asarray(c, float)
    feasible = np.ones(c.shape, bool) if feasible is None else feasible
    u = np.full(c.shape[0], 5.0) if u is None else u
    cap = np.full(c.shape[1], 100.0) if cap is None else cap
    return SelectionInstance(c, feasible, u, cap)


def test_single_feasible_pair():
    a = solve_exact(inst([[5.0]], u=[5.0], cap=[10.0]))
    assert a.assigned == {0: 0} and a.objective == 5 and a.optimal


def test_latency_above_threshold_leaves_request_unassigned():
    coeffs = CoefficientMatrix(np.array([[5.0]]), (1,), (1,))
    i = build_instance(coeffs, np.array([[130.0]]), [90.0], [5.0], [10.0])
    a = solve_exact(i)
    assert a.assigned == {} and a.objective == 0 and a.optimal


def test_three_by_two_exact_optimum():
    i = inst(C3, u=[5, 5, 5], cap=[10, 5])
    a = solve_exact(i)
    best, vec = enumerate_optimum(C3, np.ones((3, 2), bool), [5, 5, 5], [10, 5])
    assert best == 24
    assert a.objective == 24
    assert a.assigned == {0: 1, 1: 0, 2: 0}
    assert tuple(a.vector()) == vec


def test_greedy_is_suboptimal_on_three_by_two():
    a = solve_greedy(inst(C3, u=[5, 5, 5], cap=[10, 5]))
    assert a.assigned[0] == 0
    assert a.objective == 23
    assert not a.optimal


def test_greedy_matches_exact_under_diagonal_dominance():
    c = np.diag([9.0, 8.0, 7.0]) + 0.5
    i = inst(c, u=[5, 5, 5], cap=[5, 5, 5])
    assert solve_greedy(i).objective == solve_exact(i).objective == 25.5


def test_empty_batch():
    i = SelectionInstance(np.zeros((0, 3)), np.zeros((0, 3), bool), [], [10, 10, 10])
    for a in (solve_exact(i), solve_greedy(i), brute_force(i), solve_baseline(i, np.zeros((0, 3)))):
        assert a.objective == 0 and a.assigned == {}


def test_baseline_ignores_qos():
    i = inst([[2.0, 50.0]])
    a = solve_baseline(i, np.array([[9.0, 1.0]]))
    assert a.assigned == {0: 0}
    assert a.objective == 2.0


def test_baseline_ties_go_to_lowest_sf():
    i = inst([[3.0, 3.0, 3.0]])
    assert solve_baseline(i, np.full((1, 3), 4.0)).assigned == {0: 0}


def test_baseline_rejects_shape_mismatch():
    with pytest.raises(InstanceError):
        solve_baseline(inst([[1.0]]), np.ones((2, 2)))


@pytest.mark.parametrize("seed", range(5))
def test_baseline_value_never_beats_exact_on_three_by_two(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0, 10, (3, 2))
    s = rng.uniform(1, 10, (3, 2))
    feas = np.ones((3, 2), bool)
    u, cap = [5.0, 5.0, 5.0], [10.0, 5.0]
    best_c, _ = enumerate_optimum(c, feas, u, cap)
    _, s_vec = enumerate_optimum(s, feas, u, cap)
    base_under_c = sum(c[r, m] for r, m in enumerate(s_vec) if m >= 0)
    i = inst(c, feas, u, cap)
    base = solve_baseline(i, s)
    assert base.objective == pytest.approx(base_under_c, rel=1e-12)
    assert base.objective <= solve_exact(i).objective + 1e-9
    assert solve_exact(i).objective == pytest.approx(best_c, rel=1e-12)


def test_brute_force_trivial_cases():
    one = inst([[4.0]])
    assert brute_force(one).objective == solve_exact(one).objective == 4.0
    none = inst([[4.0, 2.0]], feasible=np.zeros((1, 2), bool))
    b = brute_force(none)
    assert b.objective == 0 and b.assigned == {}


def test_brute_force_cap():
    big = inst(np.ones((10, 4)))
    with pytest.raises(InstanceError):
        brute_force(big)


def test_verify_detects_capacity_violation():
    i = inst([[1.0], [1.0]], u=[5.0, 5.0], cap=[8.0])
    bad = assignment_from_vector(i, [0, 0], optimal=False)
    assert not verify_assignment(i, bad)


def test_verify_detects_infeasible_pair():
    i = inst([[1.0, 2.0]], feasible=np.array([[True, False]]))
    assert not verify_assignment(i, assignment_from_vector(i, [1], optimal=False))
    assert verify_assignment(i, assignment_from_vector(i, [0], optimal=False))


def test_verify_detects_wrong_objective():
    i = inst([[1.0, 2.0]])
    a = assignment_from_vector(i, [1], optimal=True)
    forged = Assignment(a.assigned, a.objective + 1e-6, True, a.per_request_value)
    assert not verify_assignment(i, forged)


def test_instance_validation():
    with pytest.raises(InstanceError):
        SelectionInstance(np.ones((2, 2)), np.ones((2, 2), bool), [1.0], [1.0, 1.0])
    with pytest.raises(InstanceError):
        SelectionInstance(np.ones((1, 1)), np.ones((1, 1), bool), [0.0], [1.0])
    with pytest.raises(InstanceError):
        SelectionInstance(np.full((1, 1), np.nan), np.ones((1, 1), bool), [1.0], [1.0])


def test_nonpositive_coefficients_are_never_assigned():
    i = inst([[0.0, -1.0]])
    assert solve_exact(i).assigned == {}
    assert solve_greedy(i).assigned == {}


def test_node_budget_degrades_gracefully():
    rng = np.random.default_rng(3)
    c = rng.uniform(1, 10, (60, 8))
    u = rng.choice([5.0, 6.5, 8.0, 9.5], 60)
    i = SelectionInstance(c, rng.random((60, 8)) < 0.6, u, rng.uniform(30, 50, 8))
    a = solve_exact(i, Budget(nodes=1, seconds=0))
    assert verify_assignment(i, a)
    assert a.objective >= solve_greedy(i).objective - 1e-9
    full = solve_exact(i)
    assert full.objective >= a.objective - 1e-9


def test_incumbent_is_never_worsened():
    i = inst(C3, u=[5, 5, 5], cap=[10, 5])
    a = solve_exact(i, Budget(nodes=1, seconds=0), incumbent=[1, 0, 0])
    assert a.objective == 24


def test_deterministic_on_repeat():
    rng = np.random.default_rng(11)
    c = np.round(rng.uniform(1, 5, (12, 4)))
    i = SelectionInstance(c, np.ones((12, 4), bool), np.full(12, 5.0), np.full(4, 15.0))
    first = solve_exact(i)
    for _ in range(3):
        again = solve_exact(i)
        assert again.assigned == first.assigned and again.objective == first.objective


# properties over random small instances

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=300)
@given(seeds, st.booleans())
def test_exact_matches_brute_force(seed, ties):
    i = random_instance(np.random.default_rng(seed), ties=ties)
    a, b = solve_exact(i), brute_force(i)
    assert a.optimal
    assert abs(a.objective - b.objective) <= 1e-9 * max(1.0, abs(b.objective))
    assert verify_assignment(i, a) and verify_assignment(i, b)


@settings(max_examples=200)
@given(seeds)
def test_dominance_and_validity(seed):
    rng = np.random.default_rng(seed)
    i = random_instance(rng)
    s = rng.uniform(1, 10, i.shape)
    e, g, b = solve_exact(i), solve_greedy(i), solve_baseline(i, s)
    for a in (e, g, b):
        assert verify_assignment(i, a)
    assert e.objective >= g.objective - 1e-9 >= -1e-9
    assert e.objective >= b.objective - 1e-9


@settings(max_examples=150)
@given(seeds, st.floats(0, 20))
def test_raising_capacity_never_hurts(seed, extra):
    i = random_instance(np.random.default_rng(seed))
    more = i.with_capacity(i.capacity + extra)
    assert solve_exact(more).objective >= solve_exact(i).objective - 1e-9


@settings(max_examples=100)
@given(seeds)
def test_identical_instances_identical_assignments(seed):
    a = random_instance(np.random.default_rng(seed), ties=True)
    b = random_instance(np.random.default_rng(seed), ties=True)
    for solver in (solve_exact, solve_greedy, brute_force):
        assert solver(a).assigned == solver(b).assigned
