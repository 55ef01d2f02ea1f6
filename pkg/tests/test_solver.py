from __future__ import annotations

import random

import pytest

from promptsplit.solver import (
    BinaryProgram,
    CoverSelection,
    MalformedProgramError,
    NodeLimitError,
    SolverConfig,
    Status,
    dump_program,
    lp_relaxation_bound,
    presolve,
    solve,
    solve_branch_and_bound,
    solve_cover_dp,
    solve_exhaustive,
)
from fractions import Fraction

from generators import random_program
from oracles import best_cover_cost, brute_force_objective


# --- covering DP ------------------------------------------------------------


def test_cover_dp_example():
    selection = solve_cover_dp([(2, 3), (1, 1)], 3)
    assert selection == CoverSelection(chosen=(0,), cost=2, cover=3)


def test_cover_dp_zero_target():
    assert solve_cover_dp([(5, 5)], 0) == CoverSelection((), 0, 0)


def test_cover_dp_negative_target():
    with pytest.raises(ValueError):
        solve_cover_dp([], -1)


def test_cover_dp_unreachable():
    assert solve_cover_dp([(1, 2), (1, 2)], 5) is None


def test_cover_dp_prefers_larger_cover_on_cost_ties():
    selection = solve_cover_dp([(1, 2), (1, 3)], 2)
    assert selection.chosen == (1,)
    assert selection.cover == 3


def test_cover_dp_prefers_earlier_items_on_full_ties():
    selection = solve_cover_dp([(1, 2), (1, 2)], 2)
    assert selection.chosen == (0,)


def test_cover_dp_matches_enumeration():
    rng = random.Random(101)
    for _ in range(250):
        items = [
            (rng.randint(0, 6), rng.randint(0, 5)) for _ in range(rng.randint(0, 9))
        ]
        target = rng.randint(0, 14)
        got = solve_cover_dp(items, target)
        want = best_cover_cost(items, target)
        if want is None:
            assert got is None
        else:
            assert got is not None
            assert got.cost == want
            assert got.cover >= target


def test_cover_dp_cost_and_cover_monotone_in_target():
    rng = random.Random(77)
    for _ in range(50):
        items = [(rng.randint(0, 5), rng.randint(1, 5)) for _ in range(8)]
        prev_cost, prev_cover = 0, 0
        for target in range(sum(c for _, c in items) + 1):
            sel = solve_cover_dp(items, target)
            assert sel is not None
            assert sel.cost >= prev_cost
            assert sel.cover >= prev_cover
            prev_cost, prev_cover = sel.cost, sel.cover


# --- presolve ---------------------------------------------------------------


def test_presolve_fixes_unpaired_variables():
    program = BinaryProgram(
        variables=("a", "b", "c"),
        objective={"a": 3, "b": 0, "c": 0},
        cover_weights={"c": 2},
        cover_floor=0,
    )
    reduced, fixed = presolve(program)
    assert fixed == {"a": 1, "b": 0, "c": 1}
    assert reduced.variables == ()
    assert reduced.cover_floor == 0


def test_presolve_takes_dominant_cover_side():
    program = BinaryProgram(
        variables=("train:yes", "test:yes"),
        objective={"train:yes": 1, "test:yes": 4},
        at_most_one_pairs=(("train:yes", "test:yes"),),
        cover_weights={"test:yes": 1},
        cover_floor=1,
    )
    reduced, fixed = presolve(program)
    assert fixed == {"test:yes": 1, "train:yes": 0}
    assert reduced.at_most_one_pairs == ()
    assert reduced.cover_floor == 0


def test_presolve_keeps_contested_pairs():
    program = BinaryProgram(
        variables=("t", "k"),
        objective={"t": 4, "k": 1},
        at_most_one_pairs=(("t", "k"),),
        cover_weights={"k": 1},
        cover_floor=1,
    )
    reduced, fixed = presolve(program)
    assert fixed == {}
    assert reduced.at_most_one_pairs == (("t", "k"),)
    assert reduced.cover_floor == 1


def test_presolve_objective_identity():
    rng = random.Random(2024)
    for _ in range(200):
        program = random_program(rng, max_pairs=6, max_unpaired=3)
        reduced, fixed = presolve(program)
        fixed_gain = sum(
            program.objective.get(v, 0) for v, val in fixed.items() if val
        )
        whole = solve_exhaustive(program)
        part = solve(reduced)
        assert whole.status is part.status
        if whole.status is Status.OPTIMAL:
            assert whole.objective_value == part.objective_value + fixed_gain


# --- exact solve -------------------------------------------------------------


def _single_pair_program():
    return BinaryProgram(
        variables=("train:stop", "test:stop"),
        objective={"train:stop": 4, "test:stop": 1},
        at_most_one_pairs=(("train:stop", "test:stop"),),
        cover_weights={"test:stop": 1},
        cover_floor=1,
    )


def test_solve_flips_to_cover_side_when_floor_demands():
    solution = solve(_single_pair_program())
    assert solution.status is Status.OPTIMAL
    assert solution.objective_value == 1
    assert solution.values == {"test:stop": 1, "train:stop": 0}


def test_solve_keeps_better_side_without_floor():
    program = _single_pair_program()
    free = BinaryProgram(
        variables=program.variables,
        objective=program.objective,
        at_most_one_pairs=program.at_most_one_pairs,
        cover_weights=program.cover_weights,
        cover_floor=0,
    )
    solution = solve(free)
    assert solution.objective_value == 4
    assert solution.values == {"train:stop": 1, "test:stop": 0}


def test_solve_infeasible_floor():
    program = BinaryProgram(
        variables=("x",),
        objective={"x": 1},
        cover_weights={"x": 2},
        cover_floor=3,
    )
    solution = solve(program)
    assert solution.status is Status.INFEASIBLE


def test_solve_empty_program():
    solution = solve(BinaryProgram(variables=(), objective={}))
    assert solution.status is Status.OPTIMAL
    assert solution.objective_value == 0


def test_solve_is_deterministic():
    rng = random.Random(5)
    programs = [random_program(rng, max_pairs=8) for _ in range(20)]
    for program in programs:
        first = solve(program)
        second = solve(program)
        assert first == second


def test_solver_never_needs_to_drop_both_sides():
    # three-state brute force (which may drop both sides of a pair) never
    # beats the two-state solvers
    rng = random.Random(31)
    for _ in range(150):
        program = random_program(rng, max_pairs=6, max_unpaired=3)
        want = brute_force_objective(program)
        got = solve(program)
        if want is None:
            assert got.status is Status.INFEASIBLE
        else:
            assert got.status is Status.OPTIMAL
            assert got.objective_value == want


def test_three_solvers_agree():
    rng = random.Random(99)
    cold = SolverConfig(warm_start=False)
    for _ in range(300):
        program = random_program(rng, max_pairs=8, max_unpaired=3)
        a = solve(program)
        b = solve_branch_and_bound(program)
        c = solve_branch_and_bound(program, cold)
        d = solve_exhaustive(program)
        assert a.status is b.status is c.status is d.status
        if a.status is Status.OPTIMAL:
            assert a.objective_value == b.objective_value
            assert b.objective_value == c.objective_value
            assert c.objective_value == d.objective_value


def test_solution_satisfies_constraints():
    rng = random.Random(7)
    for _ in range(200):
        program = random_program(rng, max_pairs=8, max_unpaired=3)
        solution = solve(program)
        if solution.status is not Status.OPTIMAL:
            continue
        values = solution.values
        assert set(values) == set(program.variables)
        for u, v in program.at_most_one_pairs:
            assert values[u] + values[v] <= 1
        cover = sum(w * values[v] for v, w in program.cover_weights.items())
        assert cover >= program.cover_floor
        gain = sum(program.objective.get(v, 0) * values[v] for v in values)
        assert gain == solution.objective_value


# --- linear relaxation bound -------------------------------------------------


def test_lp_bound_fractional_example():
    program = BinaryProgram(
        variables=("t", "k"),
        objective={"t": 5, "k": 3},
        at_most_one_pairs=(("t", "k"),),
        cover_weights={"k": 4},
        cover_floor=3,
    )
    assert lp_relaxation_bound(program) == Fraction(7, 2)


def test_lp_bound_infeasible_partial():
    program = BinaryProgram(
        variables=("t", "k"),
        objective={"t": 5, "k": 3},
        at_most_one_pairs=(("t", "k"),),
        cover_weights={"k": 4},
        cover_floor=3,
    )
    assert lp_relaxation_bound(program, {"k": 0}) == float("-inf")
    assert lp_relaxation_bound(program, {"t": 1, "k": 1}) == float("-inf")


def test_lp_bound_dominates_optimum():
    rng = random.Random(12)
    for _ in range(200):
        program = random_program(rng, max_pairs=8, max_unpaired=3)
        solution = solve_exhaustive(program)
        if solution.status is not Status.OPTIMAL:
            continue
        assert lp_relaxation_bound(program) >= solution.objective_value


# --- branch and bound ---------------------------------------------------------


def test_branch_and_bound_warm_start_proves_at_root():
    program = BinaryProgram(
        variables=("t", "k"),
        objective={"t": 1, "k": 5},
        at_most_one_pairs=(("t", "k"),),
        cover_weights={"k": 2},
        cover_floor=2,
    )
    solution = solve_branch_and_bound(program)
    assert solution.status is Status.OPTIMAL
    assert solution.nodes_explored == 1


def test_branch_and_bound_cold_explores_more():
    program = BinaryProgram(
        variables=("p0a", "p0b", "p1a", "p1b"),
        objective={"p0a": 3, "p0b": 1, "p1a": 3, "p1b": 1},
        at_most_one_pairs=(("p0a", "p0b"), ("p1a", "p1b")),
        cover_weights={"p0b": 2, "p1b": 3},
        cover_floor=4,
    )
    warm = solve_branch_and_bound(program)
    cold = solve_branch_and_bound(program, SolverConfig(warm_start=False))
    assert warm.objective_value == cold.objective_value == 2
    assert cold.nodes_explored >= warm.nodes_explored


def test_branch_and_bound_node_limit():
    program = BinaryProgram(
        variables=("p0a", "p0b", "p1a", "p1b"),
        objective={"p0a": 3, "p0b": 1, "p1a": 3, "p1b": 1},
        at_most_one_pairs=(("p0a", "p0b"), ("p1a", "p1b")),
        cover_weights={"p0b": 2, "p1b": 3},
        cover_floor=4,
    )
    with pytest.raises(NodeLimitError):
        solve_branch_and_bound(program, SolverConfig(node_limit=1, warm_start=False))


def test_branch_and_bound_infeasible_reports_status():
    program = BinaryProgram(
        variables=("x",),
        objective={"x": 1},
        cover_weights={"x": 1},
        cover_floor=5,
    )
    solution = solve_branch_and_bound(program)
    assert solution.status is Status.INFEASIBLE


# --- validation ---------------------------------------------------------------


def test_validate_duplicate_variable():
    with pytest.raises(MalformedProgramError):
        solve(BinaryProgram(variables=("a", "a"), objective={"a": 1}))


def test_validate_unknown_objective_variable():
    with pytest.raises(MalformedProgramError):
        solve(BinaryProgram(variables=("a",), objective={"b": 1}))


def test_validate_negative_coefficient():
    with pytest.raises(MalformedProgramError):
        solve(BinaryProgram(variables=("a",), objective={"a": -1}))


def test_validate_boolean_coefficient():
    with pytest.raises(MalformedProgramError):
        solve(BinaryProgram(variables=("a",), objective={"a": True}))


def test_validate_non_integer_floor():
    with pytest.raises(MalformedProgramError):
        solve(
            BinaryProgram(
                variables=("a",), objective={"a": 1}, cover_floor=0.5  # type: ignore[arg-type]
            )
        )


def test_validate_variable_in_two_pairs():
    with pytest.raises(MalformedProgramError):
        solve(
            BinaryProgram(
                variables=("a", "b", "c"),
                objective={},
                at_most_one_pairs=(("a", "b"), ("a", "c")),
            )
        )


def test_validate_self_pair():
    with pytest.raises(MalformedProgramError):
        solve(
            BinaryProgram(variables=("a",), objective={}, at_most_one_pairs=(("a", "a"),))
        )


def test_validate_both_sides_carry_cover():
    with pytest.raises(MalformedProgramError):
        solve(
            BinaryProgram(
                variables=("a", "b"),
                objective={},
                at_most_one_pairs=(("a", "b"),),
                cover_weights={"a": 1, "b": 1},
            )
        )


def test_validate_unknown_pair_variable():
    with pytest.raises(MalformedProgramError):
        solve(
            BinaryProgram(
                variables=("a",), objective={}, at_most_one_pairs=(("a", "z"),)
            )
        )


# --- exhaustive guard and dump -------------------------------------------------


def test_exhaustive_guard():
    n = 25
    variables = tuple(f"v{i}{side}" for i in range(n) for side in "ab")
    pairs = tuple((f"v{i}a", f"v{i}b") for i in range(n))
    program = BinaryProgram(variables=variables, objective={}, at_most_one_pairs=pairs)
    with pytest.raises(ValueError):
        solve_exhaustive(program)


def test_dump_program_lists_everything():
    program = _single_pair_program()
    text = dump_program(program, solve(program))
    assert "var test:stop obj=1 cover=1 value=1" in text
    assert "pair train:stop + test:stop <= 1" in text
    assert "cover >= 1" in text
    assert "status optimal objective 1" in text
