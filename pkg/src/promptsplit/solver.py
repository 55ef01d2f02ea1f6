"""Exact solver for a restricted family of 0/1 integer programs.

The family covers train/test partitioning problems:

    maximize    sum_v obj[v] * x_v
    subject to  x_u + x_v <= 1        for each listed pair (u, v)
                sum_v w[v] * x_v >= floor
                x_v in {0, 1}

with non-negative integer objective coefficients and cover weights, each
variable in at most one pair, and at most one member of each pair carrying
cover weight.  Within that shape the problem reduces exactly:

  * a pair never drops both sides at an optimum (raising the weightless side
    to 1 adds obj >= 0 and leaves the cover untouched), so each pair is a
    binary choice between its two sides;
  * a pair whose cover side gains at least as much as the other side always
    takes the cover side (better or equal objective, never hurts the cover);
  * what remains is a minimum-cost covering knapsack over the pairs where
    the weightless side gains strictly more, solved by dynamic programming.

Branch-and-bound over the same reduction is kept for cross-checking, plus a
raw exhaustive enumerator that serves as an independent oracle in tests.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

NEG_INF = float("-inf")


class MalformedProgramError(ValueError):
    """The program falls outside the supported shape."""


class NodeLimitError(RuntimeError):
    """Branch-and-bound exceeded its node budget."""


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class BinaryProgram:
    variables: tuple[str, ...]
    objective: Mapping[str, int]
    at_most_one_pairs: tuple[tuple[str, str], ...] = ()
    cover_weights: Mapping[str, int] = field(default_factory=dict)
    cover_floor: int = 0


@dataclass(frozen=True)
class Solution:
    values: dict[str, int]
    objective_value: int
    status: Status
    nodes_explored: int = 0


@dataclass(frozen=True)
class SolverConfig:
    node_limit: int = 10_000_000
    # seed branch-and-bound with the dynamic-programming optimum so the
    # search only has to prove the bound; disable for an independent search
    warm_start: bool = True


_INFEASIBLE = Solution(values={}, objective_value=0, status=Status.INFEASIBLE)


@dataclass(frozen=True)
class _Pair:
    """A pair oriented so that any cover weight sits on ``keep_var``.

    ``drop_var`` is the side whose selection contributes no cover.  For the
    partitioning problems these are the train (drop) and test (keep) sides
    of one shared prompt.
    """

    drop_var: str
    keep_var: str
    drop_gain: int
    keep_gain: int
    cover: int


def _check_int(value: object, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedProgramError(f"{what} must be an integer, got {value!r}")
    return value


def validate_program(program: BinaryProgram) -> list[_Pair]:
    """Check the program shape and return pairs in canonical orientation."""
    variables = set(program.variables)
    if len(variables) != len(program.variables):
        raise MalformedProgramError("duplicate variable ids")
    for var, coeff in program.objective.items():
        if var not in variables:
            raise MalformedProgramError(f"objective references unknown variable {var!r}")
        if _check_int(coeff, f"objective[{var!r}]") < 0:
            raise MalformedProgramError(f"objective[{var!r}] is negative")
    for var, weight in program.cover_weights.items():
        if var not in variables:
            raise MalformedProgramError(f"cover weight references unknown variable {var!r}")
        if _check_int(weight, f"cover_weights[{var!r}]") < 0:
            raise MalformedProgramError(f"cover_weights[{var!r}] is negative")
    _check_int(program.cover_floor, "cover_floor")

    obj = program.objective
    w = program.cover_weights
    paired: set[str] = set()
    pairs: list[_Pair] = []
    for u, v in program.at_most_one_pairs:
        if u not in variables or v not in variables:
            raise MalformedProgramError(f"pair ({u!r}, {v!r}) references unknown variable")
        if u == v:
            raise MalformedProgramError(f"pair ({u!r}, {v!r}) repeats one variable")
        if u in paired or v in paired:
            raise MalformedProgramError(f"variable in more than one pair: ({u!r}, {v!r})")
        paired.update((u, v))
        if w.get(u, 0) > 0 and w.get(v, 0) > 0:
            raise MalformedProgramError(
                f"both members of pair ({u!r}, {v!r}) carry cover weight"
            )
        if w.get(u, 0) > 0:
            u, v = v, u
        pairs.append(_Pair(u, v, obj.get(u, 0), obj.get(v, 0), w.get(v, 0)))
    pairs.sort(key=lambda p: (p.keep_var, p.drop_var))
    return pairs


@dataclass(frozen=True)
class _Presolved:
    fixed: dict[str, int]
    reduced: tuple[_Pair, ...]
    base_objective: int
    residual_floor: int


def _presolve(program: BinaryProgram, pairs: list[_Pair]) -> _Presolved:
    obj = program.objective
    w = program.cover_weights
    fixed: dict[str, int] = {}
    base = 0
    cover = 0

    paired = {p.drop_var for p in pairs} | {p.keep_var for p in pairs}
    for var in program.variables:
        if var in paired:
            continue
        # an unpaired variable can only help: take it whenever it adds
        # objective or cover, otherwise pin it to zero for determinism
        if obj.get(var, 0) > 0 or w.get(var, 0) > 0:
            fixed[var] = 1
            base += obj.get(var, 0)
            cover += w.get(var, 0)
        else:
            fixed[var] = 0

    reduced: list[_Pair] = []
    for p in pairs:
        if p.cover > 0 and p.keep_gain >= p.drop_gain:
            # cover side dominates: at least as much gain plus cover
            fixed[p.keep_var] = 1
            fixed[p.drop_var] = 0
            base += p.keep_gain
            cover += p.cover
        elif p.cover == 0:
            # no cover at stake, take the better side (ties keep the
            # canonical keep side)
            better, worse = (
                (p.keep_var, p.drop_var)
                if p.keep_gain >= p.drop_gain
                else (p.drop_var, p.keep_var)
            )
            fixed[better] = 1
            fixed[worse] = 0
            base += max(p.keep_gain, p.drop_gain)
        else:
            reduced.append(p)
    return _Presolved(fixed, tuple(reduced), base, program.cover_floor - cover)


def presolve(program: BinaryProgram) -> tuple[BinaryProgram, dict[str, int]]:
    """Fix every forced variable; return the reduced program and the fixes.

    The optimal objective of the reduced program plus the objective of the
    fixed assignment equals the optimum of the original program.
    """
    pres = _presolve(program, validate_program(program))
    variables = []
    objective = {}
    pairs = []
    weights = {}
    for p in pres.reduced:
        variables.extend((p.drop_var, p.keep_var))
        objective[p.drop_var] = p.drop_gain
        objective[p.keep_var] = p.keep_gain
        weights[p.keep_var] = p.cover
        pairs.append((p.drop_var, p.keep_var))
    reduced = BinaryProgram(
        variables=tuple(variables),
        objective=objective,
        at_most_one_pairs=tuple(pairs),
        cover_weights=weights,
        cover_floor=max(pres.residual_floor, 0),
    )
    return reduced, pres.fixed


@dataclass(frozen=True)
class CoverSelection:
    chosen: tuple[int, ...]
    cost: int
    cover: int


def solve_cover_dp(items: Sequence[tuple[int, int]], target: int) -> CoverSelection | None:
    """Minimum-cost subset of (cost, cover) items reaching cover >= target.

    Returns None when even the full set falls short.  Among minimum-cost
    subsets the one with the largest total cover is chosen (this keeps the
    retained test size monotone when the floor grows), and remaining ties
    prefer items earlier in ``items``.
    """
    if target < 0:
        raise ValueError(f"target must be non-negative, got {target}")
    if target == 0:
        return CoverSelection((), 0, 0)
    if sum(cover for _, cover in items) < target:
        return None

    # dp[i][j]: best (cost, -cover) over the first i items with capped
    # cover >= j; the true overshoot is tracked in the -cover term
    unreachable = (float("inf"), 0.0)
    width = target + 1
    rows: list[list[tuple[float, float]]] = [[unreachable] * width]
    rows[0][0] = (0, 0)
    for cost, cover in items:
        prev = rows[-1]
        row = prev[:]
        for j in range(width):
            base = prev[max(0, j - cover)]
            if base is unreachable or base[0] == float("inf"):
                continue
            cand = (base[0] + cost, base[1] - cover)
            if cand < row[j]:
                row[j] = cand
        rows.append(row)

    best = rows[-1][target]
    if best[0] == float("inf"):
        return None
    chosen: list[int] = []
    j = target
    for i in range(len(items), 0, -1):
        # ties prefer not taking this item, pushing coverage onto
        # earlier (lexicographically smaller) items
        if rows[i][j] == rows[i - 1][j]:
            continue
        cost, cover = items[i - 1]
        chosen.append(i - 1)
        j = max(0, j - cover)
    chosen.reverse()
    total_cost = sum(items[i][0] for i in chosen)
    total_cover = sum(items[i][1] for i in chosen)
    return CoverSelection(tuple(chosen), total_cost, total_cover)


def _assemble(pres: _Presolved, flipped: set[int]) -> tuple[dict[str, int], int]:
    values = dict(pres.fixed)
    objective = pres.base_objective
    for idx, p in enumerate(pres.reduced):
        if idx in flipped:
            values[p.keep_var] = 1
            values[p.drop_var] = 0
            objective += p.keep_gain
        else:
            values[p.drop_var] = 1
            values[p.keep_var] = 0
            objective += p.drop_gain
    return values, objective


def solve(program: BinaryProgram) -> Solution:
    """Exact solve by presolve plus the covering dynamic program."""
    pres = _presolve(program, validate_program(program))
    items = [(p.drop_gain - p.keep_gain, p.cover) for p in pres.reduced]
    selection = solve_cover_dp(items, max(pres.residual_floor, 0))
    if selection is None:
        return _INFEASIBLE
    values, objective = _assemble(pres, set(selection.chosen))
    return Solution(values=values, objective_value=objective, status=Status.OPTIMAL)


def _relaxation(
    pairs: list[_Pair],
    program: BinaryProgram,
    partial: Mapping[str, int],
) -> tuple[Fraction | float, _Pair | None]:
    """LP-relaxation optimum honoring ``partial``; also the fractional pair.

    The relaxation has one non-trivial constraint (the cover floor), so its
    optimum is the unconstrained best choice per variable plus the cheapest
    fractional repair: flip pairs toward their cover side in increasing
    cost-per-cover order until the floor is met, splitting the last pair.
    Returns (-inf, None) when the partial cannot reach the floor.
    """
    obj = program.objective
    w = program.cover_weights
    for u, v in program.at_most_one_pairs:
        if partial.get(u, 0) and partial.get(v, 0):
            return NEG_INF, None

    gain = Fraction(0)
    cover = 0
    paired = {p.drop_var for p in pairs} | {p.keep_var for p in pairs}
    for var in program.variables:
        if var in paired:
            continue
        value = partial.get(var, 1)  # free unpaired variables only help at 1
        gain += obj.get(var, 0) * value
        cover += w.get(var, 0) * value

    candidates: list[tuple[Fraction, _Pair]] = []
    for p in pairs:
        dv, kv = partial.get(p.drop_var), partial.get(p.keep_var)
        if dv is not None and kv is not None:
            gain += p.drop_gain * dv + p.keep_gain * kv
            cover += p.cover * kv
        elif dv == 1 or kv == 0:
            # the drop side is (or may freely go to) 1, the keep side is shut
            gain += p.drop_gain
        elif kv == 1 or dv == 0:
            gain += p.keep_gain
            cover += p.cover
        elif p.cover > 0 and p.keep_gain >= p.drop_gain:
            gain += p.keep_gain
            cover += p.cover
        else:
            gain += max(p.drop_gain, p.keep_gain)
            if p.cover > 0:
                candidates.append((Fraction(p.drop_gain - p.keep_gain, p.cover), p))

    need = program.cover_floor - cover
    if need <= 0:
        return gain, None
    candidates.sort(key=lambda c: (c[0], c[1].keep_var))
    for ratio, p in candidates:
        if p.cover >= need:
            return gain - ratio * need, p
        need -= p.cover
        gain -= p.drop_gain - p.keep_gain
    return NEG_INF, None


def lp_relaxation_bound(
    program: BinaryProgram, partial: Mapping[str, int] | None = None
) -> Fraction | float:
    """Upper bound from the linear relaxation under a partial assignment."""
    pairs = validate_program(program)
    bound, _ = _relaxation(pairs, program, partial or {})
    return bound


def solve_branch_and_bound(
    program: BinaryProgram, config: SolverConfig = SolverConfig()
) -> Solution:
    """Depth-first branch-and-bound, branching on the relaxation's fractional pair."""
    pairs = validate_program(program)
    pres = _presolve(program, pairs)
    need = max(pres.residual_floor, 0)
    items = [(p.drop_gain - p.keep_gain, p.cover) for p in pres.reduced]

    incumbent: tuple[int, dict[str, int]] | None = None
    if config.warm_start:
        selection = solve_cover_dp(items, need)
        if selection is not None:
            values, objective = _assemble(pres, set(selection.chosen))
            incumbent = (objective, values)

    index = {p: i for i, p in enumerate(pres.reduced)}
    nodes = 0
    # each stack entry is a partial choice over reduced pairs: index -> flip
    stack: list[dict[int, bool]] = [{}]
    while stack:
        choices = stack.pop()
        nodes += 1
        if nodes > config.node_limit:
            raise NodeLimitError(f"node limit {config.node_limit} exceeded")

        partial = dict(pres.fixed)
        for i, flip in choices.items():
            p = pres.reduced[i]
            partial[p.keep_var] = 1 if flip else 0
            partial[p.drop_var] = 0 if flip else 1
        bound, frac = _relaxation(list(pres.reduced), program, partial)
        if bound == NEG_INF:
            continue
        if incumbent is not None and bound <= incumbent[0]:
            continue
        if frac is None:
            # relaxation is integral: the floor is already met, so every
            # undecided pair sits at its better (drop) side and the bound
            # is attained exactly
            flipped = {i for i, flip in choices.items() if flip}
            values, objective = _assemble(pres, flipped)
            if incumbent is None or objective > incumbent[0]:
                incumbent = (objective, values)
            continue
        i = index[frac]
        for flip in (False, True):  # pushed Train-first so the Test child pops first
            child = dict(choices)
            child[i] = flip
            stack.append(child)

    if incumbent is None:
        return Solution(values={}, objective_value=0, status=Status.INFEASIBLE, nodes_explored=nodes)
    return Solution(
        values=incumbent[1],
        objective_value=incumbent[0],
        status=Status.OPTIMAL,
        nodes_explored=nodes,
    )


MAX_EXHAUSTIVE_PAIRS = 24


def solve_exhaustive(program: BinaryProgram) -> Solution:
    """Reference optimum by enumerating both sides of every pair.

    Independent of presolve and the covering DP: unpaired variables follow
    the trivial dominance rule (take anything that adds objective or cover)
    and every pair is enumerated with its cover side tried first, keeping
    the first optimum found.  Guarded to 2**24 assignments.
    """
    pairs = validate_program(program)
    if len(pairs) > MAX_EXHAUSTIVE_PAIRS:
        raise ValueError(f"{len(pairs)} pairs exceed the exhaustive guard ({MAX_EXHAUSTIVE_PAIRS})")
    obj = program.objective
    w = program.cover_weights

    base_values: dict[str, int] = {}
    base_gain = 0
    base_cover = 0
    paired = {p.drop_var for p in pairs} | {p.keep_var for p in pairs}
    for var in program.variables:
        if var in paired:
            continue
        take = 1 if (obj.get(var, 0) > 0 or w.get(var, 0) > 0) else 0
        base_values[var] = take
        base_gain += obj.get(var, 0) * take
        base_cover += w.get(var, 0) * take

    best: tuple[int, tuple[bool, ...]] | None = None

    def descend(i: int, gain: int, cover: int, keeps: list[bool]) -> None:
        nonlocal best
        if i == len(pairs):
            if cover >= program.cover_floor and (best is None or gain > best[0]):
                best = (gain, tuple(keeps))
            return
        p = pairs[i]
        keeps.append(True)
        descend(i + 1, gain + p.keep_gain, cover + p.cover, keeps)
        keeps[-1] = False
        descend(i + 1, gain + p.drop_gain, cover, keeps)
        keeps.pop()

    descend(0, base_gain, base_cover, [])
    if best is None:
        return _INFEASIBLE
    values = dict(base_values)
    for p, keep in zip(pairs, best[1]):
        values[p.keep_var] = 1 if keep else 0
        values[p.drop_var] = 0 if keep else 1
    return Solution(values=values, objective_value=best[0], status=Status.OPTIMAL)


def dump_program(program: BinaryProgram, solution: Solution | None = None) -> str:
    """Plain-text dump (one line per variable and constraint) for diffing."""
    lines = []
    values = solution.values if solution else {}
    for var in sorted(program.variables):
        parts = [
            f"var {var}",
            f"obj={program.objective.get(var, 0)}",
            f"cover={program.cover_weights.get(var, 0)}",
        ]
        if var in values:
            parts.append(f"value={values[var]}")
        lines.append(" ".join(parts))
    for u, v in sorted(program.at_most_one_pairs):
        lines.append(f"pair {u} + {v} <= 1")
    lines.append(f"cover >= {program.cover_floor}")
    if solution:
        lines.append(f"status {solution.status.value} objective {solution.objective_value}")
    return "\n".join(lines) + "\n"
