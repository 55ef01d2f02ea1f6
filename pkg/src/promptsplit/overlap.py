"""Remove prompt overlap between the train and test sides of a split.

Every distinct normalized prompt becomes a binary choice: keep its
utterances on the train side, keep them on the test side, or (never at an
optimum) drop both.  Maximizing retained material subject to a floor on the
retained test share is handed to :mod:`promptsplit.solver`; isolated words
and sentences are partitioned independently, each with its own floor.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import LosoSplit, PromptCategory, Utterance, write_manifest, CorpusManifest
from . import solver


class WeightingMode(enum.Enum):
    # each retained utterance counts once
    UTTERANCES = "utterances"
    # each retained distinct prompt counts once
    UNIQUE_PROMPTS = "prompts"


class Decision(enum.Enum):
    TRAIN = "train"
    TEST = "test"
    DROP = "drop"


class InfeasibleFloorError(Exception):
    """The requested floor cannot be met; carries the highest feasible f."""

    def __init__(self, f: Fraction, max_f: Fraction):
        self.f = f
        self.max_f = max_f
        super().__init__(
            f"retention floor f={float(f):g} is infeasible; "
            f"maximum achievable f is {float(max_f):g}"
        )


@dataclass(frozen=True)
class PromptItem:
    prompt: str
    train_count: int
    test_count: int
    category: PromptCategory


@dataclass(frozen=True)
class PartitionProblem:
    items: tuple[PromptItem, ...]
    f: Fraction
    weighting: WeightingMode
    test_total: int
    floor: int


def as_fraction(f: float | int | str | Fraction) -> Fraction:
    """Interpret ``f`` as the exact decimal the caller wrote.

    Floats go through their shortest decimal repr, so 0.07 means 7/100
    rather than the nearest binary float; this keeps ceil(f * total) exact.
    """
    if isinstance(f, Fraction):
        return f
    if isinstance(f, float):
        return Fraction(str(f))
    return Fraction(f)


def _weight(count: int, weighting: WeightingMode) -> int:
    if count <= 0:
        return 0
    return count if weighting is WeightingMode.UTTERANCES else 1


def build_partition_problem(
    split: LosoSplit,
    f: float | int | str | Fraction,
    weighting: WeightingMode = WeightingMode.UTTERANCES,
) -> PartitionProblem:
    """Collect per-prompt multiplicities and the retention floor ceil(f * total)."""
    f = as_fraction(f)
    if not 0 <= f <= 1:
        raise ValueError(f"f must lie in [0, 1], got {float(f):g}")
    if not split.test:
        raise ValueError("split has an empty test side")

    train_counts = Counter(u.normalized_prompt for u in split.train)
    test_counts = Counter(u.normalized_prompt for u in split.test)
    category = {u.normalized_prompt: u.category for u in split.train}
    category.update({u.normalized_prompt: u.category for u in split.test})

    items = tuple(
        PromptItem(p, train_counts.get(p, 0), test_counts.get(p, 0), category[p])
        for p in sorted(train_counts.keys() | test_counts.keys())
    )
    test_total = sum(_weight(i.test_count, weighting) for i in items)
    return PartitionProblem(items, f, weighting, test_total, math.ceil(f * test_total))


def decompose_by_category(
    problem: PartitionProblem,
) -> tuple[PartitionProblem, PartitionProblem]:
    """Split into independent isolated-word and sentence subproblems.

    Each subproblem gets its own floor ceil(f * subtotal), so both
    categories individually retain at least the requested share.
    """
    out = []
    for cat in (PromptCategory.ISOLATED_WORD, PromptCategory.SENTENCE):
        items = tuple(i for i in problem.items if i.category is cat)
        total = sum(_weight(i.test_count, problem.weighting) for i in items)
        out.append(
            PartitionProblem(
                items, problem.f, problem.weighting, total, math.ceil(problem.f * total)
            )
        )
    return out[0], out[1]


def to_binary_program(problem: PartitionProblem) -> solver.BinaryProgram:
    """Encode the partition problem as a two-variables-per-prompt program."""
    variables: list[str] = []
    objective: dict[str, int] = {}
    pairs: list[tuple[str, str]] = []
    weights: dict[str, int] = {}
    for item in problem.items:
        train_var = f"train:{item.prompt}"
        test_var = f"test:{item.prompt}"
        if item.train_count > 0:
            variables.append(train_var)
            objective[train_var] = _weight(item.train_count, problem.weighting)
        if item.test_count > 0:
            variables.append(test_var)
            objective[test_var] = _weight(item.test_count, problem.weighting)
            weights[test_var] = _weight(item.test_count, problem.weighting)
        if item.train_count > 0 and item.test_count > 0:
            pairs.append((train_var, test_var))
    return solver.BinaryProgram(
        variables=tuple(variables),
        objective=objective,
        at_most_one_pairs=tuple(pairs),
        cover_weights=weights,
        cover_floor=problem.floor,
    )


@dataclass(frozen=True)
class Assignment:
    decisions: Mapping[str, Decision]
    objective_value: int
    proven_optimal: bool


def solve_partition(problem: PartitionProblem) -> Assignment:
    """Solve one partition problem to optimality.

    Raises InfeasibleFloorError when the floor exceeds the total assignable
    test weight (impossible for problems built from a real split with
    f <= 1, but reachable through hand-built floors).
    """
    program = to_binary_program(problem)
    solution = solver.solve(program)
    if solution.status is solver.Status.INFEASIBLE:
        max_f = (
            Fraction(sum(program.cover_weights.values()), problem.test_total)
            if problem.test_total
            else Fraction(0)
        )
        raise InfeasibleFloorError(problem.f, max_f)
    decisions = {}
    for item in problem.items:
        if solution.values.get(f"train:{item.prompt}", 0):
            decisions[item.prompt] = Decision.TRAIN
        elif solution.values.get(f"test:{item.prompt}", 0):
            decisions[item.prompt] = Decision.TEST
        else:
            decisions[item.prompt] = Decision.DROP
    return Assignment(decisions, solution.objective_value, solution.status is solver.Status.OPTIMAL)


@dataclass(frozen=True)
class SplitResult:
    target_speaker: str
    validation_speaker: str | None
    f: Fraction
    weighting: WeightingMode
    train: tuple[Utterance, ...]
    test: tuple[Utterance, ...]
    train_before: int
    test_before: int

    @property
    def dropped(self) -> int:
        return (self.train_before + self.test_before) - (len(self.train) + len(self.test))


def apply_assignment(
    split: LosoSplit,
    assignment_words: Assignment,
    assignment_sentences: Assignment,
    f: Fraction = Fraction(0),
    weighting: WeightingMode = WeightingMode.UTTERANCES,
) -> SplitResult:
    """Materialize the solved assignments into disjoint train/test sets."""
    decisions: dict[str, Decision] = dict(assignment_words.decisions)
    decisions.update(assignment_sentences.decisions)
    for u in split.train + split.test:
        if u.normalized_prompt not in decisions:
            raise ValueError(f"prompt {u.normalized_prompt!r} missing from both assignments")
    train = tuple(u for u in split.train if decisions[u.normalized_prompt] is Decision.TRAIN)
    test = tuple(u for u in split.test if decisions[u.normalized_prompt] is Decision.TEST)
    return SplitResult(
        target_speaker=split.target_speaker,
        validation_speaker=split.validation_speaker,
        f=f,
        weighting=weighting,
        train=train,
        test=test,
        train_before=len(split.train),
        test_before=len(split.test),
    )


def remove_overlap(
    split: LosoSplit,
    f: float | int | str | Fraction = Fraction(11, 20),
    weighting: WeightingMode = WeightingMode.UTTERANCES,
) -> SplitResult:
    """Full pipeline: build, decompose, solve both categories, apply."""
    problem = build_partition_problem(split, f, weighting)
    words, sentences = decompose_by_category(problem)
    return apply_assignment(
        split,
        solve_partition(words),
        solve_partition(sentences),
        f=problem.f,
        weighting=weighting,
    )


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    shared_prompts: tuple[str, ...]


def verify_no_overlap(result: SplitResult) -> VerificationReport:
    """Independent re-check that no normalized prompt spans both sides."""
    train_prompts = {u.normalized_prompt for u in result.train}
    shared = sorted({u.normalized_prompt for u in result.test} & train_prompts)
    return VerificationReport(passed=not shared, shared_prompts=tuple(shared))


@dataclass(frozen=True)
class SweepPoint:
    f: Fraction
    train_retained: int
    test_retained: int
    total_retained: int


def sweep_f(
    split: LosoSplit,
    f_values: Iterable[float | int | str | Fraction],
    weighting: WeightingMode = WeightingMode.UTTERANCES,
) -> tuple[SweepPoint, ...]:
    """Retention at each f.  Test retention never falls and train retention
    never rises as f grows (the solver breaks objective ties toward larger
    retained-test cover, which makes both monotone)."""
    points = []
    for f in f_values:
        result = remove_overlap(split, f, weighting)
        points.append(
            SweepPoint(result.f, len(result.train), len(result.test), len(result.train) + len(result.test))
        )
    return tuple(points)


def split_summary_rows(result: SplitResult) -> list[tuple[str, str, int, int]]:
    return [
        (result.target_speaker, "train", result.train_before, len(result.train)),
        (result.target_speaker, "test", result.test_before, len(result.test)),
    ]


def write_split_result(result: SplitResult, out_dir: str | Path) -> dict[str, Path]:
    """Write train/test manifests plus a before/after summary TSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "train": out / "train.tsv",
        "test": out / "test.tsv",
        "summary": out / "summary.tsv",
    }
    speakers = {u.speaker_id: u.severity for u in result.train}
    write_manifest(CorpusManifest(result.train, speakers), paths["train"])
    speakers = {u.speaker_id: u.severity for u in result.test}
    write_manifest(CorpusManifest(result.test, speakers), paths["test"])
    lines = ["speaker\tside\tbefore\tafter"]
    for speaker, side, before, after in split_summary_rows(result):
        lines.append(f"{speaker}\t{side}\t{before}\t{after}")
    paths["summary"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths
