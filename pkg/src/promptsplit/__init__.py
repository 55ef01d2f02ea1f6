"""Leakage-free corpus partitioning and ASR evaluation.

Splits a prompted speech corpus so that no prompt text appears on both the
train and test side, keeping as much material as an exact 0/1 program
allows; evaluates the resulting splits with interpolated modified
Kneser-Ney language models; scores recognition hypotheses by word error
rate.
"""
from .corpus import (
    CorpusManifest,
    LosoSplit,
    ManifestError,
    OverlapStats,
    PromptCategory,
    Severity,
    Utterance,
    build_loso_split,
    classify_prompt,
    make_utterance,
    normalize_prompt,
    overlap_report,
    parse_manifest,
    speaker_overlap_table,
    write_manifest,
)
from .ngram import (
    EvalStats,
    KneserNeyModel,
    NgramCounts,
    OovPolicy,
    count_ngrams,
    estimate_discounts,
    perplexity,
    read_arpa,
    rescore_nbest,
    score_sequence,
    train_kn,
    write_arpa,
)
from .overlap import (
    Assignment,
    Decision,
    InfeasibleFloorError,
    PartitionProblem,
    PromptItem,
    SplitResult,
    WeightingMode,
    apply_assignment,
    build_partition_problem,
    decompose_by_category,
    remove_overlap,
    solve_partition,
    sweep_f,
    verify_no_overlap,
)
from .scoring import ScoredUtterance, WerBreakdown, aggregate, load_hypotheses, wer
from .solver import (
    BinaryProgram,
    Solution,
    SolverConfig,
    Status,
    lp_relaxation_bound,
    presolve,
    solve,
    solve_branch_and_bound,
    solve_cover_dp,
    solve_exhaustive,
)

__version__ = "0.1.0"
