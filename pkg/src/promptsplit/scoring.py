"""Word-error-rate scoring of externally produced hypotheses.

Hypotheses arrive as a TSV of ``utterance_id<TAB>hypothesis`` (or the four
column n-best layout, from which rank 1 is taken).  References come from a
corpus manifest; both sides are compared after prompt normalization.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .corpus import (
    CorpusManifest,
    PromptCategory,
    Severity,
    normalize_prompt,
)
from .ngram import NBEST_COLUMNS

log = logging.getLogger(__name__)

HYPOTHESIS_COLUMNS = ("utterance_id", "hypothesis")


class HypothesisError(ValueError):
    """Malformed hypothesis file; the message carries line numbers."""


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.reference_length


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> WerBreakdown:
    """Minimum-edit-distance alignment counts against a non-empty reference.

    Among minimal alignments the backtrace prefers substitution, then
    deletion, then insertion, so the split of errors is deterministic.
    """
    if not reference:
        raise ValueError("empty reference")
    n, m = len(reference), len(hypothesis)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        ref_tok = reference[i - 1]
        row, above = dist[i], dist[i - 1]
        for j in range(1, m + 1):
            if ref_tok == hypothesis[j - 1]:
                row[j] = above[j - 1]
            else:
                row[j] = 1 + min(above[j - 1], above[j], row[j - 1])

    subs = dels = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and reference[i - 1] == hypothesis[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerBreakdown(subs, dels, ins, n)


@dataclass(frozen=True)
class ScoredUtterance:
    utterance_id: str
    speaker: str | None
    severity: Severity | None
    category: PromptCategory
    breakdown: WerBreakdown


def load_hypotheses(source: str | Path | IO[str]) -> dict[str, str]:
    """Load hypothesis texts keyed by utterance id.

    Accepts the two column hypothesis layout or the four column n-best
    layout (rank 1 rows only).  Duplicate ids are an error naming both
    lines.
    """
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise HypothesisError("empty hypothesis file")
    header = tuple(lines[0].split("\t"))
    if header == HYPOTHESIS_COLUMNS:
        id_col, text_col, rank_col = 0, 1, None
    elif header == NBEST_COLUMNS:
        id_col, text_col, rank_col = 0, 3, 1
    else:
        raise HypothesisError(
            f"bad header {header!r}; expected {HYPOTHESIS_COLUMNS!r} or {NBEST_COLUMNS!r}"
        )
    out: dict[str, str] = {}
    first_line: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise HypothesisError(
                f"line {lineno}: expected {len(header)} columns, got {len(fields)}"
            )
        if rank_col is not None and fields[rank_col] != "1":
            continue
        utt_id = fields[id_col]
        if utt_id in out:
            raise HypothesisError(
                f"duplicate hypothesis for {utt_id!r} on lines {first_line[utt_id]} and {lineno}"
            )
        out[utt_id] = fields[text_col]
        first_line[utt_id] = lineno
    return out


def load_references(manifest: CorpusManifest) -> dict[str, tuple[str, str, Severity, PromptCategory]]:
    """Reference map: utterance id -> (normalized text, speaker, severity, category)."""
    return {
        u.utterance_id: (u.normalized_prompt, u.speaker_id, u.severity, u.category)
        for u in manifest.utterances
    }


def score_utterances(
    references: Mapping[str, tuple[str, str, Severity, PromptCategory]],
    hypotheses: Mapping[str, str],
    strict: bool = False,
) -> list[ScoredUtterance]:
    """Score every reference against its hypothesis.

    A reference without a hypothesis scores as fully deleted (WER 1.0) with
    a warning, or raises under strict mode.  Hypotheses for unknown
    utterances are warned about and ignored.
    """
    if not references:
        raise ValueError("no references to score")
    for utt_id in sorted(set(hypotheses) - set(references)):
        log.warning("hypothesis for unknown utterance %r ignored", utt_id)
    scored = []
    for utt_id in sorted(references):
        text, speaker, severity, category = references[utt_id]
        if utt_id not in hypotheses:
            if strict:
                raise HypothesisError(f"missing hypothesis for {utt_id!r}")
            log.warning("missing hypothesis for %r; scoring as all deletions", utt_id)
        hyp = normalize_prompt(hypotheses.get(utt_id, ""))
        scored.append(
            ScoredUtterance(utt_id, speaker, severity, category, wer(text.split(), hyp.split()))
        )
    return scored


_SEVERITY_LABEL = {
    Severity.SEVERE: "Severe",
    Severity.MODERATE_SEVERE: "M/S",
    Severity.MODERATE: "Moderate",
    Severity.MILD: "Mild",
    Severity.CONTROL: "Control",
    None: "-",
}
_SEVERITY_RANK = {s: i for i, s in enumerate(_SEVERITY_LABEL)}
_CATEGORY_LABEL = {
    PromptCategory.ISOLATED_WORD: "IW",
    PromptCategory.SENTENCE: "Sent",
}

GROUP_KEYS = ("severity", "category", "speaker")


@dataclass(frozen=True)
class ReportRow:
    keys: tuple[str, ...]
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int
    wer: float


@dataclass(frozen=True)
class Report:
    group_by: tuple[str, ...]
    rows: tuple[ReportRow, ...]

    def to_tsv(self) -> str:
        header = list(self.group_by) + ["substitutions", "deletions", "insertions", "reference_length", "wer_percent"]
        lines = ["\t".join(header)]
        for row in self.rows:
            lines.append(
                "\t".join(
                    list(row.keys)
                    + [
                        str(row.substitutions),
                        str(row.deletions),
                        str(row.insertions),
                        str(row.reference_length),
                        f"{100.0 * row.wer:.1f}",
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = list(self.group_by) + ["S", "D", "I", "N", "WER"]
        table = [header]
        for row in self.rows:
            table.append(
                list(row.keys)
                + [
                    str(row.substitutions),
                    str(row.deletions),
                    str(row.insertions),
                    str(row.reference_length),
                    f"{100.0 * row.wer:.1f}%",
                ]
            )
        widths = [max(len(r[c]) for r in table) for c in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in table]
        return "\n".join(lines) + "\n"


def _sort_key(scored: ScoredUtterance, group_by: Sequence[str]) -> tuple:
    key = []
    for g in group_by:
        if g == "severity":
            key.append(_SEVERITY_RANK[scored.severity])
        elif g == "category":
            key.append(0 if scored.category is PromptCategory.ISOLATED_WORD else 1)
        else:
            key.append(scored.speaker or "-")
    return tuple(key)


def _labels(scored: ScoredUtterance, group_by: Sequence[str]) -> tuple[str, ...]:
    out = []
    for g in group_by:
        if g == "severity":
            out.append(_SEVERITY_LABEL[scored.severity])
        elif g == "category":
            out.append(_CATEGORY_LABEL[scored.category])
        else:
            out.append(scored.speaker or "-")
    return tuple(out)


def aggregate(scored: Iterable[ScoredUtterance], group_by: Sequence[str]) -> Report:
    """Pool error counts per group; WER is pooled, not averaged.

    Rows are ordered severity (most to least affected), then category
    (isolated words before sentences), then speaker; an overall pooled row
    closes the report.
    """
    group_by = tuple(group_by)
    for g in group_by:
        if g not in GROUP_KEYS:
            raise ValueError(f"unknown group key {g!r}; expected subset of {GROUP_KEYS}")
    groups: dict[tuple, list[ScoredUtterance]] = defaultdict(list)
    for s in scored:
        groups[_sort_key(s, group_by)].append(s)
    if not groups:
        raise ValueError("nothing to aggregate")

    def pooled(keys: tuple[str, ...], members: list[ScoredUtterance]) -> ReportRow:
        subs = sum(m.breakdown.substitutions for m in members)
        dels = sum(m.breakdown.deletions for m in members)
        ins = sum(m.breakdown.insertions for m in members)
        length = sum(m.breakdown.reference_length for m in members)
        return ReportRow(keys, subs, dels, ins, length, (subs + dels + ins) / length)

    rows = []
    everything: list[ScoredUtterance] = []
    for sort_key in sorted(groups):
        members = groups[sort_key]
        if group_by:
            rows.append(pooled(_labels(members[0], group_by), members))
        everything.extend(members)
    overall = tuple("Overall" if i == 0 else "-" for i in range(max(len(group_by), 1)))
    rows.append(pooled(overall, everything))
    return Report(group_by or ("group",), rows)


SCORE_COLUMNS = (
    "utterance_id",
    "speaker",
    "severity",
    "category",
    "substitutions",
    "deletions",
    "insertions",
    "reference_length",
    "wer",
)


def write_scored_tsv(scored: Iterable[ScoredUtterance], out: str | Path | IO[str]) -> None:
    lines = ["\t".join(SCORE_COLUMNS)]
    for s in scored:
        lines.append(
            "\t".join(
                (
                    s.utterance_id,
                    s.speaker or "-",
                    s.severity.value if s.severity else "-",
                    s.category.value,
                    str(s.breakdown.substitutions),
                    str(s.breakdown.deletions),
                    str(s.breakdown.insertions),
                    str(s.breakdown.reference_length),
                    f"{s.breakdown.wer:.6f}",
                )
            )
        )
    text = "\n".join(lines) + "\n"
    if isinstance(out, (str, Path)):
        Path(out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def read_scored_tsv(source: str | Path | IO[str]) -> list[ScoredUtterance]:
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or tuple(lines[0].split("\t")) != SCORE_COLUMNS:
        raise HypothesisError(f"bad score header; expected {SCORE_COLUMNS!r}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(SCORE_COLUMNS):
            raise HypothesisError(f"line {lineno}: expected {len(SCORE_COLUMNS)} columns")
        try:
            breakdown = WerBreakdown(int(fields[4]), int(fields[5]), int(fields[6]), int(fields[7]))
            severity = None if fields[2] == "-" else Severity(fields[2])
            category = PromptCategory(fields[3])
        except ValueError:
            raise HypothesisError(f"line {lineno}: unparsable row") from None
        out.append(
            ScoredUtterance(fields[0], None if fields[1] == "-" else fields[1], severity, category, breakdown)
        )
    return out
