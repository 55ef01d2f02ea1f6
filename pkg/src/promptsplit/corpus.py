"""Corpus ingestion, prompt normalization, and leave-one-speaker-out splits.

The canonical input is a UTF-8 TSV manifest with a header row and the columns

    utterance_id  speaker_id  severity  prompt  audio_path

where ``severity`` is one of ``severe``, ``moderate_severe``, ``moderate``,
``mild``, ``control`` and ``audio_path`` may be empty.  Fields must not
contain embedded tabs.
"""
from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("utterance_id", "speaker_id", "severity", "prompt", "audio_path")

# Conventional held-out speakers for this corpus family; pass ``validation``
# explicitly to override, or None to disable the hold-out.
DEFAULT_VALIDATION_SPEAKER = "F03"
FALLBACK_VALIDATION_SPEAKER = "F04"


class ManifestError(ValueError):
    """Structural problem in a manifest; the message carries line numbers."""


class Severity(enum.Enum):
    SEVERE = "severe"
    MODERATE_SEVERE = "moderate_severe"
    MODERATE = "moderate"
    MILD = "mild"
    CONTROL = "control"

    @classmethod
    def from_label(cls, label: str) -> "Severity":
        try:
            return cls(label)
        except ValueError:
            raise ManifestError(
                f"unknown severity label {label!r}; expected one of "
                + ", ".join(s.value for s in cls)
            ) from None


class PromptCategory(enum.Enum):
    ISOLATED_WORD = "isolated_word"
    SENTENCE = "sentence"


class ManifestFormat(enum.Enum):
    TSV = "tsv"


_BRACKETED = re.compile(r"\[[^\]]*\]")
# ‘ / ’ curly quotes, ‚ low quote, ‛ reversed quote,
# backtick and acute accent all normalize to a plain apostrophe.
_APOSTROPHES = dict.fromkeys(map(ord, "‘’‚‛`´"), "'")
_NON_TOKEN = re.compile(r"[^a-z0-9']+")


def normalize_prompt(raw: str) -> str:
    """Normalize a prompt to its canonical comparison form.

    Lowercases, removes bracketed annotations such as ``[laughs]``, strips
    punctuation while keeping apostrophes attached to a word, and collapses
    whitespace.  The result may be empty (e.g. for annotation-only prompts).
    """
    text = _BRACKETED.sub(" ", raw).translate(_APOSTROPHES).lower()
    text = _NON_TOKEN.sub(" ", text)
    # a token made only of apostrophes is leftover punctuation, not a word
    tokens = [tok for tok in text.split() if tok.strip("'")]
    return " ".join(tokens)


def classify_prompt(normalized: str) -> PromptCategory:
    """Classify a normalized prompt: one token is an isolated word."""
    tokens = normalized.split()
    if not tokens:
        raise ValueError("cannot classify an empty prompt")
    return PromptCategory.ISOLATED_WORD if len(tokens) == 1 else PromptCategory.SENTENCE


@dataclass(frozen=True, slots=True)
class Utterance:
    utterance_id: str
    speaker_id: str
    severity: Severity
    raw_prompt: str
    normalized_prompt: str
    category: PromptCategory
    audio_path: str | None = None


def make_utterance(
    utterance_id: str,
    speaker_id: str,
    severity: Severity,
    raw_prompt: str,
    audio_path: str | None = None,
) -> Utterance:
    """Build an Utterance, normalizing and classifying the prompt.

    Raises ValueError when the prompt normalizes to the empty string.
    """
    normalized = normalize_prompt(raw_prompt)
    if not normalized:
        raise ValueError(f"prompt of utterance {utterance_id!r} normalizes to empty")
    return Utterance(
        utterance_id=utterance_id,
        speaker_id=speaker_id,
        severity=severity,
        raw_prompt=raw_prompt,
        normalized_prompt=normalized,
        category=classify_prompt(normalized),
        audio_path=audio_path,
    )


@dataclass(frozen=True)
class CorpusManifest:
    utterances: tuple[Utterance, ...]
    speakers: dict[str, Severity]
    # rows dropped at ingest because their prompt normalized to empty,
    # as (line number, utterance_id); excluded from equality so that a
    # parse -> write -> parse round trip compares equal
    rejected: tuple[tuple[int, str], ...] = field(default=(), compare=False)

    def speaker_utterances(self, speaker_id: str) -> tuple[Utterance, ...]:
        return tuple(u for u in self.utterances if u.speaker_id == speaker_id)

    def unique_prompt_count(self) -> int:
        return len({u.normalized_prompt for u in self.utterances})


def _open_source(source: str | Path | IO[str] | IO[bytes]) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8").splitlines()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data.splitlines()


def parse_manifest(
    source: str | Path | IO[str] | IO[bytes],
    fmt: ManifestFormat = ManifestFormat.TSV,
) -> CorpusManifest:
    """Parse a manifest from a path or stream.

    Structural errors (wrong column count, duplicate utterance_id, unknown
    severity, conflicting severity for a speaker) raise ManifestError with
    the offending line number.  Rows whose prompt normalizes to empty are
    rejected with a warning and reported in ``CorpusManifest.rejected``.
    """
    if fmt is not ManifestFormat.TSV:
        raise ValueError(f"unsupported manifest format: {fmt}")
    lines = list(_open_source(source))
    if not lines:
        raise ManifestError("empty manifest: missing header row")
    header = tuple(lines[0].rstrip("\n").split("\t"))
    if header != MANIFEST_COLUMNS:
        raise ManifestError(
            f"line 1: bad header {header!r}; expected {MANIFEST_COLUMNS!r}"
        )

    utterances: list[Utterance] = []
    seen_ids: dict[str, int] = {}
    speakers: dict[str, Severity] = {}
    speaker_first_line: dict[str, int] = {}
    rejected: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(MANIFEST_COLUMNS):
            raise ManifestError(
                f"line {lineno}: expected {len(MANIFEST_COLUMNS)} columns, got {len(fields)}"
            )
        utt_id, speaker_id, severity_label, prompt, audio_path = fields
        if utt_id in seen_ids:
            raise ManifestError(
                f"duplicate utterance_id {utt_id!r} on lines {seen_ids[utt_id]} and {lineno}"
            )
        seen_ids[utt_id] = lineno
        try:
            severity = Severity.from_label(severity_label)
        except ManifestError as exc:
            raise ManifestError(f"line {lineno}: {exc}") from None
        if speaker_id in speakers:
            if speakers[speaker_id] is not severity:
                raise ManifestError(
                    f"line {lineno}: speaker {speaker_id!r} has severity "
                    f"{severity.value!r} but line {speaker_first_line[speaker_id]} "
                    f"said {speakers[speaker_id].value!r}"
                )
        else:
            speakers[speaker_id] = severity
            speaker_first_line[speaker_id] = lineno
        try:
            utterances.append(
                make_utterance(utt_id, speaker_id, severity, prompt, audio_path or None)
            )
        except ValueError:
            log.warning("line %d: rejecting %r: prompt normalizes to empty", lineno, utt_id)
            rejected.append((lineno, utt_id))

    # a speaker seen only on rejected rows has no utterances left
    active = {u.speaker_id for u in utterances}
    speakers = {s: sev for s, sev in speakers.items() if s in active}
    return CorpusManifest(tuple(utterances), speakers, tuple(rejected))


def write_manifest(manifest: CorpusManifest, out: str | Path | IO[str]) -> None:
    """Serialize a manifest back to TSV (raw prompts, original labels)."""
    rows = ["\t".join(MANIFEST_COLUMNS)]
    for u in manifest.utterances:
        rows.append(
            "\t".join(
                (u.utterance_id, u.speaker_id, u.severity.value, u.raw_prompt, u.audio_path or "")
            )
        )
    text = "\n".join(rows) + "\n"
    if isinstance(out, (str, Path)):
        Path(out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


@dataclass(frozen=True)
class LosoSplit:
    target_speaker: str
    validation_speaker: str | None
    train: tuple[Utterance, ...]
    test: tuple[Utterance, ...]


def build_loso_split(
    manifest: CorpusManifest,
    target: str,
    validation: str | None = "auto",
) -> LosoSplit:
    """Build the leave-one-speaker-out split for ``target``.

    The test side holds every utterance of the target speaker; the train side
    holds every other speaker's utterances, control speakers included, minus
    the validation speaker's.  ``validation="auto"`` applies the default
    hold-out policy (F03, or F04 when the target is F03) and degrades to no
    hold-out when neither speaker exists.
    """
    if target not in manifest.speakers:
        raise ValueError(f"unknown target speaker {target!r}")
    if manifest.speakers[target] is Severity.CONTROL:
        raise ValueError(f"target speaker {target!r} is a control speaker")
    if validation == "auto":
        validation = None
        for candidate in (DEFAULT_VALIDATION_SPEAKER, FALLBACK_VALIDATION_SPEAKER):
            if candidate != target and candidate in manifest.speakers:
                validation = candidate
                break
    elif validation is not None:
        if validation not in manifest.speakers:
            raise ValueError(f"unknown validation speaker {validation!r}")
        if validation == target:
            raise ValueError("validation speaker must differ from the target")

    train = tuple(
        u
        for u in manifest.utterances
        if u.speaker_id != target and u.speaker_id != validation
    )
    test = tuple(u for u in manifest.utterances if u.speaker_id == target)
    return LosoSplit(target, validation, train, test)


@dataclass(frozen=True)
class OverlapStats:
    test_size: int
    overlapping: int
    percent: float
    distinct_shared: int


def overlap_report(split: LosoSplit) -> OverlapStats:
    """Measure how much of the test side's prompt material leaks from train."""
    train_prompts = {u.normalized_prompt for u in split.train}
    shared = set()
    overlapping = 0
    for u in split.test:
        if u.normalized_prompt in train_prompts:
            overlapping += 1
            shared.add(u.normalized_prompt)
    percent = 100.0 * overlapping / len(split.test) if split.test else 0.0
    return OverlapStats(len(split.test), overlapping, percent, len(shared))


def speaker_overlap_table(
    manifest: CorpusManifest,
) -> list[tuple[str, Severity, int, float]]:
    """Per-speaker overlap summary rows (speaker, severity, utterances, percent).

    Overlap here is a property of the corpus itself, so no validation speaker
    is held out.  Control speakers are omitted: they contribute prompts but
    are never split targets.
    """
    rows = []
    for speaker in sorted(manifest.speakers):
        severity = manifest.speakers[speaker]
        if severity is Severity.CONTROL:
            continue
        split = build_loso_split(manifest, speaker, validation=None)
        stats = overlap_report(split)
        rows.append((speaker, severity, stats.test_size, stats.percent))
    # severity from most to least affected, then speaker id
    order = {
        Severity.SEVERE: 0,
        Severity.MODERATE_SEVERE: 1,
        Severity.MODERATE: 2,
        Severity.MILD: 3,
    }
    rows.sort(key=lambda r: (order[r[1]], r[0]))
    return rows
