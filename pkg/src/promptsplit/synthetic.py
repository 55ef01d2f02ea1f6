"""Deterministic synthetic corpus with a known prompt-overlap profile.

The generator lays out eight dysarthric speakers plus three controls.  Each
dysarthric speaker utters a planned number of prompts drawn from a shared
pool (those overlap other speakers by construction) and a remainder of
speaker-unique prompts (those never overlap), so every speaker's overlap
percentage is fixed by the plan.  Roughly three quarters of the utterances
are isolated words.  Useful wherever a corpus with ground-truth overlap is
needed: solver benchmarks, CLI smoke tests, demos.
"""
from __future__ import annotations

import random

from .corpus import CorpusManifest, Severity, Utterance, make_utterance

_SEED = 20240901

# speaker -> (severity, test utterances, of which drawn from the shared pool)
SPEAKER_PLAN: dict[str, tuple[Severity, int, int]] = {
    "F01": (Severity.SEVERE, 60, 60),
    "M01": (Severity.SEVERE, 110, 109),
    "M02": (Severity.SEVERE, 110, 108),
    "M04": (Severity.SEVERE, 112, 110),
    "M05": (Severity.MODERATE_SEVERE, 90, 89),
    "F03": (Severity.MODERATE, 93, 89),
    "F04": (Severity.MILD, 72, 71),
    "M03": (Severity.MILD, 300, 299),
}

CONTROL_SPEAKERS = ("FC01", "FC02", "MC01")

SHARED_WORDS = (
    "yes", "no", "up", "down", "left", "right",
    "back", "forward", "stop", "go", "open", "close",
)
SHARED_SENTENCES = (
    "please turn on the kitchen light",
    "the children are playing in the park",
    "she reads the newspaper every morning",
    "we are going to the market today",
    "my brother drives a small blue car",
    "please close the window before dinner",
)

_SYLLABLES = ("ba", "de", "ki", "lo", "mu", "na", "po", "ri", "sa", "tu", "ve", "zo")


def expected_overlap_percent(speaker: str) -> float:
    _, total, shared = SPEAKER_PLAN[speaker]
    return 100.0 * shared / total


def _unique_word(rng: random.Random, used: set[str]) -> str:
    while True:
        word = "".join(rng.choices(_SYLLABLES, k=rng.randint(2, 3)))
        if word not in used:
            used.add(word)
            return word


def build_facsimile_manifest() -> CorpusManifest:
    """Build the synthetic corpus; identical on every call."""
    rng = random.Random(_SEED)
    used_words = set(SHARED_WORDS)
    utterances: list[Utterance] = []
    speakers: dict[str, Severity] = {}

    # shared prompts weighted three-to-two keeps words at 75 percent of draws
    pool = list(SHARED_WORDS) + list(SHARED_SENTENCES)
    pool_weights = [3] * len(SHARED_WORDS) + [2] * len(SHARED_SENTENCES)

    for speaker, (severity, total, shared) in SPEAKER_PLAN.items():
        speakers[speaker] = severity
        prompts = rng.choices(pool, weights=pool_weights, k=shared)
        for k in range(total - shared):
            if rng.random() < 0.75:
                prompts.append(_unique_word(rng, used_words))
            else:
                prompts.append(f"speaker {speaker.lower()} repeats phrase number {k}")
        rng.shuffle(prompts)
        for i, prompt in enumerate(prompts):
            utterances.append(
                make_utterance(f"{speaker}_{i:04d}", speaker, severity, prompt)
            )

    for speaker in CONTROL_SPEAKERS:
        speakers[speaker] = Severity.CONTROL
        for rep in range(2):
            for i, prompt in enumerate(SHARED_WORDS + SHARED_SENTENCES):
                utterances.append(
                    make_utterance(
                        f"{speaker}_{rep}_{i:04d}", speaker, Severity.CONTROL, prompt
                    )
                )

    return CorpusManifest(tuple(utterances), speakers)
