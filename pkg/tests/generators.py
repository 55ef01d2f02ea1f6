"""Seeded random generators for corpora, binary programs, and WER cases."""
from __future__ import annotations

from promptsplit.corpus import CorpusManifest, PromptCategory, Severity, Utterance
from promptsplit.solver import BinaryProgram

SEVERITIES = (
    Severity.SEVERE,
    Severity.MODERATE_SEVERE,
    Severity.MODERATE,
    Severity.MILD,
    Severity.CONTROL,
)


def random_corpus(rng, max_speakers=50, max_utterances=2000):
    """Random manifest with Zipf-like prompt reuse. Returns (manifest, target).

    Utterances are built directly from pre-normalized text so corpus
    construction stays cheap; prompt sharing across speakers is the point.
    """
    n_speakers = rng.randint(5, max_speakers)
    n_utts = rng.randint(50, max_utterances)
    pool_size = max(8, n_utts // rng.choice((3, 5, 8, 12)))
    texts = set()
    while len(texts) < pool_size:
        if rng.random() < 0.7:
            texts.add(f"w{rng.randrange(400)}")
        else:
            length = rng.randint(2, 7)
            texts.add(" ".join(f"w{rng.randrange(400)}" for _ in range(length)))
    texts = sorted(texts)
    weights = [1.0 / (i + 1) for i in range(len(texts))]
    speakers = [f"S{i:02d}" for i in range(n_speakers)]
    severities = {}
    for i, spk in enumerate(speakers):
        # speaker 0 is never a control so a target always exists
        pick = rng.randrange(4) if i == 0 else rng.randrange(len(SEVERITIES))
        severities[spk] = SEVERITIES[pick]
    prompt_idx = rng.choices(range(len(texts)), weights=weights, k=n_utts)
    speaker_idx = [rng.randrange(n_speakers) for _ in range(n_utts)]
    speaker_idx[0] = 0
    categories = {
        t: PromptCategory.ISOLATED_WORD if len(t.split()) == 1 else PromptCategory.SENTENCE
        for t in texts
    }
    utterances = []
    for i, (pi, si) in enumerate(zip(prompt_idx, speaker_idx)):
        text = texts[pi]
        spk = speakers[si]
        utterances.append(
            Utterance(
                utterance_id=f"u{i:05d}",
                speaker_id=spk,
                severity=severities[spk],
                raw_prompt=text,
                normalized_prompt=text,
                category=categories[text],
                audio_path=None,
            )
        )
    present = {u.speaker_id for u in utterances}
    manifest = CorpusManifest(
        utterances=tuple(utterances),
        speakers={s: severities[s] for s in speakers if s in present},
    )
    candidates = sorted(
        s for s, sev in manifest.speakers.items() if sev is not Severity.CONTROL
    )
    target = rng.choice(candidates)
    return manifest, target


def random_program(rng, max_pairs=15, max_unpaired=4):
    """Random well-formed binary program; the floor may be unreachable."""
    n_pairs = rng.randint(0, max_pairs)
    n_single = rng.randint(0, max_unpaired)
    variables = []
    objective = {}
    pairs = []
    weights = {}
    for i in range(n_pairs):
        u = f"p{i}a"
        v = f"p{i}b"
        variables += [u, v]
        objective[u] = rng.randint(0, 10)
        objective[v] = rng.randint(0, 10)
        pairs.append((u, v))
        if rng.random() < 0.85:
            weights[v] = rng.randint(1, 5)
    for i in range(n_single):
        s = f"s{i}"
        variables.append(s)
        objective[s] = rng.randint(0, 10)
        if rng.random() < 0.5:
            weights[s] = rng.randint(1, 5)
    total_cover = sum(weights.values())
    floor = rng.randint(0, total_cover + 2) if rng.random() < 0.9 else 0
    return BinaryProgram(
        variables=tuple(variables),
        objective=objective,
        at_most_one_pairs=tuple(pairs),
        cover_weights=weights,
        cover_floor=floor,
    )


def random_token_pair(rng, alphabet=("a", "b", "c", "d", "e", "f", "g", "h")):
    """Random (reference, hypothesis) token sequences for WER checks."""
    ref_len = rng.randint(1, 12)
    hyp_len = rng.randint(0, 12)
    reference = [rng.choice(alphabet) for _ in range(ref_len)]
    if rng.random() < 0.5 and hyp_len > 0:
        # correlated hypothesis: corrupt a copy of the reference
        hypothesis = list(reference)
        for _ in range(rng.randint(0, 4)):
            op = rng.randrange(3)
            if op == 0 and hypothesis:
                hypothesis[rng.randrange(len(hypothesis))] = rng.choice(alphabet)
            elif op == 1 and hypothesis:
                del hypothesis[rng.randrange(len(hypothesis))]
            else:
                hypothesis.insert(rng.randint(0, len(hypothesis)), rng.choice(alphabet))
    else:
        hypothesis = [rng.choice(alphabet) for _ in range(hyp_len)]
    return reference, hypothesis
