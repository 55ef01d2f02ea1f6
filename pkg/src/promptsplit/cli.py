"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible floor.
Options may also come from a ``key=value`` config file (``--config``);
flags win over the file.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import corpus, ngram, overlap, scoring

PROG = "promptsplit"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _load_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    config = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


def _resolve(args: argparse.Namespace, key: str, default=None, required: bool = False):
    value = getattr(args, key, None)
    if value is None:
        value = args.cfg.get(key, default)
    if value is None and required:
        raise UsageError(f"missing required option --{key.replace('_', '-')}")
    return value


def _weighting(label: str) -> overlap.WeightingMode:
    try:
        return overlap.WeightingMode(label)
    except ValueError:
        raise UsageError(f"bad weighting {label!r}; expected utterances or prompts") from None


def _validation(label: str | None):
    if label in (None, "auto"):
        return "auto"
    if label == "none":
        return None
    return label


def _fraction(label: str) -> Fraction:
    try:
        f = overlap.as_fraction(label)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad fraction {label!r}") from None
    if not 0 <= f <= 1:
        raise UsageError(f"f must lie in [0, 1], got {label}")
    return f


def _f_label(f: Fraction) -> str:
    value = float(f)
    return f"{value:g}"


def cmd_inspect(args: argparse.Namespace) -> int:
    manifest = corpus.parse_manifest(_resolve(args, "manifest", required=True))
    rows = corpus.speaker_overlap_table(manifest)
    severity_label = {
        corpus.Severity.SEVERE: "Severe",
        corpus.Severity.MODERATE_SEVERE: "M/S",
        corpus.Severity.MODERATE: "Moderate",
        corpus.Severity.MILD: "Mild",
    }
    lines = ["severity\tspeaker\tutterances\toverlap_percent"]
    for speaker, severity, count, percent in rows:
        lines.append(f"{severity_label[severity]}\t{speaker}\t{count}\t{percent:.1f}")
    text = "\n".join(lines) + "\n"
    out = _resolve(args, "out")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    print(text, end="")
    total = len(manifest.utterances)
    print(f"# {total} utterances, {manifest.unique_prompt_count()} unique prompts")
    return 0


def _build_split(args: argparse.Namespace) -> corpus.LosoSplit:
    manifest = corpus.parse_manifest(_resolve(args, "manifest", required=True))
    target = _resolve(args, "speaker", required=True)
    return corpus.build_loso_split(
        manifest, target, _validation(_resolve(args, "validation", "auto"))
    )


def cmd_split(args: argparse.Namespace) -> int:
    split = _build_split(args)
    f = _fraction(_resolve(args, "f", "0.55"))
    weighting = _weighting(_resolve(args, "weighting", "utterances"))
    result = overlap.remove_overlap(split, f, weighting)
    if f == 0:
        print("warning: f=0 keeps no floor; the test side may empty out", file=sys.stderr)

    out_root = Path(_resolve(args, "out", "runs"))
    run_dir = out_root / f"{split.target_speaker}_f{_f_label(f)}"
    paths = overlap.write_split_result(result, run_dir)
    report = overlap.verify_no_overlap(result)
    for speaker, side, before, after in overlap.split_summary_rows(result):
        print(f"{speaker}\t{side}\t{before}\t{after}")
    print(f"verification: {'PASS' if report.passed else 'FAIL'}")
    if not report.passed:
        raise corpus.ManifestError(
            f"overlap remained after solving: {', '.join(report.shared_prompts[:5])}"
        )
    print(f"wrote {paths['train']}, {paths['test']}, {paths['summary']}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    train = corpus.parse_manifest(_resolve(args, "train", required=True))
    test = corpus.parse_manifest(_resolve(args, "test", required=True))
    shared = sorted(
        {u.normalized_prompt for u in train.utterances}
        & {u.normalized_prompt for u in test.utterances}
    )
    if shared:
        print(f"FAIL: {len(shared)} shared prompts")
        for prompt in shared[:20]:
            print(f"  {prompt}")
        return 2
    print("PASS: no shared prompts")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    split = _build_split(args)
    weighting = _weighting(_resolve(args, "weighting", "utterances"))
    labels = [v for v in _resolve(args, "f_values", "0,0.25,0.5,0.55,0.75,1").split(",") if v]
    points = overlap.sweep_f(split, [_fraction(v) for v in labels], weighting)
    lines = ["f_value,train,test,total"]
    for label, point in zip(labels, points):
        lines.append(f"{label},{point.train_retained},{point.test_retained},{point.total_retained}")
    text = "\n".join(lines) + "\n"
    out = _resolve(args, "out")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _training_lines(args: argparse.Namespace) -> list[str]:
    manifest_path = _resolve(args, "manifest")
    texts = getattr(args, "text", None) or []
    if manifest_path and texts:
        raise UsageError("pass either --manifest or --text, not both")
    if manifest_path:
        manifest = corpus.parse_manifest(manifest_path)
        return [u.normalized_prompt for u in manifest.utterances]
    if not texts:
        raise UsageError("missing training text: pass --manifest or --text")
    lines: list[str] = []
    for path in texts:
        lines.extend(Path(path).read_text(encoding="utf-8").splitlines())
    return lines


def cmd_lm_train(args: argparse.Namespace) -> int:
    order = int(_resolve(args, "order", "3"))
    counts = ngram.count_ngrams(_training_lines(args), order)
    model = ngram.train_kn(counts)
    out = _resolve(args, "out", required=True)
    Path(out).write_text(ngram.write_arpa(model), encoding="utf-8")
    print(f"trained order-{order} model on {len(model.words)} words -> {out}")
    return 0


def cmd_lm_eval(args: argparse.Namespace) -> int:
    model = ngram.read_arpa(_resolve(args, "model", required=True))
    policy = ngram.OovPolicy(_resolve(args, "oov_policy", "score_as_unk"))
    texts = getattr(args, "text", None) or []
    if not texts:
        raise UsageError("missing --text")
    print("text\tperplexity\toov_percent")
    stats = []
    for path in texts:
        s = ngram.perplexity(model, Path(path).read_text(encoding="utf-8").splitlines(), policy)
        stats.append(s)
        print(f"{path}\t{s.perplexity:.2f}\t{100.0 * s.oov_rate:.2f}")
    if len(stats) > 1:
        summary = ngram.combine_stats(stats)
        print(f"macro\t{summary.macro_perplexity:.2f}\t{100.0 * summary.macro_oov_rate:.2f}")
        print(f"pooled\t{summary.pooled_perplexity:.2f}\t{100.0 * summary.pooled_oov_rate:.2f}")
    return 0


def cmd_rescore(args: argparse.Namespace) -> int:
    model = ngram.read_arpa(_resolve(args, "model", required=True))
    nbest = ngram.load_nbest(_resolve(args, "nbest", required=True))
    weight = float(_resolve(args, "lm_weight", "1.0"))
    lines = ["utterance_id\trank\tacoustic_score\tlm_score\tcombined\thypothesis"]
    for utt_id in sorted(nbest):
        for new_rank, r in enumerate(ngram.rescore_nbest(model, nbest[utt_id], weight), 1):
            lines.append(
                f"{utt_id}\t{new_rank}\t{r.hypothesis.acoustic_score:.4f}"
                f"\t{r.lm_log10:.4f}\t{r.combined:.4f}\t{r.hypothesis.text}"
            )
    text = "\n".join(lines) + "\n"
    out = _resolve(args, "out")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    manifest = corpus.parse_manifest(_resolve(args, "manifest", required=True))
    hypotheses = scoring.load_hypotheses(_resolve(args, "hypotheses", required=True))
    strict = bool(getattr(args, "strict", False) or args.cfg.get("strict") == "true")
    scored = scoring.score_utterances(scoring.load_references(manifest), hypotheses, strict)
    out = _resolve(args, "out", required=True)
    scoring.write_scored_tsv(scored, out)
    overall = scoring.aggregate(scored, ()).rows[-1]
    print(f"scored {len(scored)} utterances -> {out}")
    print(f"overall WER {100.0 * overall.wer:.1f}%")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    scored = scoring.read_scored_tsv(_resolve(args, "scores", required=True))
    group_by = [g for g in _resolve(args, "group_by", "severity,category").split(",") if g]
    try:
        report = scoring.aggregate(scored, group_by)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _resolve(args, "out")
    if out:
        Path(out).with_suffix(".tsv").write_text(report.to_tsv(), encoding="utf-8")
        Path(out).with_suffix(".txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text(), end="")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", parents=[common], help="per-speaker overlap table")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("split", parents=[common], help="remove prompt overlap for one speaker")
    p.add_argument("--manifest")
    p.add_argument("--speaker")
    p.add_argument("--f")
    p.add_argument("--weighting", choices=[w.value for w in overlap.WeightingMode])
    p.add_argument("--validation", help="speaker id, 'auto' or 'none'")
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("verify", parents=[common], help="check two manifests share no prompts")
    p.add_argument("--train")
    p.add_argument("--test")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="retention across f values")
    p.add_argument("--manifest")
    p.add_argument("--speaker")
    p.add_argument("--f-values", dest="f_values")
    p.add_argument("--weighting", choices=[w.value for w in overlap.WeightingMode])
    p.add_argument("--validation")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    lm = sub.add_parser("lm", help="language model commands").add_subparsers(
        dest="lm_command", required=True
    )
    p = lm.add_parser("train", parents=[common], help="train a Kneser-Ney model")
    p.add_argument("--manifest")
    p.add_argument("--text", action="append")
    p.add_argument("--order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lm_train)
    p = lm.add_parser("eval", parents=[common], help="perplexity and OOV rate")
    p.add_argument("--model")
    p.add_argument("--text", action="append")
    p.add_argument("--oov-policy", dest="oov_policy", choices=[o.value for o in ngram.OovPolicy])
    p.set_defaults(func=cmd_lm_eval)

    p = sub.add_parser("rescore", parents=[common], help="re-rank n-best lists")
    p.add_argument("--model")
    p.add_argument("--nbest")
    p.add_argument("--lm-weight", dest="lm_weight")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("score", parents=[common], help="WER against a reference manifest")
    p.add_argument("--manifest")
    p.add_argument("--hypotheses")
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", parents=[common], help="aggregate scored utterances")
    p.add_argument("--scores")
    p.add_argument("--group-by", dest="group_by")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.cfg = _load_config(getattr(args, "config", None))
        return args.func(args)
    except UsageError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 1
    except overlap.InfeasibleFloorError as exc:
        print(f"{PROG}: infeasible: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
