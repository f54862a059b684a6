"""Command-line interface: one subcommand per pipeline step.

Config files are JSON; nested objects flatten to dotted keys, so
``{"noise": {"p_drop": 0.2}}`` and ``{"noise.p_drop": 0.2}`` are
equivalent. Every command exits 0 on success; failures print a single
machine-readable JSON line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .corpus import (
    ParallelSample,
    Record,
    Table,
    build_vocabulary,
    linearize,
    load_parallel,
    load_unlabeled,
    save_parallel,
    save_unlabeled,
    tokenize,
)
from .experiment import ExperimentRunner, ExperimentSpec, write_results
from .figures import render_experiment_figures
from .keyfacts import StopWordList, annotate
from .metrics import score_corpus
from .noise import NoiseConfig
from .pipeline import stage2_pairs, two_stage_generate
from .pseudo import LexiconTagger, PretaggedLookup, build_pseudo_corpus, save_pseudo
from .realizer import RealizerConfig, build_realizer, load_realizer
from .synth import SynthSpec, generate
from .tagger import TaggerConfig, TaggerModel, evaluate_prf
from .training import OptimizerConfig, TrainPlan, train_realizer, train_tagger


def _flatten(obj, prefix=""):
    flat = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return _flatten(json.load(fh))


def _build_dataclass(cls, config: dict, prefix: str, **overrides):
    fields = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in config.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix):]
        if name not in fields:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**kwargs)


def _stops(args) -> StopWordList:
    if getattr(args, "stopwords", None):
        return StopWordList.from_file(args.stopwords)
    return StopWordList.default()


def _shared_vocabs(samples, extra_token_streams, word_cap, attr_cap):
    streams = []
    for s in samples:
        streams.append([tok.word for tok in linearize(s.table)])
        streams.append(s.text)
    streams.extend(extra_token_streams)
    word_vocab = build_vocabulary(streams, word_cap)
    attr_vocab = build_vocabulary(
        [[r.attribute for r in s.table.records] for s in samples], attr_cap
    )
    return word_vocab, attr_vocab


# -- subcommands ---------------------------------------------------------


def cmd_synth(args) -> int:
    config = load_config(args.config)
    spec = _build_dataclass(
        SynthSpec, config, "synth.",
        n_samples=args.samples, unlabeled_fraction=args.unlabeled_fraction, seed=args.seed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = generate(spec)
    save_parallel(corpus.parallel, out_dir / "parallel.jsonl")
    save_unlabeled(corpus.unlabeled, out_dir / "unlabeled.txt")
    with open(out_dir / "gold_labels.jsonl", "w", encoding="utf-8") as fh:
        for sample in corpus.parallel:
            fh.write(json.dumps({"id": sample.id, "labels": corpus.gold_labels[sample.id]}) + "\n")
    print(f"wrote {len(corpus.parallel)} parallel and {len(corpus.unlabeled)} unlabeled samples to {out_dir}")
    return 0


def cmd_annotate(args) -> int:
    samples = load_parallel(args.parallel)
    stops = _stops(args)
    with open(args.out, "w", encoding="utf-8") as fh:
        for sample in samples:
            table = linearize(sample.table)
            labels = annotate(table, sample.text, stops, single_pass=args.single_pass)
            fh.write(json.dumps({"id": sample.id, "labels": labels}) + "\n")
    print(f"annotated {len(samples)} samples -> {args.out}")
    return 0


def cmd_pseudo(args) -> int:
    unlabeled = load_unlabeled(args.unlabeled)
    backend = PretaggedLookup.from_file(args.tagged) if args.tagged else LexiconTagger.default()
    pairs, stats = build_pseudo_corpus(unlabeled, backend, max_target_len=args.max_target_len)
    save_pseudo(pairs, args.out)
    print(
        f"kept={stats.kept}\tdropped_empty_source={stats.dropped_empty_source}"
        f"\tdropped_long_target={stats.dropped_long_target}"
    )
    return 0


def cmd_train_tagger(args) -> int:
    config = load_config(args.config)
    train_samples = load_parallel(args.train)
    valid_samples = load_parallel(args.valid)
    stops = _stops(args)
    tagger_config = _build_dataclass(TaggerConfig, config, "tagger.", seed=args.seed)
    word_vocab, attr_vocab = _shared_vocabs(
        train_samples, [], tagger_config.word_vocab_cap, tagger_config.attr_vocab_cap
    )
    model = TaggerModel(tagger_config, word_vocab, attr_vocab)
    plan = _make_plan("tagger", config, args.seed)

    def annotated(samples):
        out = []
        for s in samples:
            table = linearize(s.table)
            out.append((table, annotate(table, s.text, stops)))
        return out

    train_tagger(model, annotated(train_samples), annotated(valid_samples), plan,
                 log_path=args.log)
    model.save(args.out)
    predicted, gold = [], []
    for table, labels in annotated(valid_samples):
        predicted.append(model.predict(table).labels)
        gold.append(labels)
    precision, recall, f1 = evaluate_prf(predicted, gold)
    print(f"{f1 * 100:.2f}\t{precision * 100:.2f}\t{recall * 100:.2f}")
    return 0


def cmd_train_realizer(args) -> int:
    config = load_config(args.config)
    train_samples = load_parallel(args.train)
    valid_samples = load_parallel(args.valid)
    stops = _stops(args)
    realizer_config = _build_dataclass(
        RealizerConfig, config, "realizer.", seed=args.seed, variant=args.variant
    )
    pseudo_pairs = []
    extra_streams = []
    if args.pseudo:
        from .pseudo import load_pseudo

        pseudo_pairs = [(p.source, p.target) for p in load_pseudo(args.pseudo)]
        extra_streams = [t for _, t in pseudo_pairs]
    word_vocab, _ = _shared_vocabs(
        train_samples, extra_streams, realizer_config_cap(config), 1000
    )
    model = build_realizer(realizer_config, word_vocab)
    plan = _make_plan("realizer", config, args.seed)
    train_pairs, skipped = stage2_pairs(train_samples, stops)
    valid_pairs, _ = stage2_pairs(valid_samples, stops)
    result = train_realizer(model, train_pairs, valid_pairs, plan,
                            pseudo_pairs=pseudo_pairs, log_path=args.log)
    model.save(args.out)
    if skipped:
        print(f"skipped {skipped} zero-key-fact training samples", file=sys.stderr)
    print(f"best_valid_bleu\t{result.best_score * 100:.2f}")
    return 0


def realizer_config_cap(config: dict) -> int:
    return int(config.get("realizer.word_vocab_cap", 20000))


def _make_plan(stage: str, config: dict, seed: int | None) -> TrainPlan:
    optimizer = _build_dataclass(OptimizerConfig, config, "optimizer.")
    noise = None
    if any(key.startswith("noise.") for key in config):
        noise = _build_dataclass(NoiseConfig, config, "noise.")
    plan_kwargs = {}
    for key in ("max_epochs", "mixing", "mix_ratio", "valid_cap", "pseudo_valid_fraction"):
        if f"plan.{key}" in config:
            plan_kwargs[key] = config[f"plan.{key}"]
    return TrainPlan(stage=stage, seed=seed if seed is not None else 0,
                     optimizer=optimizer, noise=noise, **plan_kwargs)


def load_tables(path) -> list[tuple[str, Table]]:
    """Tables-only JSONL: objects with 'id' and 'table'; 'text' optional."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "id" not in obj or "table" not in obj:
                raise corpus_mod.CorpusFormatError(
                    f"line {line_no}: table files need 'id' and 'table' keys"
                )
            records = [
                Record(str(r["attribute"]).lower(), tokenize(str(r["value"])))
                for r in obj["table"]
            ]
            out.append((str(obj["id"]), Table(records)))
    return out


def cmd_generate(args) -> int:
    tagger = TaggerModel.load(args.tagger)
    realizer = load_realizer(args.realizer)
    tables = [table for _, table in load_tables(args.tables)]
    hypotheses = two_stage_generate(tagger, realizer, tables)
    with open(args.out, "w", encoding="utf-8") as fh:
        for hyp in hypotheses:
            fh.write(" ".join(hyp) + "\n")
    print(f"wrote {len(hypotheses)} hypotheses -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    hyps = [line.split() for line in Path(args.hyp).read_text(encoding="utf-8").splitlines()]
    refs = [line.split() for line in Path(args.ref).read_text(encoding="utf-8").splitlines()]
    report = score_corpus(hyps, refs)
    print(report.tsv_line())
    return 0


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.sizes:
        overrides["parallel_sizes"] = tuple(int(s) for s in args.sizes.split(","))
    if args.variants:
        overrides["variants"] = tuple(args.variants.split(","))
    spec = _build_dataclass(ExperimentSpec, config, "experiment.", seed=args.seed, **overrides)
    train = load_parallel(args.parallel)
    test = load_parallel(args.test)
    unlabeled = load_unlabeled(args.unlabeled) if args.unlabeled else []
    runner = ExperimentRunner(spec, train, test, unlabeled)
    rows = runner.run()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results(rows, spec, out_dir / "results.tsv")
    render_experiment_figures(rows, out_dir)
    for row in rows:
        print(row.tsv_line())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pivotgen",
        description="Two-stage low-resource table-to-text generation toolkit.",
    )
    parser.add_argument("--seed", type=int, default=None, help="global random seed")
    parser.add_argument("--config", default=None, help="JSON config file")
    # the same flags are accepted after the subcommand; SUPPRESS keeps a
    # pre-subcommand value from being clobbered by the subparser default
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--unlabeled-fraction", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = add_parser("annotate", help="label key facts by table-text overlap")
    p.add_argument("--parallel", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--single-pass", action="store_true",
                   help="order-dependent labeling variant (comparison only)")
    p.set_defaults(func=cmd_annotate)

    p = add_parser("pseudo", help="build pseudo-parallel pairs from unlabeled text")
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tagged", default=None, help="pre-tagged token<TAB>tag file")
    p.add_argument("--max-target-len", type=int, default=60)
    p.set_defaults(func=cmd_pseudo)

    p = add_parser("train-tagger", help="train the key-fact tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--log", default=None)
    p.set_defaults(func=cmd_train_tagger)

    p = add_parser("train-realizer", help="train the surface realizer")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pseudo", default=None)
    p.add_argument("--variant", choices=("vanilla", "transformer"), default=None)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--log", default=None)
    p.set_defaults(func=cmd_train_realizer)

    p = add_parser("generate", help="two-step decoding for a table file")
    p.add_argument("--tagger", required=True)
    p.add_argument("--realizer", required=True)
    p.add_argument("--tables", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = add_parser("evaluate", help="score hypotheses against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = add_parser("experiment", help="run a parallel-size sweep with figures")
    p.add_argument("--parallel", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--unlabeled", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sizes", default=None, help="comma-separated K values")
    p.add_argument("--variants", default=None, help="comma-separated variant names")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # single machine-readable error line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
