"""Command-line interface: ingest, stats, run, and score subcommands.

Config precedence is defaults < config file < explicit flags.  Exit codes:
0 success, 1 runtime failure, 2 validation failure.  ``--json`` switches
stdout to machine-parseable JSON.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Mapping

from . import __version__
from .backend import BackendError, TrainConfig
from .classifier import ClassifierError, predict, score_relations
from .corpus import CorpusError, Dataset, RCExample, language_stats, load_corpus, save_corpus
from .experiment import (
    DEFAULT_SEEDS,
    ExperimentError,
    RunSpec,
    run_cross_lingual_transfer,
    run_few_shot,
    run_fully_supervised,
    run_zero_shot_incontext,
)
from .metrics import MetricsError
from .prompt import PromptError, PromptVariant, render
from .tokenizer import WhitespaceTokenizer
from .verbalizer import VerbalizerError, VerbalizerSet, length_stats, load_tables, verbalize

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

_VALIDATION_ERRORS = (
    CorpusError,
    VerbalizerError,
    PromptError,
    ClassifierError,
    MetricsError,
    ExperimentError,
)

_RUN_CONFIG_KEYS = {
    "protocol", "variant", "word_order", "languages", "seeds", "k",
    "convention", "backend", "epochs", "learning_rate", "batch_size",
    "max_sequence_length", "seed", "embed_dim", "hidden_dim",
}


def _print_json(payload) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def _load_verbalizers(verbalizers: Path | None, abbreviations: Path | None) -> VerbalizerSet:
    abbrev = None
    if abbreviations:
        abbrev = json.loads(Path(abbreviations).read_text(encoding="utf-8"))
    if verbalizers:
        return load_tables(verbalizers, abbreviations=abbrev)
    if abbrev is not None:
        return VerbalizerSet(abbreviations=abbrev)
    return VerbalizerSet()


def _config_hash(config: Mapping) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _versions() -> dict[str, str]:
    import numpy

    versions = {
        "python": sys.version.split()[0],
        "promptrc": __version__,
        "numpy": numpy.__version__,
    }
    if "torch" in sys.modules:
        versions["torch"] = sys.modules["torch"].__version__
    return versions


# -- ingest -------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    try:
        dataset = load_corpus(
            args.input, args.format, split=args.split, mapping=args.mapping
        )
    except CorpusError as exc:
        for row_error in exc.row_errors or [str(exc)]:
            print(f"ingest: {row_error}", file=sys.stderr)
        return EXIT_VALIDATION
    save_corpus(dataset, args.output)
    summary = {
        "examples": len(dataset),
        "languages": {lang: sum(1 for ex in dataset if ex.language == lang)
                      for lang in dataset.languages()},
        "output": str(args.output),
    }
    if args.json:
        _print_json(summary)
    else:
        print(f"wrote {summary['examples']} validated example(s) to {args.output}")
        for lang, count in summary["languages"].items():
            print(f"  {lang}: {count}")
    return EXIT_OK


# -- stats --------------------------------------------------------------------


def _load_data_paths(paths: list[Path], split: str) -> Dataset:
    examples = []
    relation_set: dict[str, frozenset[str]] = {}
    for path in paths:
        ds = load_corpus(path, "canonical-jsonl", split=split)
        examples.extend(ds.examples)
        for lang, relations in ds.relation_set.items():
            relation_set[lang] = relation_set.get(lang, frozenset()) | relations
    return Dataset.from_examples(examples, split=split, relation_set=relation_set)


def _expand_data_args(raw: list[str]) -> list[Path]:
    paths: list[Path] = []
    for item in raw:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.jsonl")))
        else:
            paths.append(p)
    return paths


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        dataset = _load_data_paths(_expand_data_args(args.data), args.split)
    except CorpusError as exc:
        print(f"stats: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    profiles = language_stats(dataset)
    verb_stats = None
    if args.verbalizers:
        try:
            tables = _load_verbalizers(args.verbalizers, args.abbreviations)
            verb_stats = {
                lang: {"mean": s.mean, "std": s.std, "count": s.count}
                for lang, s in length_stats(tables).items()
            }
        except VerbalizerError as exc:
            print(f"stats: warning: {exc}", file=sys.stderr)
    if args.json:
        _print_json({
            "languages": [
                {
                    "language": p.language,
                    "num_classes": p.num_classes,
                    "num_examples": p.num_train,
                    "max_text_length": p.max_text_length,
                    "group": p.group,
                }
                for p in profiles
            ],
            "verbalization_lengths": verb_stats,
        })
        return EXIT_OK
    print(f"{'lang':<6}{'classes':>8}{'examples':>10}{'max_len':>9}  group")
    for p in profiles:
        print(
            f"{p.language:<6}{p.num_classes:>8}{p.num_train:>10}"
            f"{p.max_text_length:>9}  {p.group or '-'}"
        )
    if verb_stats:
        print("\nverbalization token lengths (mean ± std):")
        for lang, s in verb_stats.items():
            print(f"  {lang}: {s['mean']:.2f} ± {s['std']:.2f} over {s['count']} entries")
    return EXIT_OK


# -- run ----------------------------------------------------------------------


def _discover_splits(data_dir: Path) -> dict[str, dict[str, Dataset]]:
    splits: dict[str, dict[str, Dataset]] = {"train": {}, "test": {}, "validation": {}}
    for path in sorted(data_dir.glob("*_*.jsonl")):
        lang, _, split = path.stem.partition("_")
        if split not in splits or len(lang) != 2:
            continue
        splits[split][lang] = load_corpus(path, "canonical-jsonl", split=split)
    return splits


def _resolve_run_config(args: argparse.Namespace) -> dict:
    config = {
        "protocol": None,
        "variant": "cs",
        "word_order": "svo",
        "languages": None,
        "seeds": list(DEFAULT_SEEDS),
        "k": None,
        "convention": "all-classes",
        "backend": "toy",
        "epochs": None,
        "learning_rate": None,
        "batch_size": None,
        "max_sequence_length": None,
        "seed": None,
        "embed_dim": 32,
        "hidden_dim": 64,
    }
    if args.config:
        loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        unknown = set(loaded) - _RUN_CONFIG_KEYS
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    for key in _RUN_CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if config["protocol"] is None:
        raise ExperimentError("no protocol given (flag --protocol or config file)")
    return config


def _train_config(config: dict, protocol: str) -> TrainConfig:
    base = TrainConfig.few_shot() if protocol == "fewshot" else TrainConfig.fully_supervised()
    overrides = {}
    for cli_key, field in (
        ("epochs", "epochs"),
        ("learning_rate", "learning_rate"),
        ("batch_size", "batch_size"),
        ("max_sequence_length", "max_sequence_length"),
        ("seed", "seed"),
    ):
        if config[cli_key] is not None:
            overrides[field] = config[cli_key]
    return TrainConfig(**{**base.to_dict(), **overrides})


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _resolve_run_config(args)
        data_dir = Path(args.data_dir)
        if not data_dir.is_dir():
            raise ExperimentError(f"data directory not found: {data_dir}")
        splits = _discover_splits(data_dir)
        tables = _load_verbalizers(args.verbalizers, args.abbreviations)

        protocol = config["protocol"]
        test_by_lang = splits["test"]
        train_by_lang = splits["train"]
        if not test_by_lang:
            raise ExperimentError(f"no *_test.jsonl files under {data_dir}")
        languages = tuple(config["languages"] or sorted(test_by_lang))
        word_orders = ("svo", "sov") if config["word_order"] == "both" else (config["word_order"],)
        train_config = _train_config(config, protocol)
        spec = RunSpec(
            protocol=protocol,
            variant_kind=config["variant"],
            word_orders=word_orders,
            languages=languages,
            seeds=tuple(config["seeds"]),
            k=config["k"],
            train_config=train_config,
            convention=config["convention"],
        )

        texts = [ex.text for split in splits.values() for ds in split.values() for ex in ds]
        verbal_texts = [
            verbalize(rel, lang if tables.has(lang) else "en", tables)
            for split in splits.values()
            for ds in split.values()
            for lang, relations in ds.relation_set.items()
            for rel in relations
        ]
        tokenizer = WhitespaceTokenizer.build(texts + verbal_texts)
        backend_factory = _backend_factory(config, tokenizer)

        if protocol == "full":
            report = run_fully_supervised(spec, backend_factory, train_by_lang, test_by_lang, tables)
        elif protocol == "fewshot":
            report = run_few_shot(spec, backend_factory, train_by_lang, test_by_lang, tables)
        elif protocol == "zeroshot-incontext":
            report = run_zero_shot_incontext(spec, backend_factory(train_config.seed), test_by_lang, tables)
        else:
            report = run_cross_lingual_transfer(spec, backend_factory, train_by_lang, test_by_lang, tables)
    except _VALIDATION_ERRORS as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BackendError as exc:
        print(f"run: backend failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    report.provenance["config_hash"] = _config_hash(config)
    report.provenance["versions"] = _versions()
    out_dir = Path(args.out)
    json_path = out_dir / f"{protocol}.json"
    report.save(json_path, out_dir / f"{protocol}.md")
    if args.json:
        _print_json(report.to_json_dict())
    else:
        print(report.to_markdown(), end="")
        print(f"\nreports written to {json_path} and {json_path.with_suffix('.md')}")
    return EXIT_OK


def _backend_factory(config: dict, tokenizer: WhitespaceTokenizer):
    name = config["backend"]
    if name == "toy":
        from .toy import ToySeq2Seq

        def factory(seed: int):
            return ToySeq2Seq(
                tokenizer,
                embed_dim=config["embed_dim"],
                hidden_dim=config["hidden_dim"],
                seed=seed,
            )

        return factory
    if name == "uniform":
        import numpy as np

        from .backend import TableBackend

        def factory(seed: int):
            return TableBackend(
                tokenizer, default=np.zeros((tokenizer.vocab_size, 8))
            )

        return factory
    raise ExperimentError(f"unknown backend {name!r} (expected toy or uniform)")


# -- score --------------------------------------------------------------------


def _parse_span(raw: str) -> tuple[int, int]:
    start, _, end = raw.partition(",")
    return int(start), int(end)


def cmd_score(args: argparse.Namespace) -> int:
    try:
        relations = [r for r in args.relations.split(",") if r]
        if not relations:
            raise ClassifierError("no candidate relations given")
        tables = _load_verbalizers(args.verbalizers, args.abbreviations)
        # The gold relation is irrelevant for scoring; any candidate works.
        example = RCExample(
            id="cli-score",
            text=args.text,
            head_span=_parse_span(args.head),
            tail_span=_parse_span(args.tail),
            relation=relations[0],
            language=args.lang,
        )
        variant = PromptVariant(args.variant, args.word_order)
        instance = render(example, variant, tables)

        from .toy import ToySeq2Seq

        if args.checkpoint:
            backend = ToySeq2Seq.load(args.checkpoint)
        else:
            target_language = args.lang if variant.kind == "il" else "en"
            verbal = [verbalize(r, target_language, tables) for r in relations]
            backend = ToySeq2Seq(
                WhitespaceTokenizer.build([args.text] + verbal), seed=args.seed or 0
            )
        target_language = args.lang if variant.kind == "il" else "en"
        targets = {
            r: tuple(backend.tokenizer.encode(verbalize(r, target_language, tables)))
            for r in relations
        }
        max_len = max(len(ids) for ids in targets.values())
        table = score_relations(backend.decode_logits(instance, max_len), targets)
        best = predict(table)
    except _VALIDATION_ERRORS as exc:
        print(f"score: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.json:
        print(table.to_json())
    else:
        print(f"input: {instance.input_text}")
        for rank, (relation, score) in enumerate(table.ranked(), start=1):
            marker = " <- predicted" if relation == best else ""
            print(f"{rank:>3}. {relation:<30} {score:.6f}{marker}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptrc",
        description="Prompt-based multilingual relation classification toolkit",
    )
    parser.add_argument("--version", action="version", version=f"promptrc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="validate and convert a corpus to canonical JSONL")
    ingest.add_argument("--input", required=True, type=Path)
    ingest.add_argument("--format", choices=("canonical-jsonl", "smiler-tsv"), default="canonical-jsonl")
    ingest.add_argument("--mapping", type=Path, help="column mapping file for smiler-tsv")
    ingest.add_argument("--split", choices=("train", "test", "validation"), default="train")
    ingest.add_argument("--output", required=True, type=Path)
    ingest.add_argument("--json", action="store_true")
    ingest.set_defaults(func=cmd_ingest)

    stats = sub.add_parser("stats", help="language profiles and verbalization lengths")
    stats.add_argument("--data", nargs="+", required=True, help="JSONL file(s) or directory")
    stats.add_argument("--split", choices=("train", "test", "validation"), default="train")
    stats.add_argument("--verbalizers", type=Path, help="directory of <lang>.json tables")
    stats.add_argument("--abbreviations", type=Path, help="JSON abbreviation-expansion map")
    stats.add_argument("--json", action="store_true")
    stats.set_defaults(func=cmd_stats)

    run = sub.add_parser("run", help="run an evaluation protocol")
    run.add_argument("--config", type=Path, help="JSON config file (flags override it)")
    run.add_argument("--protocol", choices=("full", "fewshot", "zeroshot-incontext", "zeroshot-transfer"))
    run.add_argument("--data-dir", required=True, type=Path, help="directory of <lang>_<split>.jsonl files")
    run.add_argument("--verbalizers", type=Path)
    run.add_argument("--abbreviations", type=Path, help="JSON abbreviation-expansion map")
    run.add_argument("--variant", choices=("null", "cs", "sp", "il"))
    run.add_argument("--word-order", dest="word_order", choices=("svo", "sov", "both"))
    run.add_argument("--languages", nargs="+")
    run.add_argument("--seeds", type=lambda raw: [int(s) for s in raw.split(",")])
    run.add_argument("--k", type=int)
    run.add_argument("--convention", choices=("all-classes", "exclude-no-relation"))
    run.add_argument("--backend", choices=("toy", "uniform"))
    run.add_argument("--epochs", type=int)
    run.add_argument("--learning-rate", dest="learning_rate", type=float)
    run.add_argument("--batch-size", dest="batch_size", type=int)
    run.add_argument("--max-sequence-length", dest="max_sequence_length", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--json", action="store_true")
    run.set_defaults(func=cmd_run)

    score = sub.add_parser("score", help="score one example against candidate relations")
    score.add_argument("--text", required=True)
    score.add_argument("--head", required=True, help="head span as start,end")
    score.add_argument("--tail", required=True, help="tail span as start,end")
    score.add_argument("--lang", required=True)
    score.add_argument("--relations", required=True, help="comma-separated candidates")
    score.add_argument("--variant", choices=("null", "cs", "sp", "il"), default="cs")
    score.add_argument("--word-order", dest="word_order", choices=("svo", "sov"), default="svo")
    score.add_argument("--verbalizers", type=Path)
    score.add_argument("--abbreviations", type=Path, help="JSON abbreviation-expansion map")
    score.add_argument("--checkpoint", type=Path)
    score.add_argument("--seed", type=int)
    score.add_argument("--json", action="store_true")
    score.set_defaults(func=cmd_score)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"promptrc: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BackendError, OSError) as exc:
        print(f"promptrc: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
