#!/usr/bin/env python3
"""Write the synthetic demo corpus and verbalizer tables to a directory.

Produces <out>/data/<lang>_{train,test}.jsonl plus <out>/verbalizers/<lang>.json,
ready for the ``promptrc run`` and ``promptrc stats`` commands.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from promptrc.corpus import save_corpus
from promptrc.synthetic import synthetic_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo"))
    parser.add_argument("--train-per-relation", type=int, default=40)
    parser.add_argument("--test-per-relation", type=int, default=8)
    args = parser.parse_args()

    train, test, tables = synthetic_corpus(
        n_train=args.train_per_relation, n_test=args.test_per_relation
    )
    data_dir = args.out / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    for lang, dataset in train.items():
        save_corpus(dataset, data_dir / f"{lang}_train.jsonl")
    for lang, dataset in test.items():
        save_corpus(dataset, data_dir / f"{lang}_test.jsonl")

    verb_dir = args.out / "verbalizers"
    verb_dir.mkdir(parents=True, exist_ok=True)
    for lang, table in tables.tables.items():
        (verb_dir / f"{lang}.json").write_text(
            json.dumps(table.entries, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    print(f"demo data in {data_dir}, verbalizer tables in {verb_dir}")


if __name__ == "__main__":
    main()
