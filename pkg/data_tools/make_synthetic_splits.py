#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Synthetic train/dev/test split writer.

Generates one synthetic corpus and cuts it into consecutive train, dev and
test files of line-delimited sentence records, ready for `jointee train`
and `jointee eval`.

Usage:
    python data_tools/make_synthetic_splits.py [--out-dir data/synthetic]
        [--train 200] [--dev 50] [--test 50] [--seed 7] [--ambiguity 0.1]

Environment Variables:
    JOINTEE_SEED: default seed when --seed is not given

Notes:
    - Same arguments, same files
    - Existing files in the output directory are overwritten
"""

import argparse
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from jointee.corpus import save_corpus, split_corpus  # noqa: E402
from jointee.synthetic import SyntheticCorpusSpec, generate_synthetic_corpus  # noqa: E402

load_dotenv()


def make_splits(out_dir: Path, sizes: dict, seed: int, ambiguity: float, with_linguistic: bool = True) -> dict:
    """Write train/dev/test files; return name -> sentence count."""
    total = sum(sizes.values())
    corpus = generate_synthetic_corpus(SyntheticCorpusSpec(
        sentences=total, seed=seed, ambiguity=ambiguity, with_linguistic=with_linguistic,
    ))
    print(f"🧪 Generated {total} sentences (seed={seed}, ambiguity={ambiguity})")
    for name, count in sorted(corpus.template_counts.items()):
        print(f"   {name:<24} {count}")

    out_dir.mkdir(parents=True, exist_ok=True)
    parts = split_corpus(corpus.sentences, list(sizes.values()))
    written = {}
    for (name, _), part in zip(sizes.items(), parts):
        path = out_dir / f"{name}.jsonl"
        written[name] = save_corpus(path, part)
        print(f"💾 {path}: {written[name]} sentences")
    return written


def main():
    parser = argparse.ArgumentParser(description="Write synthetic train/dev/test splits")
    parser.add_argument("--out-dir", default="data/synthetic")
    parser.add_argument("--train", type=int, default=200)
    parser.add_argument("--dev", type=int, default=50)
    parser.add_argument("--test", type=int, default=50)
    parser.add_argument("--seed", type=int, default=int(os.getenv("JOINTEE_SEED", "7")))
    parser.add_argument("--ambiguity", type=float, default=0.1)
    parser.add_argument("--no-linguistic", action="store_true")
    args = parser.parse_args()

    sizes = {"train": args.train, "dev": args.dev, "test": args.test}
    if any(v < 0 for v in sizes.values()):
        print("❌ Split sizes must be non-negative")
        sys.exit(1)
    make_splits(Path(args.out_dir), sizes, args.seed, args.ambiguity, not args.no_linguistic)
    print("✅ Done")


if __name__ == "__main__":
    main()
