#!/usr/bin/env python3
"""Convert an aclImdb checkout into train/test tsv corpora.

The unsup reviews (no label) can be folded into the training tsv; they then
feed embedding training but are excluded from the classifier split.
"""

import argparse
import sys

from docvec.corpus import Corpus, save_corpus
from docvec.datasets import find_imdb, load_imdb


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=None,
                        help="aclImdb directory (default: $DOCVEC_IMDB or data/aclImdb)")
    parser.add_argument("--out-train", required=True)
    parser.add_argument("--out-test", required=True)
    parser.add_argument("--include-unsup", action="store_true")
    parser.add_argument("--max-per-class", type=int, default=None,
                        help="cap files per class directory (subset runs)")
    args = parser.parse_args()

    root = args.root or find_imdb()
    if root is None:
        print("no aclImdb directory found; run scripts/fetch_imdb.sh first",
              file=sys.stderr)
        return 1

    train = load_imdb(root, "train", include_unsup=args.include_unsup,
                      max_per_class=args.max_per_class)
    test = load_imdb(root, "test", max_per_class=args.max_per_class)
    save_corpus(train, args.out_train)
    save_corpus(test, args.out_test)
    n_unsup = sum(1 for d in train if d.label is None)
    print(f"train: {len(train)} docs ({n_unsup} unlabeled) -> {args.out_train}")
    print(f"test:  {len(test)} docs -> {args.out_test}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
