#!/usr/bin/env python3
"""Generate the seeded synthetic corpora as tsv files.

two-topic: lexical class markers over shared fillers (composition / tf-idf
pipelines); two-grammar: classes differing only in token order (language
model pipelines).
"""

import argparse

from docvec.corpus import save_corpus
from docvec.datasets import two_grammar_corpus, two_topic_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("kind", choices=("two-topic", "two-grammar"))
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--n-docs", type=int, default=400,
                        help="two-topic: total documents")
    parser.add_argument("--vocab-size", type=int, default=500,
                        help="two-topic: total vocabulary")
    parser.add_argument("--n-per-class", type=int, default=60,
                        help="two-grammar: documents per class")
    parser.add_argument("--doc-len", type=int, default=40,
                        help="two-grammar: tokens per document")
    args = parser.parse_args()

    if args.kind == "two-topic":
        corpus = two_topic_corpus(n_docs=args.n_docs, vocab_size=args.vocab_size,
                                  seed=args.seed)
    else:
        corpus = two_grammar_corpus(n_per_class=args.n_per_class,
                                    doc_len=args.doc_len, seed=args.seed)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} documents to {args.out}")


if __name__ == "__main__":
    main()
