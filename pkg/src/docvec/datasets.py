"""Seeded synthetic corpora for scaled checks, and IMDB directory loading.

The two-topic generator produces a corpus where lexical class markers make
mean/graded composition and tf-idf strong while element-wise products decay
to noise; the two-grammar generator produces classes that differ only in
token *order*, which only the language models can pick up.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document, TokenizerConfig, tokenize
from .errors import DataError


def two_topic_corpus(n_docs: int = 400, vocab_size: int = 500, seed: int = 7,
                     min_len: int = 30, max_len: int = 60) -> Corpus:
    """Balanced pos/neg documents over a shared vocabulary.

    Per class: 20 exclusive marker words and 80 leaned topic words; the
    remaining terms are shared neutral words with a 1/rank frequency profile
    (so idf varies and graded weighting has something to grade).
    """
    if vocab_size < 250:
        raise DataError("two_topic_corpus needs vocab_size >= 250")
    rng = np.random.default_rng(seed)
    pos_words = [f"goodmark{i}" for i in range(20)]
    neg_words = [f"badmark{i}" for i in range(20)]
    topic_a = [f"topica{i}" for i in range(80)]
    topic_b = [f"topicb{i}" for i in range(80)]
    neutral = [f"filler{i}" for i in range(vocab_size - 200)]
    neutral_p = 1.0 / np.arange(2, len(neutral) + 2)
    neutral_p /= neutral_p.sum()

    def draw_doc(label: str) -> tuple[str, ...]:
        n = int(rng.integers(min_len, max_len + 1))
        own, other = (pos_words, neg_words) if label == "pos" else (neg_words, pos_words)
        own_topic, other_topic = (topic_a, topic_b) if label == "pos" else (topic_b, topic_a)
        toks = []
        for _ in range(n):
            u = rng.random()
            if u < 0.12:
                toks.append(own[int(rng.integers(len(own)))])
            elif u < 0.14:
                toks.append(other[int(rng.integers(len(other)))])
            elif u < 0.38:
                toks.append(own_topic[int(rng.integers(len(own_topic)))])
            elif u < 0.46:
                toks.append(other_topic[int(rng.integers(len(other_topic)))])
            else:
                toks.append(neutral[int(rng.choice(len(neutral), p=neutral_p))])
        return tuple(toks)

    docs = [Document(id=i, label=("pos" if i % 2 == 0 else "neg"),
                     tokens=draw_doc("pos" if i % 2 == 0 else "neg"))
            for i in range(n_docs)]
    return Corpus(docs)


def two_grammar_corpus(n_per_class: int = 60, doc_len: int = 40,
                       vocab: int = 12, seed: int = 5) -> Corpus:
    """Two classes of Markov-chain documents over one shared vocabulary.

    Class "a" favors the +1 successor, class "b" the -1 successor; unigram
    statistics are identical, so order is the only signal.
    """
    rng = np.random.default_rng(seed)
    terms = [f"sym{i}" for i in range(vocab)]

    def draw_doc(step: int) -> tuple[str, ...]:
        cur = int(rng.integers(vocab))
        toks = [terms[cur]]
        for _ in range(doc_len - 1):
            if rng.random() < 0.85:
                cur = (cur + step) % vocab
            else:
                cur = int(rng.integers(vocab))
            toks.append(terms[cur])
        return tuple(toks)

    docs = []
    for i in range(2 * n_per_class):
        label = "a" if i % 2 == 0 else "b"
        docs.append(Document(id=i, label=label,
                             tokens=draw_doc(1 if label == "a" else -1)))
    return Corpus(docs)


def two_gaussians(n: int = 400, dim: int = 2, sep: float = 2.0,
                  seed: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Unit-variance Gaussians at +/- sep along the first axis; labels +/-1."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = rng.normal(size=(2 * half, dim))
    y = np.concatenate([np.ones(half, dtype=np.int64), -np.ones(half, dtype=np.int64)])
    X[:half, 0] += sep
    X[half:, 0] -= sep
    perm = rng.permutation(2 * half)
    return X[perm], y[perm]


def random_corpus(n_docs: int, vocab_size: int, seed: int,
                  min_len: int = 1, max_len: int = 40) -> Corpus:
    """Uniform random documents (for brute-force oracles)."""
    rng = np.random.default_rng(seed)
    terms = [f"t{i}" for i in range(vocab_size)]
    docs = []
    for i in range(n_docs):
        n = int(rng.integers(min_len, max_len + 1))
        toks = tuple(terms[int(j)] for j in rng.integers(0, vocab_size, size=n))
        docs.append(Document(id=i, label=("pos" if i % 2 == 0 else "neg"), tokens=toks))
    return Corpus(docs)


# ---------------------------------------------------------------------------
# IMDB (aclImdb directory layout)
# ---------------------------------------------------------------------------

def find_imdb() -> Path | None:
    """$DOCVEC_IMDB or ./data/aclImdb, if present with the expected layout."""
    candidates = []
    if os.environ.get("DOCVEC_IMDB"):
        candidates.append(Path(os.environ["DOCVEC_IMDB"]))
    candidates.append(Path("data") / "aclImdb")
    for root in candidates:
        if (root / "train" / "pos").is_dir() and (root / "test" / "neg").is_dir():
            return root
    return None


def load_imdb(root: str | Path, subset: str = "train",
              tokenizer: TokenizerConfig = TokenizerConfig(),
              include_unsup: bool = False, max_per_class: int | None = None) -> Corpus:
    """Read aclImdb/{train,test}/{pos,neg[,unsup]}; unsup maps to unlabeled."""
    root = Path(root)
    if subset not in ("train", "test"):
        raise DataError(f"subset must be train or test, got {subset!r}")
    parts = [("pos", "pos"), ("neg", "neg")]
    if include_unsup and subset == "train":
        parts.append(("unsup", None))
    docs: list[Document] = []
    for dirname, label in parts:
        d = root / subset / dirname
        if not d.is_dir():
            if label is None:
                continue
            raise DataError(f"missing IMDB directory: {d}")
        files = sorted(d.iterdir())
        if max_per_class is not None:
            files = files[:max_per_class]
        for f in files:
            if not f.is_file():
                continue
            text = f.read_text(encoding="utf-8", errors="strict")
            docs.append(Document(id=len(docs), label=label,
                                 tokens=tuple(tokenize(text, tokenizer))))
    if not docs:
        raise DataError(f"no documents found under {root}/{subset}")
    return Corpus(docs)
