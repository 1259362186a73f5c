"""Vocabulary construction, document-frequency statistics and tf-idf vectors.

idf uses the natural log: idf(t) = ln(|D| / df(t)), so it is 0 exactly for
terms present in every document. tf is the raw in-document count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, Document
from .errors import ConfigError, DataError


class EmptyVocabularyError(DataError):
    pass


@dataclass
class Vocabulary:
    term_to_id: dict[str, int]
    df: np.ndarray            # per-term document frequency, shape (V,)
    num_docs: int
    min_count: int
    id_to_term: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.id_to_term:
            self.id_to_term = [""] * len(self.term_to_id)
            for term, i in self.term_to_id.items():
                self.id_to_term[i] = term

    def __len__(self) -> int:
        return len(self.term_to_id)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_id

    def idf_values(self) -> np.ndarray:
        """Vector of ln(num_docs / df) over all term ids."""
        return np.log(self.num_docs / self.df.astype(np.float64))


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse vector; explicit zeros are never stored."""

    indices: np.ndarray   # strictly increasing, all < dim
    values: np.ndarray
    dim: int

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


@dataclass(frozen=True)
class StopwordPolicy:
    """Either an explicit term list or a df-ratio cutoff.

    In df-ratio mode a term t is a stopword iff df(t)/|D| >= threshold.
    """

    mode: str = "df-ratio"    # or "explicit-list"
    terms: frozenset[str] | None = None
    df_ratio_threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in ("df-ratio", "explicit-list"):
            raise ConfigError(f"unknown stopword mode: {self.mode!r}")
        if self.mode == "explicit-list" and self.terms is None:
            raise ConfigError("explicit-list stopword mode requires a term list")
        if self.mode == "df-ratio" and not 0.0 < self.df_ratio_threshold <= 1.0:
            raise ConfigError("df_ratio_threshold must be in (0, 1]")


def build_vocab(corpus: Corpus, min_count: int = 1) -> Vocabulary:
    """Count df over documents, prune terms with total frequency < min_count.

    Ids are dense 0..V-1 in first-encounter order.
    """
    if len(corpus) == 0:
        raise DataError("cannot build a vocabulary from an empty corpus")
    if min_count < 1:
        raise ConfigError("min_count must be >= 1")
    freq: dict[str, int] = {}
    df: dict[str, int] = {}
    for doc in corpus:
        for tok in doc.tokens:
            freq[tok] = freq.get(tok, 0) + 1
        for tok in set(doc.tokens):
            df[tok] = df.get(tok, 0) + 1
    kept = [t for t in freq if freq[t] >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no term reaches min_count={min_count} (corpus has {len(freq)} distinct terms)")
    term_to_id = {t: i for i, t in enumerate(kept)}
    df_arr = np.array([df[t] for t in kept], dtype=np.int64)
    return Vocabulary(term_to_id=term_to_id, df=df_arr,
                      num_docs=len(corpus), min_count=min_count)


def term_frequencies(corpus: Corpus, vocab: Vocabulary) -> np.ndarray:
    """Total occurrence counts of each vocabulary term in the corpus."""
    counts = np.zeros(len(vocab), dtype=np.int64)
    for doc in corpus:
        for tok in doc.tokens:
            tid = vocab.term_to_id.get(tok)
            if tid is not None:
                counts[tid] += 1
    return counts


def idf(vocab: Vocabulary, term: str) -> float:
    if term not in vocab.term_to_id:
        raise KeyError(f"term not in vocabulary: {term!r}")
    return math.log(vocab.num_docs / vocab.df[vocab.term_to_id[term]])


def is_stopword(policy: StopwordPolicy, vocab: Vocabulary, term: str) -> bool:
    if policy.mode == "explicit-list":
        assert policy.terms is not None
        return term in policy.terms
    if term not in vocab.term_to_id:
        raise KeyError(f"term not in vocabulary: {term!r}")
    tid = vocab.term_to_id[term]
    return bool(vocab.df[tid] / vocab.num_docs >= policy.df_ratio_threshold)


def tfidf_vectorize(vocab: Vocabulary, doc: Document) -> SparseVector:
    """tf(t, doc) * idf(t) at id(t); OOV tokens skipped, zero entries omitted."""
    counts: dict[int, int] = {}
    for tok in doc.tokens:
        tid = vocab.term_to_id.get(tok)
        if tid is not None:
            counts[tid] = counts.get(tid, 0) + 1
    idx, val = [], []
    for tid in sorted(counts):
        v = counts[tid] * math.log(vocab.num_docs / vocab.df[tid])
        if v != 0.0:
            idx.append(tid)
            val.append(v)
    return SparseVector(indices=np.array(idx, dtype=np.int64),
                        values=np.array(val, dtype=np.float64),
                        dim=len(vocab))


def l2_normalize(vec: SparseVector) -> SparseVector:
    """Scale to unit L2 norm; the zero vector is returned unchanged."""
    norm = float(np.sqrt(np.sum(vec.values ** 2)))
    if norm == 0.0:
        return vec
    return SparseVector(indices=vec.indices, values=vec.values / norm, dim=vec.dim)


def tfidf_matrix(vocab: Vocabulary, corpus: Corpus, l2norm: bool = False) -> sp.csr_matrix:
    """Stack per-document tf-idf vectors into a CSR matrix."""
    rows = [tfidf_vectorize(vocab, doc) for doc in corpus]
    if l2norm:
        rows = [l2_normalize(r) for r in rows]
    return stack_sparse(rows)


def stack_sparse(rows: list[SparseVector]) -> sp.csr_matrix:
    if not rows:
        raise DataError("cannot stack zero sparse vectors")
    dim = rows[0].dim
    for r in rows:
        if r.dim != dim:
            raise DataError(f"inconsistent sparse dims: {r.dim} vs {dim}")
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, r in enumerate(rows):
        indptr[i + 1] = indptr[i] + r.nnz
    indices = np.concatenate([r.indices for r in rows]) if rows else np.empty(0, dtype=np.int64)
    data = np.concatenate([r.values for r in rows])
    return sp.csr_matrix((data, indices, indptr), shape=(len(rows), dim))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """tsv: header line `#num_docs=<|D|>`, then `<term>\\t<id>\\t<df>`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#num_docs={vocab.num_docs}\n")
        for i, term in enumerate(vocab.id_to_term):
            fh.write(f"{term}\t{i}\t{vocab.df[i]}\n")


def load_vocab(path: str | Path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#num_docs="):
            raise DataError(f"{path}: missing #num_docs header")
        num_docs = int(header.split("=", 1)[1])
        term_to_id: dict[str, int] = {}
        df: list[int] = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields")
            term, tid, dfv = parts[0], int(parts[1]), int(parts[2])
            if tid != len(df):
                raise DataError(f"{path}:{lineno}: ids must be dense and ordered")
            term_to_id[term] = tid
            df.append(dfv)
    return Vocabulary(term_to_id=term_to_id, df=np.array(df, dtype=np.int64),
                      num_docs=num_docs, min_count=1)


def dump_libsvm(rows: list[SparseVector], labels: list[str | None],
                path: str | Path) -> None:
    """libsvm-style lines `<label> <idx>:<val> ...`, 1-based ascending indices,
    %.9g values. Unlabeled rows carry the placeholder label `?`."""
    if len(rows) != len(labels):
        raise DataError("rows/labels length mismatch")
    with open(path, "w", encoding="utf-8") as fh:
        for vec, label in zip(rows, labels):
            feats = " ".join(f"{i + 1}:{v:.9g}" for i, v in zip(vec.indices, vec.values))
            fh.write(f"{label if label is not None else '?'} {feats}".rstrip() + "\n")


def load_libsvm(path: str | Path, dim: int | None = None) -> tuple[sp.csr_matrix, list[str | None]]:
    """Parse libsvm-style lines back into a CSR matrix and label list."""
    labels: list[str | None] = []
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    max_idx = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                raise DataError(f"{path}:{lineno}: empty line")
            labels.append(None if parts[0] == "?" else parts[0])
            prev = 0
            for item in parts[1:]:
                try:
                    idx_s, val_s = item.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad feature {item!r}") from exc
                if idx <= prev:
                    raise DataError(f"{path}:{lineno}: indices must be ascending 1-based")
                prev = idx
                indices.append(idx - 1)
                data.append(val)
                max_idx = max(max_idx, idx - 1)
            indptr.append(len(indices))
    if dim is None:
        dim = max_idx + 1
    elif max_idx >= dim:
        raise DataError(f"{path}: feature index {max_idx + 1} exceeds dim={dim}")
    return (sp.csr_matrix((np.array(data), np.array(indices, dtype=np.int64),
                           np.array(indptr, dtype=np.int64)),
                          shape=(len(labels), dim)), labels)
