"""Composing word vectors into document vectors.

Variants: plain sum / mean, element-wise product, a stopword step function
(non-stopwords contribute, stopwords contribute nothing), and idf-graded
weighting (each occurrence contributes idf(w) * v_w when idf(w) exceeds a
threshold delta). Composite vectors concatenate the weighted average with an
optional paragraph vector and an optional tf-idf part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, Document
from .embeddings import EmbeddingMatrix
from .errors import ConfigError, DataError, LayoutError
from .stats import SparseVector, StopwordPolicy, Vocabulary, is_stopword

VARIANTS = ("sum", "mean", "multiplicative", "stopword-step", "graded-idf")


class CompositionError(DataError):
    """Document cannot be composed (entirely out of vocabulary)."""


@dataclass(frozen=True)
class CompositionScheme:
    variant: str = "graded-idf"
    delta: float = 0.0
    stopword_policy: StopwordPolicy | None = None
    # Divide stopword-step / graded-idf output by the contributor count.
    average: bool = True

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown composition variant {self.variant!r}")
        if self.delta < 0:
            raise ConfigError("delta must be non-negative")
        if self.delta != 0.0 and self.variant != "graded-idf":
            raise ConfigError("delta only applies to the graded-idf variant")
        if self.variant == "stopword-step" and self.stopword_policy is None:
            raise ConfigError("stopword-step requires a stopword policy")


@dataclass(frozen=True)
class DocumentVector:
    values: np.ndarray
    scheme: CompositionScheme


@dataclass(frozen=True)
class CompositeVector:
    """Ordered dense parts plus an optional trailing sparse part."""

    dense_parts: tuple[tuple[str, np.ndarray], ...]
    sparse_part: SparseVector | None
    total_dim: int = field(init=False)

    def __post_init__(self) -> None:
        names = [name for name, _ in self.dense_parts]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate part names: {names}")
        dim = sum(v.shape[0] for _, v in self.dense_parts)
        if self.sparse_part is not None:
            dim += self.sparse_part.dim
        object.__setattr__(self, "total_dim", dim)

    @property
    def layout(self) -> tuple:
        parts = tuple((name, v.shape[0]) for name, v in self.dense_parts)
        sparse_dim = self.sparse_part.dim if self.sparse_part is not None else None
        return parts, sparse_dim


def compose(doc: Document, emb: EmbeddingMatrix, vocab: Vocabulary,
            scheme: CompositionScheme) -> DocumentVector:
    """Build one document vector from the document's word vectors.

    Every occurrence of an in-vocabulary token contributes; OOV tokens are
    skipped. A document with no in-vocabulary token at all is an error, but
    a document whose tokens are all filtered out (stopwords, idf <= delta)
    composes to the zero vector.
    """
    d = emb.input_vectors.shape[1]
    in_vocab = 0
    contributors = 0
    if scheme.variant == "multiplicative":
        out = np.ones(d, dtype=np.float64)
    else:
        out = np.zeros(d, dtype=np.float64)

    for tok in doc.tokens:
        row = emb.vocab.term_to_id.get(tok)
        if row is None:
            continue
        in_vocab += 1
        v = emb.input_vectors[row].astype(np.float64)
        if scheme.variant == "multiplicative":
            out *= v
            contributors += 1
        elif scheme.variant in ("sum", "mean"):
            out += v
            contributors += 1
        elif scheme.variant == "stopword-step":
            tid = vocab.term_to_id.get(tok)
            if tid is None or is_stopword(scheme.stopword_policy, vocab, tok):
                continue
            out += v
            contributors += 1
        else:  # graded-idf
            tid = vocab.term_to_id.get(tok)
            if tid is None:
                continue
            w = np.log(vocab.num_docs / vocab.df[tid])
            if w <= scheme.delta:
                continue
            out += w * v
            contributors += 1

    if in_vocab == 0:
        raise CompositionError(f"document {doc.id} is entirely out of vocabulary")
    if contributors == 0:
        return DocumentVector(values=np.zeros(d, dtype=np.float64), scheme=scheme)
    if scheme.variant == "mean":
        out /= contributors
    elif scheme.variant in ("stopword-step", "graded-idf") and scheme.average:
        out /= contributors
    return DocumentVector(values=out, scheme=scheme)


def compose_corpus(corpus: Corpus, emb: EmbeddingMatrix, vocab: Vocabulary,
                   scheme: CompositionScheme) -> tuple[np.ndarray, list[int]]:
    """Compose every document; returns (N x d matrix, ids of zero-vector docs)."""
    d = emb.input_vectors.shape[1]
    out = np.zeros((len(corpus), d), dtype=np.float64)
    zero_docs: list[int] = []
    for i, doc in enumerate(corpus):
        vec = compose(doc, emb, vocab, scheme).values
        out[i] = vec
        if not vec.any():
            zero_docs.append(doc.id)
    return out, zero_docs


def _l2(vec: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(vec)
    return vec / n if n > 0 else vec


def composite_vector(doc: Document | None = None, emb: EmbeddingMatrix | None = None,
                     vocab: Vocabulary | None = None, scheme: CompositionScheme | None = None,
                     pv: np.ndarray | None = None, tfidf: SparseVector | None = None,
                     weighted: np.ndarray | None = None,
                     l2_parts: bool = True) -> CompositeVector:
    """Concatenate document-vector parts in the fixed order
    weighted-avg, paragraph, tf-idf.

    The weighted-avg part comes from compose(doc, emb, vocab, scheme), or can
    be passed precomputed via `weighted`. Dense parts are L2-normalized
    before concatenation (zero vectors kept as-is); the sparse tf-idf part is
    appended unscaled.
    """
    if weighted is None and emb is not None:
        if doc is None or vocab is None or scheme is None:
            raise ConfigError("composing the weighted part needs doc, vocab and scheme")
        weighted = compose(doc, emb, vocab, scheme).values
    parts: list[tuple[str, np.ndarray]] = []
    if weighted is not None:
        parts.append(("weighted-avg", np.asarray(weighted, dtype=np.float64)))
    if pv is not None:
        parts.append(("paragraph", np.asarray(pv, dtype=np.float64)))
    if not parts and tfidf is None:
        raise ConfigError("composite vector needs at least one part")
    if l2_parts:
        parts = [(name, _l2(v)) for name, v in parts]
    return CompositeVector(dense_parts=tuple(parts), sparse_part=tfidf)


def composite_to_sparse(cv: CompositeVector) -> SparseVector:
    """Flatten to one sparse vector: dense parts first (exact zeros dropped),
    then the sparse part shifted past the dense span."""
    indices: list[int] = []
    values: list[float] = []
    offset = 0
    for _, v in cv.dense_parts:
        nz = np.nonzero(v)[0]
        indices.extend((nz + offset).tolist())
        values.extend(v[nz].tolist())
        offset += v.shape[0]
    if cv.sparse_part is not None:
        indices.extend((cv.sparse_part.indices + offset).tolist())
        values.extend(cv.sparse_part.values.tolist())
    return SparseVector(indices=np.array(indices, dtype=np.int64),
                        values=np.array(values, dtype=np.float64),
                        dim=cv.total_dim)


def flatten(cv: CompositeVector) -> np.ndarray:
    """Materialize the full dense concatenation (for equivalence checks)."""
    return composite_to_sparse(cv).to_dense()


def check_layout(vectors: list[CompositeVector]) -> tuple:
    """All composite vectors in a batch must share one part layout."""
    if not vectors:
        raise DataError("no composite vectors")
    layout = vectors[0].layout
    for i, cv in enumerate(vectors[1:], start=1):
        if cv.layout != layout:
            raise LayoutError(f"vector {i} layout {cv.layout} != fitted layout {layout}")
    return layout
