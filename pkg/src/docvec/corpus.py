"""Corpus ingestion, deterministic tokenization and stratified splitting.

Two on-disk layouts are supported:

* ``tsv`` — UTF-8, one document per line, ``<label>\\t<text>``; an empty
  label field marks an unlabeled document.
* ``dir-per-class`` — ``<root>/<label>/<docid>.txt`` with one UTF-8 file
  per document, plus an optional ``<root>/unlabeled/`` directory.
"""

from __future__ import annotations

import string
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, DataError

_ASCII_PUNCT = set(string.punctuation)


@dataclass(frozen=True)
class TokenizerConfig:
    """Fully determines tokenizer output for a given input string."""

    lowercase: bool = True
    strip_punctuation: bool = True
    unicode_mode: str = "unicode-alphanumeric"  # or "ascii-letters"

    def __post_init__(self) -> None:
        if self.unicode_mode not in ("ascii-letters", "unicode-alphanumeric"):
            raise ConfigError(f"unknown unicode_mode: {self.unicode_mode!r}")


@dataclass(frozen=True)
class Document:
    id: int
    label: str | None
    tokens: tuple[str, ...]


class Corpus:
    """Immutable ordered collection of documents with dense ids 0..N-1."""

    def __init__(self, documents: Sequence[Document]):
        documents = list(documents)
        for i, doc in enumerate(documents):
            if doc.id != i:
                raise DataError(f"document ids must be dense 0..N-1, got id {doc.id} at position {i}")
        self.documents = documents
        self.labelset = {d.label for d in documents if d.label is not None}

    @classmethod
    def renumbered(cls, documents: Sequence[Document]) -> "Corpus":
        """Build a corpus from arbitrary documents, reassigning dense ids."""
        return cls([replace(d, id=i) for i, d in enumerate(documents)])

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, i: int) -> Document:
        return self.documents[i]


def _is_strippable(ch: str, unicode_mode: str) -> bool:
    if unicode_mode == "ascii-letters":
        return ch in _ASCII_PUNCT
    # Punctuation and symbol categories only; combining marks (Mn/Mc) are
    # word characters, otherwise Devanagari matras would be clipped.
    return unicodedata.category(ch)[0] in ("P", "S")


def _strip_token(tok: str, unicode_mode: str) -> str:
    start, end = 0, len(tok)
    while start < end and _is_strippable(tok[start], unicode_mode):
        start += 1
    while end > start and _is_strippable(tok[end - 1], unicode_mode):
        end -= 1
    return tok[start:end]


def tokenize(text: str, cfg: TokenizerConfig = TokenizerConfig()) -> list[str]:
    """Whitespace split, optional edge-punctuation stripping and lowercasing.

    Degenerate input yields an empty list; tokens are never empty strings.
    """
    if cfg.lowercase:
        text = text.lower()
    out = []
    for raw in text.split():
        tok = _strip_token(raw, cfg.unicode_mode) if cfg.strip_punctuation else raw
        if tok:
            out.append(tok)
    return out


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc})") from exc


def load_corpus(path: str | Path, fmt: str = "tsv",
                tokenizer: TokenizerConfig = TokenizerConfig()) -> Corpus:
    """Load a labeled corpus, assigning document ids in encounter order."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus path does not exist: {path}")
    if fmt == "tsv":
        return _load_tsv(path, tokenizer)
    if fmt == "dir-per-class":
        return _load_dir_per_class(path, tokenizer)
    raise ConfigError(f"unknown corpus format: {fmt!r}")


def _load_tsv(path: Path, tokenizer: TokenizerConfig) -> Corpus:
    docs = []
    text = _read_text(path)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if "\t" not in line:
            raise DataError(f"{path}:{lineno}: malformed line (no tab separator)")
        label, body = line.split("\t", 1)
        docs.append(Document(id=len(docs), label=label or None,
                             tokens=tuple(tokenize(body, tokenizer))))
    return Corpus(docs)


def _load_dir_per_class(root: Path, tokenizer: TokenizerConfig) -> Corpus:
    if not root.is_dir():
        raise DataError(f"not a directory: {root}")
    subdirs = sorted(p.name for p in root.iterdir() if p.is_dir())
    labels = [d for d in subdirs if d != "unlabeled"]
    ordered = [(d, d) for d in labels]
    if "unlabeled" in subdirs:
        ordered.append(("unlabeled", None))
    docs = []
    for dirname, label in ordered:
        for f in sorted((root / dirname).iterdir()):
            if not f.is_file():
                continue
            docs.append(Document(id=len(docs), label=label,
                                 tokens=tuple(tokenize(_read_text(f), tokenizer))))
    return Corpus(docs)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the tsv form; tokens are space-joined (round-trips under the
    whitespace-splitting tokenizer configurations)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(f"{doc.label or ''}\t{' '.join(doc.tokens)}\n")


def split(corpus: Corpus, train_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Stratified, seeded train/test split.

    Per-label train counts are round(train_fraction * per-label total);
    unlabeled documents form their own stratum. Document order within each
    side follows the original corpus order, with ids reassigned densely.
    """
    if len(corpus) == 0:
        raise DataError("cannot split an empty corpus")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0,1), got {train_fraction}")
    by_label: dict[str | None, list[int]] = {}
    for doc in corpus:
        by_label.setdefault(doc.label, []).append(doc.id)
    rng = np.random.default_rng(seed)
    train_ids: set[int] = set()
    for label in sorted(by_label, key=lambda l: (l is None, l or "")):
        ids = by_label[label]
        if len(ids) < 2:
            raise DataError(f"label {label!r} has {len(ids)} document(s); "
                            "need >= 2 per label to stratify")
        n_train = int(np.floor(train_fraction * len(ids) + 0.5))
        perm = rng.permutation(len(ids))
        train_ids.update(ids[i] for i in perm[:n_train])
    train = [d for d in corpus if d.id in train_ids]
    test = [d for d in corpus if d.id not in train_ids]
    return Corpus.renumbered(train), Corpus.renumbered(test)
