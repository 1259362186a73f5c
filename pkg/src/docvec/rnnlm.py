"""Class-conditional Elman recurrent language models.

One LM per class over a shared truncated vocabulary; classification compares
per-class sequence log-likelihoods plus log priors through a softmax. The
recurrence is s_t = sigmoid(emb[x_t] + s_{t-1} @ rec), y_t = softmax(s_t @ out),
trained by SGD with truncated BPTT over fixed-length chunks (the hidden state
carries across chunks, gradients do not).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Document
from .ensemble import PROB_EPS
from .errors import ConfigError, DataError, DivergenceError

log = logging.getLogger(__name__)

BOS = "<s>"
UNK = "<unk>"

DEFAULT_HIDDEN = 32
DEFAULT_BPTT = 5
DEFAULT_LM_VOCAB = 10_000


@dataclass(frozen=True)
class LmVocab:
    """Language-model symbol table: corpus terms truncated to the most
    frequent `max_terms`, plus <s> and <unk> as ordinary symbols."""

    term_to_id: dict
    id_to_term: tuple
    bos_id: int
    unk_id: int

    def __len__(self) -> int:
        return len(self.id_to_term)


def build_lm_vocab(corpus: Corpus, max_terms: int = DEFAULT_LM_VOCAB) -> LmVocab:
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for doc in corpus:
        for tok in doc.tokens:
            counts[tok] = counts.get(tok, 0) + 1
            first_seen.setdefault(tok, len(first_seen))
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))[:max_terms]
    terms = [BOS, UNK] + [t for t in ranked if t not in (BOS, UNK)]
    return LmVocab(term_to_id={t: i for i, t in enumerate(terms)},
                   id_to_term=tuple(terms), bos_id=0, unk_id=1)


def encode(vocab: LmVocab, tokens) -> np.ndarray:
    """[<s>, tokens...] as symbol ids, OOV mapped to <unk>."""
    ids = [vocab.bos_id]
    ids.extend(vocab.term_to_id.get(t, vocab.unk_id) for t in tokens)
    return np.array(ids, dtype=np.int64)


@dataclass
class ElmanLm:
    emb: np.ndarray   # V x h input embedding
    rec: np.ndarray   # h x h recurrence
    out: np.ndarray   # h x V output projection
    vocab: LmVocab


@dataclass
class RnnLmModel:
    class_lms: dict          # label -> ElmanLm
    priors: dict             # label -> prior probability

    @property
    def labels(self) -> list:
        return sorted(self.class_lms)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _chunk_forward(emb, rec, out, inputs, s0):
    """States S (k+1 x h, S[0]=s0) and per-step distributions P (k x V)."""
    k = inputs.shape[0]
    S = np.empty((k + 1, emb.shape[1]))
    S[0] = s0
    for t in range(k):
        S[t + 1] = _sigmoid(emb[inputs[t]] + S[t] @ rec)
    logits = S[1:] @ out
    logits -= logits.max(axis=1, keepdims=True)
    P = np.exp(logits)
    P /= P.sum(axis=1, keepdims=True)
    return S, P


def _chunk_backward(emb, rec, out, inputs, targets, s0):
    """Loss and gradients for one chunk; no gradient flows into s0.

    Returns (loss, s_final, g_emb_rows (k x h, aligned with inputs),
    g_rec, g_out)."""
    k = inputs.shape[0]
    S, P = _chunk_forward(emb, rec, out, inputs, s0)
    with np.errstate(divide="ignore"):
        loss = -np.log(P[np.arange(k), targets]).sum()
    G = P.copy()
    G[np.arange(k), targets] -= 1.0
    g_out = S[1:].T @ G
    gs = G @ out.T
    g_emb_rows = np.empty((k, emb.shape[1]))
    g_rec = np.zeros_like(rec)
    carry = np.zeros(emb.shape[1])
    for t in range(k - 1, -1, -1):
        ga = (gs[t] + carry) * S[t + 1] * (1.0 - S[t + 1])
        g_emb_rows[t] = ga
        g_rec += np.outer(S[t], ga)
        carry = ga @ rec.T
    return loss, S[k], g_emb_rows, g_rec, g_out


def sequence_loss_and_grads(lm: ElmanLm, ids: np.ndarray, bptt: int):
    """Total cross-entropy of ids[1:] given prefixes, with truncated-BPTT
    gradients accumulated over chunks of length bptt. With bptt >= len(ids)-1
    this is the exact full-sequence gradient."""
    inputs, targets = ids[:-1], ids[1:]
    g_emb = np.zeros_like(lm.emb)
    g_rec = np.zeros_like(lm.rec)
    g_out = np.zeros_like(lm.out)
    s = np.zeros(lm.emb.shape[1])
    loss = 0.0
    for start in range(0, inputs.shape[0], bptt):
        sl = slice(start, start + bptt)
        closs, s, g_rows, g_r, g_o = _chunk_backward(
            lm.emb, lm.rec, lm.out, inputs[sl], targets[sl], s)
        loss += closs
        np.add.at(g_emb, inputs[sl], g_rows)
        g_rec += g_r
        g_out += g_o
    return loss, g_emb, g_rec, g_out


def sequence_loss(lm: ElmanLm, ids: np.ndarray) -> float:
    inputs, targets = ids[:-1], ids[1:]
    _, P = _chunk_forward(lm.emb, lm.rec, lm.out, inputs, np.zeros(lm.emb.shape[1]))
    with np.errstate(divide="ignore"):
        return float(-np.log(P[np.arange(inputs.shape[0]), targets]).sum())


def step_distributions(lm: ElmanLm, ids: np.ndarray) -> np.ndarray:
    """Per-step next-symbol distributions (for invariant checks)."""
    _, P = _chunk_forward(lm.emb, lm.rec, lm.out, ids[:-1], np.zeros(lm.emb.shape[1]))
    return P


def rnnlm_train(corpus: Corpus, vocab: LmVocab, h: int = DEFAULT_HIDDEN,
                bptt: int = DEFAULT_BPTT, epochs: int = 10, lr: float = 0.1,
                seed: int = 1, val_fraction: float = 0.1,
                return_history: bool = False):
    """Train one Elman LM on a corpus (typically the documents of one class).

    SGD per chunk; after each epoch the learning rate is halved whenever
    held-out perplexity fails to improve. Raises on non-finite loss.
    """
    if h < 1 or bptt < 1 or epochs < 0:
        raise ConfigError("need h >= 1, bptt >= 1, epochs >= 0")
    if not 0.0 <= val_fraction < 1.0:
        raise ConfigError("val_fraction must be in [0, 1)")
    sequences = [encode(vocab, d.tokens) for d in corpus]
    sequences = [ids for ids in sequences if ids.shape[0] > 1]
    if not sequences:
        raise DataError("no non-empty documents to train on")

    rng = np.random.default_rng(seed)
    n_val = int(val_fraction * len(sequences))
    order = rng.permutation(len(sequences))
    val_idx = set(order[:n_val].tolist())
    train_seqs = [sequences[i] for i in range(len(sequences)) if i not in val_idx]
    val_seqs = [sequences[i] for i in sorted(val_idx)] or train_seqs

    V = len(vocab)
    lm = ElmanLm(emb=rng.uniform(-0.1, 0.1, (V, h)),
                 rec=rng.uniform(-0.1, 0.1, (h, h)),
                 out=rng.uniform(-0.1, 0.1, (h, V)),
                 vocab=vocab)

    def perplexity(seqs) -> float:
        total = sum(sequence_loss(lm, ids) for ids in seqs)
        tokens = sum(ids.shape[0] - 1 for ids in seqs)
        return float(np.exp(total / tokens))

    history: list[float] = []
    best_val = np.inf
    for ep in range(epochs):
        for i in rng.permutation(len(train_seqs)):
            ids = train_seqs[i]
            inputs, targets = ids[:-1], ids[1:]
            s = np.zeros(h)
            doc_loss = 0.0
            for start in range(0, inputs.shape[0], bptt):
                sl = slice(start, start + bptt)
                closs, s, g_rows, g_rec, g_out = _chunk_backward(
                    lm.emb, lm.rec, lm.out, inputs[sl], targets[sl], s)
                doc_loss += closs
                np.add.at(lm.emb, inputs[sl], -lr * g_rows)
                lm.rec -= lr * g_rec
                lm.out -= lr * g_out
            if not np.isfinite(doc_loss):
                raise DivergenceError(f"non-finite loss at epoch {ep}, document {i}")
        history.append(perplexity(train_seqs))
        val_ppl = perplexity(val_seqs)
        if not np.isfinite(val_ppl):
            raise DivergenceError(f"non-finite validation perplexity at epoch {ep}")
        if val_ppl >= best_val:
            lr /= 2.0
        else:
            best_val = val_ppl
    return (lm, history) if return_history else lm


def rnnlm_logprob(lm: ElmanLm, doc: Document | list[str]) -> float:
    """Sum of log p(token | prefix) over the document, from a zero initial
    state after the <s> symbol. Empty documents score 0.0."""
    tokens = doc.tokens if isinstance(doc, Document) else doc
    ids = encode(lm.vocab, tokens)
    if ids.shape[0] <= 1:
        log.warning("empty document scored with log-likelihood 0.0")
        return 0.0
    return -sequence_loss(lm, ids)


def train_class_lms(corpus: Corpus, vocab: LmVocab | None = None,
                    max_terms: int = DEFAULT_LM_VOCAB, **train_kwargs) -> RnnLmModel:
    """One LM per label over a shared vocabulary; priors from label counts.
    Unlabeled documents are ignored."""
    labeled = [d for d in corpus if d.label is not None]
    labels = sorted({d.label for d in labeled})
    if len(labels) < 2:
        raise DataError(f"need >= 2 labeled classes, got {labels!r}")
    if vocab is None:
        vocab = build_lm_vocab(Corpus.renumbered(labeled), max_terms=max_terms)
    lms, priors = {}, {}
    for label in labels:
        docs = [d for d in labeled if d.label == label]
        lms[label] = rnnlm_train(Corpus.renumbered(docs), vocab, **train_kwargs)
        priors[label] = len(docs) / len(labeled)
    return RnnLmModel(class_lms=lms, priors=priors)


def rnnlm_classify(model: RnnLmModel, doc: Document | list[str]) -> dict:
    """p(c | doc) = softmax_c(log-likelihood_c + log prior_c)."""
    labels = model.labels
    if len(labels) < 2:
        raise DataError("classification needs >= 2 class networks")
    scores = np.array([rnnlm_logprob(model.class_lms[c], doc) + np.log(model.priors[c])
                       for c in labels])
    scores -= scores.max()
    p = np.exp(scores)
    p /= p.sum()
    # Long documents saturate the softmax to exact 0/1 in float64; keep every
    # class strictly interior (the voter contract) without breaking sum-to-1.
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    p /= p.sum()
    return {c: float(p[i]) for i, c in enumerate(labels)}


def save_rnnlm(model: RnnLmModel, path) -> None:
    """Single .npz: vocab + priors + per-class parameter matrices."""
    labels = model.labels
    any_vocab = model.class_lms[labels[0]].vocab
    arrays = {
        "labels": np.array([json.dumps(c) for c in labels]),
        "priors": np.array([model.priors[c] for c in labels]),
        "terms": np.array(any_vocab.id_to_term),
        "special": np.array([any_vocab.bos_id, any_vocab.unk_id], dtype=np.int64),
    }
    for i, c in enumerate(labels):
        lm = model.class_lms[c]
        arrays[f"emb_{i}"] = lm.emb
        arrays[f"rec_{i}"] = lm.rec
        arrays[f"out_{i}"] = lm.out
    np.savez(path, **arrays)


def load_rnnlm(path) -> RnnLmModel:
    with np.load(path, allow_pickle=False) as data:
        terms = tuple(str(t) for t in data["terms"])
        bos_id, unk_id = (int(x) for x in data["special"])
        vocab = LmVocab(term_to_id={t: i for i, t in enumerate(terms)},
                        id_to_term=terms, bos_id=bos_id, unk_id=unk_id)
        labels = [json.loads(s) for s in data["labels"]]
        priors = {c: float(p) for c, p in zip(labels, data["priors"])}
        lms = {c: ElmanLm(emb=data[f"emb_{i}"], rec=data[f"rec_{i}"],
                          out=data[f"out_{i}"], vocab=vocab)
               for i, c in enumerate(labels)}
    return RnnLmModel(class_lms=lms, priors=priors)
