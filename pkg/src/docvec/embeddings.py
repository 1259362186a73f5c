"""Word embeddings (skip-gram / CBOW) and paragraph vectors (PV-DBOW / PV-DM)
trained from scratch with negative sampling.

Training is sequential SGD: one update per (input, predicted-word) pair, with
negatives drawn from the unigram^0.75 distribution and a learning rate that
decays linearly from lr0 to min_lr over the total pair count. The inner loops
are numba-compiled; randomness comes from an explicit 64-bit LCG so that
single-worker runs are bit-reproducible for a fixed seed. Multi-worker runs
share the parameter matrices without locks (lost updates are tolerated as
approximation noise).

The float64 loss/gradient reference functions (`ns_loss_and_grads` and the
mean-composition wrappers) define the objective; the compiled kernels apply
the same updates and are tested against them.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .corpus import Corpus, Document
from .errors import ConfigError, DataError, DivergenceError
from .stats import Vocabulary, term_frequencies

NEG_EXPONENT = 0.75

_MODELS = ("skipgram", "cbow", "pv-dbow", "pv-dm")


@dataclass(frozen=True)
class TrainConfig:
    model: str = "skipgram"
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr0: float = 0.025
    min_lr: float = 1e-4
    subsample_t: float = 1e-4
    seed: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if self.model not in _MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {_MODELS}")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.window < 1 or self.negatives < 1 or self.epochs < 0 or self.workers < 1:
            raise ConfigError("window/negatives/workers must be >= 1 and epochs >= 0")
        if not 0.0 <= self.min_lr <= self.lr0:
            raise ConfigError("need 0 <= min_lr <= lr0")
        if self.subsample_t < 0.0:
            raise ConfigError("subsample_t must be >= 0")

    @classmethod
    def paragraph_defaults(cls, **overrides) -> "TrainConfig":
        """Paragraph-vector defaults: PV-DBOW, wider window, more epochs."""
        base = dict(model="pv-dbow", window=10, epochs=20)
        base.update(overrides)
        return cls(**base)


@dataclass
class EmbeddingMatrix:
    input_vectors: np.ndarray    # V x d
    context_vectors: np.ndarray  # V x d
    vocab: Vocabulary


@dataclass
class ParagraphVectors:
    """Trained per-document vectors plus the frozen parameters needed to
    infer vectors for unseen documents."""

    doc_vectors: np.ndarray              # D x d, row index = document id
    config: TrainConfig
    vocab: Vocabulary
    context_vectors: np.ndarray          # V x d output weights
    word_vectors: np.ndarray | None      # V x d input weights (PV-DM only)
    noise_cum: np.ndarray | None = None  # training-corpus noise distribution


# ---------------------------------------------------------------------------
# float64 reference losses (the definition the kernels are checked against)
# ---------------------------------------------------------------------------

def log_sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable log(sigmoid(x))."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))),
                    x - np.log1p(np.exp(-np.abs(x))))


def ns_loss_and_grads(h: np.ndarray, out_rows: np.ndarray, labels: np.ndarray):
    """Negative-sampling loss for one input vector against target rows.

    loss = -log sigmoid(h.o) for the positive targets (label 1) and
    -log sigmoid(-h.o) for the sampled negatives (label 0).

    Returns (loss, grad_h, grad_out_rows).
    """
    scores = out_rows @ h
    f = 1.0 / (1.0 + np.exp(-np.clip(scores, -700, 700)))
    loss = -np.sum(np.where(labels == 1, log_sigmoid(scores), log_sigmoid(-scores)))
    err = f - labels
    return loss, err @ out_rows, np.outer(err, h)


def cbow_loss_and_grads(input_rows: np.ndarray, out_rows: np.ndarray, labels: np.ndarray):
    """CBOW composition: h is the mean of the context input rows."""
    m = input_rows.shape[0]
    loss, gh, gout = ns_loss_and_grads(input_rows.mean(axis=0), out_rows, labels)
    return loss, np.tile(gh / m, (m, 1)), gout


def dm_loss_and_grads(doc_vec: np.ndarray, input_rows: np.ndarray,
                      out_rows: np.ndarray, labels: np.ndarray):
    """PV-DM composition: h is the mean of the document vector and the
    context input rows together."""
    m = input_rows.shape[0] + 1
    h = (doc_vec + input_rows.sum(axis=0)) / m
    loss, gh, gout = ns_loss_and_grads(h, out_rows, labels)
    return loss, gh / m, np.tile(gh / m, (input_rows.shape[0], 1)), gout


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

_LCG_MUL = np.uint64(25214903917)
_LCG_ADD = np.uint64(11)
_U32 = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(16)


@njit(inline="always")
def _lcg(state):
    return state * _LCG_MUL + _LCG_ADD


@njit(inline="always")
def _rand01(state):
    return float((state >> _SHIFT) & _U32) / 4294967296.0


@njit(inline="always")
def _randint(state, n):
    return int((state >> _SHIFT) % np.uint64(n))


@njit(inline="always")
def _bisect(cum, u):
    # first index with cum[idx] > u
    lo, hi = 0, cum.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    if lo >= cum.shape[0]:
        lo = cum.shape[0] - 1
    return lo


@njit(inline="always")
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(inline="always")
def _logsig(x):
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit(cache=True, nogil=True)
def _ns_apply(h, w_out, targets, lr, gh, learn_outputs):
    """One SGD step for input vector h against targets (index 0 = positive).

    Accumulates lr * (label - sigmoid(h.o)) * o into gh (the in-place delta
    the caller must add to the inputs that produced h); updates output rows
    in place when learn_outputs. Returns the pair loss.
    """
    d = h.shape[0]
    loss = 0.0
    for j in range(targets.shape[0]):
        t = targets[j]
        s = 0.0
        for c in range(d):
            s += float(h[c]) * float(w_out[t, c])
        if j == 0:
            loss += -_logsig(s)
            g = lr * (1.0 - _sigmoid(s))
        else:
            loss += -_logsig(-s)
            g = lr * (0.0 - _sigmoid(s))
        for c in range(d):
            gh[c] += g * w_out[t, c]
        if learn_outputs:
            for c in range(d):
                w_out[t, c] += g * h[c]
    return loss


@njit(cache=True, nogil=True)
def _run_pairs(model_id, w_in, w_out, doc_vecs, doc_rows, tokens, offsets,
               window, k, cum, keep_prob, subsample, lr0, min_lr,
               total_pairs, done, epochs, state, update,
               learn_words, learn_outputs, losses, npairs):
    """Sequential pair-SGD over the sharded corpus for `epochs` passes.

    model_id: 0 skip-gram, 1 CBOW, 2 PV-DBOW, 3 PV-DM. With update=False
    only the RNG is advanced and pairs are counted, so a counting pass and
    the training pass consume identical random streams.

    Returns (status, epoch, doc_index); status 1 flags a non-finite loss.
    """
    d = w_out.shape[1]
    dt = w_out.dtype
    ndocs = offsets.shape[0] - 1
    maxlen = 1
    for di in range(ndocs):
        n = offsets[di + 1] - offsets[di]
        if n > maxlen:
            maxlen = n
    kept = np.empty(maxlen, dtype=np.int64)
    ctx = np.empty(2 * window + 2, dtype=np.int64)
    targets = np.empty(k + 1, dtype=np.int64)
    gh = np.zeros(d, dtype=dt)
    hbuf = np.zeros(d, dtype=dt)
    total = total_pairs if total_pairs > 0 else 1

    for ep in range(epochs):
        for di in range(ndocs):
            n = 0
            for p in range(offsets[di], offsets[di + 1]):
                w = tokens[p]
                if subsample > 0.0:
                    state = _lcg(state)
                    if _rand01(state) >= keep_prob[w]:
                        continue
                kept[n] = w
                n += 1
            for i in range(n):
                if model_id == 2:
                    # PV-DBOW: the document vector predicts each token.
                    npairs[ep] += 1
                    cnt = done[0]
                    done[0] = cnt + 1
                    m = 1
                    targets[0] = kept[i]
                    for _ in range(k):
                        state = _lcg(state)
                        if update:
                            neg = _bisect(cum, _rand01(state) * cum[cum.shape[0] - 1])
                            if neg != targets[0]:
                                targets[m] = neg
                                m += 1
                    if update:
                        frac = cnt / total
                        if frac > 1.0:
                            frac = 1.0
                        lr = lr0 + (min_lr - lr0) * frac
                        h = doc_vecs[doc_rows[di]]
                        for c in range(d):
                            gh[c] = 0.0
                        losses[ep] += _ns_apply(h, w_out, targets[:m], lr, gh, learn_outputs)
                        for c in range(d):
                            h[c] += gh[c]
                    continue

                state = _lcg(state)
                b = 1 + _randint(state, window)
                lo = i - b
                if lo < 0:
                    lo = 0
                hi = i + b + 1
                if hi > n:
                    hi = n
                nctx = 0
                for j in range(lo, hi):
                    if j != i:
                        ctx[nctx] = kept[j]
                        nctx += 1

                if model_id == 0:
                    # skip-gram: one pair per (center, context word).
                    for j in range(nctx):
                        npairs[ep] += 1
                        cnt = done[0]
                        done[0] = cnt + 1
                        m = 1
                        targets[0] = ctx[j]
                        for _ in range(k):
                            state = _lcg(state)
                            if update:
                                neg = _bisect(cum, _rand01(state) * cum[cum.shape[0] - 1])
                                if neg != targets[0]:
                                    targets[m] = neg
                                    m += 1
                        if update:
                            frac = cnt / total
                            if frac > 1.0:
                                frac = 1.0
                            lr = lr0 + (min_lr - lr0) * frac
                            h = w_in[kept[i]]
                            for c in range(d):
                                gh[c] = 0.0
                            losses[ep] += _ns_apply(h, w_out, targets[:m], lr, gh, learn_outputs)
                            for c in range(d):
                                h[c] += gh[c]
                else:
                    # CBOW (1) / PV-DM (3): averaged inputs predict the center.
                    if model_id == 1 and nctx == 0:
                        continue
                    npairs[ep] += 1
                    cnt = done[0]
                    done[0] = cnt + 1
                    m = 1
                    targets[0] = kept[i]
                    for _ in range(k):
                        state = _lcg(state)
                        if update:
                            neg = _bisect(cum, _rand01(state) * cum[cum.shape[0] - 1])
                            if neg != targets[0]:
                                targets[m] = neg
                                m += 1
                    if update:
                        frac = cnt / total
                        if frac > 1.0:
                            frac = 1.0
                        lr = lr0 + (min_lr - lr0) * frac
                        nin = nctx
                        for c in range(d):
                            hbuf[c] = 0.0
                        for j in range(nctx):
                            for c in range(d):
                                hbuf[c] += w_in[ctx[j], c]
                        if model_id == 3:
                            nin += 1
                            for c in range(d):
                                hbuf[c] += doc_vecs[doc_rows[di], c]
                        for c in range(d):
                            hbuf[c] /= nin
                        for c in range(d):
                            gh[c] = 0.0
                        losses[ep] += _ns_apply(hbuf, w_out, targets[:m], lr, gh, learn_outputs)
                        if learn_words:
                            for j in range(nctx):
                                for c in range(d):
                                    w_in[ctx[j], c] += gh[c] / nin
                        if model_id == 3:
                            row = doc_rows[di]
                            for c in range(d):
                                doc_vecs[row, c] += gh[c] / nin
            if update and not np.isfinite(losses[ep]):
                return 1, ep, di
    return 0, -1, -1


@njit(cache=True)
def _sample_negatives(cum, n, state):
    """Draw n indices from the cumulative table with the training LCG."""
    out = np.empty(n, dtype=np.int64)
    top = cum[cum.shape[0] - 1]
    for i in range(n):
        state = _lcg(state)
        out[i] = _bisect(cum, _rand01(state) * top)
    return out


# ---------------------------------------------------------------------------
# sampling tables and corpus encoding
# ---------------------------------------------------------------------------

def build_ns_cumulative(counts: np.ndarray, exponent: float = NEG_EXPONENT) -> np.ndarray:
    """Cumulative weights of the unigram^exponent noise distribution."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.sum() <= 0:
        raise DataError("cannot build a noise distribution from all-zero counts")
    return np.cumsum(counts ** exponent)


def sample_negatives(cum: np.ndarray, n: int, seed: int) -> np.ndarray:
    """n draws from the noise distribution, using the same LCG + inverse-cdf
    routine the training kernels use."""
    return _sample_negatives(cum, n, _mix_seed(seed, 0))


def subsample_keep_probs(counts: np.ndarray, t: float) -> np.ndarray:
    """word2vec keep probabilities: (sqrt(r/t) + 1) * t/r for r = freq ratio."""
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.ones_like(counts)
    total = counts.sum()
    if t <= 0 or total <= 0:
        return probs
    ratio = np.where(counts > 0, counts / total, 1.0)
    keep = (np.sqrt(ratio / t) + 1.0) * (t / ratio)
    return np.minimum(keep, 1.0)


def _mix_seed(seed: int, worker: int) -> np.uint64:
    return np.uint64((seed * 0x9E3779B97F4A7C15 + (worker + 1) * 0xBF58476D1CE4E5B9) % 2 ** 64)


def encode_corpus(corpus: Corpus, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Map documents to concatenated in-vocabulary token ids + offsets."""
    ids: list[int] = []
    offsets = np.zeros(len(corpus) + 1, dtype=np.int64)
    for i, doc in enumerate(corpus):
        for tok in doc.tokens:
            tid = vocab.term_to_id.get(tok)
            if tid is not None:
                ids.append(tid)
        offsets[i + 1] = len(ids)
    return np.array(ids, dtype=np.int64), offsets


def _shard(n: int, workers: int) -> list[np.ndarray]:
    return [np.arange(w, n, workers, dtype=np.int64) for w in range(workers)]


def _slice_docs(tokens: np.ndarray, offsets: np.ndarray, docs: np.ndarray):
    parts = [tokens[offsets[i]:offsets[i + 1]] for i in docs]
    sub_tokens = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    sub_offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    for j, i in enumerate(docs):
        sub_offsets[j + 1] = sub_offsets[j] + (offsets[i + 1] - offsets[i])
    return sub_tokens, sub_offsets


_MODEL_IDS = {"skipgram": 0, "cbow": 1, "pv-dbow": 2, "pv-dm": 3}


def _run_training(model: str, w_in, w_out, doc_vecs, doc_rows_all, tokens, offsets,
                  cfg: TrainConfig, learn_words: bool = True, learn_outputs: bool = True,
                  epochs: int | None = None, cum: np.ndarray | None = None):
    """Counting pass + training pass, optionally threaded. Returns per-epoch
    (loss sums, pair counts)."""
    model_id = _MODEL_IDS[model]
    epochs = cfg.epochs if epochs is None else epochs
    if tokens.size == 0:
        raise DataError("no in-vocabulary tokens to train on")
    counts = np.bincount(tokens, minlength=w_out.shape[0]).astype(np.float64)
    if cum is None:
        cum = build_ns_cumulative(counts)
    keep = subsample_keep_probs(counts, cfg.subsample_t)
    ndocs = offsets.shape[0] - 1
    workers = min(cfg.workers, max(1, ndocs))
    shards = _shard(ndocs, workers)
    shard_data = []
    for w, docs in enumerate(shards):
        sub_tokens, sub_offsets = _slice_docs(tokens, offsets, docs)
        shard_data.append((docs, sub_tokens, sub_offsets, _mix_seed(cfg.seed, w)))

    # pass 1: replay the RNG to count pairs exactly
    total = 0
    for docs, sub_tokens, sub_offsets, state in shard_data:
        losses = np.zeros(epochs)
        npairs = np.zeros(epochs, dtype=np.int64)
        _run_pairs(model_id, w_in, w_out, doc_vecs, doc_rows_all[docs],
                   sub_tokens, sub_offsets, cfg.window, cfg.negatives, cum, keep,
                   cfg.subsample_t, cfg.lr0, cfg.min_lr, 1, np.zeros(1, dtype=np.int64),
                   epochs, state, False, learn_words, learn_outputs, losses, npairs)
        total += int(npairs.sum())

    done = np.zeros(1, dtype=np.int64)
    results: list[tuple] = [None] * len(shard_data)  # type: ignore[list-item]
    loss_sums = np.zeros(epochs)
    pair_counts = np.zeros(epochs, dtype=np.int64)

    def work(idx: int) -> None:
        docs, sub_tokens, sub_offsets, state = shard_data[idx]
        losses = np.zeros(epochs)
        npairs = np.zeros(epochs, dtype=np.int64)
        status = _run_pairs(model_id, w_in, w_out, doc_vecs, doc_rows_all[docs],
                            sub_tokens, sub_offsets, cfg.window, cfg.negatives, cum, keep,
                            cfg.subsample_t, cfg.lr0, cfg.min_lr, total, done,
                            epochs, state, True, learn_words, learn_outputs, losses, npairs)
        results[idx] = (status, losses, npairs, docs)

    if workers == 1:
        work(0)
    else:
        threads = [threading.Thread(target=work, args=(i,)) for i in range(len(shard_data))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    for status, losses, npairs, docs in results:
        code, ep, di = status
        if code != 0:
            raise DivergenceError(
                f"non-finite training loss at epoch {ep}, document {int(docs[di])}")
        loss_sums += losses
        pair_counts += npairs
    return loss_sums, pair_counts


def _init_matrix(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(rows, dim)).astype(np.float32)


def train_embeddings(corpus: Corpus, vocab: Vocabulary, cfg: TrainConfig,
                     return_history: bool = False):
    """Train skip-gram or CBOW word vectors over the corpus.

    Input vectors start uniform in [-0.5/d, 0.5/d], context vectors at zero.
    With return_history, also returns per-epoch mean pair losses.
    """
    if cfg.model not in ("skipgram", "cbow"):
        raise ConfigError(f"train_embeddings expects skipgram/cbow, got {cfg.model!r}")
    if len(corpus) == 0 or len(vocab) == 0:
        raise DataError("empty corpus or vocabulary")
    tokens, offsets = encode_corpus(corpus, vocab)
    rng = np.random.default_rng(cfg.seed)
    w_in = _init_matrix(rng, len(vocab), cfg.dim)
    w_out = np.zeros((len(vocab), cfg.dim), dtype=np.float32)
    dummy_docs = np.zeros((1, cfg.dim), dtype=np.float32)
    doc_rows = np.zeros(offsets.shape[0] - 1, dtype=np.int64)
    loss_sums, pair_counts = _run_training(cfg.model, w_in, w_out, dummy_docs,
                                           doc_rows, tokens, offsets, cfg)
    emb = EmbeddingMatrix(input_vectors=w_in, context_vectors=w_out, vocab=vocab)
    if return_history:
        with np.errstate(invalid="ignore"):
            history = np.where(pair_counts > 0, loss_sums / np.maximum(pair_counts, 1), 0.0)
        return emb, history
    return emb


def train_paragraph_vectors(corpus: Corpus, vocab: Vocabulary, cfg: TrainConfig,
                            return_history: bool = False):
    """Train one vector per document (PV-DBOW or PV-DM).

    PV-DBOW: the document vector predicts each of the document's tokens.
    PV-DM: the document vector is averaged with the window's word vectors
    to predict the center word; the word matrix is shared across documents.
    """
    if cfg.model not in ("pv-dbow", "pv-dm"):
        raise ConfigError(f"train_paragraph_vectors expects pv-dbow/pv-dm, got {cfg.model!r}")
    if len(corpus) == 0 or len(vocab) == 0:
        raise DataError("empty corpus or vocabulary")
    tokens, offsets = encode_corpus(corpus, vocab)
    rng = np.random.default_rng(cfg.seed)
    doc_vecs = _init_matrix(rng, len(corpus), cfg.dim)
    w_out = np.zeros((len(vocab), cfg.dim), dtype=np.float32)
    if cfg.model == "pv-dm":
        w_in = _init_matrix(rng, len(vocab), cfg.dim)
    else:
        w_in = np.zeros((1, cfg.dim), dtype=np.float32)
    doc_rows = np.arange(len(corpus), dtype=np.int64)
    cum = build_ns_cumulative(np.bincount(tokens, minlength=len(vocab)).astype(np.float64))
    loss_sums, pair_counts = _run_training(cfg.model, w_in, w_out, doc_vecs,
                                           doc_rows, tokens, offsets, cfg, cum=cum)
    pv = ParagraphVectors(doc_vectors=doc_vecs, config=cfg, vocab=vocab,
                          context_vectors=w_out,
                          word_vectors=w_in if cfg.model == "pv-dm" else None,
                          noise_cum=cum)
    if return_history:
        history = np.where(pair_counts > 0, loss_sums / np.maximum(pair_counts, 1), 0.0)
        return pv, history
    return pv


def infer_paragraph_vector(pv: ParagraphVectors, doc: Document,
                           inference_epochs: int = 20, seed: int | None = None) -> np.ndarray:
    """Fit a fresh document vector by gradient descent with all trained
    parameters frozen. Deterministic for a fixed seed; subsampling is off."""
    seed = pv.config.seed if seed is None else seed
    ids = [pv.vocab.term_to_id[t] for t in doc.tokens if t in pv.vocab.term_to_id]
    if not ids:
        raise DataError(f"document {doc.id} has no in-vocabulary tokens; cannot infer")
    dim = pv.doc_vectors.shape[1]
    rng = np.random.default_rng(seed)
    vec = _init_matrix(rng, 1, dim)
    if inference_epochs == 0:
        return vec[0]
    tokens = np.array(ids, dtype=np.int64)
    offsets = np.array([0, len(ids)], dtype=np.int64)
    cfg = replace(pv.config, subsample_t=0.0, seed=seed, workers=1)
    w_in = pv.word_vectors if pv.word_vectors is not None \
        else np.zeros((1, dim), dtype=np.float32)
    _run_training(pv.config.model, w_in, pv.context_vectors, vec,
                  np.zeros(1, dtype=np.int64), tokens, offsets, cfg,
                  learn_words=False, learn_outputs=False, epochs=inference_epochs,
                  cum=pv.noise_cum)
    return vec[0]


# ---------------------------------------------------------------------------
# similarity queries and word2vec text serialization
# ---------------------------------------------------------------------------

def nearest_neighbors(emb: EmbeddingMatrix, term: str, k: int) -> list[tuple[str, float]]:
    """Top-k by cosine over input vectors, excluding the query; ties broken
    by ascending term id."""
    if term not in emb.vocab.term_to_id:
        raise KeyError(f"term not in vocabulary: {term!r}")
    V = emb.input_vectors.shape[0]
    if k >= V:
        raise ConfigError(f"k must be < vocabulary size ({V})")
    if k <= 0:
        return []
    q = emb.input_vectors[emb.vocab.term_to_id[term]].astype(np.float64)
    M = emb.input_vectors.astype(np.float64)
    norms = np.linalg.norm(M, axis=1)
    qn = np.linalg.norm(q)
    denom = norms * qn
    sims = np.divide(M @ q, denom, out=np.zeros(V), where=denom > 0)
    sims[emb.vocab.term_to_id[term]] = -np.inf
    order = np.lexsort((np.arange(V), -sims))[:k]
    return [(emb.vocab.id_to_term[i], float(sims[i])) for i in order]


def save_embeddings(emb: EmbeddingMatrix, path) -> None:
    """word2vec text format: `<V> <d>` header, then `<term> <v1> ... <vd>`."""
    V, d = emb.input_vectors.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{V} {d}\n")
        for i in range(V):
            vals = " ".join(f"{x:.6f}" for x in emb.input_vectors[i])
            fh.write(f"{emb.vocab.id_to_term[i]} {vals}\n")


def save_paragraph_vectors(pv: ParagraphVectors, path) -> None:
    """Everything inference needs, in one .npz: per-document vectors, frozen
    output (and PV-DM word) weights, the noise distribution, config, vocab."""
    import dataclasses
    import json

    arrays = {
        "doc_vectors": pv.doc_vectors,
        "context_vectors": pv.context_vectors,
        "config": np.array(json.dumps(dataclasses.asdict(pv.config))),
        "terms": np.array(pv.vocab.id_to_term),
        "df": pv.vocab.df,
        "meta": np.array([pv.vocab.num_docs, pv.vocab.min_count], dtype=np.int64),
    }
    if pv.word_vectors is not None:
        arrays["word_vectors"] = pv.word_vectors
    if pv.noise_cum is not None:
        arrays["noise_cum"] = pv.noise_cum
    np.savez(path, **arrays)


def load_paragraph_vectors(path) -> ParagraphVectors:
    import json

    with np.load(path, allow_pickle=False) as data:
        cfg = TrainConfig(**json.loads(str(data["config"])))
        terms = [str(t) for t in data["terms"]]
        num_docs, min_count = (int(x) for x in data["meta"])
        vocab = Vocabulary(term_to_id={t: i for i, t in enumerate(terms)},
                           df=data["df"].copy(), num_docs=num_docs, min_count=min_count)
        return ParagraphVectors(
            doc_vectors=data["doc_vectors"].copy(), config=cfg, vocab=vocab,
            context_vectors=data["context_vectors"].copy(),
            word_vectors=data["word_vectors"].copy() if "word_vectors" in data else None,
            noise_cum=data["noise_cum"].copy() if "noise_cum" in data else None)


def load_embeddings(path) -> EmbeddingMatrix:
    """Parse the word2vec text format. The attached vocabulary carries
    term-id alignment only (df statistics are placeholders); context vectors
    are not part of the format and come back as zeros."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: expected `<V> <d>` header")
        V, d = int(header[0]), int(header[1])
        terms: list[str] = []
        rows = np.zeros((V, d), dtype=np.float32)
        n = 0
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != d + 1:
                raise DataError(f"{path}: row {n + 1} has {len(parts) - 1} values, expected {d}")
            if n >= V:
                raise DataError(f"{path}: more rows than the declared {V}")
            terms.append(parts[0])
            rows[n] = [float(x) for x in parts[1:]]
            n += 1
        if n != V:
            raise DataError(f"{path}: header declares {V} rows, found {n}")
    vocab = Vocabulary(term_to_id={t: i for i, t in enumerate(terms)},
                       df=np.ones(V, dtype=np.int64), num_docs=1, min_count=1)
    return EmbeddingMatrix(input_vectors=rows,
                           context_vectors=np.zeros_like(rows), vocab=vocab)
