import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docvec.corpus import Corpus, Document
from docvec.embeddings import (
    EmbeddingMatrix,
    ParagraphVectors,
    TrainConfig,
    build_ns_cumulative,
    cbow_loss_and_grads,
    dm_loss_and_grads,
    infer_paragraph_vector,
    load_embeddings,
    load_paragraph_vectors,
    log_sigmoid,
    nearest_neighbors,
    ns_loss_and_grads,
    sample_negatives,
    save_embeddings,
    save_paragraph_vectors,
    subsample_keep_probs,
    train_embeddings,
    train_paragraph_vectors,
)
from docvec.errors import ConfigError, DataError
from docvec.stats import Vocabulary, build_vocab


def mk_corpus(token_lists):
    return Corpus([Document(id=i, label=None, tokens=tuple(t))
                   for i, t in enumerate(token_lists)])


def chain_corpus(n_docs=40, doc_len=50, n_words=30, seed=5):
    """Markov-chain documents: w_j is mostly followed by w_{j+1 mod V}.

    Highly structured, so every model's training loss falls fast — used for
    the loss-trend and determinism checks.
    """
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(n_words)]
    docs = []
    for _ in range(n_docs):
        seq = [int(rng.integers(0, n_words))]
        for _ in range(doc_len - 1):
            step = 1 if rng.random() < 0.9 else int(rng.integers(2, n_words))
            seq.append((seq[-1] + step) % n_words)
        docs.append([words[j] for j in seq])
    return mk_corpus(docs)


def _cosine(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        TrainConfig(model="glove")
    with pytest.raises(ConfigError):
        TrainConfig(dim=0)
    with pytest.raises(ConfigError):
        TrainConfig(window=0)
    with pytest.raises(ConfigError):
        TrainConfig(min_lr=0.1, lr0=0.05)
    with pytest.raises(ConfigError):
        TrainConfig(subsample_t=-1.0)


def test_paragraph_defaults():
    cfg = TrainConfig.paragraph_defaults(dim=17)
    assert cfg.model == "pv-dbow" and cfg.window == 10 and cfg.epochs == 20
    assert cfg.dim == 17


# ---------------------------------------------------------------------------
# loss gradients vs central finite differences (float64)
# ---------------------------------------------------------------------------

def _fd_check(f, params, grads, step=1e-5, tol=1e-4):
    """Max relative error between analytic grads and central differences."""
    for p, g in zip(params, grads):
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            up = f()
            p[idx] = orig - step
            down = f()
            p[idx] = orig
            num = (up - down) / (2 * step)
            denom = max(abs(num), abs(g[idx]), 1e-8)
            assert abs(num - g[idx]) / denom < tol, \
                f"fd mismatch at {idx}: analytic={g[idx]}, numeric={num}"
            it.iternext()


def test_skipgram_loss_gradient_finite_difference():
    rng = np.random.default_rng(0)
    h = rng.normal(scale=0.5, size=8)
    out = rng.normal(scale=0.5, size=(6, 8))
    labels = np.array([1, 0, 0, 0, 0, 0])
    loss, gh, gout = ns_loss_and_grads(h, out, labels)
    assert np.isfinite(loss) and loss > 0
    _fd_check(lambda: ns_loss_and_grads(h, out, labels)[0], [h, out], [gh, gout])


def test_cbow_loss_gradient_finite_difference():
    rng = np.random.default_rng(1)
    ctx = rng.normal(scale=0.5, size=(3, 5))
    out = rng.normal(scale=0.5, size=(4, 5))
    labels = np.array([1, 0, 0, 0])
    loss, gctx, gout = cbow_loss_and_grads(ctx, out, labels)
    _fd_check(lambda: cbow_loss_and_grads(ctx, out, labels)[0], [ctx, out], [gctx, gout])


def test_dbow_loss_gradient_finite_difference():
    # PV-DBOW is the skip-gram loss with the document vector as input
    rng = np.random.default_rng(2)
    dvec = rng.normal(scale=0.5, size=7)
    out = rng.normal(scale=0.5, size=(6, 7))
    labels = np.array([1, 0, 0, 0, 0, 0])
    loss, gd, gout = ns_loss_and_grads(dvec, out, labels)
    _fd_check(lambda: ns_loss_and_grads(dvec, out, labels)[0], [dvec, out], [gd, gout])


def test_dm_loss_gradient_finite_difference():
    rng = np.random.default_rng(3)
    dvec = rng.normal(scale=0.5, size=6)
    ctx = rng.normal(scale=0.5, size=(2, 6))
    out = rng.normal(scale=0.5, size=(5, 6))
    labels = np.array([1, 0, 0, 0, 0])
    loss, gd, gctx, gout = dm_loss_and_grads(dvec, ctx, out, labels)
    _fd_check(lambda: dm_loss_and_grads(dvec, ctx, out, labels)[0],
              [dvec, ctx, out], [gd, gctx, gout])


def test_log_sigmoid_stable_at_extremes():
    assert log_sigmoid(1000.0) == pytest.approx(0.0, abs=1e-12)
    assert log_sigmoid(-1000.0) == pytest.approx(-1000.0, rel=1e-12)
    assert np.isfinite(log_sigmoid(np.array([-750.0, 0.0, 750.0]))).all()
    assert log_sigmoid(0.0) == pytest.approx(-math.log(2), abs=1e-12)


def test_compiled_update_matches_reference_gradient():
    # one compiled SGD step == explicit gradient step of the float64 loss
    from docvec.embeddings import _ns_apply

    rng = np.random.default_rng(4)
    h = rng.normal(scale=0.3, size=6)
    out = rng.normal(scale=0.3, size=(9, 6))
    targets = np.array([2, 5, 7, 0], dtype=np.int64)  # index 0 = positive row
    labels = np.array([1, 0, 0, 0])
    lr = 0.05
    loss_ref, gh_ref, gout_ref = ns_loss_and_grads(h, out[targets], labels)

    out_upd = out.copy()
    gh = np.zeros(6)
    loss = _ns_apply(h, out_upd, targets, lr, gh, True)
    assert loss == pytest.approx(loss_ref, rel=1e-12)
    np.testing.assert_allclose(gh, -lr * gh_ref, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(out_upd[targets], out[targets] - lr * gout_ref,
                               rtol=1e-12, atol=1e-15)
    untouched = [i for i in range(9) if i not in targets]
    np.testing.assert_array_equal(out_upd[untouched], out[untouched])


# ---------------------------------------------------------------------------
# noise distribution / subsampling
# ---------------------------------------------------------------------------

def test_ns_cumulative_is_powered_prefix_sum():
    counts = np.array([1.0, 16.0, 81.0, 256.0])
    np.testing.assert_allclose(build_ns_cumulative(counts),
                               np.cumsum(counts ** 0.75), rtol=1e-15)
    with pytest.raises(DataError):
        build_ns_cumulative(np.zeros(3))


def test_sampler_follows_powered_distribution_not_raw_counts():
    # counts chosen so unigram^0.75 differs sharply from raw unigram:
    # powered probs are [.01, .08, .27, .64]; raw would put ~0.0028 on term 0
    counts = np.array([1.0, 16.0, 81.0, 256.0])
    cum = build_ns_cumulative(counts)
    p = counts ** 0.75 / (counts ** 0.75).sum()
    draws = sample_negatives(cum, 100_000, seed=0)
    freq = np.bincount(draws, minlength=4) / 100_000
    np.testing.assert_allclose(freq, p, rtol=0.05)
    raw = counts / counts.sum()
    assert abs(freq[0] - raw[0]) / raw[0] > 1.0  # nowhere near the unpowered law


def test_sampler_deterministic_per_seed():
    cum = build_ns_cumulative(np.arange(1.0, 21.0))
    a = sample_negatives(cum, 1000, seed=42)
    b = sample_negatives(cum, 1000, seed=42)
    c = sample_negatives(cum, 1000, seed=43)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= 0 and a.max() < 20


def test_subsample_keep_probs_formula():
    counts = np.array([50.0, 30.0, 15.0, 5.0])
    t = 1e-2
    keep = subsample_keep_probs(counts, t)
    total = counts.sum()
    for i, c in enumerate(counts):
        r = c / total
        expect = min((math.sqrt(r / t) + 1.0) * (t / r), 1.0)
        assert keep[i] == pytest.approx(expect, rel=1e-12)
    # rarer words are kept with higher probability
    assert np.all(np.diff(keep) >= 0)
    np.testing.assert_array_equal(subsample_keep_probs(counts, 0.0), np.ones(4))


@given(st.lists(st.floats(1.0, 1e6), min_size=2, max_size=30),
       st.floats(1e-6, 1.0))
@settings(max_examples=100)
def test_subsample_keep_probs_bounds(counts, t):
    keep = subsample_keep_probs(np.array(counts), t)
    assert np.all(keep > 0) and np.all(keep <= 1.0)


# ---------------------------------------------------------------------------
# training behavior
# ---------------------------------------------------------------------------

def small_cfg(**kw):
    base = dict(model="skipgram", dim=16, window=2, negatives=5, epochs=5,
                lr0=0.025, min_lr=1e-4, subsample_t=0.0, seed=7, workers=1)
    base.update(kw)
    return TrainConfig(**base)


def test_shapes_contract():
    corpus = chain_corpus(n_docs=6, doc_len=20, n_words=10)
    vocab = build_vocab(corpus)
    emb = train_embeddings(corpus, vocab, small_cfg(dim=8, epochs=1))
    assert emb.input_vectors.shape == (10, 8)
    assert emb.context_vectors.shape == (10, 8)
    assert np.isfinite(emb.input_vectors).all()
    assert np.isfinite(emb.context_vectors).all()

    pv = train_paragraph_vectors(corpus, vocab,
                                 small_cfg(model="pv-dbow", dim=16, epochs=1))
    assert pv.doc_vectors.shape == (6, 16)
    assert np.isfinite(pv.doc_vectors).all()


@pytest.mark.parametrize("model", ["skipgram", "cbow", "pv-dbow", "pv-dm"])
def test_epoch_loss_non_increasing_first_three(model):
    corpus = chain_corpus()
    vocab = build_vocab(corpus)
    cfg = small_cfg(model=model)
    train = train_paragraph_vectors if model.startswith("pv") else train_embeddings
    _, history = train(corpus, vocab, cfg, return_history=True)
    assert len(history) == 5
    assert history[0] >= history[1] >= history[2]


@pytest.mark.parametrize("model", ["skipgram", "pv-dbow"])
def test_single_worker_training_bit_reproducible(model):
    corpus = chain_corpus(n_docs=10, doc_len=30)
    vocab = build_vocab(corpus)
    cfg = small_cfg(model=model, epochs=2, subsample_t=1e-3)
    train = train_paragraph_vectors if model.startswith("pv") else train_embeddings
    a = train(corpus, vocab, cfg)
    b = train(corpus, vocab, cfg)
    if model == "skipgram":
        np.testing.assert_array_equal(a.input_vectors, b.input_vectors)
        np.testing.assert_array_equal(a.context_vectors, b.context_vectors)
    else:
        np.testing.assert_array_equal(a.doc_vectors, b.doc_vectors)


def test_seed_changes_training_result():
    corpus = chain_corpus(n_docs=10, doc_len=30)
    vocab = build_vocab(corpus)
    a = train_embeddings(corpus, vocab, small_cfg(epochs=1, seed=1))
    b = train_embeddings(corpus, vocab, small_cfg(epochs=1, seed=2))
    assert not np.array_equal(a.input_vectors, b.input_vectors)


def test_multi_worker_training_runs_and_is_finite():
    corpus = chain_corpus(n_docs=24, doc_len=30)
    vocab = build_vocab(corpus)
    emb = train_embeddings(corpus, vocab, small_cfg(epochs=2, workers=4))
    assert np.isfinite(emb.input_vectors).all()


def test_cluster_separation_after_training():
    # two five-word clusters with disjoint contexts: after training,
    # within-cluster cosine must beat cross-cluster cosine for >= 90% of pairs
    from itertools import combinations

    rng = np.random.default_rng(11)
    hot = ["hot", "warm", "boiling", "summer", "fire"]
    cold = ["cold", "chilly", "freezing", "winter", "ice"]
    docs = []
    for i in range(60):
        group = hot if i % 2 == 0 else cold
        docs.append([group[j] for j in rng.integers(0, 5, size=30)])
    corpus = mk_corpus(docs)
    vocab = build_vocab(corpus)
    emb = train_embeddings(corpus, vocab, small_cfg(window=3, seed=3))
    M = emb.input_vectors.astype(np.float64)
    M /= np.linalg.norm(M, axis=1, keepdims=True)
    tid = vocab.term_to_id
    ok = tot = 0
    for group, other in ((hot, cold), (cold, hot)):
        for a, b in combinations(group, 2):
            within = M[tid[a]] @ M[tid[b]]
            for c in other:
                for x in (a, b):
                    tot += 1
                    ok += within > M[tid[x]] @ M[tid[c]]
    assert ok / tot >= 0.90


def test_near_duplicate_documents_are_mutual_nearest_neighbors():
    rng = np.random.default_rng(21)
    words = [f"v{i}" for i in range(40)]
    docs = []
    for i in range(48):
        theme = i % 8
        idxs = theme * 5 + rng.integers(0, 5, size=40)
        docs.append([words[j] for j in idxs])
    # the pair mixes words of five different themes; no other document does
    dup = ["v0", "v7", "v14", "v21", "v28"] * 8
    dup2 = list(dup)
    dup2[3] = "v35"
    docs.append(dup)
    docs.append(dup2)
    corpus = mk_corpus(docs)
    vocab = build_vocab(corpus)
    pv = train_paragraph_vectors(
        corpus, vocab, small_cfg(model="pv-dbow", dim=32, window=5, epochs=40, seed=9))
    D = pv.doc_vectors.astype(np.float64)
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    S = D @ D.T
    np.fill_diagonal(S, -np.inf)
    assert S[48].argmax() == 49
    assert S[49].argmax() == 48


def test_training_input_validation():
    corpus = chain_corpus(n_docs=4, doc_len=10)
    vocab = build_vocab(corpus)
    with pytest.raises(ConfigError):
        train_embeddings(corpus, vocab, small_cfg(model="pv-dbow"))
    with pytest.raises(ConfigError):
        train_paragraph_vectors(corpus, vocab, small_cfg(model="cbow"))
    with pytest.raises(DataError):
        train_embeddings(Corpus([]), vocab, small_cfg())
    oov = mk_corpus([["zzz", "yyy"]])
    with pytest.raises(DataError):
        train_embeddings(oov, vocab, small_cfg())


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def trained_pv():
    corpus = chain_corpus(n_docs=20, doc_len=40)
    vocab = build_vocab(corpus)
    pv = train_paragraph_vectors(corpus, vocab,
                                 small_cfg(model="pv-dbow", dim=24, epochs=30))
    return corpus, pv


def test_self_inference_recovers_trained_vector(trained_pv):
    corpus, pv = trained_pv
    for docid in (0, 7, 19):
        vec = infer_paragraph_vector(pv, corpus[docid], inference_epochs=30, seed=123)
        assert _cosine(vec, pv.doc_vectors[docid]) >= 0.7


def test_inference_deterministic_and_frozen(trained_pv):
    corpus, pv = trained_pv
    ctx_before = pv.context_vectors.copy()
    a = infer_paragraph_vector(pv, corpus[3], inference_epochs=10, seed=5)
    b = infer_paragraph_vector(pv, corpus[3], inference_epochs=10, seed=5)
    c = infer_paragraph_vector(pv, corpus[3], inference_epochs=10, seed=6)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    # trained parameters must not move during inference
    np.testing.assert_array_equal(pv.context_vectors, ctx_before)


def test_inference_zero_epochs_returns_seeded_init(trained_pv):
    corpus, pv = trained_pv
    d = pv.doc_vectors.shape[1]
    vec = infer_paragraph_vector(pv, corpus[0], inference_epochs=0, seed=77)
    expect = np.random.default_rng(77).uniform(-0.5 / d, 0.5 / d, size=(1, d))
    np.testing.assert_allclose(vec, expect[0].astype(np.float32), rtol=1e-6)


def test_inference_all_oov_raises(trained_pv):
    _, pv = trained_pv
    doc = Document(id=0, label=None, tokens=("martian", "quux"))
    with pytest.raises(DataError, match="no in-vocabulary"):
        infer_paragraph_vector(pv, doc)


def test_inference_works_for_pv_dm():
    corpus = chain_corpus(n_docs=10, doc_len=30)
    vocab = build_vocab(corpus)
    pv = train_paragraph_vectors(corpus, vocab,
                                 small_cfg(model="pv-dm", dim=16, epochs=20))
    words_before = pv.word_vectors.copy()
    vec = infer_paragraph_vector(pv, corpus[2], inference_epochs=20, seed=1)
    assert vec.shape == (16,)
    assert np.isfinite(vec).all()
    np.testing.assert_array_equal(pv.word_vectors, words_before)


# ---------------------------------------------------------------------------
# nearest neighbors
# ---------------------------------------------------------------------------

def hand_embedding(rows, terms):
    rows = np.asarray(rows, dtype=np.float32)
    vocab = Vocabulary(term_to_id={t: i for i, t in enumerate(terms)},
                       df=np.ones(len(terms), dtype=np.int64),
                       num_docs=1, min_count=1)
    return EmbeddingMatrix(input_vectors=rows,
                           context_vectors=np.zeros_like(rows), vocab=vocab)


def test_nearest_neighbors_hand_case():
    emb = hand_embedding([[1, 0], [1, 0], [0, 1], [-1, 0], [0.9, 0.1]],
                         ["a", "dup", "orth", "anti", "close"])
    nn = nearest_neighbors(emb, "a", 4)
    assert nn[0][0] == "dup" and nn[0][1] == pytest.approx(1.0, abs=1e-9)
    assert nn[1][0] == "close"
    assert nn[-1] == ("anti", pytest.approx(-1.0, abs=1e-9))
    assert [t for t, _ in nn].count("a") == 0  # query excluded


def test_nearest_neighbors_edge_cases():
    emb = hand_embedding([[1, 0], [0, 1], [0, 0]], ["a", "b", "zero"])
    assert nearest_neighbors(emb, "a", 0) == []
    nn = nearest_neighbors(emb, "a", 2)
    assert nn[-1][0] == "zero" and nn[-1][1] == 0.0  # zero vector -> cosine 0
    with pytest.raises(KeyError):
        nearest_neighbors(emb, "martian", 1)
    with pytest.raises(ConfigError):
        nearest_neighbors(emb, "a", 3)


def test_nearest_neighbors_matches_bruteforce_scan():
    rng = np.random.default_rng(13)
    V, d = 100, 12
    rows = rng.normal(size=(V, d)).astype(np.float32)
    terms = [f"t{i:03d}" for i in range(V)]
    emb = hand_embedding(rows, terms)
    q = 37
    M = rows.astype(np.float64)
    sims = (M @ M[q]) / (np.linalg.norm(M, axis=1) * np.linalg.norm(M[q]))
    sims[q] = -np.inf
    order = np.lexsort((np.arange(V), -sims))[:10]
    expect = [(terms[i], sims[i]) for i in order]
    got = nearest_neighbors(emb, terms[q], 10)
    assert [t for t, _ in got] == [t for t, _ in expect]
    for (_, s_got), (_, s_exp) in zip(got, expect):
        assert s_got == pytest.approx(s_exp, abs=1e-9)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_embeddings_text_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    rows = rng.uniform(-2, 2, size=(5, 3)).astype(np.float32)
    emb = hand_embedding(rows, ["alpha", "beta", "γάμμα", "delta", "ε"])
    p = tmp_path / "vectors.txt"
    save_embeddings(emb, p)
    header = p.read_text(encoding="utf-8").splitlines()[0]
    assert header == "5 3"
    emb2 = load_embeddings(p)
    assert emb2.vocab.id_to_term == ["alpha", "beta", "γάμμα", "delta", "ε"]
    # %.6f serialization: equal to within half an ulp of the 6th decimal
    np.testing.assert_allclose(emb2.input_vectors, rows, atol=5.01e-7)


def test_load_embeddings_format_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("3 4\na 1 2 3 4\nb 1 2 3 4\n", encoding="utf-8")
    with pytest.raises(DataError, match="declares 3"):
        load_embeddings(p)
    p.write_text("2 3\na 1 2 3\nb 1 2\n", encoding="utf-8")
    with pytest.raises(DataError, match="expected 3"):
        load_embeddings(p)
    p.write_text("nonsense\n", encoding="utf-8")
    with pytest.raises(DataError, match="header"):
        load_embeddings(p)


def test_paragraph_vectors_roundtrip(tmp_path, trained_pv):
    corpus, pv = trained_pv
    p = tmp_path / "pv.npz"
    save_paragraph_vectors(pv, p)
    pv2 = load_paragraph_vectors(p)
    np.testing.assert_array_equal(pv2.doc_vectors, pv.doc_vectors)
    np.testing.assert_array_equal(pv2.context_vectors, pv.context_vectors)
    assert pv2.config == pv.config
    assert pv2.vocab.term_to_id == pv.vocab.term_to_id
    # inference through the reloaded model is bit-identical
    a = infer_paragraph_vector(pv, corpus[1], inference_epochs=5, seed=3)
    b = infer_paragraph_vector(pv2, corpus[1], inference_epochs=5, seed=3)
    np.testing.assert_array_equal(a, b)
