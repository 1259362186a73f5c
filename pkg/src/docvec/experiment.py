"""Experiment configuration and the end-to-end pipeline.

load -> vocab -> embeddings (+ paragraph vectors) -> compose -> (select)
-> train -> predict -> (ensemble) -> report. All randomness is derived from
the config seed; with threads=1 the whole run is bit-deterministic and the
written report is byte-identical across reruns (timings aside).
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classify, features
from . import compose as compose_mod
from . import embeddings as emb_mod
from . import ensemble as ens_mod
from . import rnnlm as rnn_mod
from . import stats
from .corpus import Corpus, TokenizerConfig, load_corpus, split
from .embeddings import TrainConfig
from .errors import ConfigError, DataError, DocvecError


@dataclass(frozen=True)
class DataConfig:
    path: str = ""
    format: str = "tsv"             # tsv | dir
    test_path: str = ""             # empty: stratified split of `path`
    train_fraction: float = 0.8
    use_unlabeled: bool = True      # unlabeled docs join embedding training

    def __post_init__(self) -> None:
        if self.format not in ("tsv", "dir"):
            raise ConfigError(f"unknown data format {self.format!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")


@dataclass(frozen=True)
class VocabConfig:
    min_count: int = 1

    def __post_init__(self) -> None:
        if self.min_count < 1:
            raise ConfigError("min_count must be >= 1")


@dataclass(frozen=True)
class SchemeConfig:
    variant: str = "graded-idf"
    delta: float = 0.0
    average: bool = True
    stopword_df_ratio: float = 0.5

    def __post_init__(self) -> None:
        self.to_scheme()

    def to_scheme(self) -> compose_mod.CompositionScheme:
        policy = None
        if self.variant == "stopword-step":
            policy = stats.StopwordPolicy(mode="df-ratio",
                                          df_ratio_threshold=self.stopword_df_ratio)
        return compose_mod.CompositionScheme(variant=self.variant, delta=self.delta,
                                             stopword_policy=policy,
                                             average=self.average)


@dataclass(frozen=True)
class PartsConfig:
    wavg: bool = True
    pv: bool = True
    tfidf: bool = True
    l2_parts: bool = True
    tfidf_l2norm: bool = False      # unit-norm tf-idf rows before the SVM

    def __post_init__(self) -> None:
        if not (self.wavg or self.pv or self.tfidf):
            raise ConfigError("at least one composite part must be enabled")


@dataclass(frozen=True)
class SelectionConfig:
    method: str = "none"            # none | anova-f | pca
    k: int = features.DEFAULT_ANOVA_K
    n: int = features.DEFAULT_PCA_N

    def __post_init__(self) -> None:
        if self.method not in ("none", "anova-f", "pca"):
            raise ConfigError(f"unknown selection method {self.method!r}")


@dataclass(frozen=True)
class SvmConfig:
    lam: float = classify.DEFAULT_LAMBDA
    epochs: int = classify.DEFAULT_EPOCHS
    seed: int = 1


@dataclass(frozen=True)
class RnnConfig:
    enabled: bool = False
    hidden: int = rnn_mod.DEFAULT_HIDDEN
    bptt: int = rnn_mod.DEFAULT_BPTT
    epochs: int = 10
    lr: float = 0.1
    lm_vocab: int = rnn_mod.DEFAULT_LM_VOCAB
    val_fraction: float = 0.1
    seed: int = 1


@dataclass(frozen=True)
class VoteConfig:
    alpha: float = 0.5
    mode: str = "soft"
    tie_break: str = "svm"

    def to_ensemble(self) -> ens_mod.EnsembleConfig:
        return ens_mod.EnsembleConfig(alpha=self.alpha, mode=self.mode,
                                      tie_break=self.tie_break)


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    vocab: VocabConfig = field(default_factory=VocabConfig)
    embedding: TrainConfig = field(default_factory=TrainConfig)
    paragraph: TrainConfig = field(default_factory=TrainConfig.paragraph_defaults)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    parts: PartsConfig = field(default_factory=PartsConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    rnn: RnnConfig = field(default_factory=RnnConfig)
    ensemble: VoteConfig = field(default_factory=VoteConfig)
    seed: int = 1
    threads: int = 1

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.parts.pv and self.paragraph.model not in ("pv-dbow", "pv-dm"):
            raise ConfigError("paragraph.model must be pv-dbow or pv-dm")
        if self.embedding.model not in ("skipgram", "cbow"):
            raise ConfigError("embedding.model must be skipgram or cbow")


SECTIONS: dict[str, type] = {
    "data": DataConfig,
    "tokenizer": TokenizerConfig,
    "vocab": VocabConfig,
    "embedding": TrainConfig,
    "paragraph": TrainConfig,
    "scheme": SchemeConfig,
    "parts": PartsConfig,
    "selection": SelectionConfig,
    "svm": SvmConfig,
    "rnn": RnnConfig,
    "ensemble": VoteConfig,
}

_SCALARS = ("seed", "threads")


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build a validated ExperimentConfig from parsed JSON. Seeds and worker
    counts inside sections default to the global `seed`/`threads`."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - set(SECTIONS) - set(_SCALARS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    seed = raw.get("seed", 1)
    threads = raw.get("threads", 1)
    kwargs: dict = {"seed": seed, "threads": threads}
    for name, cls in SECTIONS.items():
        section = dict(raw.get(name, {}))
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        fields = {f.name for f in dataclasses.fields(cls)}
        bad = set(section) - fields
        if bad:
            raise ConfigError(f"unknown keys in section {name!r}: {sorted(bad)}")
        if "seed" in fields:
            section.setdefault("seed", seed)
        if "workers" in fields:
            section.setdefault("workers", threads)
        if name == "paragraph":
            section.setdefault("model", "pv-dbow")
            section.setdefault("window", 10)
            section.setdefault("epochs", 20)
        try:
            kwargs[name] = cls(**section)
        except TypeError as exc:
            raise ConfigError(f"section {name!r}: {exc}") from exc
    return ExperimentConfig(**kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def metrics_from_predictions(y_true: list, y_pred: list) -> dict:
    """Accuracy, per-class precision/recall/support, confusion counts."""
    if len(y_true) != len(y_pred):
        raise DataError(f"{len(y_true)} truths vs {len(y_pred)} predictions")
    if not y_true:
        raise DataError("nothing to score")
    labels = sorted({*y_true, *y_pred})
    confusion = {t: {p: 0 for p in labels} for t in labels}
    for t, p in zip(y_true, y_pred):
        confusion[t][p] += 1
    correct = sum(confusion[l][l] for l in labels)
    per_class = {}
    for lab in labels:
        tp = confusion[lab][lab]
        support = sum(confusion[lab].values())
        predicted = sum(confusion[t][lab] for t in labels)
        per_class[lab] = {
            "precision": tp / predicted if predicted else 0.0,
            "recall": tp / support if support else 0.0,
            "support": support,
        }
    return {"accuracy": correct / len(y_true), "per_class": per_class,
            "confusion": confusion}


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except DocvecError as exc:
        raise type(exc)(f"stage {name}: {exc}") from exc
    finally:
        timings[name] = round(time.perf_counter() - start, 6)


def _split_unlabeled(corpus: Corpus) -> tuple[list, list]:
    labeled = [d for d in corpus if d.label is not None]
    unlabeled = [d for d in corpus if d.label is None]
    return labeled, unlabeled


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, out_dir, shared: dict | None = None) -> dict:
    """Execute the pipeline, write artifacts + report.json under out_dir,
    return the report dict.

    `shared` is an optional cross-run cache (used by compare_models) mapping
    config-derived keys to trained embeddings / paragraph vectors / LMs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shared = shared if shared is not None else {}
    timings: dict[str, float] = {}
    report: dict = {"config": config_to_dict(cfg)}

    with _stage("load", timings):
        if not cfg.data.path:
            raise ConfigError("data.path is required")
        corpus_all = load_corpus(cfg.data.path, fmt=cfg.data.format,
                                 tokenizer=cfg.tokenizer)
        labeled, unlabeled = _split_unlabeled(corpus_all)
        if not cfg.data.use_unlabeled:
            unlabeled = []
        if cfg.data.test_path:
            train_corpus = Corpus.renumbered(labeled)
            test_labeled, _ = _split_unlabeled(
                load_corpus(cfg.data.test_path, fmt=cfg.data.format,
                            tokenizer=cfg.tokenizer))
            test_corpus = Corpus.renumbered(test_labeled)
        else:
            train_corpus, test_corpus = split(Corpus.renumbered(labeled),
                                              cfg.data.train_fraction, cfg.seed)
        if len({d.label for d in train_corpus}) < 2:
            raise DataError("training split needs >= 2 classes")
        # embedding corpus: labeled training docs first, then unlabeled
        emb_corpus = Corpus.renumbered(list(train_corpus) + unlabeled)
    report["train_docs"] = len(train_corpus)
    report["test_docs"] = len(test_corpus)
    report["unlabeled_docs"] = len(emb_corpus) - len(train_corpus)

    with _stage("vocab", timings):
        vocab = stats.build_vocab(emb_corpus, min_count=cfg.vocab.min_count)
        stats.save_vocab(vocab, out / "vocab.tsv")
    report["vocab_size"] = len(vocab)

    emb = None
    if cfg.parts.wavg:
        with _stage("embeddings", timings):
            key = ("emb", json.dumps(dataclasses.asdict(cfg.embedding), sort_keys=True))
            emb = shared.get(key)
            if emb is None:
                emb = emb_mod.train_embeddings(emb_corpus, vocab, cfg.embedding)
                shared[key] = emb
            emb_mod.save_embeddings(emb, out / "embeddings.txt")

    pv = None
    pv_test = None
    if cfg.parts.pv:
        with _stage("paragraph-vectors", timings):
            key = ("pv", json.dumps(dataclasses.asdict(cfg.paragraph), sort_keys=True))
            cached = shared.get(key)
            if cached is None:
                pv = emb_mod.train_paragraph_vectors(emb_corpus, vocab, cfg.paragraph)
                with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                    pv_test = list(pool.map(
                        lambda d: emb_mod.infer_paragraph_vector(pv, d, seed=cfg.seed),
                        test_corpus))
                shared[key] = (pv, pv_test)
            else:
                pv, pv_test = cached
            emb_mod.save_paragraph_vectors(pv, out / "paragraph_vectors.npz")

    with _stage("vectorize", timings):
        scheme = cfg.scheme.to_scheme()
        zero_docs = 0

        def composite_rows(corp: Corpus, pv_rows) -> list[stats.SparseVector]:
            nonlocal zero_docs
            rows = []
            vectors = []
            for i, doc in enumerate(corp):
                weighted = None
                if cfg.parts.wavg:
                    weighted = compose_mod.compose(doc, emb, vocab, scheme).values
                    if not weighted.any():
                        zero_docs += 1
                pvec = pv_rows[i] if pv_rows is not None else None
                tfv = stats.tfidf_vectorize(vocab, doc) if cfg.parts.tfidf else None
                if tfv is not None and cfg.parts.tfidf_l2norm:
                    tfv = stats.l2_normalize(tfv)
                cv = compose_mod.composite_vector(weighted=weighted, pv=pvec,
                                                  tfidf=tfv,
                                                  l2_parts=cfg.parts.l2_parts)
                vectors.append(cv)
                rows.append(compose_mod.composite_to_sparse(cv))
            compose_mod.check_layout(vectors)
            return rows

        train_pv_rows = pv.doc_vectors[:len(train_corpus)] if pv is not None else None
        rows_train = composite_rows(train_corpus, train_pv_rows)
        rows_test = composite_rows(test_corpus, pv_test)
        X_train = stats.stack_sparse(rows_train)
        X_test = stats.stack_sparse(rows_test)
        y_train = [d.label for d in train_corpus]
        y_test = [d.label for d in test_corpus]
        stats.dump_libsvm(rows_train, y_train, out / "train_vectors.libsvm")
        stats.dump_libsvm(rows_test, y_test, out / "test_vectors.libsvm")
    report["zero_vector_documents"] = zero_docs
    report["feature_dim"] = int(X_train.shape[1])

    if cfg.selection.method != "none":
        with _stage("select", timings):
            if cfg.selection.method == "anova-f":
                scores = features.anova_f_scores(X_train, np.array(y_train))
                model = features.select_top_k(scores, min(cfg.selection.k,
                                                          X_train.shape[1]))
            else:
                model = features.pca_fit(X_train, cfg.selection.n)
            X_train = features.apply(model, X_train)
            X_test = features.apply(model, X_test)
        report["selected_dim"] = int(X_train.shape[1])

    with _stage("train-svm", timings):
        svm_model = classify.svm_train(X_train, np.array(y_train), lam=cfg.svm.lam,
                                       epochs=cfg.svm.epochs, seed=cfg.svm.seed)
        classify.save_svm_model(svm_model, out / "svm_model.txt")
    positive = svm_model.classes[1]
    report["positive_label"] = positive

    with _stage("predict", timings):
        svm_pred = list(classify.svm_predict(svm_model, X_test))
        svm_probs = np.asarray(classify.svm_proba(svm_model, X_test))
        test_ids = [d.id for d in test_corpus]
        ens_mod.save_probs(test_ids, svm_probs, out / "svm_probs.tsv")
    svm_metrics = metrics_from_predictions(y_test, svm_pred)
    report["svm_accuracy"] = svm_metrics["accuracy"]

    rnn_probs = None
    if cfg.rnn.enabled:
        with _stage("train-rnnlm", timings):
            key = ("rnn", json.dumps(dataclasses.asdict(cfg.rnn), sort_keys=True))
            rnn_model = shared.get(key)
            if rnn_model is None:
                rnn_model = rnn_mod.train_class_lms(
                    train_corpus, max_terms=cfg.rnn.lm_vocab, h=cfg.rnn.hidden,
                    bptt=cfg.rnn.bptt, epochs=cfg.rnn.epochs, lr=cfg.rnn.lr,
                    seed=cfg.rnn.seed, val_fraction=cfg.rnn.val_fraction)
                shared[key] = rnn_model
            rnn_mod.save_rnnlm(rnn_model, out / "rnnlm.npz")
        with _stage("predict-rnnlm", timings):
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                posteriors = list(pool.map(
                    lambda d: rnn_mod.rnnlm_classify(rnn_model, d), test_corpus))
            rnn_probs = np.array([p[positive] for p in posteriors])
            ens_mod.save_probs(test_ids, rnn_probs, out / "rnn_probs.tsv")
        rnn_pred = [max(p, key=lambda c: (p[c], c)) for p in posteriors]
        report["rnn_accuracy"] = metrics_from_predictions(y_test, rnn_pred)["accuracy"]

    if rnn_probs is not None:
        with _stage("ensemble", timings):
            vote_cfg = cfg.ensemble.to_ensemble()
            negative = svm_model.classes[0]
            acc, decisions = ens_mod.ensemble_eval(svm_probs, rnn_probs, y_test,
                                                   vote_cfg, positive_label=positive)
            final_pred = [positive if pos else negative for pos, _ in decisions]
            ens_mod.save_probs(test_ids, [p for _, p in decisions],
                               out / "ensemble_probs.tsv")
        report["ensemble_accuracy"] = acc
        final_metrics = metrics_from_predictions(y_test, final_pred)
    else:
        final_metrics = svm_metrics

    report["accuracy"] = final_metrics["accuracy"]
    report["per_class"] = final_metrics["per_class"]
    report["confusion"] = final_metrics["confusion"]
    report["timings"] = timings

    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


# ---------------------------------------------------------------------------
# model comparison sweeps
# ---------------------------------------------------------------------------

COMPARE_AXES: dict[str, tuple[str, str, list]] = {
    "skipgram-vs-cbow": ("embedding", "model", ["skipgram", "cbow"]),
    "scheme-sweep": ("scheme", "variant", ["multiplicative", "mean", "graded-idf"]),
    "delta-sweep": ("scheme", "delta", [2.0, 2.5, 2.8, 3.0, 4.0, 5.0]),
    "alpha-sweep": ("ensemble", "alpha", [0.0, 0.25, 0.5, 0.75, 1.0]),
}


def compare_models(cfg: ExperimentConfig, axis: str, out_dir,
                   values: list | None = None) -> list[tuple]:
    """Re-run the pipeline varying one config field; returns and writes a
    (value, accuracy) table. Heavy intermediates (embeddings, paragraph
    vectors, language models) are reused across runs when their configs
    coincide."""
    if axis not in COMPARE_AXES:
        raise ConfigError(f"unknown axis {axis!r}; expected one of "
                          f"{sorted(COMPARE_AXES)}")
    section, fieldname, default_values = COMPARE_AXES[axis]
    values = default_values if values is None else values
    if axis == "alpha-sweep" and not cfg.rnn.enabled:
        raise ConfigError("alpha-sweep requires rnn.enabled")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shared: dict = {}
    rows: list[tuple] = []
    for value in values:
        sub = dataclasses.replace(cfg, **{
            section: dataclasses.replace(getattr(cfg, section),
                                         **{fieldname: value})})
        run_dir = out / f"{axis}_{value}"
        report = run_experiment(sub, run_dir, shared=shared)
        rows.append((value, report["accuracy"]))
    with open(out / "compare.tsv", "w", encoding="utf-8") as fh:
        fh.write(f"{fieldname}\taccuracy\n")
        for value, acc in rows:
            fh.write(f"{value}\t{acc:.6f}\n")
    return rows
