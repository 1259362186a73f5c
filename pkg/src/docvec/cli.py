"""Command-line front end.

Each subcommand is a thin wrapper over one pipeline stage so long runs can
be resumed from on-disk artifacts; `experiment` and `compare` drive the whole
pipeline from a JSON config, with every config field overridable by a
`--section-field` flag. Exit codes: 0 ok, 2 config error, 3 data error,
4 numeric divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import get_type_hints

import numpy as np

from . import __version__, classify, compose, ensemble, experiment, features
from . import embeddings as emb_mod
from . import rnnlm as rnn_mod
from . import stats
from .corpus import Corpus, TokenizerConfig, load_corpus, save_corpus
from .errors import ConfigError, DataError, DivergenceError


def _add_tokenizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--strip-punctuation", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--unicode-mode", default="unicode-alphanumeric",
                   choices=("unicode-alphanumeric", "ascii-letters"))


def _tokenizer(args) -> TokenizerConfig:
    return TokenizerConfig(lowercase=args.lowercase,
                           strip_punctuation=args.strip_punctuation,
                           unicode_mode=args.unicode_mode)


def _write_meta(path: Path, total_dim: int, layout) -> None:
    meta = {"total_dim": total_dim, "layout": layout}
    with open(str(path) + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_dim(path: Path) -> int | None:
    meta = Path(str(path) + ".meta.json")
    if meta.exists():
        with open(meta, encoding="utf-8") as fh:
            return int(json.load(fh)["total_dim"])
    return None


# ---------------------------------------------------------------------------
# stage subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    corpus = load_corpus(args.input, fmt=args.format, tokenizer=_tokenizer(args))
    save_corpus(corpus, args.out)
    labels = sorted({d.label for d in corpus if d.label is not None})
    n_unlabeled = sum(1 for d in corpus if d.label is None)
    print(f"wrote {len(corpus)} documents to {args.out} "
          f"(labels: {labels}, unlabeled: {n_unlabeled})")
    return 0


def cmd_vocab(args) -> int:
    corpus = load_corpus(args.corpus)
    vocab = stats.build_vocab(corpus, min_count=args.min_count)
    stats.save_vocab(vocab, args.out)
    print(f"{len(vocab)} terms over {vocab.num_docs} documents -> {args.out}")
    return 0


def cmd_train_emb(args) -> int:
    corpus = load_corpus(args.corpus)
    vocab = stats.load_vocab(args.vocab)
    cfg = emb_mod.TrainConfig(model=args.model, dim=args.dim, window=args.window,
                              negatives=args.negatives, epochs=args.epochs,
                              lr0=args.lr0, min_lr=args.min_lr,
                              subsample_t=args.subsample_t, seed=args.seed,
                              workers=args.workers)
    emb, history = emb_mod.train_embeddings(corpus, vocab, cfg, return_history=True)
    emb_mod.save_embeddings(emb, args.out)
    losses = " ".join(f"{x:.4f}" for x in history)
    print(f"trained {cfg.model} d={cfg.dim} on {len(corpus)} docs; "
          f"per-epoch loss: {losses}; -> {args.out}")
    return 0


def cmd_train_pv(args) -> int:
    corpus = load_corpus(args.corpus)
    vocab = stats.load_vocab(args.vocab)
    cfg = emb_mod.TrainConfig(model=args.model, dim=args.dim, window=args.window,
                              negatives=args.negatives, epochs=args.epochs,
                              lr0=args.lr0, min_lr=args.min_lr,
                              subsample_t=args.subsample_t, seed=args.seed,
                              workers=args.workers)
    pv = emb_mod.train_paragraph_vectors(corpus, vocab, cfg)
    emb_mod.save_paragraph_vectors(pv, args.out)
    print(f"trained {cfg.model} vectors for {len(corpus)} docs -> {args.out}")
    return 0


def cmd_vectorize(args) -> int:
    corpus = load_corpus(args.corpus)
    vocab = stats.load_vocab(args.vocab)
    emb = emb_mod.load_embeddings(args.emb) if args.emb else None
    policy = None
    if args.variant == "stopword-step":
        policy = stats.StopwordPolicy(mode="df-ratio",
                                      df_ratio_threshold=args.stopword_df_ratio)
    scheme = compose.CompositionScheme(variant=args.variant, delta=args.delta,
                                       stopword_policy=policy, average=args.average)
    pv_rows = None
    if args.pv:
        pv = emb_mod.load_paragraph_vectors(args.pv)
        if args.pv_mode == "rows":
            if pv.doc_vectors.shape[0] != len(corpus):
                raise DataError(
                    f"{pv.doc_vectors.shape[0]} trained vectors but {len(corpus)} "
                    "documents; use --pv-mode infer for unseen documents")
            pv_rows = pv.doc_vectors
        else:
            pv_rows = np.stack([
                emb_mod.infer_paragraph_vector(pv, d, args.inference_epochs,
                                               seed=args.seed)
                for d in corpus])
    rows, labels, vectors = [], [], []
    zero_docs = 0
    for i, doc in enumerate(corpus):
        weighted = None
        if emb is not None:
            weighted = compose.compose(doc, emb, vocab, scheme).values
            if not weighted.any():
                zero_docs += 1
        tfv = stats.tfidf_vectorize(vocab, doc) if args.tfidf else None
        if tfv is not None and args.l2norm:
            tfv = stats.l2_normalize(tfv)
        cv = compose.composite_vector(
            weighted=weighted, pv=pv_rows[i] if pv_rows is not None else None,
            tfidf=tfv, l2_parts=args.l2_parts)
        vectors.append(cv)
        rows.append(compose.composite_to_sparse(cv))
        labels.append(doc.label)
    layout = compose.check_layout(vectors)
    stats.dump_libsvm(rows, labels, args.out)
    _write_meta(Path(args.out), vectors[0].total_dim,
                [[name, dim] for name, dim in layout[0]] + [["tfidf", layout[1]]])
    print(f"{len(rows)} vectors of dim {vectors[0].total_dim} "
          f"({zero_docs} zero) -> {args.out}")
    return 0


def cmd_select(args) -> int:
    if args.test and not args.out_test:
        raise ConfigError("--test requires --out-test")
    X_train, y_train = stats.load_libsvm(args.train, dim=_read_dim(Path(args.train)))
    if any(lab is None for lab in y_train):
        raise DataError("selection requires fully labeled training vectors")
    if args.method == "anova-f":
        scores = features.anova_f_scores(X_train, np.array(y_train))
        model = features.select_top_k(scores, args.k)
    else:
        model = features.pca_fit(X_train, args.n)
    X_out = features.apply(model, X_train)
    _dump_matrix(X_out, y_train, args.out_train)
    print(f"{args.method}: {model.input_dim} -> {X_out.shape[1]} -> {args.out_train}")
    if args.test:
        X_test, y_test = stats.load_libsvm(args.test, dim=model.input_dim)
        X_test_out = features.apply(model, X_test)
        _dump_matrix(X_test_out, y_test, args.out_test)
        print(f"applied to {args.test} -> {args.out_test}")
    return 0


def _dump_matrix(X, labels, path) -> None:
    import scipy.sparse as sp

    if sp.issparse(X):
        X = X.toarray()
    rows = []
    for i in range(X.shape[0]):
        nz = np.nonzero(X[i])[0]
        rows.append(stats.SparseVector(indices=nz.astype(np.int64),
                                       values=X[i][nz].astype(np.float64),
                                       dim=X.shape[1]))
    stats.dump_libsvm(rows, labels, path)
    _write_meta(Path(path), X.shape[1], [["selected", X.shape[1]]])


def cmd_train_svm(args) -> int:
    X, y = stats.load_libsvm(args.train, dim=_read_dim(Path(args.train)))
    if any(lab is None for lab in y):
        raise DataError("SVM training requires fully labeled vectors")
    model = classify.svm_train(X, np.array(y), lam=args.lam, epochs=args.epochs,
                               seed=args.seed)
    classify.save_svm_model(model, args.out)
    acc = float(np.mean(classify.svm_predict(model, X) == np.array(y)))
    print(f"classes {model.classes} (positive: {model.classes[1]}); "
          f"training accuracy {acc:.4f} -> {args.out}")
    return 0


def cmd_train_rnnlm(args) -> int:
    corpus = load_corpus(args.corpus)
    model = rnn_mod.train_class_lms(corpus, max_terms=args.lm_vocab, h=args.hidden,
                                    bptt=args.bptt, epochs=args.epochs, lr=args.lr,
                                    seed=args.seed, val_fraction=args.val_fraction)
    rnn_mod.save_rnnlm(model, args.out)
    print(f"trained LMs for classes {model.labels} -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    if bool(args.model) == bool(args.rnnlm):
        raise ConfigError("pass exactly one of --model (SVM) or --rnnlm")
    if args.model:
        if not args.vectors:
            raise ConfigError("--model requires --vectors")
        model = classify.load_svm_model(args.model)
        X, _ = stats.load_libsvm(args.vectors, dim=model.weights.shape[0])
        probs = classify.svm_proba(model, X)
        ids = list(range(X.shape[0]))
    else:
        if not args.corpus:
            raise ConfigError("--rnnlm requires --corpus")
        model = rnn_mod.load_rnnlm(args.rnnlm)
        positive = args.positive_label or model.labels[-1]
        if positive not in model.labels:
            raise ConfigError(f"positive label {positive!r} not in {model.labels}")
        corpus = load_corpus(args.corpus)
        probs = [rnn_mod.rnnlm_classify(model, d)[positive] for d in corpus]
        probs = np.clip(probs, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        ids = [d.id for d in corpus]
    ensemble.save_probs(ids, probs, args.out)
    print(f"{len(ids)} probabilities -> {args.out}")
    return 0


def cmd_ensemble(args) -> int:
    cfg = ensemble.EnsembleConfig(alpha=args.alpha, mode=args.mode,
                                  tie_break=args.tie_break)
    svm_probs = ensemble.load_probs(args.svm_probs)
    rnn_probs = ensemble.load_probs(args.rnn_probs)
    if set(svm_probs) != set(rnn_probs):
        raise DataError("svm and rnn probability files cover different doc ids")
    ids = sorted(svm_probs)
    combined = [ensemble.ensemble_vote(svm_probs[i], rnn_probs[i], cfg)[1]
                for i in ids]
    ensemble.save_probs(ids, combined, args.out)
    print(f"combined {len(ids)} probabilities (alpha={cfg.alpha}) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    corpus = load_corpus(args.corpus)
    labels = sorted({d.label for d in corpus if d.label is not None})
    if len(labels) != 2:
        raise DataError(f"evaluation corpus must have exactly 2 labels, got {labels}")
    positive = args.positive_label or labels[-1]
    if positive not in labels:
        raise ConfigError(f"positive label {positive!r} not in {labels}")
    negative = labels[0] if positive == labels[1] else labels[1]
    probs = ensemble.align_probs(ensemble.load_probs(args.probs),
                                 [d.id for d in corpus])
    pred = [positive if p >= 0.5 else negative for p in probs]
    truth = [d.label for d in corpus]
    report = experiment.metrics_from_predictions(truth, pred)
    report["positive_label"] = positive
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# experiment / compare with generated config flags
# ---------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    for section, cls in experiment.SECTIONS.items():
        hints = get_type_hints(cls)
        for f in dataclasses.fields(cls):
            t = hints[f.name]
            flag = f"--{section}-{f.name.replace('_', '-')}"
            dest = f"cfg__{section}__{f.name}"
            if t is bool:
                p.add_argument(flag, dest=dest,
                               action=argparse.BooleanOptionalAction, default=None)
            elif t in (int, float, str):
                p.add_argument(flag, dest=dest, type=t, default=None)


def _config_from_args(args) -> experiment.ExperimentConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
    else:
        raw = {}
    for dest, value in vars(args).items():
        if value is None or not dest.startswith("cfg__"):
            continue
        _, section, fname = dest.split("__", 2)
        raw.setdefault(section, {})[fname] = value
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.threads is not None:
        raw["threads"] = args.threads
    return experiment.config_from_dict(raw)


def cmd_experiment(args) -> int:
    cfg = _config_from_args(args)
    report = experiment.run_experiment(cfg, args.out)
    parts = [f"accuracy {report['accuracy']:.4f}",
             f"svm {report['svm_accuracy']:.4f}"]
    if "rnn_accuracy" in report:
        parts.append(f"rnn {report['rnn_accuracy']:.4f}")
    if "ensemble_accuracy" in report:
        parts.append(f"ensemble {report['ensemble_accuracy']:.4f}")
    print("; ".join(parts) + f" -> {Path(args.out) / 'report.json'}")
    return 0


def cmd_compare(args) -> int:
    cfg = _config_from_args(args)
    values = None
    if args.values:
        _, fieldname, defaults = experiment.COMPARE_AXES[args.axis]
        cast = type(defaults[0])
        values = [cast(v) for v in args.values.split(",")]
    rows = experiment.compare_models(cfg, args.axis, args.out, values=values)
    for value, acc in rows:
        print(f"{value}\t{acc:.6f}")
    print(f"table -> {Path(args.out) / 'compare.tsv'}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docvec",
        description="Composite document vectors: embeddings, composition, "
                    "classification, ensembling.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a raw dataset into tsv")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="tsv", choices=("tsv", "dir"))
    p.add_argument("--out", required=True)
    _add_tokenizer_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("vocab", help="build the term/df table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vocab)

    for name, models, default_model, fn in (
            ("train-emb", ("skipgram", "cbow"), "skipgram", cmd_train_emb),
            ("train-pv", ("pv-dbow", "pv-dm"), "pv-dbow", cmd_train_pv)):
        p = sub.add_parser(name, help=f"train {default_model}-style vectors")
        p.add_argument("--corpus", required=True)
        p.add_argument("--vocab", required=True)
        p.add_argument("--model", default=default_model, choices=models)
        p.add_argument("--dim", type=int, default=100)
        p.add_argument("--window", type=int, default=5 if name == "train-emb" else 10)
        p.add_argument("--negatives", type=int, default=5)
        p.add_argument("--epochs", type=int, default=5 if name == "train-emb" else 20)
        p.add_argument("--lr0", type=float, default=0.025)
        p.add_argument("--min-lr", type=float, default=1e-4)
        p.add_argument("--subsample-t", type=float, default=1e-4)
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("vectorize", help="compose documents into feature vectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--emb", help="word embeddings (enables the weighted part)")
    p.add_argument("--pv", help="paragraph vectors .npz (enables the pv part)")
    p.add_argument("--pv-mode", default="rows", choices=("rows", "infer"))
    p.add_argument("--inference-epochs", type=int, default=20)
    p.add_argument("--tfidf", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--l2norm", action=argparse.BooleanOptionalAction, default=False,
                   help="unit-norm each tf-idf vector")
    p.add_argument("--variant", default="graded-idf", choices=compose.VARIANTS)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--average", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--stopword-df-ratio", type=float, default=0.5)
    p.add_argument("--l2-parts", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("select", help="ANOVA-F / PCA dimensionality reduction")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--method", required=True, choices=("anova-f", "pca"))
    p.add_argument("--k", type=int, default=features.DEFAULT_ANOVA_K)
    p.add_argument("--n", type=int, default=features.DEFAULT_PCA_N)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train-svm", help="train the linear classifier")
    p.add_argument("--train", required=True)
    p.add_argument("--lam", type=float, default=classify.DEFAULT_LAMBDA)
    p.add_argument("--epochs", type=int, default=classify.DEFAULT_EPOCHS)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("train-rnnlm", help="train per-class language models")
    p.add_argument("--corpus", required=True)
    p.add_argument("--hidden", type=int, default=rnn_mod.DEFAULT_HIDDEN)
    p.add_argument("--bptt", type=int, default=rnn_mod.DEFAULT_BPTT)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--lm-vocab", type=int, default=rnn_mod.DEFAULT_LM_VOCAB)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_rnnlm)

    p = sub.add_parser("predict", help="probabilities from a trained model")
    p.add_argument("--model", help="SVM model file")
    p.add_argument("--vectors", help="libsvm vectors (SVM path)")
    p.add_argument("--rnnlm", help="RNNLM .npz")
    p.add_argument("--corpus", help="corpus tsv (RNNLM path)")
    p.add_argument("--positive-label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ensemble", help="combine two probability files")
    p.add_argument("--svm-probs", required=True)
    p.add_argument("--rnn-probs", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--mode", default="soft", choices=("soft", "hard"))
    p.add_argument("--tie-break", default="svm", choices=("svm", "positive"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("eval", help="score a probability file against labels")
    p.add_argument("--probs", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--positive-label")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run the full pipeline from a config")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", help="sweep one config axis")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, choices=sorted(experiment.COMPARE_AXES))
    p.add_argument("--values", help="comma-separated override of the sweep values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
