"""Voting between the SVM and the RNNLM probability outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class EnsembleConfig:
    alpha: float = 0.5          # weight on the SVM probability
    mode: str = "soft"          # "soft" | "hard"
    tie_break: str = "svm"      # "svm" | "positive"

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must be in [0, 1]")
        if self.mode not in ("soft", "hard"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.tie_break not in ("svm", "positive"):
            raise ConfigError(f"unknown tie_break {self.tie_break!r}")


# Tightest band producers may clamp saturated probabilities into such that
# values stay strictly inside (0, 1) after a round-trip through the `%.9g`
# probability-file format below.
PROB_EPS = 1e-9


def _check_prob(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ConfigError(f"{name}={p} outside (0, 1)")
    return p


def ensemble_vote(p_svm: float, p_rnn: float, cfg: EnsembleConfig) -> tuple[bool, float]:
    """Combine two probabilities of the positive class.

    Soft: p = alpha*p_svm + (1-alpha)*p_rnn, positive iff p > 0.5 (p == 0.5
    resolved by tie_break). Hard: majority of the two thresholded votes,
    disagreement resolved by tie_break. Returns (is_positive, combined p).
    """
    p_svm = _check_prob(p_svm, "p_svm")
    p_rnn = _check_prob(p_rnn, "p_rnn")
    combined = cfg.alpha * p_svm + (1.0 - cfg.alpha) * p_rnn
    if cfg.mode == "soft":
        if combined > 0.5:
            return True, combined
        if combined < 0.5:
            return False, combined
        tie_positive = (p_svm >= 0.5) if cfg.tie_break == "svm" else True
        return tie_positive, combined
    vote_svm = p_svm >= 0.5
    vote_rnn = p_rnn >= 0.5
    if vote_svm == vote_rnn:
        return vote_svm, combined
    return (vote_svm if cfg.tie_break == "svm" else True), combined


def ensemble_eval(svm_probs, rnn_probs, labels, cfg: EnsembleConfig,
                  positive_label=None):
    """Vote per document and score against labels.

    labels are truthy/falsy per document unless positive_label is given, in
    which case they are compared against it. Returns (accuracy, decisions)
    where decisions is a list of (is_positive, combined_probability).
    """
    svm_probs = list(svm_probs)
    rnn_probs = list(rnn_probs)
    labels = list(labels)
    if not len(svm_probs) == len(rnn_probs) == len(labels):
        raise DataError(
            f"misaligned inputs: {len(svm_probs)} svm, {len(rnn_probs)} rnn, "
            f"{len(labels)} labels")
    if not labels:
        raise DataError("nothing to evaluate")
    decisions = [ensemble_vote(ps, pr, cfg) for ps, pr in zip(svm_probs, rnn_probs)]
    if positive_label is not None:
        truth = [lab == positive_label for lab in labels]
    else:
        truth = [bool(lab) for lab in labels]
    correct = sum(1 for (pos, _), t in zip(decisions, truth) if pos == t)
    return correct / len(labels), decisions


def save_probs(doc_ids, probs, path) -> None:
    """tsv `<doc_id>\\t<p_positive>` — the interchange format that lets any
    external model feed the ensemble."""
    with open(path, "w", encoding="utf-8") as fh:
        for did, p in zip(doc_ids, probs):
            fh.write(f"{did}\t{p:.9g}\n")


def load_probs(path) -> dict[int, float]:
    out: dict[int, float] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{ln}: expected `<doc_id>\\t<p>`")
            try:
                did, p = int(parts[0]), float(parts[1])
            except ValueError as exc:
                raise DataError(f"{path}:{ln}: {exc}") from exc
            if did in out:
                raise DataError(f"{path}:{ln}: duplicate doc id {did}")
            out[did] = p
    return out


def align_probs(probs: dict[int, float], doc_ids) -> np.ndarray:
    """Order a doc_id->p map by the given ids, failing on gaps."""
    missing = [d for d in doc_ids if d not in probs]
    if missing:
        raise DataError(f"probabilities missing for doc ids {missing[:5]}"
                        + ("..." if len(missing) > 5 else ""))
    return np.array([probs[d] for d in doc_ids], dtype=np.float64)
