import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docvec.ensemble import (
    PROB_EPS,
    EnsembleConfig,
    align_probs,
    ensemble_eval,
    ensemble_vote,
    load_probs,
    save_probs,
)
from docvec.errors import ConfigError, DataError

probs = st.floats(0.001, 0.999)


def test_config_validation():
    with pytest.raises(ConfigError):
        EnsembleConfig(alpha=1.5)
    with pytest.raises(ConfigError):
        EnsembleConfig(alpha=-0.1)
    with pytest.raises(ConfigError):
        EnsembleConfig(mode="ranked")
    with pytest.raises(ConfigError):
        EnsembleConfig(tie_break="random")
    EnsembleConfig(alpha=0.0)
    EnsembleConfig(alpha=1.0)


def test_vote_arithmetic_example():
    pos, p = ensemble_vote(0.9, 0.2, EnsembleConfig(alpha=0.5))
    assert p == pytest.approx(0.55, abs=1e-12)
    assert pos is True


def test_alpha_one_is_pure_svm():
    cfg = EnsembleConfig(alpha=1.0)
    for p_rnn in (0.01, 0.5, 0.99):
        pos, p = ensemble_vote(0.8, p_rnn, cfg)
        assert pos is True and p == pytest.approx(0.8)
        pos, _ = ensemble_vote(0.2, p_rnn, cfg)
        assert pos is False


def test_alpha_zero_is_pure_rnn():
    cfg = EnsembleConfig(alpha=0.0)
    assert ensemble_vote(0.01, 0.9, cfg)[0] is True
    assert ensemble_vote(0.99, 0.1, cfg)[0] is False


def test_soft_tie_resolution():
    cfg_svm = EnsembleConfig(alpha=0.5, tie_break="svm")
    cfg_pos = EnsembleConfig(alpha=0.5, tie_break="positive")
    # combined exactly 0.5 with the svm leaning negative
    pos, p = ensemble_vote(0.4, 0.6, cfg_svm)
    assert p == pytest.approx(0.5) and pos is False
    pos, _ = ensemble_vote(0.4, 0.6, cfg_pos)
    assert pos is True
    # svm leaning positive
    pos, _ = ensemble_vote(0.6, 0.4, cfg_svm)
    assert pos is True


def test_hard_mode_majority_and_tiebreak():
    agree = EnsembleConfig(mode="hard")
    assert ensemble_vote(0.8, 0.7, agree)[0] is True
    assert ensemble_vote(0.2, 0.3, agree)[0] is False
    # disagreement
    svm_rules = EnsembleConfig(mode="hard", tie_break="svm")
    pos_rules = EnsembleConfig(mode="hard", tie_break="positive")
    assert ensemble_vote(0.8, 0.2, svm_rules)[0] is True
    assert ensemble_vote(0.2, 0.8, svm_rules)[0] is False
    assert ensemble_vote(0.2, 0.8, pos_rules)[0] is True
    assert ensemble_vote(0.8, 0.2, pos_rules)[0] is True


def test_probability_range_enforced():
    cfg = EnsembleConfig()
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ConfigError):
            ensemble_vote(bad, 0.5, cfg)
        with pytest.raises(ConfigError):
            ensemble_vote(0.5, bad, cfg)


@given(probs, probs, st.floats(0.0, 1.0))
@settings(max_examples=200)
def test_soft_probability_is_affine_in_alpha(p_svm, p_rnn, alpha):
    _, p = ensemble_vote(p_svm, p_rnn, EnsembleConfig(alpha=alpha))
    assert p == pytest.approx(alpha * p_svm + (1 - alpha) * p_rnn, abs=1e-12)
    assert min(p_svm, p_rnn) - 1e-12 <= p <= max(p_svm, p_rnn) + 1e-12


@given(probs, probs)
def test_label_invariance_under_monotone_recalibration_at_endpoints(p_svm, p_rnn):
    # sqrt is strictly monotone on (0,1); at alpha 0/1 only the argmax matters
    recal = lambda p: float(np.sqrt(p))
    for alpha in (0.0, 1.0):
        cfg = EnsembleConfig(alpha=alpha)
        base = ensemble_vote(p_svm, p_rnn, cfg)[0]
        moved = ensemble_vote(recal(p_svm), recal(p_rnn), cfg)[0]
        # sqrt moves the 0.5 threshold to 0.25; apply it to the threshold too
        relevant = p_svm if alpha == 1.0 else p_rnn
        if abs(relevant - 0.5) > 1e-9 and abs(recal(relevant) - 0.5) > 1e-9:
            assert base == (relevant > 0.5)
            assert moved == (recal(relevant) > 0.5)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_eval_perfect_models():
    svm = [0.9, 0.8, 0.1, 0.2]
    rnn = [0.7, 0.9, 0.3, 0.1]
    labels = [True, True, False, False]
    acc, decisions = ensemble_eval(svm, rnn, labels, EnsembleConfig())
    assert acc == 1.0
    assert [d[0] for d in decisions] == labels


def test_eval_alpha_endpoints_equal_individual_models():
    rng = np.random.default_rng(0)
    n = 60
    labels = rng.random(n) > 0.5
    svm = np.clip(np.where(labels, 0.5, -0.5) + rng.normal(0, 0.4, n) + 0.5, 0.01, 0.99)
    rnn = np.clip(np.where(labels, 0.5, -0.5) + rng.normal(0, 0.6, n) + 0.5, 0.01, 0.99)
    svm_acc = float(np.mean((svm > 0.5) == labels))
    rnn_acc = float(np.mean((rnn > 0.5) == labels))
    acc1, _ = ensemble_eval(svm, rnn, labels, EnsembleConfig(alpha=1.0))
    acc0, _ = ensemble_eval(svm, rnn, labels, EnsembleConfig(alpha=0.0))
    assert acc1 == pytest.approx(svm_acc)
    assert acc0 == pytest.approx(rnn_acc)


def test_eval_blend_can_beat_both_voters():
    # partially disjoint confident errors: blending fixes what either model
    # alone gets wrong
    labels = [True] * 4 + [False] * 4
    svm = [0.9, 0.9, 0.35, 0.9, 0.1, 0.1, 0.1, 0.45]
    rnn = [0.9, 0.9, 0.9, 0.40, 0.1, 0.1, 0.42, 0.1]
    best = {}
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        acc, _ = ensemble_eval(svm, rnn, labels, EnsembleConfig(alpha=alpha))
        best[alpha] = acc
    assert max(best.values()) >= max(best[0.0], best[1.0])
    assert best[0.5] == 1.0


def test_eval_positive_label_comparison():
    acc, _ = ensemble_eval([0.9, 0.1], [0.8, 0.2], ["pos", "neg"],
                           EnsembleConfig(), positive_label="pos")
    assert acc == 1.0
    acc, _ = ensemble_eval([0.9, 0.1], [0.8, 0.2], ["neg", "pos"],
                           EnsembleConfig(), positive_label="pos")
    assert acc == 0.0


def test_eval_alignment_errors():
    with pytest.raises(DataError, match="misaligned"):
        ensemble_eval([0.5], [0.5, 0.5], [True, False], EnsembleConfig())
    with pytest.raises(DataError):
        ensemble_eval([], [], [], EnsembleConfig())


# ---------------------------------------------------------------------------
# probability files
# ---------------------------------------------------------------------------

def test_probs_roundtrip(tmp_path):
    p = tmp_path / "probs.tsv"
    ids = [0, 3, 17]
    vals = [0.25, 0.123456789, 0.999]
    save_probs(ids, vals, p)
    assert p.read_text().splitlines()[0] == "0\t0.25"
    loaded = load_probs(p)
    assert set(loaded) == {0, 3, 17}
    for i, v in zip(ids, vals):
        assert loaded[i] == pytest.approx(v, rel=1e-8)
    np.testing.assert_allclose(align_probs(loaded, [17, 0]), [loaded[17], loaded[0]])


def test_eps_band_survives_serialization(tmp_path):
    # producers clamp saturated outputs to the PROB_EPS band; those extremes
    # must still be strictly interior after the file round-trip, or a written
    # probability file would be rejected as a voting input
    path = tmp_path / "probs.tsv"
    vals = [PROB_EPS, 0.5, 1.0 - PROB_EPS]
    save_probs([0, 1, 2], vals, path)
    loaded = load_probs(path)
    for did, v in enumerate(vals):
        assert 0.0 < loaded[did] < 1.0
        assert loaded[did] == pytest.approx(v, rel=1e-6)
        ensemble_vote(loaded[did], loaded[did], EnsembleConfig())


def test_load_probs_errors(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("0\t0.5\n0\t0.6\n", encoding="utf-8")
    with pytest.raises(DataError, match="duplicate"):
        load_probs(p)
    p.write_text("0 0.5\n", encoding="utf-8")
    with pytest.raises(DataError, match="expected"):
        load_probs(p)
    p.write_text("0\tnot_a_number\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_probs(p)


def test_align_probs_missing_ids():
    with pytest.raises(DataError, match="missing"):
        align_probs({0: 0.5}, [0, 1])
