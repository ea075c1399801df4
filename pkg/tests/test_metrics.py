import numpy as np
import pytest

from arcmatch.data import EncodedInstance
from arcmatch.errors import DataError
from arcmatch.metrics import classify_eval, margin_stats, p_at_1, select_threshold
from arcmatch.tensor import make_rng
from arcmatch.training import Triple


class FakeInstance:
    """Instances whose 'sentences' are just score-table keys."""

    def __init__(self, scores, answer):
        self.x = 0
        self.candidates = list(range(len(scores)))
        self.answer = answer
        self.scores = scores


def _fake_score(inst):
    return lambda x, c: inst.scores[c]


def _run_p1(instances):
    # dispatch per instance through a shared scorer
    table = {}

    def score(x, c):
        return table["cur"].scores[c]

    hits = 0
    total = 0
    # score instance-by-instance to keep the fake simple
    reports = []
    for inst in instances:
        table["cur"] = inst
        reports.append(p_at_1(score, [inst]))
    vals = [r.value for r in reports]
    return float(np.mean(vals))


def test_p_at_1_perfect_scorer():
    insts = [FakeInstance([0.1, 0.9, 0.2], 1), FakeInstance([5.0, 1.0], 0)]
    assert _run_p1(insts) == 1.0


def test_p_at_1_constant_scorer_is_zero():
    insts = [FakeInstance([1.0, 1.0, 1.0], 0)]
    assert _run_p1(insts) == 0.0


def test_p_at_1_random_scorer_near_chance():
    rng = make_rng(0)
    insts = []
    for _ in range(10_000):
        scores = rng.normal(size=5).tolist()
        insts.append(FakeInstance(scores, int(rng.integers(5))))
    assert abs(_run_p1(insts) - 0.20) < 0.02


def test_p_at_1_invariant_under_monotone_transforms():
    rng = make_rng(1)
    insts = [FakeInstance(rng.normal(size=5).tolist(), int(rng.integers(5)))
             for _ in range(1000)]
    base = _run_p1(insts)
    for transform in (lambda s: 3.0 * s + 7.0, np.exp, lambda s: s ** 3):
        mapped = [FakeInstance([float(transform(v)) for v in i.scores], i.answer)
                  for i in insts]
        assert _run_p1(mapped) == base


def test_p_at_1_empty_error():
    with pytest.raises(DataError):
        p_at_1(lambda x, c: 0.0, [])


def test_classify_all_correct():
    pairs = [("a", "b", 1), ("c", "d", 0)]
    report = classify_eval(lambda x, y: 1.0 if x == "a" else -1.0, pairs, 0.0)
    assert report.value == 1.0
    assert report.extras["f1"] == 1.0


def test_classify_majority_baseline_matches_formula():
    pairs = [("x", "y", 1)] * 665 + [("x", "y", 0)] * 335
    report = classify_eval(lambda x, y: 1.0, pairs, 0.0)
    assert report.value == pytest.approx(0.665)
    assert report.extras["f1"] == pytest.approx(2 * 0.665 / 1.665, abs=1e-9)
    assert round(report.extras["f1"], 3) == 0.799


def test_classify_no_positive_predictions_f1_zero():
    pairs = [("x", "y", 1), ("x", "y", 0)]
    report = classify_eval(lambda x, y: -1.0, pairs, 0.0)
    assert report.extras["f1"] == 0.0


def test_classify_accuracy_is_one_minus_hamming():
    rng = make_rng(2)
    pairs = [(i, i, int(rng.integers(2))) for i in range(200)]
    scores = {i: float(rng.normal()) for i in range(200)}
    threshold = 0.3
    report = classify_eval(lambda x, y: scores[x], pairs, threshold)
    wrong = sum(1 for i, _, label in pairs
                if (scores[i] >= threshold) != bool(label))
    assert report.value == pytest.approx(1 - wrong / 200)
    # f1 recomputed from the reported confusion matrix
    tp, fp, fn = report.extras["tp"], report.extras["fp"], report.extras["fn"]
    want_f1 = 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)
    assert report.extras["f1"] == pytest.approx(want_f1)


def test_select_threshold_maximizes_dev_accuracy():
    # separable dev set: scores 0..9, labels 1 for score >= 6
    pairs = [(i, i, int(i >= 6)) for i in range(10)]
    t = select_threshold(lambda x, y: float(x), pairs)
    report = classify_eval(lambda x, y: float(x), pairs, t)
    assert report.value == 1.0


def test_margin_stats():
    triples = [Triple(x=i, y_pos=i, y_neg=i) for i in range(4)]
    margins = iter([2.0, 0.0, 1.0, -1.0])
    vals = {}

    def score(x, y):
        key = (id(x), "pos" if y is x else "neg")
        return 0.0

    # simpler: deterministic scorer over index parity
    scores = {(0, "p"): 2.0, (0, "n"): 0.0, (1, "p"): 0.0, (1, "n"): 0.0,
              (2, "p"): 1.5, (2, "n"): 0.5, (3, "p"): 0.0, (3, "n"): 1.0}

    class T:
        def __init__(self, i):
            self.x = i
            self.y_pos = (i, "p")
            self.y_neg = (i, "n")

    report = margin_stats(lambda x, y: scores[y], [T(i) for i in range(4)])
    # margins: 2.0, 0.0, 1.0, -1.0 -> fraction >= 1 is 0.5
    assert report.value == 0.5
    assert report.extras["margin_mean"] == pytest.approx(0.5)


def test_margin_stats_constant_scorer():
    class T:
        x = y_pos = y_neg = 0

    report = margin_stats(lambda x, y: 3.0, [T(), T()])
    assert report.extras["margin_mean"] == 0.0
    assert report.value == 0.0


def test_margin_stats_untrained_vs_trained():
    from arcmatch.baselines import build_wordembed
    from arcmatch.data import (encode_triples, gen_synthetic_corpus,
                               sample_negatives)
    from arcmatch.embeddings import random_embeddings
    from arcmatch.training import TrainConfig, sgd_step

    corpus, tokens = gen_synthetic_corpus(80, 400, (9, 12), 10, make_rng(31))
    table = random_embeddings(tokens, 8, make_rng(32))
    triples = encode_triples(
        sample_negatives(corpus, 3, "random", table, make_rng(33)), table, 12)
    model = build_wordembed(8, make_rng(34), hidden=(16,))

    def scorer(sx, sy):
        return model.score(sx, sy)[0]

    untrained = margin_stats(scorer, triples)
    # untrained: margins hover around zero, roughly symmetric
    assert abs(untrained.extras["margin_mean"]) < 0.5
    assert untrained.value < 0.5  # few margins satisfied by luck

    cfg = TrainConfig(learning_rate=0.3, batch_size=40)
    rng = make_rng(35)
    for _ in range(30):
        for start in range(0, len(triples), 40):
            sgd_step(model, triples[start : start + 40], cfg, rng)
    trained = margin_stats(scorer, triples)
    assert trained.value > untrained.value
    assert trained.extras["margin_mean"] > untrained.extras["margin_mean"]


def test_report_render_formats():
    report = p_at_1(lambda x, c: float(c == 1),
                    [EncodedInstance(x=0, candidates=[0, 1], answer=1)])
    text = report.table()
    kv = report.kv_lines()
    assert "p_at_1" in text
    assert "value=1.000000" in kv
