import numpy as np
import pytest

from trfp.evaluation import (
    ConfusionMatrix,
    confusion,
    metrics,
    write_confusion_csv,
    write_metrics_csv,
    write_summary,
)


class TestConfusion:
    def test_diagonal(self):
        cm = confusion([(0, 0), (1, 1)], 2)
        assert np.array_equal(cm.counts, [[1, 0], [0, 1]])

    def test_off_diagonal(self):
        cm = confusion([(0, 1)], 2)
        assert cm.counts[0, 1] == 1 and cm.total == 1

    def test_empty(self):
        cm = confusion([], 3)
        assert cm.total == 0 and cm.counts.shape == (3, 3)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            confusion([(0, 5)], 3)
        with pytest.raises(ValueError):
            confusion([(-1, 0)], 3)

    def test_row_sums_are_support(self):
        cm = confusion([(0, 0), (0, 1), (1, 1)], 2)
        assert np.array_equal(cm.support(), [2, 1])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(np.array([[1, -1], [0, 1]]))


class TestMetrics:
    def test_direct_formulas(self):
        # TP=9, FP=1, FN=3 for class 0
        counts = np.array([[9, 3], [1, 50]])
        report = metrics(ConfusionMatrix(counts))
        m = report.per_class[0]
        assert m.precision == pytest.approx(0.9)
        assert m.recall == pytest.approx(0.75)
        assert m.f1 == pytest.approx(2 * 0.9 * 0.75 / 1.65)

    def test_perfect_diagonal(self):
        report = metrics(ConfusionMatrix(np.diag([5, 3, 2])))
        for m in report.per_class:
            assert m.precision == m.recall == m.f1 == 1.0
        assert report.macro_f1 == 1.0 and report.weighted_f1 == 1.0

    def test_absent_class_excluded_from_averages(self):
        counts = np.zeros((3, 3), dtype=int)
        counts[0, 0] = 4
        counts[1, 1] = 4
        report = metrics(ConfusionMatrix(counts))
        absent = report.per_class[2]
        assert absent.precision == absent.recall == absent.f1 == 0.0
        assert absent.support == 0
        assert report.macro_f1 == 1.0  # class 2 carries no weight

    def test_never_predicted_class(self):
        counts = np.array([[0, 5], [0, 5]])
        report = metrics(ConfusionMatrix(counts))
        assert report.per_class[0].precision == 0.0
        assert report.per_class[0].recall == 0.0
        assert report.per_class[0].f1 == 0.0

    def test_f1_between_precision_and_recall(self, rng):
        for _ in range(100):
            counts = rng.integers(0, 30, (4, 4))
            report = metrics(ConfusionMatrix(counts))
            for m in report.per_class:
                if m.precision > 0 and m.recall > 0:
                    assert min(m.precision, m.recall) - 1e-12 <= m.f1
                    assert m.f1 <= max(m.precision, m.recall) + 1e-12

    def test_permutation_invariance(self, rng):
        counts = rng.integers(0, 25, (5, 5))
        base = metrics(ConfusionMatrix(counts))
        perm = rng.permutation(5)
        permuted = metrics(ConfusionMatrix(counts[np.ix_(perm, perm)]))
        assert permuted.weighted_f1 == pytest.approx(base.weighted_f1, abs=1e-12)
        assert permuted.macro_f1 == pytest.approx(base.macro_f1, abs=1e-12)
        assert permuted.accuracy == pytest.approx(base.accuracy, abs=1e-12)

    def test_pure(self):
        counts = np.array([[3, 1], [2, 4]])
        a = metrics(ConfusionMatrix(counts))
        b = metrics(ConfusionMatrix(counts))
        assert a == b


def test_report_files(tmp_path):
    cm = confusion([(0, 0), (0, 1), (1, 1), (1, 1)], 2)
    report = metrics(cm)
    labels = ["gemma:2b", "phi:2.7b"]
    write_metrics_csv(report, labels, tmp_path / "metrics.csv")
    write_confusion_csv(cm, labels, tmp_path / "confusion.csv")
    write_summary(report, cm, labels, tmp_path / "summary.txt")

    lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert lines[0] == "label,support,precision,recall,f1"
    assert lines[1].startswith("gemma:2b,2,")
    assert lines[-1].startswith("weighted_avg,")
    conf = (tmp_path / "confusion.csv").read_text().splitlines()
    assert conf[1] == "gemma:2b,1,1"
    assert "accuracy" in (tmp_path / "summary.txt").read_text()
