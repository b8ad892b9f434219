"""
Tests de evaluación: nLog-distance, agregación y acuerdo entre evaluadores
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest
from sklearn.metrics import cohen_kappa_score

from src.evaluation import (
    CRITERIA,
    MetricResult,
    QualityAnnotation,
    RunSummary,
    aggregate_performance,
    cohens_kappa,
    load_annotations,
    nlog_distance,
    pairwise_mean_kappa,
    performance_score,
    quality_rates,
    quality_report,
    score_case,
    summarize_run,
)
from src.exceptions import AnnotationError, MetricError


# ============================================================================
# nLog-distance
# ============================================================================

def test_reference_case_value_matches_oracle():
    oracle = math.log(5) / math.log(301)
    assert abs(nlog_distance(54, 58, 300) - oracle) < 1e-9
    assert abs(performance_score(54, 58, 300) - (1 - oracle)) < 1e-9
    assert abs(performance_score(54, 58, 300) - 0.717997) < 1e-3


def test_metric_properties_random_triples():
    rng = np.random.default_rng(20240501)
    for _ in range(10_000):
        max_diff = int(rng.integers(1, 500))
        a = int(rng.integers(0, 400))
        b = int(rng.integers(0, 400))
        c = int(rng.integers(0, 400))

        d_ab = nlog_distance(a, b, max_diff)
        assert 0.0 <= d_ab <= 1.0
        assert nlog_distance(a, a, max_diff) == 0.0
        assert d_ab == nlog_distance(b, a, max_diff)
        assert abs(nlog_distance(a, b, max_diff, log_base=2) - d_ab) < 1e-12
        assert abs(nlog_distance(a, b, max_diff, log_base=10) - d_ab) < 1e-12

        if abs(a - b) <= abs(a - c):
            assert d_ab <= nlog_distance(a, c, max_diff) + 1e-15

        assert nlog_distance(a, a + max_diff, max_diff) == pytest.approx(1.0, abs=1e-12)
        assert nlog_distance(a, a + max_diff + 17, max_diff) == pytest.approx(1.0, abs=1e-12)


def test_performance_of_missing_prediction_is_zero():
    assert performance_score(None, 58, 300) == 0.0
    result = score_case("c1", None, 58, 300)
    assert result.distance == 1.0
    assert result.performance == 0.0


@pytest.mark.parametrize("max_diff", [0, -5])
def test_invalid_max_diff(max_diff):
    with pytest.raises(MetricError):
        nlog_distance(1, 2, max_diff)
    with pytest.raises(MetricError):
        performance_score(None, 2, max_diff)


def test_negative_terms_rejected():
    with pytest.raises(MetricError):
        nlog_distance(-1, 2, 300)


# ============================================================================
# AGREGACIÓN
# ============================================================================

def test_aggregate_exact_and_missing_is_fifty():
    results = [score_case("a", 10, 10, 300), score_case("b", None, 10, 300)]
    assert aggregate_performance(results) == 50.0


def test_aggregate_is_order_independent():
    rng = np.random.default_rng(7)
    results = [
        score_case(f"c{i}", int(rng.integers(0, 300)), int(rng.integers(0, 300)), 300)
        for i in range(200)
    ]
    shuffled = list(results)
    rng.shuffle(shuffled)
    assert aggregate_performance(results) == aggregate_performance(shuffled)


def test_aggregate_empty_raises():
    with pytest.raises(MetricError):
        aggregate_performance([])


def test_summarize_run_counts():
    results = [score_case("a", 54, 58, 300), score_case("b", None, 12, 300)]
    summary = summarize_run(results, "bench", "gpt-4", quality={"legality": 90.0}, failed_count=1)
    assert summary.case_count == 2
    assert summary.unparsed_count == 1
    assert summary.failed_count == 1
    assert summary.legality_pct == 90.0
    assert summary.morality_pct is None
    assert RunSummary.from_dict(summary.to_dict()) == summary


def test_metric_result_from_dict():
    result = score_case("a", 54, 58, 300)
    assert MetricResult.from_dict(result.to_dict()) == result


# ============================================================================
# COHEN'S KAPPA
# ============================================================================

def _ratings_from_table(n11, n10, n01, n00):
    a = [True] * n11 + [True] * n10 + [False] * n01 + [False] * n00
    b = [True] * n11 + [False] * n10 + [True] * n01 + [False] * n00
    return a, b


def _kappa_oracle(n11, n10, n01, n00):
    n = n11 + n10 + n01 + n00
    p_o = Fraction(n11 + n00, n)
    a_true, b_true = n11 + n10, n11 + n01
    p_e = Fraction(a_true * b_true + (n - a_true) * (n - b_true), n * n)
    if p_e == 1:
        return 1.0 if p_o == 1 else 0.0
    return float((p_o - p_e) / (1 - p_e))


def test_kappa_worked_example():
    # 20 ítems: 8 ambos sí, 2 + 4 desacuerdos, 6 ambos no
    a, b = _ratings_from_table(8, 2, 4, 6)
    assert cohens_kappa(a, b) == pytest.approx(0.4, abs=1e-9)


def test_kappa_perfect_agreement():
    assert cohens_kappa([True, False, True], [True, False, True]) == 1.0


def test_kappa_degenerate_constant_raters():
    assert cohens_kappa([True] * 5, [True] * 5) == 1.0
    assert cohens_kappa([False] * 4, [False] * 4) == 1.0


def test_kappa_matches_bruteforce_oracle_all_small_tables():
    for n11, n10, n01, n00 in itertools.product(range(11), repeat=4):
        if n11 + n10 + n01 + n00 == 0:
            continue
        a, b = _ratings_from_table(n11, n10, n01, n00)
        assert abs(cohens_kappa(a, b) - _kappa_oracle(n11, n10, n01, n00)) < 1e-9


def test_kappa_matches_sklearn_on_nondegenerate_tables():
    for n11, n10, n01, n00 in itertools.product(range(0, 11, 3), repeat=4):
        a, b = _ratings_from_table(n11, n10, n01, n00)
        if len(set(a)) < 2 or len(set(b)) < 2:
            continue
        assert cohens_kappa(a, b) == pytest.approx(cohen_kappa_score(a, b), abs=1e-9)


def test_kappa_length_mismatch():
    with pytest.raises(MetricError):
        cohens_kappa([True], [True, False])
    with pytest.raises(MetricError):
        cohens_kappa([], [])


# ============================================================================
# ANOTACIONES
# ============================================================================

def _annotations(rows):
    return [QualityAnnotation(*row) for row in rows]


def test_pairwise_kappa_and_majority_rates():
    rows = [
        ("c1", "r1", True, True, True),
        ("c1", "r2", True, True, False),
        ("c1", "r3", True, False, False),
        ("c2", "r1", False, True, True),
        ("c2", "r2", False, True, True),
        ("c2", "r3", True, True, False),
    ]
    annotations = _annotations(rows)

    rates = quality_rates(annotations)
    assert rates == {"legality": 50.0, "logicality": 100.0, "morality": 50.0}

    expected = np.mean([
        cohens_kappa([True, False], [True, False]),
        cohens_kappa([True, False], [True, True]),
        cohens_kappa([True, False], [True, True]),
    ])
    assert pairwise_mean_kappa(annotations, "legality") == pytest.approx(expected)


def test_quality_report_structure():
    rows = [
        ("c1", "r1", True, True, True),
        ("c1", "r2", True, False, True),
        ("c2", "r1", False, True, False),
        ("c2", "r2", False, True, True),
    ]
    report = quality_report(_annotations(rows))
    assert report["raters"] == ["r1", "r2"]
    assert report["case_count"] == 2
    assert set(report["kappa"]) == set(CRITERIA)
    assert report["kappa"]["legality"] == 1.0


def test_incomplete_matrix_raises():
    rows = [
        ("c1", "r1", True, True, True),
        ("c1", "r2", True, True, True),
        ("c2", "r1", True, True, True),
    ]
    with pytest.raises(AnnotationError):
        pairwise_mean_kappa(_annotations(rows), "legality")


def test_single_rater_raises():
    with pytest.raises(AnnotationError):
        pairwise_mean_kappa(_annotations([("c1", "r1", True, True, True)]), "morality")


def test_load_annotations_csv(tmp_path):
    path = tmp_path / "annotations.csv"
    pd.DataFrame({
        "case_id": ["c1", "c1", "c2", "c2"],
        "rater_id": ["r1", "r2", "r1", "r2"],
        "legality": ["1", "1", "0", "true"],
        "logicality": [1, 1, 1, 0],
        "morality": ["0", "0", "1", "1"],
    }).to_csv(path, index=False)

    annotations = load_annotations(path)
    assert len(annotations) == 4
    assert annotations[3].legality is True
    assert annotations[3].logicality is False


def test_load_annotations_rejects_bad_values(tmp_path):
    path = tmp_path / "annotations.csv"
    path.write_text("case_id,rater_id,legality,logicality,morality\nc1,r1,2,1,1\n", encoding="utf-8")
    with pytest.raises(AnnotationError):
        load_annotations(path)


def test_load_annotations_rejects_duplicates_and_missing_columns(tmp_path):
    dup = tmp_path / "dup.csv"
    dup.write_text(
        "case_id,rater_id,legality,logicality,morality\nc1,r1,1,1,1\nc1,r1,0,0,0\n", encoding="utf-8"
    )
    with pytest.raises(AnnotationError):
        load_annotations(dup)

    missing = tmp_path / "missing.csv"
    missing.write_text("case_id,rater_id,legality\nc1,r1,1\n", encoding="utf-8")
    with pytest.raises(AnnotationError):
        load_annotations(missing)
