"""
Tests de carga, validación e importación de casos
"""

import json

import pytest

from src.config import DatasetConfig
from src.dataset import (
    Case,
    dump_cases,
    import_lawbench_records,
    load_cases,
    normalize_gold_term,
    truncate_fact,
    validate_dataset,
)
from src.exceptions import DatasetRecordError, DataValidationError, GoldTermError


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write((record if isinstance(record, str) else json.dumps(record, ensure_ascii=False)) + "\n")
    return path


def _record(case_id="c1", **overrides):
    record = {
        "id": case_id,
        "fact": "被告人某甲盗窃财物。",
        "charge": "盗窃罪",
        "article": "第二百六十四条",
        "gold_term_months": 10,
    }
    record.update(overrides)
    return record


def test_load_reference_case(reference_case):
    assert reference_case.id == "reference-liu"
    assert reference_case.charge == "Fraud; Bribery"
    assert reference_case.gold_term_months == 58
    assert reference_case.article.startswith("Articles 266, 385")


def test_load_preserves_file_order(fixture_cases):
    assert [c.id for c in fixture_cases] == ["reference-liu", "theft-001", "injury-002"]


@pytest.mark.parametrize("raw, expected", [
    (58, 58),
    (58.0, 58),
    ("58", 58),
    ("1年2个月", 14),
    ("有期徒刑三年", 36),
    ("54 months", 54),
    (0, 0),
])
def test_normalize_gold_term(raw, expected):
    assert normalize_gold_term(raw) == expected


@pytest.mark.parametrize("raw", [True, -3, 2.5, "无", None, [12], "9" * 5000])
def test_normalize_gold_term_rejects(raw):
    with pytest.raises(GoldTermError):
        normalize_gold_term(raw)


def test_truncate_fact_keeps_prefix():
    assert truncate_fact("abcdefg", 5) == "abcde"
    assert truncate_fact("abc", 5) == "abc"


def test_long_fact_is_truncated(tmp_path):
    path = _write_jsonl(tmp_path / "cases.jsonl", [_record(fact="事" * 50)])
    cases = load_cases(path, DatasetConfig(max_fact_chars=20))
    assert cases[0].fact == "事" * 20


def test_alternative_gold_fields(tmp_path):
    path = _write_jsonl(tmp_path / "cases.jsonl", [
        {k: v for k, v in _record("a").items() if k != "gold_term_months"} | {"answer": "刑期：一年"},
        {k: v for k, v in _record("b").items() if k != "gold_term_months"} | {"gold": 7},
    ])
    assert [c.gold_term_months for c in load_cases(path)] == [12, 7]


def test_missing_field_rejected_with_line_number(tmp_path):
    path = _write_jsonl(tmp_path / "cases.jsonl", [_record("a"), _record("b", fact="  ")])
    with pytest.raises(DatasetRecordError) as exc:
        load_cases(path)
    assert exc.value.line_no == 2
    assert "fact" in str(exc.value)


def test_lenient_mode_skips_invalid_records(tmp_path):
    path = _write_jsonl(tmp_path / "cases.jsonl", [
        _record("a"),
        "{not json",
        _record("b", gold_term_months="无期"),
        _record("c"),
    ])
    cases = load_cases(path, DatasetConfig(reject_missing_fields=False))
    assert [c.id for c in cases] == ["a", "c"]


def test_gold_above_max_rejected(tmp_path):
    path = _write_jsonl(tmp_path / "cases.jsonl", [_record(gold_term_months=301)])
    with pytest.raises(DatasetRecordError):
        load_cases(path)


def test_validate_dataset_reports_every_line(tmp_path):
    path = _write_jsonl(tmp_path / "cases.jsonl", [
        _record("a"),
        _record("a"),
        {"id": "x"},
        "[1, 2]",
        _record("b"),
    ])
    report = validate_dataset(path)
    assert report.valid_count == 2
    assert [e.line_no for e in report.errors] == [2, 3, 4]
    assert not report.ok


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_cases(tmp_path / "none.jsonl")


def test_dataset_files_must_be_jsonl(tmp_path):
    path = tmp_path / "cases.csv"
    path.write_text(json.dumps(_record(), ensure_ascii=False) + "\n", encoding="utf-8")
    with pytest.raises(DataValidationError):
        load_cases(path)
    with pytest.raises(DataValidationError):
        validate_dataset(path)
    with pytest.raises(DataValidationError):
        import_lawbench_records(path, tmp_path / "out.jsonl")


def test_dump_then_load_is_idempotent(tmp_path, fixture_cases):
    first = tmp_path / "first.jsonl"
    second = tmp_path / "second.jsonl"
    assert dump_cases(fixture_cases, first) == 3
    reloaded = load_cases(first)
    dump_cases(reloaded, second)
    assert reloaded == fixture_cases
    assert first.read_bytes() == second.read_bytes()


def test_import_lawbench_records(tmp_path):
    src = tmp_path / "lawbench.json"
    src.write_text(json.dumps([
        {
            "question": "被告人刘某利用职务便利收受他人财物。\n罪名：受贿罪\n相关法条：第三百八十五条",
            "answer": "刑期:3年6个月",
        },
        {
            "id": "given-id",
            "question": "The defendant stole a phone.\nCrime: Theft.\nLegal Articles: Article 264.",
            "answer": 8,
        },
    ], ensure_ascii=False), encoding="utf-8")
    dst = tmp_path / "cases.jsonl"

    assert import_lawbench_records(src, dst) == 2
    cases = load_cases(dst)
    assert cases[0] == Case(
        id="lawbench-0000",
        fact="被告人刘某利用职务便利收受他人财物。\n罪名：受贿罪\n相关法条：第三百八十五条",
        charge="受贿罪",
        article="第三百八十五条",
        gold_term_months=42,
    )
    assert cases[1].id == "given-id"
    assert cases[1].charge == "Theft"
    assert cases[1].article == "Article 264."


def test_import_lawbench_without_charge_fails(tmp_path):
    src = tmp_path / "lawbench.jsonl"
    _write_jsonl(src, [{"question": "没有罪名的文本", "answer": 12}])
    with pytest.raises(DatasetRecordError):
        import_lawbench_records(src, tmp_path / "out.jsonl")
