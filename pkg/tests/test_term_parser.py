"""
Tests del parser de penas: numerales chinos, expresiones de pena,
opiniones y veredictos de consenso
"""

import pytest

from src.exceptions import ConsensusParseError, OpinionParseError, TermParseError
from src.term_parser import (
    chinese_numeral_to_int,
    extract_prison_term_months,
    find_term_expressions,
    parse_consensus,
    parse_opinion,
)

_DIGITS = "零一二三四五六七八九"


def render_chinese(n: int) -> str:
    """Forma canónica de 0-999 (oráculo independiente del parser)"""
    if n < 10:
        return _DIGITS[n]
    hundreds, rest = divmod(n, 100)
    tens, ones = divmod(rest, 10)
    text = ""
    if hundreds:
        text += _DIGITS[hundreds] + "百"
        if tens == 0 and ones:
            return text + "零" + _DIGITS[ones]
    if tens:
        if tens == 1 and not hundreds:
            text += "十"
        else:
            text += _DIGITS[tens] + "十"
    if ones:
        text += _DIGITS[ones]
    return text


# ============================================================================
# NUMERALES
# ============================================================================

def test_numeral_matches_rendering_oracle_0_to_999():
    for n in range(1000):
        assert chinese_numeral_to_int(render_chinese(n)) == n, render_chinese(n)


@pytest.mark.parametrize("text, expected", [
    ("五十四", 54),
    ("三百零六", 306),
    ("一十二", 12),
    ("两", 2),
    ("〇", 0),
    ("二〇一二", 2012),
    ("一千零五", 1005),
])
def test_numeral_variants(text, expected):
    assert chinese_numeral_to_int(text) == expected


@pytest.mark.parametrize("text", ["", "五十a", "十百", "三四十", "百百"])
def test_numeral_rejects_malformed(text):
    with pytest.raises(TermParseError):
        chinese_numeral_to_int(text)


# ============================================================================
# EXPRESIONES DE PENA
# ============================================================================

GOLDEN = [
    ("判处有期徒刑三年六个月", 42),
    ("判处有期徒刑五年", 60),
    ("判处有期徒刑十个月", 10),
    ("判处有期徒刑一年零六个月", 18),
    ("判处有期徒刑两年", 24),
    ("判处有期徒刑三年半", 42),
    ("判处有期徒刑半年", 6),
    ("刑期：54个月", 54),
    ("判处有期徒刑1年6个月", 18),
    ("判处有期徒刑１２个月", 12),
    ("判处有期徒刑 3 年 6 个月", 42),
    ("判处有期徒刑十年零三个月", 123),
    ("判处有期徒刑十五年", 180),
    ("判处有期徒刑一年又两个月", 14),
    ("判处有期徒刑两年六个月", 30),
    ("判处有期徒刑二十个月", 20),
    ("判处有期徒刑一百零八个月", 108),
    ("刑期：三百个月", 300),
    ("判处拘役六个月", 6),
    ("sentenced to 54 months of imprisonment", 54),
    ("3 years and 6 months", 42),
    ("1 year and 2 months", 14),
    ("2 years", 24),
    ("a 4-year term", 48),
    ("a 54-month sentence", 54),
    # distractores: dinero, artículos, fechas
    ("诈骗人民币三十万元，判处有期徒刑四年", 48),
    ("根据刑法第二百六十六条，判处有期徒刑三年", 36),
    ("依照第385条，判处有期徒刑5年", 60),
    ("2012年1月至2013年7月间多次受贿，判处有期徒刑二年", 24),
    ("于3月5日被抓获，判处有期徒刑八个月", 8),
    ("accepted 28,900 yuan and defrauded 300,000 yuan; sentenced to 5 years", 60),
    # regla de la última expresión
    ("一审判处有期徒刑五年，二审改判为有期徒刑四年", 48),
    ("检察院建议判处三年以下有期徒刑，最终判处有期徒刑一年", 12),
    ("Sentence Term: 60 months\nReason: heavier than 48 months", 48),
    ("I initially proposed 60 months but revise my recommendation to 54 months.", 54),
    # sin pena
    ("本案不涉及刑期", None),
    ("罚金人民币五千元", None),
    ("No prison term was discussed.", None),
    ("", None),
]


@pytest.mark.parametrize("text, expected", GOLDEN)
def test_extract_prison_term_golden(text, expected):
    assert extract_prison_term_months(text) == expected


def test_golden_corpus_size():
    assert len(GOLDEN) >= 30


def test_find_term_expressions_keeps_order_and_skips_dates():
    text = "2012年1月起，先判五年，后改为三年六个月"
    assert find_term_expressions(text) == [60, 42]


def test_every_numeral_as_month_term():
    for n in range(0, 301, 7):
        assert extract_prison_term_months(f"判处有期徒刑{render_chinese(n)}个月") == n


def _year_month_forms(total):
    years, months = divmod(total, 12)
    yield f"判处有期徒刑{years}年{months}个月"
    if years and months:
        yield f"判处有期徒刑{render_chinese(years)}年{render_chinese(months)}个月"
    elif years:
        yield f"判处有期徒刑{render_chinese(years)}年"
    else:
        yield f"判处有期徒刑{render_chinese(months)}个月"


def test_year_month_round_trip_0_to_600():
    for total in range(601):
        for text in _year_month_forms(total):
            assert extract_prison_term_months(text) == total, text


@pytest.mark.parametrize("text", [
    "判处有期徒刑" + "1" * 5000 + "年",
    "判处有期徒刑" + "2" * 5000 + "个月",
    "sentenced to " + "3" * 5000 + " months",
    "判处" + "三" * 5000 + "年",
])
def test_huge_digit_runs_are_not_terms(text):
    assert extract_prison_term_months(text) is None


# ============================================================================
# OPINIONES
# ============================================================================

def test_parse_opinion_chinese_contract():
    parsed = parse_opinion("刑期：48个月\n理由：初犯，认罪态度较好。")
    assert parsed.term_months == 48
    assert parsed.rationale == "初犯，认罪态度较好。"


def test_parse_opinion_markdown_english():
    parsed = parse_opinion("**Sentence Term:** 60 months\n\n**Reason:** heavier than 48 months")
    assert parsed.term_months == 60
    assert parsed.rationale == "heavier than 48 months"


def test_parse_opinion_same_line_reason():
    parsed = parse_opinion("刑期：五十四个月。理由：兼顾惩罚与教育")
    assert parsed.term_months == 54
    assert parsed.rationale == "兼顾惩罚与教育"


def test_parse_opinion_bare_number_after_marker():
    assert parse_opinion("Sentence Term: 54\nReason: balance").term_months == 54


def test_parse_opinion_without_markers_uses_last_expression():
    text = "I have decided to revise my sentencing recommendation to 54 months of imprisonment."
    parsed = parse_opinion(text)
    assert parsed.term_months == 54
    assert parsed.rationale == text


def test_parse_opinion_uses_last_marker():
    text = "刑期：60个月\n理由：初步意见\n\n修正后：\n刑期：54个月\n理由：采纳合议意见"
    parsed = parse_opinion(text)
    assert parsed.term_months == 54
    assert parsed.rationale == "采纳合议意见"


def test_parse_opinion_ignores_numbers_before_marker():
    text = "被告人于2012年1月5日盗窃人民币三万元，依第264条处罚。\n刑期：18个月\n理由：数额巨大"
    parsed = parse_opinion(text)
    assert parsed.term_months == 18
    assert parsed.rationale == "数额巨大"


def test_parse_opinion_skips_distractors_without_marker():
    text = "被告人于2012年1月5日盗窃人民币三万元，依第264条，拟判18个月。"
    assert parse_opinion(text).term_months == 18


@pytest.mark.parametrize("text", ["", "   ", "刑期：待定\n理由：无", "I agree with my colleagues.",
    "刑期：" + "9" * 5000 + "个月\n理由：x",
])
def test_parse_opinion_rejects_unparseable(text):
    with pytest.raises(OpinionParseError):
        parse_opinion(text)


# ============================================================================
# CONSENSO
# ============================================================================

def test_parse_consensus_yes():
    verdict = parse_consensus("Conclusion: Yes\n\nAll members agree on 54 months.")
    assert verdict.consensus is True
    assert verdict.summary == "All members agree on 54 months."
    assert verdict.fallback is False


def test_parse_consensus_markdown_no():
    verdict = parse_consensus("**Conclusion: No**\n\n**Main Points of Disagreement:** remorse")
    assert verdict.consensus is False
    assert "remorse" in verdict.summary


def test_parse_consensus_chinese_markers():
    assert parse_consensus("结论：是").consensus is True
    assert parse_consensus("结论：否\n分歧：刑期差距较大").consensus is False


@pytest.mark.parametrize("text", [
    "",
    "I think we agree.",
    "Conclusion: Yes/No",
    "Conclusion: Yes\nLater: Conclusion: No, wait",
    "结论：否",
    "Conclusion: Nope",
])
def test_parse_consensus_rejects_ambiguous_or_missing(text):
    with pytest.raises(ConsensusParseError):
        parse_consensus(text)
