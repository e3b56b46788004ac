"""Data-type tagging rules: positive cases, exclusions, and edge forms."""

import pytest
from hypothesis import given, strategies as st

from ffrg.datatypes import VALUE_TYPES, DataType, type_of


MONEY = [
    "$1,234.56", "$ 950", "USD 120.00", "120.00 USD", "1,234.56",
    "99.00", "-$45.10", "€12.50", "1,000,000", "0.99", "£5", "12 EUR",
]
DATE = [
    "12/05/2024", "12-05-24", "2024-12-05", "Jan 5, 2024", "January 5 2024",
    "5 Jan 2024", "17 March 2021", "3-Mar-2024", "12-oct-21",
]
NUMBER_ONLY = [
    "2020", "#4811", "123-456", "12345678", "4811/2", "INV-48113", "PO2219",
    "A-99201", "no941238",
]
OTHER = [
    "invoice", "Total", "due?", "n/a", "12ab34", "$x", "1.2.3.4.5x", "----",
    "ABCD1234567",
]


@pytest.mark.parametrize("text", MONEY)
def test_money_detected(text):
    assert DataType.MONEY in type_of(text)


@pytest.mark.parametrize("text", MONEY)
def test_money_implies_number(text):
    assert type_of(text) == frozenset({DataType.MONEY, DataType.NUMBER})


@pytest.mark.parametrize("text", DATE)
def test_date_detected(text):
    assert type_of(text) == frozenset({DataType.DATE})


@pytest.mark.parametrize("text", NUMBER_ONLY)
def test_plain_and_prefixed_numbers(text):
    assert type_of(text) == frozenset({DataType.NUMBER})


@pytest.mark.parametrize("text", OTHER)
def test_unmatched_text_is_other(text):
    assert type_of(text) == frozenset({DataType.OTHER})


def test_bare_year_is_a_number_not_a_date():
    # dates need separators; a lone integer stays numeric
    assert type_of("2020") == frozenset({DataType.NUMBER})


def test_separator_date_is_not_a_number():
    assert DataType.NUMBER not in type_of("12/05/2024")


def test_whitespace_trimmed_before_typing():
    assert type_of("  $12.00 ") == type_of("$12.00")


def test_empty_text_rejected():
    with pytest.raises(ValueError):
        type_of("   ")


def test_value_types_excludes_other():
    assert DataType.OTHER not in VALUE_TYPES
    assert VALUE_TYPES == frozenset({DataType.NUMBER, DataType.DATE, DataType.MONEY})


@given(st.text(alphabet=st.characters(min_codepoint=33, max_codepoint=126), min_size=1, max_size=12))
def test_every_text_gets_exactly_one_tag_family(text):
    types = type_of(text)
    assert types
    if DataType.OTHER in types:
        assert types == frozenset({DataType.OTHER})
    if DataType.DATE in types:
        assert DataType.NUMBER not in types
    if DataType.MONEY in types:
        assert DataType.NUMBER in types
