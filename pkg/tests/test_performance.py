import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resmbs.performance import (
    PaymentSummary,
    default_thresholds,
    label_security,
    summarize_rates,
    topic_performance,
)


def lab(cls, principal, other):
    return label_security(cls, PaymentSummary(principal, other))


def test_default_thresholds():
    t = default_thresholds()
    assert (t.for_class("A").me_max_bps, t.for_class("A").fe_min_bps) == (100.0, 2500.0)
    assert (t.for_class("M").me_max_bps, t.for_class("M").fe_min_bps) == (500.0, 5000.0)
    assert (t.for_class("B").me_max_bps, t.for_class("B").fe_min_bps) == (500.0, 5000.0)


def test_label_examples():
    assert lab("A", 0, 0).value == "ME"
    assert lab("A", 2600, 0).value == "FE"
    assert lab("M", 0, 700).value == "NME"


def test_label_negative_rejected():
    with pytest.raises(ValueError):
        PaymentSummary(-1, 0)


def test_label_unknown_class_rejected():
    with pytest.raises(ValueError):
        lab("Z", 0, 0)


BOUNDARY_TABLE = [
    # (class, worst bps, expected label)
    ("A", 100, "ME"),
    ("A", 101, "NME"),
    ("A", 2499, "NME"),
    ("A", 2500, "FE"),
    ("M", 500, "ME"),
    ("M", 501, "NME"),
    ("M", 4999, "NME"),
    ("M", 5000, "FE"),
    ("B", 500, "ME"),
    ("B", 501, "NME"),
    ("B", 4999, "NME"),
    ("B", 5000, "FE"),
]


@pytest.mark.parametrize("cls,bps,expected", BOUNDARY_TABLE)
def test_boundary_table(cls, bps, expected):
    assert lab(cls, bps, 0).value == expected
    assert lab(cls, 0, bps).value == expected  # either channel can breach


def test_fe_implies_fne_and_max_rule():
    l = lab("A", 0, 3000)
    assert l.fe and l.fne
    l = lab("A", 150, 90)  # principal channel alone pushes past ME
    assert l.value == "NME"


LEVELS = {"ME": 0, "NME": 1, "FE": 2}


@settings(max_examples=200, deadline=None)
@given(
    st.sampled_from("AMB"),
    st.floats(0, 10000),
    st.floats(0, 10000),
    st.floats(0, 2000),
    st.floats(0, 2000),
)
def test_monotonicity(cls, p, o, dp, do):
    base = lab(cls, p, o)
    worse = lab(cls, p + dp, o + do)
    assert LEVELS[worse.value] >= LEVELS[base.value]
    assert worse.fe >= base.fe and worse.fne >= base.fne


def test_summarize_all_me():
    rows = [{"year": 2002, "class": "A", "label": lab("A", 0, 0)} for _ in range(4)]
    out = summarize_rates(rows)
    assert out == [{"year": 2002, "class": "A", "n": 4, "fe_rate": 0.0, "fne_rate": 0.0}]


def test_summarize_all_fe():
    rows = [{"year": 2003, "class": "B", "label": lab("B", 9000, 0)} for _ in range(3)]
    out = summarize_rates(rows, group_keys=("year",))
    assert out[0]["fe_rate"] == 1.0 and out[0]["fne_rate"] == 1.0


def test_summarize_mixed_counting():
    labels = [lab("A", 3000, 0), lab("A", 200, 0), lab("A", 0, 0), lab("A", 0, 0)]
    rows = [{"year": 2002, "class": "A", "label": l} for l in labels]
    out = summarize_rates(rows, group_keys=("class",))
    assert out[0]["fe_rate"] == 0.25
    assert out[0]["fne_rate"] == 0.5


def test_summarize_fne_at_least_fe():
    labels = [lab("M", 6000, 0), lab("M", 700, 0), lab("M", 0, 0)]
    rows = [{"year": 2004, "class": "M", "label": l} for l in labels]
    out = summarize_rates(rows)
    assert out[0]["fne_rate"] >= out[0]["fe_rate"]


def test_summarize_rejects_empty_groups():
    with pytest.raises(ValueError):
        summarize_rates([{"year": 2002, "class": "A", "label": lab("A", 0, 0)}], group_keys=())


def test_topic_performance_pure_fe_no_ssup():
    topics = {"s1": 3, "s2": 3}
    labels = {"s1": lab("A", 9000, 0), "s2": lab("A", 9000, 0)}
    ssup = {"s1": False, "s2": False}
    assert topic_performance(topics, labels, ssup) == {3: (1.0, 0.0)}


def test_topic_performance_empty():
    assert topic_performance({}, {}, {}) == {}


def test_topic_performance_counting():
    # 10 securities: 4 FE, 1 SSUP
    topics = {f"s{i}": 0 for i in range(10)}
    labels = {f"s{i}": lab("A", 9000 if i < 4 else 0, 0) for i in range(10)}
    ssup = {f"s{i}": i == 9 for i in range(10)}
    assert topic_performance(topics, labels, ssup) == {0: (0.4, 0.1)}
