import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resmbs.corpus import (
    DEFAULT_ROLES,
    build_corpus,
    filter_corpus,
    read_jsonl,
    weight_tokens,
    write_jsonl,
    write_vocabulary_csv,
)
from resmbs.errors import (
    DuplicateDocumentError,
    EmptyCorpusError,
    UnknownRoleError,
    YearOutOfRangeError,
)


def rec(doc_id, year, pairs, **kw):
    return {"id": doc_id, "year": year, "pairs": [{"role": r, "fi": f} for r, f in pairs], **kw}


def test_build_singleton():
    c = build_corpus([rec("d1", 2002, [("issuer", "X")])])
    assert len(c.slices) == 1
    assert c.slices[0][0] == 2002
    assert c.vocabulary == [("issuer", "X")]


def test_build_sparse_years_have_no_empty_slices():
    c = build_corpus(
        [rec("d1", 2002, [("issuer", "X")]), rec("d2", 2004, [("issuer", "X")])]
    )
    assert c.years() == [2002, 2004]


def test_build_summary_table_record():
    pairs = [
        ("issuer", "Wachovia"),
        ("originator", "National City"),
        ("servicer", "National City"),
        ("depositor", "Wachovia"),
        ("seller", "Wachovia"),
        ("sponsor", "Wachovia"),
    ]
    c = build_corpus([rec("d1", 2006, pairs)])
    doc = c.docs()[0]
    assert doc.distinct_pairs() == set(pairs)
    for p in pairs:
        assert p in c.vocab_index


def test_build_rejects_duplicate_id():
    with pytest.raises(DuplicateDocumentError):
        build_corpus([rec("dup", 2002, [("issuer", "X")]), rec("dup", 2003, [("issuer", "Y")])])


def test_build_rejects_year_out_of_range():
    with pytest.raises(YearOutOfRangeError):
        build_corpus([rec("d1", 2008, [("issuer", "X")])])


def test_build_rejects_unknown_role():
    with pytest.raises(UnknownRoleError):
        build_corpus([rec("d1", 2002, [("janitor", "X")])])


def test_build_accepts_extended_registry():
    c = build_corpus(
        [rec("d1", 2002, [("janitor", "X")])], roles=DEFAULT_ROLES | {"janitor"}
    )
    assert c.vocabulary == [("janitor", "X")]


def test_duplicate_pairs_accumulate_counts():
    c = build_corpus([rec("d1", 2002, [("issuer", "X"), ("issuer", "X")])])
    assert c.docs()[0].tokens[("issuer", "X")] == 2


def big_pairs(fi, n=5):
    roles = sorted(DEFAULT_ROLES)
    return [(roles[i % len(roles)], fi) for i in range(n)]


def test_filter_drops_fi_below_doc_threshold():
    # "RareBank" appears in 19 docs, "BigBank" in 20.
    records = []
    for i in range(20):
        pairs = big_pairs("BigBank", 5)
        if i < 19:
            pairs = pairs + [("insurer", "RareBank")]
        records.append(rec(f"d{i}", 2002 + (i % 3), pairs))
    filtered = filter_corpus(build_corpus(records), min_fi_docs=20, min_pairs=5)
    fis = {fi for _, fi in filtered.vocabulary}
    assert fis == {"BigBank"}
    assert filtered.n_docs == 20


def test_filter_drops_document_below_pair_threshold():
    records = [rec(f"d{i}", 2002, big_pairs("BigBank", 5)) for i in range(20)]
    records.append(rec("thin", 2002, big_pairs("BigBank", 4)))
    filtered = filter_corpus(build_corpus(records), min_fi_docs=20, min_pairs=5)
    assert "thin" not in {d.id for d in filtered.docs()}
    assert filtered.n_docs == 20


def test_filter_zero_thresholds_is_identity():
    c = build_corpus([rec("d1", 2002, [("issuer", "X")])])
    f = filter_corpus(c, min_fi_docs=0, min_pairs=0)
    assert f.vocabulary == c.vocabulary
    assert [d.id for d in f.docs()] == ["d1"]


def test_filter_runs_to_fixpoint_and_is_idempotent():
    # Dropping the thin docs pushes "EdgeBank" below the doc threshold, which
    # in turn thins another doc: the fixpoint must settle all of it.
    records = []
    for i in range(6):
        records.append(rec(f"core{i}", 2002, big_pairs("BigBank", 5)))
    for i in range(3):
        records.append(rec(f"thin{i}", 2002, [("issuer", "EdgeBank"), ("seller", "BigBank")]))
    records.append(
        rec("mid", 2002, big_pairs("BigBank", 4) + [("insurer", "EdgeBank")])
    )
    c = build_corpus(records)
    f1 = filter_corpus(c, min_fi_docs=5, min_pairs=5)
    f2 = filter_corpus(f1, min_fi_docs=5, min_pairs=5)
    assert {d.id for d in f1.docs()} == {d.id for d in f2.docs()}
    assert f1.vocabulary == f2.vocabulary
    assert all(d.tokens == e.tokens for d, e in zip(f1.docs(), f2.docs()))


def test_filter_empty_result_raises():
    c = build_corpus([rec("d1", 2002, [("issuer", "X")])])
    with pytest.raises(EmptyCorpusError):
        filter_corpus(c, min_fi_docs=2, min_pairs=1)


def test_weight_doubles_issuer_and_originator_only():
    c = build_corpus(
        [rec("d1", 2002, [("issuer", "X"), ("servicer", "Y"), ("servicer", "Y"), ("servicer", "Y")])]
    )
    w = weight_tokens(c)
    doc = w.docs()[0]
    assert doc.tokens[("issuer", "X")] == 2
    assert doc.tokens[("servicer", "Y")] == 3


def test_weight_multiplier_one_is_identity():
    c = build_corpus([rec("d1", 2002, [("issuer", "X")])])
    assert weight_tokens(c, multiplier=1) is c


def test_weight_preserves_structure_and_adds_exact_mass():
    c = build_corpus(
        [
            rec("d1", 2002, [("issuer", "X"), ("trustee", "Z")]),
            rec("d2", 2003, [("originator", "Y"), ("originator", "Y")]),
        ]
    )
    w = weight_tokens(c, multiplier=3)
    assert w.n_docs == c.n_docs
    assert w.vocabulary == c.vocabulary
    affected = 1 + 2  # one issuer token, two originator tokens
    assert w.total_tokens() == c.total_tokens() + affected * (3 - 1)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.integers(2002, 2007),
            st.lists(
                st.tuples(st.sampled_from(sorted(DEFAULT_ROLES)), st.sampled_from("ABCDE")),
                min_size=1,
                max_size=6,
            ),
        ),
        min_size=1,
        max_size=12,
    )
)
def test_jsonl_roundtrip_preserves_counts(doc_specs):
    records = [rec(f"d{i}", y, pairs) for i, (y, pairs) in enumerate(doc_specs)]
    c = build_corpus(records)
    path = None
    import tempfile, os

    with tempfile.NamedTemporaryFile("w", suffix=".jsonl", delete=False) as fh:
        path = fh.name
    try:
        write_jsonl(c, path)
        back = read_jsonl(path)
        assert back.vocabulary == c.vocabulary
        assert {d.id: d.tokens for d in back.docs()} == {d.id: d.tokens for d in c.docs()}
    finally:
        os.unlink(path)


def test_vocabulary_csv(tmp_path):
    c = build_corpus(
        [rec("d1", 2002, [("issuer", "X")]), rec("d2", 2003, [("issuer", "X"), ("seller", "Y")])]
    )
    out = tmp_path / "vocab.csv"
    write_vocabulary_csv(c, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "index,role,fi,doc_frequency"
    assert lines[1] == "0,issuer,X,2"
    assert lines[2] == "1,seller,Y,1"


def test_vocab_index_is_bijection():
    c = build_corpus(
        [rec("d1", 2002, [("issuer", "X"), ("seller", "Y"), ("trustee", "Z")])]
    )
    assert len(c.vocab_index) == len(c.vocabulary)
    for pair, idx in c.vocab_index.items():
        assert c.vocabulary[idx] == pair
