import numpy as np
import pytest

from resmbs.corpus import ProspectusDoc, build_corpus
from resmbs.errors import (
    EmptyCorpusError,
    InferenceError,
    NumericFailureError,
    VocabularyMismatchError,
)
from resmbs.synth import SynthConfig, generate_corpus
from resmbs.topics import (
    DtmFit,
    LdaFit,
    TopicModelConfig,
    classify_dynamics,
    doc_topics,
    dominant_topic,
    export_sankey,
    fit_dtm,
    fit_lda,
    load_fit,
    save_fit,
    top_terms,
    total_variation,
)


def rec(doc_id, year, weighted_pairs):
    return {
        "id": doc_id,
        "year": year,
        "pairs": [{"role": r, "fi": f, "count": c} for (r, f), c in weighted_pairs.items()],
    }


def two_doc_corpus():
    return build_corpus(
        [
            rec("d1", 2002, {("issuer", "a"): 5, ("seller", "b"): 5}),
            rec("d2", 2002, {("issuer", "c"): 5, ("seller", "d"): 5}),
        ]
    )


def planted_corpus(seed=0, n_communities=4, docs=30, **kw):
    config = SynthConfig(
        seed=seed,
        n_communities=n_communities,
        docs_per_community=docs,
        tokens_per_doc=kw.pop("tokens_per_doc", 20),
        pairs_per_community=kw.pop("pairs_per_community", 9),
        **kw,
    )
    return generate_corpus(config)


def test_lda_disjoint_vocabularies_separate():
    corpus = two_doc_corpus()
    fit = fit_lda(corpus, TopicModelConfig(k=2, iterations=80, seed=0, n_init=3))
    # oracle: under either label permutation, one topic's top-2 pairs must be
    # exactly one document's pairs
    tops = [
        {pair for pair, _ in top_terms(fit, k, n=2)} for k in range(2)
    ]
    d1 = {("issuer", "a"), ("seller", "b")}
    d2 = {("issuer", "c"), ("seller", "d")}
    assert (tops[0] == d1 and tops[1] == d2) or (tops[0] == d2 and tops[1] == d1)


def test_lda_rows_are_normalized():
    corpus, _ = planted_corpus()
    fit = fit_lda(corpus, TopicModelConfig(k=4, iterations=20, seed=1))
    np.testing.assert_allclose(fit.topic_word.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(fit.doc_topic.sum(axis=1), 1.0, atol=1e-9)
    assert (fit.topic_word >= 0).all()
    assert (fit.doc_topic >= 0).all()


def test_lda_single_doc_single_topic_closed_form():
    corpus = build_corpus([rec("d1", 2002, {("issuer", "a"): 3, ("seller", "b"): 1})])
    fit = fit_lda(corpus, TopicModelConfig(k=1, iterations=10, seed=0))
    # oracle: with one topic the fitted row is the smoothed empirical frequency
    expected = np.array([3.0, 1.0])
    expected = (expected + 1e-12) / (expected + 1e-12).sum()
    idx_a = fit.vocabulary.index(("issuer", "a"))
    idx_b = fit.vocabulary.index(("seller", "b"))
    np.testing.assert_allclose(fit.topic_word[0, [idx_a, idx_b]], expected[[0, 1]], atol=1e-6)
    np.testing.assert_allclose(fit.doc_topic, [[1.0]])


def test_lda_empty_corpus_and_oversized_k():
    with pytest.raises(EmptyCorpusError):
        build_corpus([])
    corpus = build_corpus([rec("d1", 2002, {("issuer", "a"): 1})])
    with pytest.raises(NumericFailureError):
        fit_lda(corpus, TopicModelConfig(k=5, iterations=5, seed=0))


def test_lda_bound_trace_is_monotone():
    corpus, _ = planted_corpus(seed=3)
    fit = fit_lda(corpus, TopicModelConfig(k=4, iterations=30, seed=2, convergence_tol=0.0))
    trace = fit.log_likelihood_trace
    for a, b in zip(trace, trace[1:]):
        assert b >= a - 1e-6 * abs(a)


def test_lda_seed_determinism_is_bitwise():
    corpus, _ = planted_corpus(seed=4)
    cfg = TopicModelConfig(k=4, iterations=15, seed=7)
    f1 = fit_lda(corpus, cfg)
    f2 = fit_lda(corpus, cfg)
    assert np.array_equal(f1.topic_word, f2.topic_word)
    assert np.array_equal(f1.doc_topic, f2.doc_topic)
    assert f1.log_likelihood_trace == f2.log_likelihood_trace


def test_mixture_distribution_sums_to_one():
    corpus, _ = planted_corpus(seed=5)
    fit = fit_lda(corpus, TopicModelConfig(k=4, iterations=15, seed=0))
    for d in range(0, fit.doc_topic.shape[0], 17):
        mix = fit.doc_topic[d] @ fit.topic_word
        assert mix.sum() == pytest.approx(1.0, abs=1e-9)


def aligned_tv(fit_dtm_, fit_lda_):
    """Greedy cosine alignment, then max per-topic TV across slices vs static."""
    T, K, _ = fit_dtm_.per_slice_topic_word.shape
    avg = fit_dtm_.per_slice_topic_word.mean(axis=0)
    used = set()
    worst = 0.0
    for k in range(K):
        sims = [
            (float(avg[k] @ fit_lda_.topic_word[j])
             / (np.linalg.norm(avg[k]) * np.linalg.norm(fit_lda_.topic_word[j])), j)
            for j in range(K) if j not in used
        ]
        _, j = max(sims)
        used.add(j)
        for t in range(T):
            worst = max(worst, total_variation(fit_dtm_.per_slice_topic_word[t, k], fit_lda_.topic_word[j]))
    return worst


def test_dtm_single_slice_matches_static():
    config = SynthConfig(seed=8, n_communities=3, docs_per_community=25, years=(2004, 2004))
    corpus, _ = generate_corpus(config)
    cfg = TopicModelConfig(k=3, iterations=40, seed=1, chain_var=0.05)
    dyn = fit_dtm(corpus, cfg)
    static = fit_lda(corpus, cfg)
    assert dyn.n_slices == 1
    assert aligned_tv(dyn, static) <= 0.05


def test_dtm_tiny_chain_var_freezes_slices():
    config = SynthConfig(seed=9, n_communities=3, docs_per_community=30, years=(2003, 2004))
    corpus, _ = generate_corpus(config)
    cfg = TopicModelConfig(k=3, iterations=40, seed=2, chain_var=1e-8)
    dyn = fit_dtm(corpus, cfg)
    for k in range(cfg.k):
        tv = total_variation(dyn.per_slice_topic_word[0, k], dyn.per_slice_topic_word[1, k])
        assert tv <= 0.05


def disjoint_slice_corpus():
    # dominant pairs differ per slice: slice 2002 uses ("issuer","early*"),
    # slice 2003 uses ("issuer","late*")
    records = []
    for i in range(25):
        records.append(rec(f"e{i}", 2002, {("issuer", f"early{i % 3}"): 10}))
        records.append(rec(f"l{i}", 2003, {("issuer", f"late{i % 3}"): 10}))
    return build_corpus(records)


def test_dtm_fast_chain_tracks_slices():
    # one topic forced to cover both slices: a fast chain must follow each
    # slice's own dominant pairs instead of blending them
    corpus = disjoint_slice_corpus()
    cfg = TopicModelConfig(k=1, iterations=50, seed=3, chain_var=0.75)
    dyn = fit_dtm(corpus, cfg)
    first = {p for p, _ in top_terms(dyn, 0, slice_index=0, n=3)}
    second = {p for p, _ in top_terms(dyn, 0, slice_index=1, n=3)}
    assert first == {("issuer", f"early{i}") for i in range(3)}
    assert second == {("issuer", f"late{i}") for i in range(3)}

    # the same corpus under a near-frozen chain blends the slices instead
    frozen = fit_dtm(corpus, TopicModelConfig(k=1, iterations=50, seed=3, chain_var=1e-8))
    tv = total_variation(frozen.per_slice_topic_word[0, 0], frozen.per_slice_topic_word[1, 0])
    assert tv <= 0.05


def test_dtm_slices_match_corpus_and_normalization():
    corpus, _ = planted_corpus(seed=10)
    cfg = TopicModelConfig(k=4, iterations=15, seed=0, chain_var=0.05)
    dyn = fit_dtm(corpus, cfg)
    assert dyn.n_slices == len(corpus.slices)
    np.testing.assert_allclose(dyn.per_slice_topic_word.sum(axis=2), 1.0, atol=1e-9)
    np.testing.assert_allclose(dyn.doc_topic.sum(axis=1), 1.0, atol=1e-9)


def test_dtm_bound_trace_is_monotone():
    corpus, _ = planted_corpus(seed=11, n_communities=3, docs=20)
    cfg = TopicModelConfig(k=3, iterations=25, seed=1, chain_var=0.05, convergence_tol=0.0)
    dyn = fit_dtm(corpus, cfg)
    trace = dyn.log_likelihood_trace
    for a, b in zip(trace, trace[1:]):
        assert b >= a - 1e-6 * abs(a)


def test_dtm_seed_determinism_is_bitwise():
    corpus, _ = planted_corpus(seed=12, n_communities=3, docs=15)
    cfg = TopicModelConfig(k=3, iterations=10, seed=5, chain_var=0.1)
    f1 = fit_dtm(corpus, cfg)
    f2 = fit_dtm(corpus, cfg)
    assert np.array_equal(f1.per_slice_topic_word, f2.per_slice_topic_word)
    assert np.array_equal(f1.doc_topic, f2.doc_topic)


def test_doc_topics_generative_oracle():
    # a document drawn wholly from one planted topic concentrates there
    rng = np.random.default_rng(0)
    K, W = 4, 40
    beta = np.zeros((K, W))
    for k in range(K):
        block = np.zeros(W)
        block[k * 10 : (k + 1) * 10] = rng.dirichlet(np.ones(10))
        beta[k] = block
    beta = (beta + 1e-12) / (beta + 1e-12).sum(axis=1, keepdims=True)
    vocab = [("issuer", f"v{i}") for i in range(W)]
    fit = LdaFit(
        topic_word=beta, doc_topic=np.ones((1, K)) / K, log_likelihood_trace=[0.0],
        vocabulary=vocab, doc_ids=["d0"], config=TopicModelConfig(k=K),
    )
    draws = rng.multinomial(200, beta[2])
    tokens = {vocab[i]: int(c) for i, c in enumerate(draws) if c > 0}
    doc = ProspectusDoc(id="new", year=2003, tokens=tokens)
    w = doc_topics(fit, doc)
    assert w[2] >= 0.9
    assert w.sum() == pytest.approx(1.0, abs=1e-9)


def test_doc_topics_uniform_fit_gives_uniform_weights():
    K, W = 3, 6
    beta = np.full((K, W), 1.0 / W)
    vocab = [("issuer", f"v{i}") for i in range(W)]
    fit = LdaFit(
        topic_word=beta, doc_topic=np.ones((1, K)) / K, log_likelihood_trace=[0.0],
        vocabulary=vocab, doc_ids=["d0"], config=TopicModelConfig(k=K),
    )
    doc = ProspectusDoc(id="new", year=2002, tokens={vocab[0]: 2, vocab[3]: 1})
    np.testing.assert_allclose(doc_topics(fit, doc), 1.0 / K, atol=1e-9)


def test_doc_topics_oov_and_empty():
    K, W = 2, 3
    beta = np.full((K, W), 1.0 / W)
    vocab = [("issuer", f"v{i}") for i in range(W)]
    fit = LdaFit(
        topic_word=beta, doc_topic=np.ones((1, K)) / K, log_likelihood_trace=[0.0],
        vocabulary=vocab, doc_ids=["d0"], config=TopicModelConfig(k=K),
    )
    doc = ProspectusDoc(id="n1", year=2002, tokens={vocab[0]: 1, ("issuer", "zz"): 4})
    with pytest.warns(UserWarning):
        w = doc_topics(fit, doc)
    assert w.sum() == pytest.approx(1.0)
    with pytest.raises(InferenceError):
        doc_topics(fit, ProspectusDoc(id="n2", year=2002, tokens={("issuer", "zz"): 1}))


def test_doc_topics_uses_nearest_slice_for_dynamic_fits():
    from resmbs.topics import nearest_slice

    W = 4
    vocab = [("issuer", f"v{i}") for i in range(W)]
    early = np.array([[0.97, 0.01, 0.01, 0.01], [0.01, 0.97, 0.01, 0.01]])
    late = np.array([[0.01, 0.01, 0.97, 0.01], [0.01, 0.01, 0.01, 0.97]])
    fit = DtmFit(
        per_slice_topic_word=np.stack([early, late]), doc_topic=np.ones((1, 2)) / 2,
        years=[2002, 2006], log_likelihood_trace=[0.0], vocabulary=vocab,
        doc_ids=["d"], config=TopicModelConfig(k=2),
    )
    assert nearest_slice([2002, 2006], 2030) == 1
    assert nearest_slice([2002, 2006], 2004) == 0  # tie resolves earlier
    doc = ProspectusDoc(id="new", year=2030, tokens={vocab[2]: 50})
    w = doc_topics(fit, doc)
    assert w[0] > 0.9  # matched against the late slice, where topic 0 owns v2
    doc_early = ProspectusDoc(id="old", year=2002, tokens={vocab[0]: 50})
    w = doc_topics(fit, doc_early)
    assert w[0] > 0.9


def test_dominant_topic_examples():
    assert dominant_topic([0.7, 0.2, 0.1]) == (0, 0.7, True)
    assert dominant_topic([0.5, 0.5]) == (0, 0.5, False)
    idx, weight, strong = dominant_topic([0.34, 0.33, 0.33])
    assert (idx, strong) == (0, False)
    assert weight == pytest.approx(0.34)


def _uniformish(K, W, seed):
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.ones(W), size=K)
    return rows


def _lda_stub(beta, vocab):
    return LdaFit(
        topic_word=beta, doc_topic=np.ones((1, beta.shape[0])) / beta.shape[0],
        log_likelihood_trace=[0.0], vocabulary=vocab, doc_ids=["d"],
        config=TopicModelConfig(k=beta.shape[0]),
    )


def _dtm_stub(per_slice, vocab, years=None):
    T, K, _ = per_slice.shape
    return DtmFit(
        per_slice_topic_word=per_slice, doc_topic=np.ones((1, K)) / K,
        years=years or list(range(2002, 2002 + T)), log_likelihood_trace=[0.0],
        vocabulary=vocab, doc_ids=["d"], config=TopicModelConfig(k=K),
    )


def test_classify_dynamics_three_ways():
    W = 12
    vocab = [("issuer", f"v{i}") for i in range(W)]
    base = _uniformish(3, W, 1)
    # topic 0: constant across slices and equal to a static topic -> stable
    # topic 1: aligned on average but drifting hard across slices -> evolving
    # topic 2: orthogonal to every reference -> dynamic
    drift_a = np.zeros(W)
    drift_a[:6] = base[1][:6]
    drift_a = drift_a / drift_a.sum()
    drift_b = np.zeros(W)
    drift_b[6:] = base[1][6:]
    drift_b = drift_b / drift_b.sum()
    lone = np.zeros(W)
    lone[-1] = 1.0
    refs = base.copy()
    refs[2] = np.roll(lone, 1)  # static reference far from the dynamic topic
    per_slice = np.stack(
        [
            np.vstack([base[0], drift_a, lone]),
            np.vstack([base[0], drift_b, lone]),
        ]
    )
    fast = _dtm_stub(per_slice, vocab)
    static = _lda_stub(refs, vocab)
    slow = _dtm_stub(np.stack([refs, refs]), vocab)
    labels = classify_dynamics(fast, static, slow, align_threshold=0.6, drift_threshold=0.3)
    assert labels == ["stable", "evolving", "dynamic"]


def test_classify_dynamics_vocab_mismatch():
    W = 5
    vocab_a = [("issuer", f"v{i}") for i in range(W)]
    vocab_b = [("issuer", f"u{i}") for i in range(W)]
    beta = _uniformish(2, W, 0)
    fast = _dtm_stub(np.stack([beta, beta]), vocab_a)
    static = _lda_stub(beta, vocab_b)
    slow = _dtm_stub(np.stack([beta, beta]), vocab_a)
    with pytest.raises(VocabularyMismatchError):
        classify_dynamics(fast, static, slow)


def test_top_terms_ordering_and_bounds():
    W = 4
    vocab = [("issuer", f"v{i}") for i in range(W)]
    beta = np.array([[0.4, 0.3, 0.2, 0.1], [0.25, 0.25, 0.25, 0.25]])
    fit = _lda_stub(beta, vocab)
    assert top_terms(fit, 0, n=1) == [(("issuer", "v0"), 0.4)]
    full = top_terms(fit, 1, n=10)
    assert [p for p, _ in full] == vocab  # ties resolve in vocabulary order
    with pytest.raises(IndexError):
        top_terms(fit, 5, n=1)


def test_export_sankey_matches_top_terms():
    W = 5
    vocab = [("issuer", f"v{i}") for i in range(W)]
    rows = _uniformish(2, W, 3)
    per_slice = np.stack([rows, rows])
    fit = _dtm_stub(per_slice, vocab, years=[2002, 2003])
    edges = export_sankey(fit, 0, n_per_slice=2)
    assert len(edges) == 4
    assert {e[0] for e in edges} == {2002, 2003}
    tops = top_terms(fit, 0, slice_index=0, n=2)
    assert [(e[1], e[2]) for e in edges[:2]] == tops
    # a stable planted topic keeps the same pair nodes in every slice
    assert {e[1] for e in edges[:2]} == {e[1] for e in edges[2:]}


def test_single_slice_sankey():
    W = 3
    vocab = [("issuer", f"v{i}") for i in range(W)]
    per_slice = _uniformish(1, W, 5)[None, :, :]
    fit = _dtm_stub(per_slice, vocab, years=[2005])
    assert len(export_sankey(fit, 0, n_per_slice=2)) == 2


def test_top_terms_recover_planted_supports():
    # generative oracle: every fitted topic's top pairs sit inside exactly
    # one planted community's support
    from resmbs.synth import community_support

    config = SynthConfig(
        seed=21, n_communities=4, docs_per_community=30,
        pairs_per_community=9, tokens_per_doc=20,
    )
    corpus, _ = generate_corpus(config)
    fit = fit_lda(corpus, TopicModelConfig(k=4, iterations=40, seed=3, n_init=3))
    supports = [set(community_support(config, c)) for c in range(4)]
    matched = set()
    for k in range(4):
        tops = {pair for pair, _ in top_terms(fit, k, n=5)}
        owners = [c for c, sup in enumerate(supports) if tops <= sup]
        assert len(owners) == 1, f"topic {k} top terms span supports"
        matched.add(owners[0])
    assert matched == {0, 1, 2, 3}


def test_oversized_k_warns():
    corpus = build_corpus(
        [rec("d1", 2002, {("issuer", "a"): 5, ("seller", "b"): 5})]
    )
    with pytest.warns(UserWarning, match="vocabulary"):
        fit_lda(corpus, TopicModelConfig(k=3, iterations=5, seed=0))


def test_label_permutation_equivalence():
    corpus, _ = planted_corpus(seed=13, n_communities=3, docs=15)
    fit = fit_lda(corpus, TopicModelConfig(k=3, iterations=20, seed=1))
    perm = [2, 0, 1]
    permuted = LdaFit(
        topic_word=fit.topic_word[perm],
        doc_topic=fit.doc_topic[:, perm],
        log_likelihood_trace=fit.log_likelihood_trace,
        vocabulary=fit.vocabulary,
        doc_ids=fit.doc_ids,
        config=fit.config,
    )
    doc = corpus.docs()[0]
    w = doc_topics(fit, doc)
    wp = doc_topics(permuted, doc)
    np.testing.assert_allclose(wp, w[perm], atol=1e-9)


def test_fit_persistence_roundtrip(tmp_path):
    corpus, _ = planted_corpus(seed=14, n_communities=3, docs=10)
    cfg = TopicModelConfig(k=3, iterations=8, seed=2, chain_var=0.05)
    static = fit_lda(corpus, cfg)
    dyn = fit_dtm(corpus, cfg)
    p1, p2 = tmp_path / "lda.json", tmp_path / "dtm.json"
    save_fit(static, p1)
    save_fit(dyn, p2)
    s = load_fit(p1)
    d = load_fit(p2)
    assert np.array_equal(s.topic_word, static.topic_word)
    assert np.array_equal(d.per_slice_topic_word, dyn.per_slice_topic_word)
    assert d.years == dyn.years
    assert s.vocabulary == static.vocabulary
    # byte-identical rewrite
    save_fit(s, tmp_path / "lda2.json")
    assert (tmp_path / "lda.json").read_bytes() == (tmp_path / "lda2.json").read_bytes()
