"""Tokenization, collapsed-Gibbs topic fitting, theme tables, co-occurrence."""

import json
import math
import warnings

import numpy as np
import pytest

from streetgauge.kernels import HAVE_COMPILED, get_backend, gibbs_py
from streetgauge.kernels.gibbs_py import SPLITMIX_GOLDEN, splitmix64_next
from streetgauge.segmentation import _mix64
from streetgauge.topics import (
    CoocGraph,
    CorpusError,
    TopicModel,
    cooccurrence_graph,
    fit_lda,
    joint_log_likelihood,
    load_corpus,
    theme_frequency_table,
    tokenize,
    write_cooc_graph,
    write_topic_model,
)

POOL_GREEN = ["tree", "park", "bench", "shade", "grass", "flower", "garden", "lawn"]
POOL_TRAFFIC = ["engine", "truck", "horn", "exhaust", "traffic", "asphalt", "diesel", "fume"]


def two_pool_corpus(n_docs=30, doc_len=30, seed=5):
    rng = np.random.default_rng(seed)
    raw, labels = [], []
    for i in range(n_docs):
        pool = POOL_GREEN if i % 2 == 0 else POOL_TRAFFIC
        raw.append((f"doc{i}", " ".join(rng.choice(pool, size=doc_len))))
        labels.append(i % 2)
    return tokenize(raw), labels


def mixed_corpus(n_docs=12, doc_len=40, vocab=40, seed=11):
    rng = np.random.default_rng(seed)
    words = [f"word{i:02d}" for i in range(vocab)]
    raw = [
        (f"doc{i}", " ".join(rng.choice(words, size=doc_len))) for i in range(n_docs)
    ]
    return tokenize(raw)


# ------------------------------------------------------------ tokenizer


def test_tokenize_filters_and_first_seen_vocabulary():
    corpus = tokenize([("d1", "Zebra apple, zebra!"), ("d2", "apple mango")])
    assert corpus.vocabulary == ["zebra", "apple", "mango"]
    assert corpus.documents[0].tokens == [0, 1, 0]
    assert corpus.documents[1].tokens == [1, 2]


def test_tokenize_drops_stopwords_and_short_tokens():
    corpus = tokenize([("d", "the sidewalk is by an old oak; go sit")])
    # "the/is/by/an" are stopwords, "go" (2 chars) is short, "oak/sit" pass
    assert corpus.vocabulary == ["sidewalk", "old", "oak", "sit"]


def test_tokenize_splits_on_every_nonalnum():
    corpus = tokenize([("d", "side-walk... SIDE_WALK")])
    assert corpus.vocabulary == ["side", "walk"]
    assert corpus.documents[0].tokens == [0, 1, 0, 1]


def test_tokenize_min_len_override():
    corpus = tokenize([("d", "go up and out")], min_token_len=2)
    assert corpus.vocabulary == ["go", "up", "out"]  # "and" still a stopword


def test_empty_document_dropped_with_warning():
    with pytest.warns(UserWarning, match="dropped"):
        corpus = tokenize([("keep", "lovely shade trees"), ("hollow", "a an the it")])
    assert [d.doc_id for d in corpus.documents] == ["keep"]


def test_all_empty_corpus_raises():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(CorpusError):
            tokenize([("a", "an the"), ("b", "it is")])


def test_load_corpus_roundtrip_and_errors(tmp_path):
    path = tmp_path / "transcripts.jsonl"
    path.write_text(
        json.dumps({"doc_id": "t1", "text": "shade trees everywhere"})
        + "\n\n"
        + json.dumps({"doc_id": "t2", "text": "loud traffic noise"})
        + "\n"
    )
    corpus = load_corpus(path)
    assert [d.doc_id for d in corpus.documents] == ["t1", "t2"]
    assert "shade" in corpus.vocabulary and "traffic" in corpus.vocabulary

    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"doc_id": "x", "text": "fine here"}\nnot json\n')
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(bad)


# ------------------------------------------------------- gibbs sampling


def test_two_topic_corpus_separates_documents():
    corpus, labels = two_pool_corpus()
    model = fit_lda(corpus, k=2, alpha=1.0, iters=150, burn_in=50, seed=0)
    dominant = model.theta.argmax(axis=1)
    labels = np.asarray(labels)
    accuracy = max(
        float(np.mean(dominant == labels)), float(np.mean(dominant == 1 - labels))
    )
    assert accuracy >= 0.95
    # the two pools should dominate opposite topics
    top = model.top_words(4)
    joined = [set(t) for t in top]
    green_topic = 0 if joined[0] & set(POOL_GREEN) else 1
    assert joined[green_topic] <= set(POOL_GREEN)
    assert joined[1 - green_topic] <= set(POOL_TRAFFIC)


def test_distributions_normalized_and_ll_improves():
    corpus, _ = two_pool_corpus()
    model = fit_lda(corpus, k=2, alpha=1.0, iters=120, burn_in=40, seed=3)
    assert np.all(model.phi > 0) and np.all(model.theta > 0)
    np.testing.assert_allclose(model.phi.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(model.theta.sum(axis=1), 1.0, atol=1e-9)
    assert len(model.log_likelihood) == 120
    assert model.log_likelihood[-1] > model.log_likelihood[0]


def test_fit_is_deterministic_per_seed():
    corpus = mixed_corpus()
    a = fit_lda(corpus, k=3, iters=30, burn_in=10, seed=4)
    b = fit_lda(corpus, k=3, iters=30, burn_in=10, seed=4)
    assert a.phi.tobytes() == b.phi.tobytes()
    assert a.theta.tobytes() == b.theta.tobytes()
    assert np.array_equal(a.assignments, b.assignments)
    assert a.log_likelihood == b.log_likelihood

    c = fit_lda(corpus, k=3, iters=30, burn_in=10, seed=5)
    assert not np.array_equal(a.assignments, c.assignments)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
def test_backends_bit_identical_through_fit():
    corpus = mixed_corpus()
    py = fit_lda(corpus, k=3, iters=40, burn_in=10, seed=9, backend="python")
    cy = fit_lda(corpus, k=3, iters=40, burn_in=10, seed=9, backend="compiled")
    assert py.backend == "python" and cy.backend == "compiled"
    assert py.phi.tobytes() == cy.phi.tobytes()
    assert py.theta.tobytes() == cy.theta.tobytes()
    assert np.array_equal(py.assignments, cy.assignments)
    assert py.log_likelihood == cy.log_likelihood


def random_sweep_problem(seed=0, n_docs=5, vocab=20, n_tokens=200, k=4):
    rng = np.random.default_rng(seed)
    doc_of = rng.integers(0, n_docs, n_tokens).astype(np.int32)
    word_of = rng.integers(0, vocab, n_tokens).astype(np.int32)
    z = rng.integers(0, k, n_tokens).astype(np.int32)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, vocab), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kw, (z, word_of), 1)
    np.add.at(n_k, z, 1)
    return doc_of, word_of, z, n_dk, n_kw, n_k


def test_sweep_keeps_count_tables_consistent_with_assignments():
    doc_of, word_of, z, n_dk, n_kw, n_k = random_sweep_problem()
    state = gibbs_py.gibbs_sweep(doc_of, word_of, z, n_dk, n_kw, n_k, 0.5, 0.01, 7)
    assert isinstance(state, int) and state != 7
    want_dk = np.zeros_like(n_dk)
    want_kw = np.zeros_like(n_kw)
    np.add.at(want_dk, (doc_of, z), 1)
    np.add.at(want_kw, (z, word_of), 1)
    assert np.array_equal(n_dk, want_dk)
    assert np.array_equal(n_kw, want_kw)
    assert np.array_equal(n_k, n_kw.sum(axis=1))
    assert n_dk.sum() == len(z)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
def test_sweep_kernels_bit_identical():
    compiled = get_backend("compiled")
    a = random_sweep_problem(seed=3)
    b = tuple(arr.copy() for arr in a)
    state_py = gibbs_py.gibbs_sweep(*a, 0.7, 0.02, 99)
    state_cy = compiled.gibbs_sweep(*b, 0.7, 0.02, 99)
    assert state_py == state_cy
    for got, want in zip(a, b):
        assert np.array_equal(got, want)


def test_vectorized_init_matches_sequential_stream():
    seed, n, k = 42, 64, 7
    state = seed
    seq_out = []
    for _ in range(n):
        state, out = splitmix64_next(state)
        seq_out.append(out)
    with np.errstate(over="ignore"):
        states = np.uint64(seed) + np.uint64(SPLITMIX_GOLDEN) * np.arange(
            1, n + 1, dtype=np.uint64
        )
        vec_out = _mix64(states)
    assert [int(v) for v in vec_out] == seq_out
    assert int(states[-1]) == state
    z_vec = np.minimum(
        ((vec_out >> np.uint64(11)) * (1.0 / 2**53) * k).astype(np.int32), k - 1
    )
    z_seq = [min(int((o >> 11) * (1.0 / 2**53) * k), k - 1) for o in seq_out]
    assert z_vec.tolist() == z_seq


def oracle_joint_ll(n_dk, n_kw, alpha, beta):
    n_docs, k = n_dk.shape
    vocab = n_kw.shape[1]
    ll = 0.0
    for d in range(n_docs):
        ll += math.lgamma(k * alpha) - k * math.lgamma(alpha)
        for j in range(k):
            ll += math.lgamma(n_dk[d, j] + alpha)
        ll -= math.lgamma(int(n_dk[d].sum()) + k * alpha)
    for j in range(k):
        ll += math.lgamma(vocab * beta) - vocab * math.lgamma(beta)
        for w in range(vocab):
            ll += math.lgamma(n_kw[j, w] + beta)
        ll -= math.lgamma(int(n_kw[j].sum()) + vocab * beta)
    return ll


def test_joint_log_likelihood_matches_scalar_oracle():
    for seed in range(5):
        _, _, _, n_dk, n_kw, _ = random_sweep_problem(seed=seed, n_tokens=500, vocab=30)
        got = joint_log_likelihood(n_dk, n_kw, alpha=0.8, beta=0.05)
        want = oracle_joint_ll(n_dk, n_kw, 0.8, 0.05)
        assert got == pytest.approx(want, rel=1e-10)


def test_fit_lda_validation():
    corpus, _ = two_pool_corpus(n_docs=4, doc_len=6)
    with pytest.raises(ValueError):
        fit_lda(corpus, k=1)
    with pytest.raises(ValueError):
        fit_lda(corpus, k=2, iters=10, burn_in=10)
    with pytest.raises(ValueError):
        fit_lda(corpus, k=2, alpha=0.0)
    with pytest.raises(ValueError):
        fit_lda(corpus, k=2, beta=-1.0)
    with pytest.raises(ValueError):
        fit_lda(corpus, k=1000, iters=5, burn_in=1)  # more topics than tokens
    with pytest.raises(ValueError):
        get_backend("bogus")


def test_default_hyperparameters():
    corpus = mixed_corpus(n_docs=4, doc_len=20)
    model = fit_lda(corpus, k=4, iters=5, burn_in=1, seed=0)
    assert model.alpha == pytest.approx(50.0 / 4)
    assert model.beta == pytest.approx(0.01)


def test_top_words_stable_under_ties():
    model = TopicModel(
        k=2,
        alpha=1.0,
        beta=0.01,
        phi=np.array([[0.25, 0.25, 0.5], [0.5, 0.25, 0.25]]),
        theta=np.array([[0.5, 0.5]]),
        assignments=np.zeros(1, dtype=np.int32),
        seed=0,
        vocabulary=["ash", "birch", "cedar"],
        doc_ids=["d"],
    )
    assert model.top_words(2) == [["cedar", "ash"], ["ash", "birch"]]


# -------------------------------------------------------- theme tables


def test_theme_percentages_match_published_arithmetic():
    statements = []
    statements += [{"group": "residents", "theme": "greenery"}] * 67
    statements += [{"group": "residents", "theme": "traffic"}] * 111
    statements += [{"group": "merchants", "theme": "parking"}] * 36
    statements += [{"group": "merchants", "theme": "footfall"}] * 43
    rows = theme_frequency_table(statements)
    by_key = {(r.group, r.theme): r for r in rows}
    greenery = by_key[("residents", "greenery")]
    assert greenery.count == 67
    assert round(greenery.pct, 1) == 37.6
    parking = by_key[("merchants", "parking")]
    assert parking.count == 36
    assert round(parking.pct, 1) == 45.6
    # groups orderd first-seen, themes first-seen within, shares sum to 100
    assert [(r.group, r.theme) for r in rows] == [
        ("residents", "greenery"),
        ("residents", "traffic"),
        ("merchants", "parking"),
        ("merchants", "footfall"),
    ]
    for group in ("residents", "merchants"):
        assert sum(r.pct for r in rows if r.group == group) == pytest.approx(100.0)


def test_theme_table_rejects_malformed_statements():
    with pytest.raises(ValueError):
        theme_frequency_table([{"group": "residents"}])


# -------------------------------------------------------- cooccurrence


def hand_model(theta):
    theta = np.asarray(theta, dtype=float)
    k = theta.shape[1]
    return TopicModel(
        k=k,
        alpha=1.0,
        beta=0.01,
        phi=np.full((k, 3), 1.0 / 3),
        theta=theta,
        assignments=np.zeros(1, dtype=np.int32),
        seed=0,
        vocabulary=["one", "two", "six"],
        doc_ids=[f"d{i}" for i in range(theta.shape[0])],
    )


def test_cooccurrence_counts_documents_sharing_topics():
    model = hand_model(
        [
            [0.5, 0.5, 0.0],
            [0.4, 0.3, 0.3],
            [0.9, 0.05, 0.05],
        ]
    )
    graph = cooccurrence_graph(model, threshold=0.2)
    assert graph.nodes == ["topic_0", "topic_1", "topic_2"]
    assert graph.edges == [(0, 1, 2), (0, 2, 1), (1, 2, 1)]


def test_cooccurrence_threshold_is_inclusive_and_validated():
    model = hand_model([[0.2, 0.8, 0.0]])
    graph = cooccurrence_graph(model, threshold=0.2)
    assert graph.edges == [(0, 1, 1)]
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            cooccurrence_graph(model, threshold=bad)
    with pytest.raises(ValueError):
        cooccurrence_graph(model, labels=["only_one"])
    labeled = cooccurrence_graph(model, labels=["calm", "busy", "mixed"])
    assert labeled.nodes == ["calm", "busy", "mixed"]


def test_model_and_graph_serialization(tmp_path):
    corpus = mixed_corpus(n_docs=4, doc_len=20)
    model = fit_lda(corpus, k=2, iters=6, burn_in=2, seed=0)
    model_path = tmp_path / "topic_model.json"
    write_topic_model(model, model_path, top_n=3)
    doc = json.loads(model_path.read_text())
    assert doc["k"] == 2
    assert doc["doc_ids"] == model.doc_ids
    assert len(doc["top_words"][0]) == 3
    np.testing.assert_allclose(np.array(doc["theta"]), model.theta)

    graph = cooccurrence_graph(model, threshold=0.3)
    graph_path = tmp_path / "cooc.json"
    write_cooc_graph(graph, graph_path)
    parsed = json.loads(graph_path.read_text())
    assert parsed["nodes"] == graph.nodes
    assert [(e["i"], e["j"], e["weight"]) for e in parsed["edges"]] == graph.edges
