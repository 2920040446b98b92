"""LDA topic modeling of interview transcripts via collapsed Gibbs sampling,
theme frequency tables, and topic co-occurrence graphs."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from streetgauge.kernels import get_backend
from streetgauge.kernels.gibbs_py import SPLITMIX_GOLDEN
from streetgauge.segmentation import _mix64

DEFAULT_K = 7
DEFAULT_BETA = 0.01
DEFAULT_ITERS = 1000
DEFAULT_BURN_IN = 200
DEFAULT_COOC_THRESHOLD = 0.2

DEFAULT_STOPWORDS = frozenset(
    """a an and are as at be but by for from had has have i if in is it its
    of on or our so that the their there they this to was we were what when
    which with would you your""".split()
)


class CorpusError(ValueError):
    """Raised when a corpus is structurally unusable."""


@dataclass
class Document:
    doc_id: str
    tokens: list[int]


@dataclass
class Corpus:
    documents: list[Document]
    vocabulary: list[str]

    def __post_init__(self):
        if not self.documents:
            raise CorpusError("corpus has no documents")
        v = len(self.vocabulary)
        for doc in self.documents:
            if not doc.tokens:
                raise CorpusError(f"document {doc.doc_id!r} has no tokens")
            bad = [t for t in doc.tokens if not 0 <= t < v]
            if bad:
                raise CorpusError(f"document {doc.doc_id!r} holds out-of-vocabulary index {bad[0]}")

    @property
    def n_tokens(self) -> int:
        return sum(len(d.tokens) for d in self.documents)


def tokenize(
    raw_docs: list[tuple[str, str]],
    stopwords: frozenset[str] | set[str] = DEFAULT_STOPWORDS,
    min_token_len: int = 3,
) -> Corpus:
    """Lowercase, split on non-alphanumerics, drop stopwords/short tokens.

    raw_docs holds (doc_id, text) pairs.  The vocabulary is built in
    first-seen order, so identical corpora index identically.  Documents
    left empty after filtering are dropped with a warning.
    """
    vocab_index: dict[str, int] = {}
    vocabulary: list[str] = []
    documents: list[Document] = []
    for doc_id, text in raw_docs:
        tokens: list[int] = []
        word = []
        for ch in text.lower() + " ":
            if ch.isalnum():
                word.append(ch)
                continue
            if word:
                term = "".join(word)
                word = []
                if len(term) < min_token_len or term in stopwords:
                    continue
                if term not in vocab_index:
                    vocab_index[term] = len(vocabulary)
                    vocabulary.append(term)
                tokens.append(vocab_index[term])
        if not tokens:
            warnings.warn(f"document {doc_id!r} is empty after filtering; dropped", stacklevel=2)
            continue
        documents.append(Document(doc_id=str(doc_id), tokens=tokens))
    if not documents:
        raise CorpusError("every document is empty after filtering")
    return Corpus(documents=documents, vocabulary=vocabulary)


def load_corpus(path: str | Path, **kwargs) -> Corpus:
    """Tokenize a line-delimited JSON transcript file of {doc_id, text}."""
    raw: list[tuple[str, str]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                raw.append((str(obj["doc_id"]), str(obj["text"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"line {lineno}: {exc}") from exc
    if not raw:
        raise CorpusError(f"{path}: no documents")
    return tokenize(raw, **kwargs)


@dataclass
class TopicModel:
    k: int
    alpha: float
    beta: float
    phi: np.ndarray  # (K, V) topic-word distributions
    theta: np.ndarray  # (D, K) document-topic distributions
    assignments: np.ndarray  # per-token topic ids, documents concatenated
    seed: int
    vocabulary: list[str]
    doc_ids: list[str]
    log_likelihood: list[float] = field(default_factory=list)
    backend: str = "auto"

    def top_words(self, n: int = 10) -> list[list[str]]:
        """The n highest-probability terms per topic (index order breaks ties)."""
        out = []
        for k in range(self.k):
            order = np.argsort(-self.phi[k], kind="stable")[:n]
            out.append([self.vocabulary[i] for i in order])
        return out

    def to_json_dict(self, top_n: int = 10) -> dict:
        return {
            "k": self.k,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "backend": self.backend,
            "vocabulary": self.vocabulary,
            "doc_ids": self.doc_ids,
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "top_words": self.top_words(top_n),
            "log_likelihood": self.log_likelihood,
        }


def joint_log_likelihood(
    n_dk: np.ndarray, n_kw: np.ndarray, alpha: float, beta: float
) -> float:
    """log p(w, z | alpha, beta) for collapsed LDA, via the gamma identity."""
    n_docs, k = n_dk.shape
    vocab = n_kw.shape[1]
    n_d = n_dk.sum(axis=1)
    n_k = n_kw.sum(axis=1)
    ll = n_docs * (gammaln(k * alpha) - k * gammaln(alpha))
    ll += gammaln(n_dk + alpha).sum() - gammaln(n_d + k * alpha).sum()
    ll += k * (gammaln(vocab * beta) - vocab * gammaln(beta))
    ll += gammaln(n_kw + beta).sum() - gammaln(n_k + vocab * beta).sum()
    return float(ll)


def fit_lda(
    corpus: Corpus,
    k: int = DEFAULT_K,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iters: int = DEFAULT_ITERS,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
    backend: str = "auto",
) -> TopicModel:
    """Collapsed Gibbs sampling; phi/theta from post-burn-in mean counts.

    alpha defaults to 50/k.  Deterministic per (corpus, k, seed) and
    identical across kernel backends.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if iters <= burn_in:
        raise ValueError(f"iters ({iters}) must exceed burn_in ({burn_in})")
    if k > corpus.n_tokens:
        raise ValueError(f"k={k} exceeds the corpus token count {corpus.n_tokens}")
    if alpha is None:
        alpha = 50.0 / k
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")

    kernel = get_backend(backend)
    n_docs = len(corpus.documents)
    vocab = len(corpus.vocabulary)

    doc_of = np.concatenate(
        [np.full(len(d.tokens), i, dtype=np.int32) for i, d in enumerate(corpus.documents)]
    )
    word_of = np.concatenate(
        [np.asarray(d.tokens, dtype=np.int32) for d in corpus.documents]
    )
    n_tokens = doc_of.shape[0]

    # Initial assignments come from the same splitmix64 stream the sweep
    # kernels consume, drawn here in one vectorized pass.
    state0 = np.uint64(seed)
    with np.errstate(over="ignore"):
        states = state0 + np.uint64(SPLITMIX_GOLDEN) * np.arange(
            1, n_tokens + 1, dtype=np.uint64
        )
    uniforms = (_mix64(states) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    z = np.minimum((uniforms * k).astype(np.int32), k - 1)
    rng_state = int(states[-1]) if n_tokens else int(state0)

    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, vocab), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kw, (z, word_of), 1)
    np.add.at(n_k, z, 1)

    acc_dk = np.zeros((n_docs, k), dtype=np.float64)
    acc_kw = np.zeros((k, vocab), dtype=np.float64)
    ll_history: list[float] = []
    n_samples = 0

    for it in range(1, iters + 1):
        rng_state = kernel.gibbs_sweep(
            doc_of, word_of, z, n_dk, n_kw, n_k, float(alpha), float(beta), rng_state
        )
        ll_history.append(joint_log_likelihood(n_dk, n_kw, alpha, beta))
        if it > burn_in:
            acc_dk += n_dk
            acc_kw += n_kw
            n_samples += 1

    mean_dk = acc_dk / n_samples
    mean_kw = acc_kw / n_samples
    phi = mean_kw + beta
    phi /= phi.sum(axis=1, keepdims=True)
    theta = mean_dk + alpha
    theta /= theta.sum(axis=1, keepdims=True)

    return TopicModel(
        k=k,
        alpha=float(alpha),
        beta=float(beta),
        phi=phi,
        theta=theta,
        assignments=z.copy(),
        seed=seed,
        vocabulary=list(corpus.vocabulary),
        doc_ids=[d.doc_id for d in corpus.documents],
        log_likelihood=ll_history,
        backend=backend,
    )


@dataclass
class ThemeRow:
    group: str
    theme: str
    count: int
    pct: float


def theme_frequency_table(coded_statements: list[dict]) -> list[ThemeRow]:
    """Counts and within-group percentages of coded (group, theme) statements.

    Percentages use the group's statement total as denominator, so each
    group's rows sum to 100% up to rounding.  Rows are ordered by group,
    then theme, first-seen.
    """
    group_totals: dict[str, int] = {}
    counts: dict[tuple[str, str], int] = {}
    group_order: list[str] = []
    theme_order: dict[str, list[str]] = {}
    for stmt in coded_statements:
        try:
            group, theme = str(stmt["group"]), str(stmt["theme"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"coded statement missing group/theme: {stmt!r}") from exc
        if group not in group_totals:
            group_totals[group] = 0
            group_order.append(group)
            theme_order[group] = []
        if (group, theme) not in counts:
            counts[(group, theme)] = 0
            theme_order[group].append(theme)
        group_totals[group] += 1
        counts[(group, theme)] += 1
    rows = []
    for group in group_order:
        for theme in theme_order[group]:
            c = counts[(group, theme)]
            rows.append(
                ThemeRow(group=group, theme=theme, count=c, pct=100.0 * c / group_totals[group])
            )
    return rows


@dataclass
class CoocGraph:
    nodes: list[str]
    edges: list[tuple[int, int, int]]  # (i, j, weight), i < j

    def to_json_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "edges": [{"i": i, "j": j, "weight": w} for i, j, w in self.edges],
        }


def cooccurrence_graph(
    model: TopicModel, threshold: float = DEFAULT_COOC_THRESHOLD, labels: list[str] | None = None
) -> CoocGraph:
    """Edges count documents where both topics reach the theta threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    if labels is None:
        labels = [f"topic_{k}" for k in range(model.k)]
    elif len(labels) != model.k:
        raise ValueError(f"{len(labels)} labels for {model.k} topics")
    present = model.theta >= threshold  # (D, K)
    weights = present.T.astype(np.int64) @ present.astype(np.int64)
    edges = [
        (i, j, int(weights[i, j]))
        for i in range(model.k)
        for j in range(i + 1, model.k)
        if weights[i, j] >= 1
    ]
    return CoocGraph(nodes=list(labels), edges=edges)


def write_topic_model(model: TopicModel, path: str | Path, top_n: int = 10) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_json_dict(top_n), fh, sort_keys=True)
        fh.write("\n")


def write_cooc_graph(graph: CoocGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")
