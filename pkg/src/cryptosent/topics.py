"""Corpus clustering and topic discovery: TF-IDF, K-means, 2-D PCA, LDA.

The LDA sampler is a collapsed Gibbs chain over token-topic assignments;
the inner loop is JIT-compiled when numba is available and falls back to
pure Python otherwise. Everything stochastic takes an explicit seed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .errors import ComputationError, InputError

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")
_NON_WORD_RE = re.compile(r"[^0-9a-z\s]+")


def default_stopwords() -> frozenset[str]:
    text = resources.files("cryptosent.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


@dataclass(frozen=True)
class Corpus:
    documents: tuple[tuple[int, ...], ...]  # token-id lists
    vocabulary: tuple[str, ...]
    doc_ids: tuple[str, ...]
    dropped: tuple[str, ...] = ()

    @property
    def n_documents(self) -> int:
        return len(self.documents)

    @property
    def n_tokens(self) -> int:
        return sum(len(d) for d in self.documents)

    def tokens_of(self, index: int) -> list[str]:
        return [self.vocabulary[t] for t in self.documents[index]]


def tokenize(text: str) -> list[str]:
    """Lowercase, strip URLs / @-mentions / punctuation, split on whitespace."""
    text = text.lower()
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = _NON_WORD_RE.sub(" ", text)
    return text.split()


def preprocess(
    raw_texts: Sequence[str],
    doc_ids: Sequence[str] | None = None,
    stopwords: Iterable[str] | None = None,
    min_token_length: int = 2,
    min_document_frequency: int = 1,
) -> Corpus:
    """Clean raw texts into a dense-vocabulary corpus; emptied documents are dropped."""
    if not raw_texts:
        raise InputError("no documents")
    if doc_ids is None:
        doc_ids = [str(i) for i in range(len(raw_texts))]
    if len(doc_ids) != len(raw_texts):
        raise InputError("doc_ids must match raw_texts length")
    stop = frozenset(stopwords) if stopwords is not None else default_stopwords()

    token_lists = []
    for text in raw_texts:
        tokens = [t for t in tokenize(text) if len(t) >= min_token_length and t not in stop]
        token_lists.append(tokens)

    if min_document_frequency > 1:
        df: dict[str, int] = {}
        for tokens in token_lists:
            for t in set(tokens):
                df[t] = df.get(t, 0) + 1
        token_lists = [
            [t for t in tokens if df[t] >= min_document_frequency] for tokens in token_lists
        ]

    vocabulary: list[str] = []
    index: dict[str, int] = {}
    documents: list[tuple[int, ...]] = []
    kept_ids: list[str] = []
    dropped: list[str] = []
    for doc_id, tokens in zip(doc_ids, token_lists):
        if not tokens:
            dropped.append(doc_id)
            continue
        ids = []
        for t in tokens:
            if t not in index:
                index[t] = len(vocabulary)
                vocabulary.append(t)
            ids.append(index[t])
        documents.append(tuple(ids))
        kept_ids.append(doc_id)
    if not documents:
        raise InputError("all documents were emptied by preprocessing")
    return Corpus(tuple(documents), tuple(vocabulary), tuple(kept_ids), tuple(dropped))


# -- TF-IDF --------------------------------------------------------------------


def tfidf(corpus: Corpus) -> np.ndarray:
    """Row-normalized tf-idf matrix: tf = count/len, idf = ln((1+D)/(1+df)) + 1."""
    D = corpus.n_documents
    V = len(corpus.vocabulary)
    counts = np.zeros((D, V))
    for i, doc in enumerate(corpus.documents):
        for t in doc:
            counts[i, t] += 1.0
    df = (counts > 0).sum(axis=0)
    idf = np.log((1.0 + D) / (1.0 + df)) + 1.0
    tf = counts / counts.sum(axis=1, keepdims=True)
    weights = tf * idf[None, :]
    norms = np.linalg.norm(weights, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return weights / norms


# -- K-means --------------------------------------------------------------------


@dataclass(frozen=True)
class KmeansResult:
    assignments: np.ndarray = field(repr=False)
    centroids: np.ndarray = field(repr=False)
    inertia: float = 0.0
    inertia_path: tuple[float, ...] = ()
    n_iterations: int = 0


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    p2 = np.einsum("ij,ij->i", points, points)[:, None]
    c2 = np.einsum("ij,ij->i", centroids, centroids)[None, :]
    return np.maximum(p2 + c2 - 2.0 * points @ centroids.T, 0.0)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = _sq_distances(points, np.array(centroids)).min(axis=1)
        total = d2.sum()
        if total <= 0:
            centroids.append(points[rng.integers(n)])
            continue
        centroids.append(points[rng.choice(n, p=d2 / total)])
    return np.array(centroids)


def kmeans(matrix: np.ndarray, k: int, seed: int = 0, max_iter: int = 300) -> KmeansResult:
    """Lloyd iterations from a k-means++ start until the assignment fixpoint.

    An emptied cluster is repaired by stealing the point currently farthest
    from its own centroid.
    """
    points = np.asarray(matrix, dtype=float)
    n = points.shape[0]
    if k > n:
        raise InputError(f"k={k} exceeds {n} rows")
    if k < 1:
        raise InputError("k must be >= 1")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(points, k, rng)

    assignments = np.full(n, -1)
    inertia_path: list[float] = []
    for iteration in range(1, max_iter + 1):
        d2 = _sq_distances(points, centroids)
        new_assignments = d2.argmin(axis=1)
        stolen = np.zeros(n, dtype=bool)
        empty = [c for c in range(k) if not (new_assignments == c).any()]
        while empty:
            cluster = empty.pop(0)
            own = d2[np.arange(n), new_assignments].copy()
            own[stolen] = -np.inf
            victim = int(np.argmax(own))
            donor = int(new_assignments[victim])
            new_assignments[victim] = cluster
            stolen[victim] = True
            if not (new_assignments == donor).any():
                empty.append(donor)
        for cluster in range(k):
            members = points[new_assignments == cluster]
            centroids[cluster] = members.mean(axis=0)
        inertia = float(((points - centroids[new_assignments]) ** 2).sum())
        inertia_path.append(inertia)
        if (new_assignments == assignments).all():
            break
        assignments = new_assignments
    return KmeansResult(assignments, centroids, inertia_path[-1], tuple(inertia_path), len(inertia_path))


def silhouette_score(points: np.ndarray, assignments: np.ndarray) -> float:
    """Mean Euclidean silhouette; singleton clusters score 0 by convention."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    labels = np.unique(assignments)
    if len(labels) < 2:
        raise InputError("need at least 2 clusters for a silhouette")
    dist = np.sqrt(_sq_distances(points, points))
    scores = np.zeros(n)
    for i in range(n):
        own = assignments[i]
        mask_own = (assignments == own)
        if mask_own.sum() <= 1:
            scores[i] = 0.0
            continue
        a = dist[i, mask_own].sum() / (mask_own.sum() - 1)
        b = min(dist[i, assignments == other].mean() for other in labels if other != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def select_k(
    matrix: np.ndarray, k_range: Sequence[int], seed: int = 0, max_iter: int = 300
) -> tuple[int, dict[int, float]]:
    """Pick the cluster count maximizing the mean silhouette; ties to smaller k."""
    points = np.asarray(matrix, dtype=float)
    n = points.shape[0]
    ks = sorted(set(int(k) for k in k_range))
    if not ks or ks[0] < 2 or ks[-1] > n - 1:
        raise InputError(f"k range must lie within 2..{n - 1}")
    if float(points.var(axis=0).sum()) == 0.0:
        raise ComputationError("zero variance: all points identical")
    scores: dict[int, float] = {}
    for k in ks:
        result = kmeans(points, k, seed=seed, max_iter=max_iter)
        scores[k] = silhouette_score(points, result.assignments)
    best = max(ks, key=lambda k: (scores[k], -k))
    return best, scores


# -- PCA ------------------------------------------------------------------------


def pca2(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project rows onto the top-2 principal axes; returns (coords, explained fractions)."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise InputError("need a matrix with at least 2 rows and 2 columns")
    centered = X - X.mean(axis=0, keepdims=True)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    total = float((s**2).sum())
    if total <= 0:
        raise ComputationError("zero-variance matrix")
    for i in range(2):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0:
            vt[i] = -vt[i]
    coords = centered @ vt[:2].T
    explained = (s[:2] ** 2) / total
    if explained.shape[0] < 2:
        explained = np.pad(explained, (0, 2 - explained.shape[0]))
    return coords, explained


# -- LDA -----------------------------------------------------------------------

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def _gibbs_python(w, d, z, n_dk, n_kw, n_k, alpha, beta, iterations, seed):
    np.random.seed(seed)
    K = n_k.shape[0]
    V = n_kw.shape[1]
    n_tokens = w.shape[0]
    probs = np.empty(K)
    for _ in range(iterations):
        for i in range(n_tokens):
            word, doc, topic = w[i], d[i], z[i]
            n_dk[doc, topic] -= 1
            n_kw[topic, word] -= 1
            n_k[topic] -= 1
            total = 0.0
            for k in range(K):
                p = (n_dk[doc, k] + alpha) * (n_kw[k, word] + beta) / (n_k[k] + V * beta)
                probs[k] = p
                total += p
            u = np.random.random() * total
            acc = 0.0
            topic = K - 1
            for k in range(K):
                acc += probs[k]
                if u < acc:
                    topic = k
                    break
            z[i] = topic
            n_dk[doc, topic] += 1
            n_kw[topic, word] += 1
            n_k[topic] += 1


if _HAVE_NUMBA:
    _gibbs_jit = numba.njit(cache=True)(_gibbs_python)
else:  # pragma: no cover
    _gibbs_jit = _gibbs_python


@dataclass(frozen=True)
class TopicModel:
    n_topics: int
    phi: np.ndarray = field(repr=False)  # K x V topic-word distributions
    theta: np.ndarray = field(repr=False)  # D x K document-topic distributions
    alpha: float = 0.0
    beta: float = 0.0
    iterations: int = 0
    seed: int = 0

    def top_words(self, corpus: Corpus, n: int = 20) -> list[list[str]]:
        out = []
        for k in range(self.n_topics):
            order = np.argsort(-self.phi[k])[:n]
            out.append([corpus.vocabulary[v] for v in order])
        return out


def lda_gibbs(
    corpus: Corpus,
    n_topics: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 0,
) -> TopicModel:
    """Collapsed Gibbs sampling of LDA; deterministic for a given seed."""
    if n_topics < 1:
        raise InputError("n_topics must be >= 1")
    if iterations < 1:
        raise InputError("iterations must be >= 1")
    if alpha is None:
        alpha = 50.0 / n_topics
    V = len(corpus.vocabulary)
    D = corpus.n_documents
    w = np.array([t for doc in corpus.documents for t in doc], dtype=np.int64)
    d = np.array(
        [i for i, doc in enumerate(corpus.documents) for _ in doc], dtype=np.int64
    )
    rng = np.random.default_rng(seed)
    z = rng.integers(0, n_topics, size=w.shape[0]).astype(np.int64)

    n_dk = np.zeros((D, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, V), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    for word, doc, topic in zip(w, d, z):
        n_dk[doc, topic] += 1
        n_kw[topic, word] += 1
        n_k[topic] += 1

    _gibbs_jit(w, d, z, n_dk, n_kw, n_k, float(alpha), float(beta), int(iterations), int(seed))

    phi = (n_kw + beta) / (n_k[:, None] + V * beta)
    doc_len = n_dk.sum(axis=1, keepdims=True)
    theta = (n_dk + alpha) / (doc_len + n_topics * alpha)
    return TopicModel(n_topics, phi, theta, float(alpha), float(beta), iterations, seed)
