"""Candidate event features and the logistic-regression verdict.

Four context features compare a candidate against regional history and the
current window; four static features summarize the candidate itself. The
model is plain L2-regularized logistic regression trained by full-batch
gradient descent; feature standardization happens inside training and is
folded back into flat raw-feature weights, so the persisted model is just a
weight vector and a bias.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .config import ClassifierConfig
from .embedding import EmbeddingModel, NoKnownKeywordsError
from .geo import epanechnikov, haversine_m, haversine_m_many
from .ingest import QueryWindow, Tweet
from .summarizer import Snapshot, TweetCluster

FEATURE_NAMES = (
    "temporal_unusualness",
    "spatial_unusualness",
    "temporal_burstiness",
    "spatial_burstiness",
    "tweet_count",
    "user_count",
    "spatial_std_m",
    "time_span_s",
)

# unusualness when the regional history carries no embeddable mass: maximal,
# since 1 - cosine ranges over [0, 2]
_NOVEL_REGION = 2.0
# unusualness when a cosine is degenerate (zero-norm vector): neutral
_NEUTRAL = 1.0


@dataclass(frozen=True)
class FeatureVector:
    temporal_unusualness: float
    spatial_unusualness: float
    temporal_burstiness: float
    spatial_burstiness: float
    tweet_count: float
    user_count: float
    spatial_std_m: float
    time_span_s: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=np.float64)


def _cosine_dissimilarity(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < 1e-12 or nb < 1e-12:
        return _NEUTRAL
    return 1.0 - float(a @ b) / (na * nb)


def regional_history_weights(
    snapshot: Snapshot, lat: float, lon: float, bandwidth_m: float
) -> dict[str, float]:
    """Kernel-weighted keyword mass near a point, from a historical snapshot.

    Reference form: clusters are visited in sequence order and keywords in
    sorted order, so the accumulated floats are reproducible. The shift
    pipeline uses the array path in FeatureContext, which sums the same terms
    in the same order from vectorized distances.
    """
    weights: dict[str, float] = {}
    for tc in sorted(snapshot.clusters, key=lambda c: c.seq):
        clat, clon = tc.center()
        k = epanechnikov(haversine_m(lat, lon, clat, clon), bandwidth_m)
        if k <= 0.0:
            continue
        for kw in sorted(tc.me):
            weights[kw] = weights.get(kw, 0.0) + tc.me[kw] * k
    return weights


class FeatureContext:
    """Per-shift precomputation shared by every candidate of the shift.

    Flattens the history snapshot's cluster centers and the window's
    coordinates into arrays, builds a keyword posting index over the window,
    and embeds the full window vocabulary once. Built after the embedding
    step of a shift, so candidate and window vectors come from the same
    table.
    """

    def __init__(
        self, window: QueryWindow, snapshot: Snapshot, embedding: EmbeddingModel
    ) -> None:
        self.snapshot = snapshot
        self.window_counts: Counter = Counter()
        self._tweets: list[Tweet] = []
        ids = window.sorted_ids()
        self.t_lat = np.empty(len(ids), dtype=np.float64)
        self.t_lon = np.empty(len(ids), dtype=np.float64)
        for idx, tid in enumerate(ids):
            t = window.tweets[tid]
            self._tweets.append(t)
            self.t_lat[idx] = t.lat
            self.t_lon[idx] = t.lon
            self.window_counts.update(t.keywords)
        try:
            self.e_window: np.ndarray | None = embedding.embed_weighted(self.window_counts)
        except NoKnownKeywordsError:
            self.e_window = None
        self.clusters = sorted(snapshot.clusters, key=lambda c: c.seq)
        self.cl_lat = np.array([tc.ml[0] / tc.n for tc in self.clusters], dtype=np.float64)
        self.cl_lon = np.array([tc.ml[1] / tc.n for tc in self.clusters], dtype=np.float64)

    def keyword_mass_split(
        self, keywords: set[str], lat: float, lon: float, bandwidth_m: float
    ) -> tuple[float, float]:
        """(mass within the bandwidth of a point, mass over the whole window)
        of the given keywords, counted with multiplicity.

        Both sides are integer-valued sums, so the split is exact however it
        is accumulated; the global side reads the window totals directly.
        """
        window_mass = float(sum(self.window_counts.get(kw, 0) for kw in keywords))
        near_mass = 0.0
        if len(self._tweets):
            dists = haversine_m_many(self.t_lat, self.t_lon, lat, lon)
            for idx in np.flatnonzero(dists < bandwidth_m):
                for kw in self._tweets[int(idx)].keywords:
                    if kw in keywords:
                        near_mass += 1.0
        return near_mass, window_mass

    def history_weights(self, lat: float, lon: float, bandwidth_m: float) -> dict[str, float]:
        """Array-path equivalent of regional_history_weights."""
        weights: dict[str, float] = {}
        if not self.clusters:
            return weights
        u = haversine_m_many(self.cl_lat, self.cl_lon, lat, lon) / bandwidth_m
        kernel = 1.0 - u * u
        for idx in np.flatnonzero(u < 1.0):
            tc = self.clusters[int(idx)]
            k = float(kernel[int(idx)])
            for kw in sorted(tc.me):
                weights[kw] = weights.get(kw, 0.0) + tc.me[kw] * k
        return weights


def extract_features(
    members: Sequence[Tweet],
    pivot: Tweet,
    ctx: FeatureContext,
    embedding: EmbeddingModel,
    bandwidth_m: float,
) -> FeatureVector:
    """Feature vector for a candidate (its members and pivot) against the
    current window and the historical snapshot carried by `ctx`."""
    cand_counts: Counter = Counter()
    for m in sorted(members, key=lambda t: t.id):
        cand_counts.update(m.keywords)

    try:
        e_cand = embedding.embed_weighted(cand_counts)
    except NoKnownKeywordsError:
        e_cand = None

    hist_weights = ctx.history_weights(pivot.lat, pivot.lon, bandwidth_m)
    if not hist_weights:
        temporal_unusualness = _NOVEL_REGION
    elif e_cand is None:
        temporal_unusualness = _NEUTRAL
    else:
        try:
            e_hist = embedding.embed_weighted(hist_weights)
            temporal_unusualness = _cosine_dissimilarity(e_cand, e_hist)
        except NoKnownKeywordsError:
            temporal_unusualness = _NOVEL_REGION

    if e_cand is None or ctx.e_window is None:
        spatial_unusualness = _NEUTRAL
    else:
        spatial_unusualness = _cosine_dissimilarity(e_cand, ctx.e_window)

    # the kernel-weighted historical mass of each candidate keyword is
    # exactly its history weight
    observed = float(sum(cand_counts.values()))
    expected = 0.0
    for kw in sorted(cand_counts):
        expected += hist_weights.get(kw, 0.0)
    temporal_burstiness = observed / (1.0 + expected)

    # integer masses, so accumulation order is free
    near_mass, window_mass = ctx.keyword_mass_split(
        set(cand_counts), pivot.lat, pivot.lon, bandwidth_m
    )
    spatial_burstiness = near_mass / (1.0 + window_mass)

    summary = TweetCluster()
    for m in sorted(members, key=lambda t: t.id):
        summary.absorb(m)
    times = [m.timestamp for m in members]

    return FeatureVector(
        temporal_unusualness=temporal_unusualness,
        spatial_unusualness=spatial_unusualness,
        temporal_burstiness=temporal_burstiness,
        spatial_burstiness=spatial_burstiness,
        tweet_count=float(len(members)),
        user_count=float(len({m.user_id for m in members})),
        spatial_std_m=summary.spatial_std_m(),
        time_span_s=float(max(times) - min(times)),
    )


@dataclass
class LogRegModel:
    weights: np.ndarray  # raw-feature space, standardization folded in
    bias: float
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def predict_proba(self, features: FeatureVector | np.ndarray) -> float:
        x = features.to_array() if isinstance(features, FeatureVector) else features
        if x.shape != self.weights.shape:
            raise ValueError("feature dimension mismatch")
        z = float(self.weights @ x) + self.bias
        return float(1.0 / (1.0 + np.exp(-z)))

    def to_payload(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_payload(cls, raw: Mapping) -> "LogRegModel":
        return cls(
            weights=np.array(raw["weights"], dtype=np.float64),
            bias=float(raw["bias"]),
            feature_names=tuple(raw["feature_names"]),
        )


def loss_and_grad(
    params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Regularized mean log-loss and its gradient; params = [weights, bias].

    The bias is not regularized. Kept analytic and side-effect free so tests
    can difference it numerically.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    # stable log(1 + exp(±z)) via logaddexp
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)
    p = 1.0 / (1.0 + np.exp(-z))
    err = (p - y) / len(y)
    grad = np.concatenate([X.T @ err + l2 * w, [float(np.sum(err))]])
    return loss, grad


def train_logreg(
    X: np.ndarray, y: np.ndarray, cfg: ClassifierConfig
) -> LogRegModel:
    """Full-batch gradient descent on standardized features.

    Deterministic: no sampling, fixed iteration count. Raises ValueError if
    only one class is present. Zero epochs yields the all-zero model whose
    probability is exactly 0.5 everywhere.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("bad training shapes")
    classes = set(np.unique(y))
    if not classes <= {0.0, 1.0}:
        raise ValueError("labels must be 0/1")
    if len(classes) < 2:
        raise ValueError("training needs both classes")

    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma = np.where(sigma < 1e-12, 1.0, sigma)
    Xs = (X - mu) / sigma

    params = np.zeros(X.shape[1] + 1)
    for _ in range(cfg.epochs):
        _, grad = loss_and_grad(params, Xs, y, cfg.l2)
        params = params - cfg.lr * grad

    w_std, b_std = params[:-1], params[-1]
    w_raw = w_std / sigma
    b_raw = float(b_std - np.sum(w_std * mu / sigma))
    return LogRegModel(weights=w_raw, bias=b_raw)


def classify(
    model: LogRegModel, features: FeatureVector, threshold: float
) -> tuple[float, bool]:
    prob = model.predict_proba(features)
    return prob, prob >= threshold
