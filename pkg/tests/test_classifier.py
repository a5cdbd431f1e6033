"""Classifier tests: gradient vs central differences, separable training,
and the feature paths against their scalar reference implementations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from georadar.classifier import (
    FEATURE_NAMES,
    FeatureContext,
    LogRegModel,
    classify,
    extract_features,
    loss_and_grad,
    regional_history_weights,
    train_logreg,
)
from georadar.config import ClassifierConfig
from georadar.embedding import EmbeddingModel
from georadar.config import EmbeddingConfig
from georadar.ingest import QueryWindow, Tweet
from georadar.summarizer import Snapshot, TweetCluster, estimate_occurrences


def mk(i, ts=1000, lat=40.7, lon=-74.0, words=("fire", "smoke"), user=None):
    return Tweet(
        id=f"t{i:04d}",
        user_id=user or f"u{i % 4}",
        timestamp=ts,
        lat=lat,
        lon=lon,
        keywords=tuple(words),
    )


def central_difference_grad(params, X, y, l2, h=1e-6):
    num = np.zeros_like(params)
    for i in range(len(params)):
        up, dn = params.copy(), params.copy()
        up[i] += h
        dn[i] -= h
        lu, _ = loss_and_grad(up, X, y, l2)
        ld, _ = loss_and_grad(dn, X, y, l2)
        num[i] = (lu - ld) / (2.0 * h)
    return num


class TestGradient:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(3, 40)), int(rng.integers(1, 8))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(np.float64)
        params = rng.normal(scale=0.8, size=d + 1)
        l2 = float(rng.choice([0.0, 1e-3, 1e-1]))
        _, grad = loss_and_grad(params, X, y, l2)
        num = central_difference_grad(params, X, y, l2)
        rel = np.abs(grad - num) / np.maximum(1.0, np.abs(grad))
        assert rel.max() <= 1e-4

    def test_loss_at_zero_params_is_log2(self):
        X = np.ones((4, 2))
        y = np.array([0.0, 1.0, 0.0, 1.0])
        loss, _ = loss_and_grad(np.zeros(3), X, y, 0.0)
        assert loss == pytest.approx(np.log(2.0), rel=1e-12)


class TestTraining:
    def test_separable_blobs_reach_95_percent(self):
        rng = np.random.default_rng(11)
        n = 100
        X0 = rng.normal(loc=(-2.0, 0.0), scale=0.5, size=(n, 2))
        X1 = rng.normal(loc=(2.0, 0.5), scale=0.5, size=(n, 2))
        X = np.vstack([X0, X1])
        y = np.array([0.0] * n + [1.0] * n)
        model = train_logreg(X, y, ClassifierConfig())
        pred = np.array([model.predict_proba(x) >= 0.5 for x in X])
        assert np.mean(pred == (y == 1.0)) >= 0.95

    def test_standardization_fold_back_is_transparent(self):
        """Training on shifted/scaled copies of the features must give the
        same probabilities on corresponding points."""
        rng = np.random.default_rng(3)
        X = rng.normal(size=(80, 3))
        y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.float64)
        scale = np.array([100.0, 0.01, 3.0])
        shift = np.array([-40.0, 7.0, 0.0])
        m1 = train_logreg(X, y, ClassifierConfig())
        m2 = train_logreg(X * scale + shift, y, ClassifierConfig())
        p1 = [m1.predict_proba(x) for x in X]
        p2 = [m2.predict_proba(x * scale + shift) for x in X]
        np.testing.assert_allclose(p1, p2, rtol=1e-6, atol=1e-9)

    def test_rejects_degenerate_inputs(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValueError):
            train_logreg(X, np.zeros(4), ClassifierConfig())  # one class
        with pytest.raises(ValueError):
            train_logreg(X, np.array([0.0, 1.0, 2.0, 1.0]), ClassifierConfig())
        with pytest.raises(ValueError):
            train_logreg(X, np.zeros(3), ClassifierConfig())  # shape mismatch

    def test_zero_epochs_is_coin_flip(self):
        X = np.array([[0.0, 1.0], [1.0, 0.0]])
        y = np.array([0.0, 1.0])
        model = train_logreg(X, y, ClassifierConfig(epochs=0))
        assert model.predict_proba(np.array([3.0, -2.0])) == 0.5

    def test_classify_threshold(self):
        weights = np.zeros(len(FEATURE_NAMES))
        weights[0] = 1.0
        model = LogRegModel(weights=weights, bias=0.0)
        prob, flag = classify(model, _vec(5.0), threshold=0.5)
        assert flag and prob > 0.99
        _, flag = classify(model, _vec(-5.0), threshold=0.5)
        assert not flag

    def test_payload_round_trip(self):
        model = LogRegModel(weights=np.arange(8, dtype=np.float64), bias=-1.5)
        back = LogRegModel.from_payload(model.to_payload())
        np.testing.assert_array_equal(model.weights, back.weights)
        assert back.bias == model.bias and back.feature_names == FEATURE_NAMES

    def test_dimension_mismatch_rejected(self):
        model = LogRegModel(weights=np.zeros(8), bias=0.0)
        with pytest.raises(ValueError):
            model.predict_proba(np.zeros(3))


def _vec(x):
    """FeatureVector with the first feature set and the rest zero."""
    from georadar.classifier import FeatureVector

    values = {name: 0.0 for name in FEATURE_NAMES}
    values[FEATURE_NAMES[0]] = x
    return FeatureVector(**values)


def make_snapshot(seed=0, n_clusters=6):
    rng = np.random.default_rng(seed)
    clusters = []
    words = ["storm", "flood", "game", "music", "road"]
    for s in range(n_clusters):
        tc = TweetCluster(seq=s)
        for j in range(int(rng.integers(1, 6))):
            tc.absorb(
                mk(
                    100 * s + j,
                    ts=500 + j,
                    lat=40.7 + float(rng.normal(scale=0.01)),
                    lon=-74.0 + float(rng.normal(scale=0.01)),
                    words=tuple(rng.choice(words, size=2)),
                )
            )
        clusters.append(tc)
    return Snapshot(tick=1, clusters=clusters)


def make_window_and_embedding(seed=0, n=40):
    rng = np.random.default_rng(seed + 77)
    words = ["storm", "flood", "game", "music", "road", "pier"]
    tweets = {}
    for i in range(n):
        t = mk(
            i,
            ts=10_000 + int(rng.integers(0, 600)),
            lat=40.7 + float(rng.normal(scale=0.02)),
            lon=-74.0 + float(rng.normal(scale=0.02)),
            words=tuple(rng.choice(words, size=3)),
        )
        tweets[t.id] = t
    window = QueryWindow(10_000, 10_600, tweets)
    emb = EmbeddingModel(EmbeddingConfig(dim=12, seed=3))
    emb.train_step(list(tweets.values()))
    return window, emb


class TestFeatureContext:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=500))
    def test_history_weights_matches_scalar_reference(self, seed):
        snap = make_snapshot(seed)
        window, emb = make_window_and_embedding(seed, n=10)
        ctx = FeatureContext(window, snap, emb)
        rng = np.random.default_rng(seed)
        lat = 40.7 + float(rng.normal(scale=0.01))
        lon = -74.0 + float(rng.normal(scale=0.01))
        fast = ctx.history_weights(lat, lon, 2000.0)
        slow = regional_history_weights(snap, lat, lon, 2000.0)
        assert set(fast) == set(slow)
        for kw in slow:
            assert fast[kw] == pytest.approx(slow[kw], rel=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=500))
    def test_history_weights_matches_occurrence_estimator(self, seed):
        """Per-keyword weights must agree with the standalone estimator."""
        snap = make_snapshot(seed)
        window, emb = make_window_and_embedding(seed, n=5)
        ctx = FeatureContext(window, snap, emb)
        weights = ctx.history_weights(40.7, -74.0, 2000.0)
        vocab = {kw for tc in snap.clusters for kw in tc.me}
        for kw in vocab:
            want = estimate_occurrences(snap, kw, 40.7, -74.0, 2000.0)
            assert weights.get(kw, 0.0) == pytest.approx(want, rel=1e-9, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=500))
    def test_keyword_mass_split_matches_brute_force(self, seed):
        from georadar.geo import haversine_m

        snap = make_snapshot(seed)
        window, emb = make_window_and_embedding(seed)
        ctx = FeatureContext(window, snap, emb)
        keywords = {"storm", "pier"}
        near, total = ctx.keyword_mass_split(keywords, 40.7, -74.0, 2000.0)
        want_total = sum(
            1 for t in window.tweets.values() for kw in t.keywords if kw in keywords
        )
        want_near = sum(
            1
            for t in window.tweets.values()
            if haversine_m(t.lat, t.lon, 40.7, -74.0) < 2000.0
            for kw in t.keywords
            if kw in keywords
        )
        # integer masses: equality is exact
        assert total == want_total
        assert near == want_near


class TestExtractFeatures:
    def test_static_features_are_direct_summaries(self):
        snap = make_snapshot(1)
        window, emb = make_window_and_embedding(1)
        ctx = FeatureContext(window, snap, emb)
        ids = window.sorted_ids()[:5]
        members = [window.tweets[i] for i in ids]
        pivot = members[0]
        fv = extract_features(members, pivot, ctx, emb, 2000.0)
        assert fv.tweet_count == float(len(members))
        assert fv.user_count == float(len({m.user_id for m in members}))
        times = [m.timestamp for m in members]
        assert fv.time_span_s == float(max(times) - min(times))
        oracle = TweetCluster()
        for m in sorted(members, key=lambda t: t.id):
            oracle.absorb(m)
        assert fv.spatial_std_m == pytest.approx(oracle.spatial_std_m(), rel=1e-12)

    def test_empty_history_is_maximally_unusual(self):
        window, emb = make_window_and_embedding(2)
        ctx = FeatureContext(window, Snapshot(tick=1, clusters=[]), emb)
        ids = window.sorted_ids()[:4]
        members = [window.tweets[i] for i in ids]
        fv = extract_features(members, members[0], ctx, emb, 2000.0)
        assert fv.temporal_unusualness == 2.0
        # nothing expected from an empty history
        assert fv.temporal_burstiness == pytest.approx(
            sum(len(m.keywords) for m in members) / 1.0
        )

    def test_temporal_burstiness_matches_estimator_sum(self):
        snap = make_snapshot(3)
        window, emb = make_window_and_embedding(3)
        ctx = FeatureContext(window, snap, emb)
        ids = window.sorted_ids()[:6]
        members = [window.tweets[i] for i in ids]
        pivot = members[2]
        fv = extract_features(members, pivot, ctx, emb, 2000.0)
        observed = sum(len(m.keywords) for m in members)
        cand_vocab = sorted({kw for m in members for kw in m.keywords})
        expected = sum(
            estimate_occurrences(snap, kw, pivot.lat, pivot.lon, 2000.0)
            for kw in cand_vocab
        )
        assert fv.temporal_burstiness == pytest.approx(
            observed / (1.0 + expected), rel=1e-9
        )

    def test_feature_vector_ordering_is_stable(self):
        fv_fields = [f for f in FEATURE_NAMES]
        snap = make_snapshot(4)
        window, emb = make_window_and_embedding(4)
        ctx = FeatureContext(window, snap, emb)
        ids = window.sorted_ids()[:4]
        members = [window.tweets[i] for i in ids]
        fv = extract_features(members, members[0], ctx, emb, 2000.0)
        arr = fv.to_array()
        for i, name in enumerate(fv_fields):
            assert arr[i] == getattr(fv, name)
