"""Streaming keyword embeddings: skip-gram with negative sampling, the
whole tweet as the context window.

Training is deterministic under a fixed seed: replay sampling and negative
draws come from one generator in a fixed call pattern, vocabulary tables are
iterated in sorted order wherever floats accumulate, and a keyword's initial
vector depends only on (seed, keyword), never on arrival time. State
(including the generator) round-trips through `to_payload`/`load_payload`
so a restored model continues bit-identically.
"""

from __future__ import annotations

import hashlib
from collections import Counter, deque
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import EmbeddingConfig
from .ingest import Tweet


class NoKnownKeywordsError(ValueError):
    """Raised when a text has no keyword with a trained vector."""


def _keyword_digest(keyword: str) -> int:
    # process-stable 64-bit digest; the builtin hash() is salted per process
    return int.from_bytes(hashlib.sha256(keyword.encode("utf-8")).digest()[:8], "big")


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-x))


class EmbeddingModel:
    def __init__(self, cfg: EmbeddingConfig) -> None:
        self.cfg = cfg
        self.vectors: dict[str, np.ndarray] = {}
        self.context: dict[str, np.ndarray] = {}
        self.counts: Counter = Counter()
        self.step = 0  # pair updates performed, drives the lr schedule
        self.cache: deque[tuple[str, ...]] = deque(maxlen=cfg.cache_size)
        self.rng = np.random.default_rng(cfg.seed)
        self.stats: Counter = Counter()

    # --- vocabulary -------------------------------------------------------

    def _register(self, keyword: str) -> None:
        if keyword in self.vectors:
            return
        init = np.random.default_rng([self.cfg.seed, _keyword_digest(keyword)])
        span = 0.5 / self.cfg.dim
        self.vectors[keyword] = init.uniform(-span, span, self.cfg.dim)
        self.context[keyword] = np.zeros(self.cfg.dim)

    def __contains__(self, keyword: str) -> bool:
        return keyword in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    # --- training ---------------------------------------------------------

    def _lr(self) -> float:
        frac = min(1.0, self.step / self.cfg.lr_decay_steps)
        return max(self.cfg.lr_min, self.cfg.lr * (1.0 - frac))

    def _clip(self, grad: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(grad))
        if norm > self.cfg.clip_norm:
            return grad * (self.cfg.clip_norm / norm)
        return grad

    def train_step(self, tweets: Sequence[Tweet]) -> float:
        """One training pass over a batch plus replayed cache samples.

        Returns the mean pair loss measured before the updates. Zero pairs
        (all tweets single-keyword) is a no-op returning 0.0.
        """
        batch = [t.keywords for t in tweets]
        # replay before caching so a batch never replays itself
        n_replay = int(len(batch) * self.cfg.replay_ratio)
        replays: list[tuple[str, ...]] = []
        if n_replay > 0 and self.cache:
            idx = self.rng.integers(0, len(self.cache), size=n_replay)
            replays = [self.cache[int(i)] for i in idx]
        for kws in batch:
            self.counts.update(kws)
            for kw in kws:
                self._register(kw)
        for kws in batch:
            self.cache.append(kws)

        pairs: list[tuple[str, str]] = []
        for kws in batch + replays:
            n = len(kws)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        pairs.append((kws[i], kws[j]))
        if not pairs:
            return 0.0

        # one negative table per step: unigram^0.75 over the sorted vocab
        vocab = sorted(self.counts)
        weights = np.array([self.counts[k] for k in vocab], dtype=np.float64) ** 0.75
        cum = np.cumsum(weights)
        draws = self.rng.random(size=(len(pairs), self.cfg.negatives)) * cum[-1]
        neg_idx = np.searchsorted(cum, draws, side="right")

        total_loss = 0.0
        for p, (center, ctx) in enumerate(pairs):
            vc = self.vectors[center]
            uo = self.context[ctx]
            z = float(vc @ uo)
            g_pos = _sigmoid(z) - 1.0
            total_loss += float(np.logaddexp(0.0, -z))
            grad_vc = g_pos * uo
            new_uo = uo - self._lr() * self._clip(g_pos * vc)
            neg_updates: list[tuple[str, np.ndarray]] = []
            for k in neg_idx[p]:
                neg = vocab[int(k)]
                if neg == ctx:
                    continue  # skip accidental positives, no resample
                un = self.context[neg]
                zn = float(vc @ un)
                gn = _sigmoid(zn)
                total_loss += float(np.logaddexp(0.0, zn))
                grad_vc = grad_vc + gn * un
                neg_updates.append((neg, un - self._lr() * self._clip(gn * vc)))
            self.vectors[center] = vc - self._lr() * self._clip(grad_vc)
            self.context[ctx] = new_uo
            for neg, upd in neg_updates:
                self.context[neg] = upd
            self.step += 1
        return total_loss / len(pairs)

    def expected_loss(self, tweets: Sequence[Tweet]) -> float:
        """Deterministic objective: positive pair losses plus the exact
        expectation of the negative term under the sampling distribution.
        Exhaustive over the vocabulary, for tests and small corpora."""
        vocab = sorted(self.counts)
        if not vocab:
            return 0.0
        weights = np.array([self.counts[k] for k in vocab], dtype=np.float64) ** 0.75
        probs = weights / weights.sum()
        ctx_mat = np.stack([self.context[k] for k in vocab])
        total = 0.0
        n_pairs = 0
        for t in tweets:
            kws = t.keywords
            n = len(kws)
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    vc = self.vectors[kws[i]]
                    z = float(vc @ self.context[kws[j]])
                    zn = ctx_mat @ vc
                    exp_neg = float(np.logaddexp(0.0, zn) @ probs)
                    total += float(np.logaddexp(0.0, -z)) + self.cfg.negatives * exp_neg
                    n_pairs += 1
        return total / n_pairs if n_pairs else 0.0

    # --- readout ------------------------------------------------------------

    def embed_weighted(self, weights: Mapping[str, float]) -> np.ndarray:
        """Weighted mean of known keyword vectors, iterated in sorted order.

        Unknown keywords are skipped and counted in stats; raises
        NoKnownKeywordsError when nothing is embeddable.
        """
        acc = np.zeros(self.cfg.dim)
        mass = 0.0
        for kw in sorted(weights):
            w = float(weights[kw])
            if w <= 0.0:
                continue
            vec = self.vectors.get(kw)
            if vec is None:
                self.stats["unknown_keywords"] += 1
                continue
            acc += w * vec
            mass += w
        if mass == 0.0:
            raise NoKnownKeywordsError("no embeddable keywords")
        return acc / mass

    def embed_text(self, keywords: Iterable[str]) -> np.ndarray:
        return self.embed_weighted(Counter(keywords))

    # --- persistence ----------------------------------------------------------

    def to_payload(self) -> dict:
        return {
            "step": self.step,
            "counts": dict(sorted(self.counts.items())),
            "vectors": {k: [float(x) for x in v] for k, v in sorted(self.vectors.items())},
            "context": {k: [float(x) for x in v] for k, v in sorted(self.context.items())},
            "cache": [list(kws) for kws in self.cache],
            "rng_state": _jsonable_rng_state(self.rng.bit_generator.state),
        }

    def load_payload(self, raw: Mapping) -> None:
        self.step = raw["step"]
        self.counts = Counter(raw["counts"])
        self.vectors = {k: np.array(v, dtype=np.float64) for k, v in raw["vectors"].items()}
        self.context = {k: np.array(v, dtype=np.float64) for k, v in raw["context"].items()}
        self.cache = deque((tuple(kws) for kws in raw["cache"]), maxlen=self.cfg.cache_size)
        state = dict(raw["rng_state"])
        state["state"] = dict(state["state"])
        self.rng = np.random.default_rng()
        self.rng.bit_generator.state = state


def _jsonable_rng_state(state: Mapping) -> dict:
    out = dict(state)
    out["state"] = {k: int(v) for k, v in state["state"].items()}
    out["has_uint32"] = int(state["has_uint32"])
    out["uinteger"] = int(state["uinteger"])
    return out
