"""Evaluated-outcome storage and phylogeny-informed estimation.

The store holds truly evaluated interaction outcomes only; estimates are
computed on demand and never written back. An estimate for an unevaluated
pair is the weighted average of the k nearest evaluated interactions, where
an interaction's weight is the complement of its share of the support set's
total distance. With the usual k=2 those weights already sum to one; for
larger support sets they sum to k-1, so they are normalized to keep every
estimate a convex combination of its support outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .phylogeny import PairSearch, Phylogeny, TaxonId


class InteractionKey(NamedTuple):
    """Ordered interaction identifier: a from pops[0], b from pops[1]."""

    pops: tuple[str, str]
    a: TaxonId
    b: TaxonId


@dataclass(frozen=True, slots=True)
class Outcome:
    score_a: float
    score_b: float
    evaluated: bool = True


@dataclass(frozen=True, slots=True)
class Estimate:
    value_a: float
    value_b: float
    support: list[tuple[InteractionKey, int]]
    exact: bool


class UnestimableError(RuntimeError):
    """No evaluated interaction exists within the search horizon."""


class OutcomeStore:
    """Sparse map from ordered taxon pairs to evaluated outcomes.

    One store serves one ordered population pair. Writes happen only in the
    single-writer evaluation phase; lookups are read-only and safe to share.
    """

    def __init__(self, pop_pair: tuple[str, str], domain_range: tuple[float, float]):
        self.pop_pair = (pop_pair[0], pop_pair[1])
        self.domain_range = domain_range
        self._entries: dict[tuple[TaxonId, TaxonId], tuple[float, float]] = {}
        self.has_pair = self._entries.__contains__
        self._partners_a: dict[TaxonId, set[TaxonId]] = {}
        self._partners_b: dict[TaxonId, set[TaxonId]] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def _check_key(self, key: InteractionKey) -> None:
        if key.pops != self.pop_pair:
            raise ValueError(
                f"key populations {key.pops} do not match store {self.pop_pair}"
            )

    def record(self, key: InteractionKey, score_a: float, score_b: float) -> None:
        self._check_key(key)
        self.record_ids(key.a, key.b, score_a, score_b)

    def record_ids(self, a: TaxonId, b: TaxonId, score_a: float, score_b: float) -> None:
        lo, hi = self.domain_range
        if not (lo <= score_a <= hi and lo <= score_b <= hi):
            raise ValueError(
                f"scores ({score_a}, {score_b}) outside domain range [{lo}, {hi}]"
            )
        self._entries[(a, b)] = (float(score_a), float(score_b))
        self._partners_a.setdefault(a, set()).add(b)
        self._partners_b.setdefault(b, set()).add(a)

    def record_many(self, pairs, scores_a, scores_b) -> None:
        """Bulk insert with one range check over the score arrays."""
        lo, hi = self.domain_range
        sa = np.asarray(scores_a, dtype=float)
        sb = np.asarray(scores_b, dtype=float)
        if sa.size and (min(sa.min(), sb.min()) < lo or max(sa.max(), sb.max()) > hi):
            raise ValueError(f"bulk scores escape domain range [{lo}, {hi}]")
        entries = self._entries
        partners_a = self._partners_a
        partners_b = self._partners_b
        for (a, b), va, vb in zip(pairs, sa.tolist(), sb.tolist()):
            entries[(a, b)] = (va, vb)
            ps = partners_a.get(a)
            if ps is None:
                partners_a[a] = {b}
            else:
                ps.add(b)
            ps = partners_b.get(b)
            if ps is None:
                partners_b[b] = {a}
            else:
                ps.add(a)

    def has(self, a: TaxonId, b: TaxonId) -> bool:
        return (a, b) in self._entries

    def get_ids(self, a: TaxonId, b: TaxonId) -> tuple[float, float] | None:
        return self._entries.get((a, b))

    def get(self, key: InteractionKey) -> Outcome | None:
        self._check_key(key)
        pair = self._entries.get((key.a, key.b))
        if pair is None:
            return None
        return Outcome(pair[0], pair[1], evaluated=True)

    def key(self, a: TaxonId, b: TaxonId) -> InteractionKey:
        return InteractionKey(self.pop_pair, a, b)

    def content_hash(self) -> int:
        """Order-independent digest of the stored entries (test aid)."""
        return hash(frozenset(
            (a, b, sa, sb) for (a, b), (sa, sb) in self._entries.items()
        ))

    def drop_taxa(
        self, pruned_a: Sequence[TaxonId] = (), pruned_b: Sequence[TaxonId] = ()
    ) -> int:
        """Remove every outcome touching a pruned taxon; returns removal count."""
        removed = 0
        entries = self._entries
        for a in pruned_a:
            partners = self._partners_a.pop(a, None)
            if not partners:
                continue
            for b in partners:
                del entries[(a, b)]
                self._partners_b[b].discard(a)
                removed += 1
        for b in pruned_b:
            partners = self._partners_b.pop(b, None)
            if not partners:
                continue
            for a in partners:
                del entries[(a, b)]
                self._partners_a[a].discard(b)
                removed += 1
        return removed


def weights(distances: Sequence[int]) -> list[float]:
    """Support weights: complement of each distance's share of the total.

    Normalized to sum to one for any support size; a single support gets
    weight one. Must not be called with an all-zero distance list (an exact
    match is resolved before weighting).
    """
    n = len(distances)
    if n == 0:
        raise ValueError("weights() needs at least one distance")
    if n == 1:
        return [1.0]
    total = sum(distances)
    if total == 0:
        raise ValueError("all-zero distances; exact matches bypass weighting")
    denom = total * (n - 1)
    return [(total - d) / denom for d in distances]


class InteractionEstimator:
    """Per-generation read-only estimator over two trees and one store.

    Construct after the trees settle for the generation; ring caches inside
    the pair search are reused across every estimate of that generation.
    """

    def __init__(
        self,
        tree_a: Phylogeny,
        tree_b: Phylogeny,
        store: OutcomeStore,
        k: int = 2,
        horizon: int = 10,
    ):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.store = store
        self.k = k
        self.horizon = horizon
        self._search = PairSearch(tree_a, tree_b, horizon)
        self._has_pair = store.has_pair

    # -- hot path ------------------------------------------------------------

    def estimate_values(self, a: TaxonId, b: TaxonId) -> tuple[float, float]:
        """(value_a, value_b) for one interaction, stored or estimated.

        Estimates are clamped into the domain range, shaving off float dust
        from the weight normalization. Raises UnestimableError when no
        evaluated interaction lies within the horizon.
        """
        entries = self.store._entries
        exact = entries.get((a, b))
        if exact is not None:
            return exact
        hits = self._search.nearest_evaluated(a, b, self._has_pair, self.k, skip_exact=True)
        if not hits:
            raise UnestimableError(f"no evaluated interaction near ({a}, {b})")
        if len(hits) == 1:
            return entries[(hits[0][0], hits[0][1])]
        total = 0
        for _, _, d in hits:
            total += d
        denom = total * (len(hits) - 1)
        va = 0.0
        vb = 0.0
        for x, y, d in hits:
            sa, sb = entries[(x, y)]
            w = (total - d) / denom
            va += w * sa
            vb += w * sb
        lo, hi = self.store.domain_range
        return min(max(va, lo), hi), min(max(vb, lo), hi)

    # -- full-detail path ------------------------------------------------------

    def estimate(self, a: TaxonId, b: TaxonId) -> Estimate:
        """Estimate with full support listing (exact hits report distance 0)."""
        entries = self.store._entries
        key = self.store.key
        exact = entries.get((a, b))
        if exact is not None:
            return Estimate(exact[0], exact[1], [(key(a, b), 0)], exact=True)
        hits = self._search.nearest_evaluated(a, b, self._has_pair, self.k, skip_exact=True)
        if not hits:
            raise UnestimableError(f"no evaluated interaction near ({a}, {b})")
        ws = weights([d for _, _, d in hits])
        va = 0.0
        vb = 0.0
        for (x, y, _), w in zip(hits, ws):
            sa, sb = entries[(x, y)]
            va += w * sa
            vb += w * sb
        lo, hi = self.store.domain_range
        va = min(max(va, lo), hi)
        vb = min(max(vb, lo), hi)
        return Estimate(va, vb, [(key(x, y), d) for x, y, d in hits], exact=False)

    def outcome_row(
        self,
        side: str,
        individual: TaxonId,
        opponents: Sequence[TaxonId],
        fallback: Callable[[TaxonId, TaxonId], tuple[float, float]] | None = None,
    ) -> list[float]:
        """Per-opponent scores for one individual, mixing stored and estimated.

        `side` is "a" or "b": which population the individual belongs to.
        Unestimable entries go through `fallback(a, b)` (expected to truly
        evaluate, record, and return the outcome); without a fallback the
        error propagates.
        """
        if side not in ("a", "b"):
            raise ValueError("side must be 'a' or 'b'")
        row: list[float] = []
        idx = 0 if side == "a" else 1
        for opp in opponents:
            a, b = (individual, opp) if side == "a" else (opp, individual)
            try:
                pair = self.estimate_values(a, b)
            except UnestimableError:
                if fallback is None:
                    raise
                pair = fallback(a, b)
            row.append(pair[idx])
        return row


def estimate_outcome(
    tree_a: Phylogeny,
    tree_b: Phylogeny,
    store: OutcomeStore,
    key: InteractionKey,
    k: int = 2,
    horizon: int = 10,
) -> Estimate:
    """One-shot estimate for `key`; see InteractionEstimator for bulk use."""
    est = InteractionEstimator(tree_a, tree_b, store, k=k, horizon=horizon)
    return est.estimate(key.a, key.b)
