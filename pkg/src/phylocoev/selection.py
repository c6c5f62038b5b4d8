"""Parent selection over the mixed evaluated/estimated outcome matrix.

Estimated scores are consumed exactly like evaluated ones. The pipeline is:
aggregate fitness -> truncation to the parent count -> a per-domain scheme
(fitness-proportional or lexicase) among the survivors to pick reproducers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phylogeny import TaxonId


@dataclass(slots=True)
class FitnessRecord:
    taxon: TaxonId
    per_opponent: np.ndarray
    bonus: float = 0.0
    aggregate: float = field(init=False)

    def __post_init__(self):
        self.per_opponent = np.asarray(self.per_opponent, dtype=float)
        self.aggregate = float(self.per_opponent.mean()) + self.bonus


def truncate(records: list[FitnessRecord], n_parents: int) -> list[TaxonId]:
    """Ids of the n_parents highest-aggregate taxa; ties keep the lower id."""
    if n_parents == 0:
        raise ValueError("n_parents must be >= 1")
    if n_parents > len(records):
        raise ValueError(f"cannot keep {n_parents} of {len(records)} records")
    ranked = sorted(records, key=lambda r: (-r.aggregate, r.taxon))
    return [r.taxon for r in ranked[:n_parents]]


def fitness_proportional(
    survivors: list[FitnessRecord], n_offspring: int, rng: np.random.Generator
) -> list[TaxonId]:
    """Draw reproducers with replacement, probability proportional to
    aggregate fitness; uniform when every aggregate is zero."""
    if not survivors:
        raise ValueError("no survivors to select from")
    ids = [r.taxon for r in survivors]
    mass = np.array([r.aggregate for r in survivors], dtype=float)
    if np.any(mass < 0):
        raise ValueError("fitness-proportional selection needs nonnegative aggregates")
    total = mass.sum()
    probs = None if total == 0 else mass / total
    picks = rng.choice(len(ids), size=n_offspring, replace=True, p=probs)
    return [ids[i] for i in picks]


def lexicase_matrix(
    survivors: list[FitnessRecord], include_bonus_test: bool = False
) -> np.ndarray:
    """Stack survivor test scores (one row per candidate) for lexicase events.

    With `include_bonus_test` the bonus is appended as one extra pseudo-test
    column, letting it compete with opponent outcomes under shuffling.
    """
    if not survivors:
        raise ValueError("no survivors to select from")
    width = survivors[0].per_opponent.shape[0]
    scores = np.empty((len(survivors), width + (1 if include_bonus_test else 0)))
    for i, rec in enumerate(survivors):
        if rec.per_opponent.shape[0] != width:
            raise ValueError("per-opponent vectors must share one length")
        scores[i, :width] = rec.per_opponent
        if include_bonus_test:
            scores[i, width] = rec.bonus
    return scores


def lexicase_event(scores: np.ndarray, rng: np.random.Generator) -> int:
    """One lexicase selection over a candidate-by-test score matrix.

    Tests are shuffled; candidates below the running maximum on the current
    test are discarded. Returns the row index of the winner, picked uniformly
    among whatever remains when one candidate is left or tests run out.
    """
    alive = np.arange(scores.shape[0])
    for t in rng.permutation(scores.shape[1]):
        col = scores[alive, t]
        alive = alive[col == col.max()]
        if alive.shape[0] == 1:
            break
    return int(alive[rng.integers(alive.shape[0])])


def lexicase(
    survivors: list[FitnessRecord],
    rng: np.random.Generator,
    include_bonus_test: bool = False,
) -> TaxonId:
    """One lexicase selection event over survivor records."""
    scores = lexicase_matrix(survivors, include_bonus_test)
    return survivors[lexicase_event(scores, rng)].taxon
