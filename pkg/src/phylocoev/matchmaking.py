"""Matchmaking schemes: which interactions get truly evaluated each generation.

A plan is the set of ordered (a, b) taxon pairs charged to the evaluation
budget; everything else in the interaction matrix is estimated. Plans are
immutable once built and hold their pairs in sorted order so downstream
evaluation is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .phylogeny import TaxonId


class ConfigurationError(ValueError):
    """Invalid scheme parameters detected at plan construction or startup."""


@dataclass(frozen=True, slots=True)
class PopulationView:
    """Extant taxa of one population, split into parents and children."""

    label: str
    parents: tuple[TaxonId, ...]
    children: tuple[TaxonId, ...]

    @property
    def all(self) -> tuple[TaxonId, ...]:
        return self.parents + self.children

    def __len__(self) -> int:
        return len(self.parents) + len(self.children)


@dataclass(frozen=True)
class MatchPlan:
    pairs: tuple[tuple[TaxonId, TaxonId], ...]
    generation: int
    _pair_set: frozenset = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_pair_set", frozenset(self.pairs))
        if len(self._pair_set) != len(self.pairs):
            raise ConfigurationError("match plan contains duplicate pairs")

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair: tuple[TaxonId, TaxonId]) -> bool:
        return pair in self._pair_set


def _plan(pairs, generation: int) -> MatchPlan:
    return MatchPlan(tuple(sorted(pairs)), generation)


def all_versus_all(
    pop_a: PopulationView, pop_b: PopulationView, generation: int = 0
) -> MatchPlan:
    """Every member of A against every member of B."""
    if not len(pop_a) or not len(pop_b):
        raise ConfigurationError("all_versus_all needs nonempty populations")
    return _plan(
        ((a, b) for a in pop_a.all for b in pop_b.all), generation
    )


def parents_versus_all(
    pop_a: PopulationView, pop_b: PopulationView, generation: int = 0
) -> MatchPlan:
    """Every member of each population against all opposing parents.

    Parent-versus-parent pairs arise from both directions and are evaluated
    once; the plan size is |A|*P_B + |B|*P_A - P_A*P_B.
    """
    if not pop_a.parents or not pop_b.parents:
        raise ConfigurationError("parents_versus_all needs parents on both sides")
    pairs = {(a, pb) for a in pop_a.all for pb in pop_b.parents}
    pairs.update((pa, b) for pa in pop_a.parents for b in pop_b.all)
    return _plan(pairs, generation)


def random_cohorts(
    pop_a: PopulationView,
    pop_b: PopulationView,
    cohort_size: int,
    rng: np.random.Generator,
    generation: int = 0,
) -> MatchPlan:
    """Split each population into random equal cohorts, pair cohorts one to
    one across populations, and run all-versus-all inside each pairing.

    Every individual lands in exactly one cohort and is evaluated exactly
    `cohort_size` times.
    """
    n_a, n_b = len(pop_a), len(pop_b)
    if cohort_size < 1:
        raise ConfigurationError("cohort_size must be >= 1")
    if n_a % cohort_size or n_b % cohort_size:
        raise ConfigurationError(
            f"population sizes ({n_a}, {n_b}) not divisible by cohort size {cohort_size}"
        )
    if n_a // cohort_size != n_b // cohort_size:
        raise ConfigurationError("populations must form the same number of cohorts")
    order_a = [pop_a.all[i] for i in rng.permutation(n_a)]
    order_b = [pop_b.all[i] for i in rng.permutation(n_b)]
    n_cohorts = n_a // cohort_size
    cohorts_a = [order_a[i * cohort_size : (i + 1) * cohort_size] for i in range(n_cohorts)]
    cohorts_b = [order_b[i * cohort_size : (i + 1) * cohort_size] for i in range(n_cohorts)]
    pairing = rng.permutation(n_cohorts)
    pairs = []
    for i in range(n_cohorts):
        for a in cohorts_a[i]:
            for b in cohorts_b[pairing[i]]:
                pairs.append((a, b))
    return _plan(pairs, generation)


def mixed_pva_ava(
    pop_a: PopulationView,
    pop_b: PopulationView,
    p_all: float,
    rng: np.random.Generator,
    generation: int = 0,
) -> MatchPlan:
    """Parents-versus-all, switching to all-versus-all with probability p_all."""
    if not 0.0 <= p_all <= 1.0:
        raise ConfigurationError("p_all must lie in [0, 1]")
    if rng.random() < p_all:
        return all_versus_all(pop_a, pop_b, generation)
    return parents_versus_all(pop_a, pop_b, generation)


def _balanced_assignment(
    chooser: Sequence[TaxonId],
    pool: Sequence[TaxonId],
    games_each: int,
    rng: np.random.Generator,
) -> list[tuple[TaxonId, TaxonId]]:
    """Each chooser meets `games_each` distinct pool members; pool members'
    appearance counts differ by at most one (exactly equal when the total
    divides the pool size). Built from consecutive slots of a shuffled pool.
    """
    if games_each == 0 or not chooser:
        return []
    if games_each > len(pool):
        raise ConfigurationError(
            f"cannot schedule {games_each} distinct opponents from a pool of {len(pool)}"
        )
    pool_order = [pool[i] for i in rng.permutation(len(pool))]
    chooser_order = [chooser[i] for i in rng.permutation(len(chooser))]
    n_pool = len(pool_order)
    out = []
    slot = 0
    for c in chooser_order:
        for _ in range(games_each):
            out.append((c, pool_order[slot % n_pool]))
            slot += 1
    return out


def child_substitution(
    pop_a: PopulationView,
    pop_b: PopulationView,
    c: int,
    rng: np.random.Generator,
    generation: int = 0,
) -> MatchPlan:
    """Parents-versus-all with c of each child's parent match-ups replaced by
    child match-ups, keeping per-parent and per-child game counts uniform.

    Each child plays P - c opposing parents and c opposing children, so its
    total stays at P. Parents still play all opposing parents.
    """
    p_a, p_b = len(pop_a.parents), len(pop_b.parents)
    if not p_a or not p_b:
        raise ConfigurationError("child_substitution needs parents on both sides")
    if c < 0 or c > min(p_a, p_b):
        raise ConfigurationError(
            f"c={c} must lie in [0, min(parent counts)={min(p_a, p_b)}]"
        )
    pairs: list[tuple[TaxonId, TaxonId]] = [
        (pa, pb) for pa in pop_a.parents for pb in pop_b.parents
    ]
    pairs.extend(
        _balanced_assignment(pop_a.children, pop_b.parents, p_b - c, rng)
    )
    pairs.extend(
        (pa, cb)
        for cb, pa in _balanced_assignment(pop_b.children, pop_a.parents, p_a - c, rng)
    )
    pairs.extend(
        _balanced_assignment(pop_a.children, pop_b.children, c, rng)
    )
    return _plan(pairs, generation)


SCHEMES = ("all-vs-all", "parents-vs-all", "random-cohorts", "mixed", "child-substitution")


def build_plan(
    scheme: str,
    pop_a: PopulationView,
    pop_b: PopulationView,
    rng: np.random.Generator,
    generation: int = 0,
    cohort_size: int | None = None,
    p_all: float = 0.05,
    c: int = 0,
) -> MatchPlan:
    """Dispatch on the configured matchmaker name."""
    if scheme == "all-vs-all":
        return all_versus_all(pop_a, pop_b, generation)
    if scheme == "parents-vs-all":
        return parents_versus_all(pop_a, pop_b, generation)
    if scheme == "random-cohorts":
        if cohort_size is None:
            raise ConfigurationError("random-cohorts requires cohort_size")
        return random_cohorts(pop_a, pop_b, cohort_size, rng, generation)
    if scheme == "mixed":
        return mixed_pva_ava(pop_a, pop_b, p_all, rng, generation)
    if scheme == "child-substitution":
        return child_substitution(pop_a, pop_b, c, rng, generation)
    raise ConfigurationError(f"unknown matchmaker {scheme!r}; expected one of {SCHEMES}")
