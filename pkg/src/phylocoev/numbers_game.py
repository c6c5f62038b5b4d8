"""Multi-dimensional numbers game: two populations of 3-d real vectors.

Two payoff variants. compare_on_all scores a win when the focal vector is
at least as large on every dimension; compare_on_one only contests the
opponent's largest dimension. Outcomes are 0/1 per side; an interaction
scores each vector against the other, so it is not constant-sum.
"""

from __future__ import annotations

import numpy as np

GENOME_DIMS = 3
MUTATION_SPAN = 0.1
DIMS_MUTATED = 2

VARIANTS = ("compare-on-one", "compare-on-all")


def new_genome() -> np.ndarray:
    """Fresh genome at the origin."""
    return np.zeros(GENOME_DIMS)


def mutate(genome: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Add independent uniform(-0.1, 0.1) noise to two distinct random dimensions."""
    out = genome.copy()
    dims = rng.choice(GENOME_DIMS, size=DIMS_MUTATED, replace=False)
    out[dims] += rng.uniform(-MUTATION_SPAN, MUTATION_SPAN, size=DIMS_MUTATED)
    return out


def compare_on_all(a: np.ndarray, b: np.ndarray) -> int:
    """1 iff a >= b on every dimension."""
    return int(np.all(a >= b))


def compare_on_one(a: np.ndarray, b: np.ndarray) -> int:
    """1 iff a >= b on b's largest dimension (ties go to the lowest index)."""
    j = int(np.argmax(b))
    return int(a[j] >= b[j])


def payoff_matrices(
    genomes_a: np.ndarray, genomes_b: np.ndarray, variant: str
) -> tuple[np.ndarray, np.ndarray]:
    """Dense (|A|, |B|) win matrices for both sides under a variant.

    Entry [i, j] of the first matrix scores a_i against b_j; the second
    scores b_j against a_i. Used for diagnostics, never for budgeted
    evaluation.
    """
    if variant == "compare-on-all":
        wins_a = np.all(genomes_a[:, None, :] >= genomes_b[None, :, :], axis=2)
        wins_b = np.all(genomes_b[:, None, :] >= genomes_a[None, :, :], axis=2).T
    elif variant == "compare-on-one":
        j_b = np.argmax(genomes_b, axis=1)
        wins_a = genomes_a[:, j_b] >= genomes_b[np.arange(len(genomes_b)), j_b][None, :]
        j_a = np.argmax(genomes_a, axis=1)
        wins_b = (
            genomes_b[:, j_a] >= genomes_a[np.arange(len(genomes_a)), j_a][None, :]
        ).T
    else:
        raise ValueError(f"unknown numbers-game variant {variant!r}")
    return wins_a.astype(float), wins_b.astype(float)


def play_pairs(
    genomes_a: np.ndarray,
    genomes_b: np.ndarray,
    idx_a: np.ndarray,
    idx_b: np.ndarray,
    variant: str,
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the listed (idx_a[i], idx_b[i]) games; returns both sides' scores."""
    va = genomes_a[idx_a]
    vb = genomes_b[idx_b]
    if variant == "compare-on-all":
        score_a = np.all(va >= vb, axis=1)
        score_b = np.all(vb >= va, axis=1)
    elif variant == "compare-on-one":
        j_b = np.argmax(vb, axis=1)
        rows = np.arange(len(vb))
        score_a = va[rows, j_b] >= vb[rows, j_b]
        j_a = np.argmax(va, axis=1)
        score_b = vb[rows, j_a] >= va[rows, j_a]
    else:
        raise ValueError(f"unknown numbers-game variant {variant!r}")
    return score_a.astype(float), score_b.astype(float)


def mean_genotype_sum(genomes: np.ndarray) -> float:
    """Mean over individuals of the sum of their dimensions."""
    if len(genomes) == 0:
        raise ValueError("empty population")
    return float(genomes.sum(axis=1).mean())


def detect_disconnect(
    genomes_a: np.ndarray, genomes_b: np.ndarray, variant: str
) -> bool:
    """True when one population wins and the other loses every pairwise game,
    leaving selection with no gradient on either side."""
    wins_a, wins_b = payoff_matrices(genomes_a, genomes_b, variant)
    a_dominates = bool(np.all(wins_a == 1.0) and np.all(wins_b == 0.0))
    b_dominates = bool(np.all(wins_b == 1.0) and np.all(wins_a == 0.0))
    return a_dominates or b_dominates
