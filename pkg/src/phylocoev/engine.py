"""Run orchestration: generation loop, budgeting, probes, trials, persistence.

Each generation: build the match plan, truly evaluate exactly its pairs,
assemble the full outcome matrix (stored outcomes plus estimates), measure
estimation error on held-out probe pairs, compute fitness, truncate,
select reproducers, mutate children, advance the phylogenies, and prune.

Evaluation accounting: one evaluation is one computed interaction outcome.
The budget counts match-plan pairs plus rare unestimable fallbacks; probe
evaluations are instrumentation and tracked in their own counter. Probe
outcomes never enter the store.

Generation 0 is always evaluated all-versus-all, seeding the store so every
later query has within-horizon support under any matchmaker.

A whole run is a pure function of (config, trial index): random streams are
split by name from the trial seed, so rerunning any trial, in any worker
layout, reproduces its CSV byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import numbers_game as ng
from . import sorting_networks as sn
from .config import ExperimentConfig, finalize
from .matchmaking import MatchPlan, PopulationView, all_versus_all, build_plan
from .outcomes import InteractionEstimator, OutcomeStore, UnestimableError
from .phylogeny import Phylogeny
from .selection import (
    FitnessRecord,
    fitness_proportional,
    lexicase_event,
    lexicase_matrix,
    truncate,
)

STREAM_NAMES = ("init", "mutation", "matchmaking", "selection", "probes")
BASE_COLUMNS = (
    "trial",
    "generation",
    "cumulative_evaluations",
    "probe_evaluations",
    "probe_mean_error",
)
PERFECT_TOL = 1e-9


@dataclass(slots=True)
class Individual:
    taxon: int
    genome: object


@dataclass(slots=True)
class GenerationStats:
    generation: int
    cumulative_evaluations: int
    probe_evaluations: int
    probe_mean_error: float
    domain_metrics: dict


def rng_streams(seed: int, trial: int) -> dict[str, np.random.Generator]:
    """Named random streams for one trial, split from the root seed."""
    root = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    children = root.spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAM_NAMES, children)}


# -- domains ------------------------------------------------------------------


class NumbersDomain:
    """Two symmetric populations of 3-d vectors under one payoff variant."""

    outcome_range = (0.0, 1.0)
    labels = ("pop_a", "pop_b")
    metric_columns = ("mean_genotype_sum_a", "mean_genotype_sum_b", "disconnected")

    def __init__(self, variant: str):
        self.variant = variant
        self._mat_a = None
        self._mat_b = None

    def founder_genomes(self, side: str, n: int, rng) -> list:
        return [ng.new_genome() for _ in range(n)]

    def mutate(self, side: str, genome, rng):
        return ng.mutate(genome, rng)

    def prepare(self, members_a: list[Individual], members_b: list[Individual]):
        self._mat_a = np.stack([ind.genome for ind in members_a])
        self._mat_b = np.stack([ind.genome for ind in members_b])

    def evaluate(self, idx_a: np.ndarray, idx_b: np.ndarray):
        return ng.play_pairs(self._mat_a, self._mat_b, idx_a, idx_b, self.variant)

    def bonuses(self, side: str, rows: np.ndarray, members: list[Individual]):
        return np.zeros(len(members))

    def reproducers(self, side, survivors: list[FitnessRecord], n: int, rng):
        return fitness_proportional(survivors, n, rng)

    def metrics(self, ctx: "GenerationContext") -> dict:
        return {
            "mean_genotype_sum_a": ng.mean_genotype_sum(self._mat_a),
            "mean_genotype_sum_b": ng.mean_genotype_sum(self._mat_b),
            "disconnected": int(
                ng.detect_disconnect(self._mat_a, self._mat_b, self.variant)
            ),
        }


class SortingDomain:
    """Networks (side a) against parasite permutations (side b).

    Lexicase selection on both sides; networks whose whole outcome row is
    perfect earn the size bonus, which also rides along as one extra
    lexicase pseudo-test. Perfection metrics use true verification over all
    binary inputs, memoized per taxon, with evaluated outcomes below 16 as
    a cheap disqualifier.
    """

    outcome_range = (0.0, float(sn.MAX_SCORE))
    labels = ("networks", "parasites")
    metric_columns = ("pct_perfect_networks", "best_network_size")

    def __init__(self):
        self._tensor = None
        self._paras = None
        self._verified: dict[int, bool] = {}
        self._best_size = math.nan

    def founder_genomes(self, side: str, n: int, rng) -> list:
        if side == "a":
            return [sn.random_network(rng) for _ in range(n)]
        return [sn.random_parasite(rng) for _ in range(n)]

    def mutate(self, side: str, genome, rng):
        if side == "a":
            return sn.mutate_network(genome, rng)
        return sn.mutate_parasite(genome, rng)

    def prepare(self, members_a: list[Individual], members_b: list[Individual]):
        self._tensor = sn.pack_networks([ind.genome for ind in members_a])
        self._paras = np.stack([ind.genome for ind in members_b])

    def evaluate(self, idx_a: np.ndarray, idx_b: np.ndarray):
        net_scores = sn.play_games(self._tensor, idx_a, self._paras[idx_b])
        scores = net_scores.astype(float)
        return scores, sn.MAX_SCORE - scores

    def bonuses(self, side: str, rows: np.ndarray, members: list[Individual]):
        out = np.zeros(len(members))
        if side != "a":
            return out
        perfect_rows = np.all(rows > sn.MAX_SCORE - PERFECT_TOL, axis=1)
        for i in np.nonzero(perfect_rows)[0]:
            out[i] = sn.size_bonus(len(members[i].genome))
        return out

    def reproducers(self, side, survivors: list[FitnessRecord], n: int, rng):
        scores = lexicase_matrix(survivors, include_bonus_test=(side == "a"))
        return [survivors[lexicase_event(scores, rng)].taxon for _ in range(n)]

    def _is_perfect(self, ind: Individual, evaluated_scores: np.ndarray) -> bool:
        cached = self._verified.get(ind.taxon)
        if cached is not None:
            return cached
        if evaluated_scores.size and evaluated_scores.min() < sn.MAX_SCORE:
            verdict = False
        else:
            verdict = sn.verify_network(ind.genome)
        self._verified[ind.taxon] = verdict
        return verdict

    def metrics(self, ctx: "GenerationContext") -> dict:
        perfect = []
        for i, ind in enumerate(ctx.members_a):
            row_mask = ctx.evaluated_mask[i]
            if self._is_perfect(ind, ctx.scores_a[i][row_mask]):
                perfect.append(len(ind.genome))
        if perfect:
            best = min(perfect)
            if math.isnan(self._best_size) or best < self._best_size:
                self._best_size = float(best)
        return {
            "pct_perfect_networks": 100.0 * len(perfect) / len(ctx.members_a),
            "best_network_size": self._best_size,
        }


def make_domain(cfg: ExperimentConfig):
    if cfg.domain == "numbers-coo":
        return NumbersDomain("compare-on-one")
    if cfg.domain == "numbers-coa":
        return NumbersDomain("compare-on-all")
    if cfg.domain == "sorting":
        return SortingDomain()
    raise ValueError(f"unknown domain {cfg.domain!r}")


# -- trial execution -----------------------------------------------------------


@dataclass(slots=True)
class GenerationContext:
    """What a generation computed, for metrics hooks."""

    members_a: list[Individual]
    members_b: list[Individual]
    scores_a: np.ndarray
    scores_b: np.ndarray
    evaluated_mask: np.ndarray


class TrialRunner:
    """One independent trial: owns populations, trees, store, and counters."""

    def __init__(self, cfg: ExperimentConfig, trial: int):
        self.cfg = cfg
        self.trial = trial
        self.domain = make_domain(cfg)
        self.rngs = rng_streams(cfg.seed, trial)
        self.tree_a = Phylogeny(self.domain.labels[0])
        self.tree_b = Phylogeny(self.domain.labels[1])
        self.store = OutcomeStore(self.domain.labels, self.domain.outcome_range)
        self.cumulative_evaluations = 0
        self.probe_evaluations = 0
        self.generation = 0
        init = self.rngs["init"]
        n = cfg.n_parents + cfg.n_children
        self.parents_a: list[Individual] = []
        self.parents_b: list[Individual] = []
        self.children_a = [
            Individual(self.tree_a.add_taxon(None, 0), g)
            for g in self.domain.founder_genomes("a", n, init)
        ]
        self.children_b = [
            Individual(self.tree_b.add_taxon(None, 0), g)
            for g in self.domain.founder_genomes("b", n, init)
        ]

    # -- helpers ---------------------------------------------------------------

    def _view(self, side: str) -> PopulationView:
        parents = self.parents_a if side == "a" else self.parents_b
        children = self.children_a if side == "a" else self.children_b
        label = self.domain.labels[0 if side == "a" else 1]
        return PopulationView(
            label,
            tuple(ind.taxon for ind in parents),
            tuple(ind.taxon for ind in children),
        )

    def _build_plan(self, generation: int) -> MatchPlan:
        view_a, view_b = self._view("a"), self._view("b")
        if generation == 0:
            return all_versus_all(view_a, view_b, generation)
        return build_plan(
            self.cfg.matchmaker,
            view_a,
            view_b,
            self.rngs["matchmaking"],
            generation,
            cohort_size=self.cfg.cohort_size,
            p_all=self.cfg.p_all,
            c=self.cfg.child_matchups,
        )

    def _evaluate_indexed(self, idx_a: np.ndarray, idx_b: np.ndarray):
        """Domain evaluation, chunked across threads when workers > 1."""
        workers = self.cfg.workers
        if workers <= 1 or len(idx_a) < 2 * workers:
            return self.domain.evaluate(idx_a, idx_b)
        bounds = np.linspace(0, len(idx_a), workers + 1, dtype=int)
        chunks = [(idx_a[lo:hi], idx_b[lo:hi]) for lo, hi in zip(bounds, bounds[1:])]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: self.domain.evaluate(*ab), chunks))
        return (
            np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]),
        )

    # -- one generation ----------------------------------------------------------

    def run_generation(self) -> GenerationStats:
        cfg = self.cfg
        gen = self.generation
        members_a = self.parents_a + self.children_a
        members_b = self.parents_b + self.children_b
        taxa_a = [ind.taxon for ind in members_a]
        taxa_b = [ind.taxon for ind in members_b]
        row_of = {t: i for i, t in enumerate(taxa_a)}
        col_of = {t: j for j, t in enumerate(taxa_b)}
        self.domain.prepare(members_a, members_b)

        # evaluate the match plan
        plan = self._build_plan(gen)
        pair_a = np.fromiter((row_of[a] for a, _ in plan.pairs), dtype=np.int64)
        pair_b = np.fromiter((col_of[b] for _, b in plan.pairs), dtype=np.int64)
        sa, sb = self._evaluate_indexed(pair_a, pair_b)
        self.store.record_many(plan.pairs, sa, sb)
        self.cumulative_evaluations += len(plan)

        # assemble the full outcome matrix: stored where evaluated, else estimated
        n_a, n_b = len(members_a), len(members_b)
        scores_a = np.full((n_a, n_b), np.nan)
        scores_b = np.full((n_a, n_b), np.nan)
        scores_a[pair_a, pair_b] = sa
        scores_b[pair_a, pair_b] = sb
        evaluated_mask = ~np.isnan(scores_a)
        estimator = InteractionEstimator(
            self.tree_a, self.tree_b, self.store, k=cfg.k_nearest, horizon=cfg.horizon
        )
        estimate = estimator.estimate_values
        record = self.store.record_ids
        miss_r, miss_c = np.nonzero(~evaluated_mask)
        est_a: list[float] = []
        est_b: list[float] = []
        for i, j in zip(miss_r.tolist(), miss_c.tolist()):
            ta, tb = taxa_a[i], taxa_b[j]
            try:
                va, vb = estimate(ta, tb)
            except UnestimableError:
                one_a, one_b = self.domain.evaluate(np.array([i]), np.array([j]))
                va, vb = float(one_a[0]), float(one_b[0])
                record(ta, tb, va, vb)
                self.cumulative_evaluations += 1
            est_a.append(va)
            est_b.append(vb)
        scores_a[miss_r, miss_c] = est_a
        scores_b[miss_r, miss_c] = est_b

        # probe protocol (instrumentation; outcomes never stored)
        probe_error = self._probe(estimator, row_of, col_of, plan)

        # fitness, truncation, reproduction
        bonuses_a = self.domain.bonuses("a", scores_a, members_a)
        bonuses_b = self.domain.bonuses("b", scores_b.T, members_b)
        records_a = [
            FitnessRecord(ind.taxon, scores_a[i], float(bonuses_a[i]))
            for i, ind in enumerate(members_a)
        ]
        records_b = [
            FitnessRecord(ind.taxon, scores_b[:, j], float(bonuses_b[j]))
            for j, ind in enumerate(members_b)
        ]

        ctx = GenerationContext(members_a, members_b, scores_a, scores_b, evaluated_mask)
        metrics = self.domain.metrics(ctx)

        self._reproduce("a", members_a, records_a)
        self._reproduce("b", members_b, records_b)

        pruned_a = self.tree_a.prune(cfg.horizon)
        pruned_b = self.tree_b.prune(cfg.horizon)
        self.store.drop_taxa(sorted(pruned_a), sorted(pruned_b))

        self.generation += 1
        return GenerationStats(
            generation=gen,
            cumulative_evaluations=self.cumulative_evaluations,
            probe_evaluations=self.probe_evaluations,
            probe_mean_error=probe_error,
            domain_metrics=metrics,
        )

    def _probe(self, estimator, row_of, col_of, plan: MatchPlan) -> float:
        cfg = self.cfg
        if cfg.probe_count == 0:
            return math.nan
        rng = self.rngs["probes"]
        if cfg.probe_mode == "evaluated":
            pool = list(plan.pairs)
        else:
            pool = [
                (ca.taxon, cb.taxon)
                for ca in self.children_a
                for cb in self.children_b
                if not self.store.has(ca.taxon, cb.taxon)
            ]
        if not pool:
            return math.nan
        take = min(cfg.probe_count, len(pool))
        chosen = rng.choice(len(pool), size=take, replace=False)
        chosen.sort()
        pairs = [pool[i] for i in chosen]
        estimates = []
        kept = []
        for a, b in pairs:
            try:
                estimates.append(estimator.estimate_values(a, b))
                kept.append((a, b))
            except UnestimableError:
                continue
        if not kept:
            return math.nan
        idx_a = np.fromiter((row_of[a] for a, _ in kept), dtype=np.int64)
        idx_b = np.fromiter((col_of[b] for _, b in kept), dtype=np.int64)
        true_a, true_b = self._evaluate_indexed(idx_a, idx_b)
        self.probe_evaluations += len(kept)
        est = np.array(estimates)
        err = np.concatenate([np.abs(est[:, 0] - true_a), np.abs(est[:, 1] - true_b)])
        return float(err.mean())

    def _reproduce(self, side: str, members: list[Individual], records) -> None:
        cfg = self.cfg
        tree = self.tree_a if side == "a" else self.tree_b
        survivors_ids = truncate(records, cfg.n_parents)
        chosen = set(survivors_ids)
        by_taxon = {ind.taxon: ind for ind in members}
        survivor_records = [r for r in records if r.taxon in chosen]
        for ind in members:
            if ind.taxon not in chosen:
                tree.mark_extinct(ind.taxon)
        reproducer_ids = self.domain.reproducers(
            side, survivor_records, cfg.n_children, self.rngs["selection"]
        )
        mut = self.rngs["mutation"]
        children = []
        for parent_id in reproducer_ids:
            genome = self.domain.mutate(side, by_taxon[parent_id].genome, mut)
            child_tid = tree.add_taxon(parent_id, self.generation + 1)
            children.append(Individual(child_tid, genome))
        survivors = [by_taxon[t] for t in survivors_ids]
        if side == "a":
            self.parents_a, self.children_a = survivors, children
        else:
            self.parents_b, self.children_b = survivors, children

    def run(self) -> list[GenerationStats]:
        stats = []
        while self.cumulative_evaluations < self.cfg.eval_budget:
            stats.append(self.run_generation())
        return stats


# -- persistence ---------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def stats_to_csv(path: Path, trial: int, rows: list[GenerationStats], metric_columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(BASE_COLUMNS) + list(metric_columns))
        for s in rows:
            writer.writerow(
                [
                    trial,
                    s.generation,
                    s.cumulative_evaluations,
                    s.probe_evaluations,
                    _format_value(s.probe_mean_error),
                ]
                + [_format_value(s.domain_metrics[m]) for m in metric_columns]
            )


def run_single_trial(cfg: ExperimentConfig, trial: int) -> list[GenerationStats]:
    return TrialRunner(cfg, trial).run()


def _trial_worker(args) -> tuple[int, list[GenerationStats]]:
    cfg, trial = args
    return trial, run_single_trial(cfg, trial)


def run_trials(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> Path:
    """Run every trial, write one CSV each plus a manifest; returns the dir."""
    cfg = finalize(cfg)
    out = Path(out_dir if out_dir is not None else cfg.output_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise RuntimeError(f"output path {out} is not writable: {exc}") from exc
    domain = make_domain(cfg)
    results: dict[int, list[GenerationStats]] = {}
    trials = list(range(cfg.trial_count))
    if cfg.workers > 1 and cfg.trial_count > 1 and not cfg.export_phylogeny:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.trial_count)) as pool:
            for trial, rows in pool.map(_trial_worker, [(cfg, t) for t in trials]):
                results[trial] = rows
    else:
        for t in trials:
            runner = TrialRunner(cfg, t)
            results[t] = runner.run()
            if cfg.export_phylogeny:
                runner.tree_a.write_csv(out / f"phylo_{domain.labels[0]}_{t:03d}.csv")
                runner.tree_b.write_csv(out / f"phylo_{domain.labels[1]}_{t:03d}.csv")
    for t in trials:
        stats_to_csv(out / f"trial_{t:03d}.csv", t, results[t], domain.metric_columns)
    manifest = {
        "treatment": cfg.treatment,
        "version": __version__,
        "seed": cfg.seed,
        "domain_metrics": list(domain.metric_columns),
        "config": {k: v for k, v in vars(cfg).items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out
