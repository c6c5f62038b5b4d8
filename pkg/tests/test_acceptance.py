"""Acceptance suite: protocol checks, oracle equivalence, and scaled
qualitative reproductions of the benchmark dynamics.

Each criterion prints one PASS/FAIL line (run with -s to watch). The scaled
runs take minutes; results are shared across criteria through module-scoped
fixtures. All runs are seeded and reproducible.
"""

import csv
import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from phylocoev.config import ExperimentConfig, finalize
from phylocoev.engine import run_trials
from phylocoev.outcomes import InteractionEstimator, UnestimableError, weights
from phylocoev.selection import lexicase_event
from phylocoev import sorting_networks as sn
from phylocoev.phylogeny import Phylogeny, interaction_distance, k_nearest_evaluated

from test_outcomes import oracle_estimate, random_outcome_instance
from test_phylogeny import oracle_k_nearest, random_instance

ACCEPTANCE_SEED = 42
WORKERS = 2


def report(name: str, ok: bool, detail: str = "") -> bool:
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    return ok


def read_trials(out_dir: Path) -> dict[int, list[dict]]:
    trials: dict[int, list[dict]] = {}
    for path in sorted(out_dir.glob("trial_*.csv")):
        with open(path) as fh:
            rows = [
                {k: float(v) if v != "nan" else math.nan for k, v in row.items()}
                for row in csv.DictReader(fh)
            ]
        trials[int(rows[0]["trial"])] = rows
    return trials


# -- shared scaled runs --------------------------------------------------------


@pytest.fixture(scope="module")
def coo_runs(tmp_path_factory):
    """CompareOnOne, 10 trials x 2e5 evaluations per matchmaker."""
    base = tmp_path_factory.mktemp("coo")
    runs = {}
    for scheme in ("all-vs-all", "parents-vs-all", "random-cohorts"):
        cfg = finalize(
            ExperimentConfig(
                domain="numbers-coo", eval_budget=200_000, matchmaker=scheme,
                seed=ACCEPTANCE_SEED, trial_count=10, workers=WORKERS,
            )
        )
        runs[scheme] = read_trials(run_trials(cfg, base / scheme))
    return runs


@pytest.fixture(scope="module")
def coa_runs(tmp_path_factory):
    """CompareOnAll, 10 trials x 1e6 evaluations, both matchmakers."""
    base = tmp_path_factory.mktemp("coa")
    runs = {}
    for scheme in ("parents-vs-all", "all-vs-all"):
        cfg = finalize(
            ExperimentConfig(
                domain="numbers-coa", eval_budget=1_000_000, matchmaker=scheme,
                seed=ACCEPTANCE_SEED, trial_count=10, workers=WORKERS,
            )
        )
        runs[scheme] = read_trials(run_trials(cfg, base / scheme))
    return runs


@pytest.fixture(scope="module")
def sn_runs(tmp_path_factory):
    """Sorting networks, 10 trials x 5e6 evaluations, parents-versus-all."""
    base = tmp_path_factory.mktemp("sn")
    cfg = finalize(
        ExperimentConfig(
            domain="sorting", eval_budget=5_000_000, matchmaker="parents-vs-all",
            n_parents=50, n_children=150,
            seed=ACCEPTANCE_SEED, trial_count=10, workers=WORKERS,
        )
    )
    return read_trials(run_trials(cfg, base / "pva"))


# -- criteria -------------------------------------------------------------------


def test_estimator_oracle_equivalence():
    t0 = time.perf_counter()
    checked = 0
    for seed in range(200):
        tree_a, tree_b, store, query, k, horizon = random_outcome_instance(seed)
        est = InteractionEstimator(tree_a, tree_b, store, k=k, horizon=horizon)
        hits = k_nearest_evaluated(tree_a, tree_b, store, query, k, horizon)
        expected_hits = oracle_k_nearest(tree_a, tree_b, store, query, k, horizon)
        assert hits == expected_hits, f"distance mismatch at seed {seed}"
        expected = oracle_estimate(tree_a, tree_b, store, query, k, horizon)
        if expected is None:
            with pytest.raises(UnestimableError):
                est.estimate_values(*query)
        else:
            got = est.estimate_values(*query)
            assert abs(got[0] - expected[0]) <= 1e-12
            assert abs(got[1] - expected[1]) <= 1e-12
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = checked == 200 and elapsed < 10.0
    assert report(
        "estimator-oracle-equivalence", ok, f"{checked} instances in {elapsed:.1f}s"
    )


def test_distance_facts():
    tree = Phylogeny("a")
    tree.add_taxon(None, 0)          # 0: grandparent
    tree.add_taxon(0, 1)             # 1: child of 0
    tree.add_taxon(0, 1)             # 2: sibling of 1
    tree.add_taxon(1, 2)             # 3: grandchild of 0
    facts = {
        "parent-child": tree.pairwise_distance(0, 1, 10) == 1,
        "siblings": tree.pairwise_distance(1, 2, 10) == 2,
        "grandparent-grandchild": tree.pairwise_distance(0, 3, 10) == 2,
        "parents-vs-children-interaction": interaction_distance(1, 1) == 2,
    }
    ok = all(facts.values())
    assert report("distance-facts", ok, ", ".join(k for k, v in facts.items() if not v) or "all hold")


def test_weight_law():
    ok = weights([1, 3]) == [0.75, 0.25]
    rng = np.random.default_rng(ACCEPTANCE_SEED)
    worst = 0.0
    for _ in range(10_000):
        k = int(rng.integers(2, 6))
        dists = rng.integers(0, 25, size=k).tolist()
        if sum(dists) == 0:
            continue
        ws = weights(dists)
        outcomes = rng.random(k)
        est = float(np.dot(ws, outcomes))
        lo, hi = min(outcomes), max(outcomes)
        ok = ok and (lo - 1e-12 <= est <= hi + 1e-12)
        ok = ok and abs(sum(ws) - 1.0) < 1e-12 and all(w >= 0 for w in ws)
        worst = max(worst, max(est - hi, lo - est, 0.0))
    assert report("weight-law", ok, f"(1,3)->(0.75,0.25); worst convexity slack {worst:.2e}")


def test_evaluation_accounting():
    from phylocoev.engine import TrialRunner

    expected = {"all-vs-all": 10_000, "random-cohorts": 5_000, "parents-vs-all": 4_375}
    details = []
    ok = True
    for scheme, per_gen in expected.items():
        cfg = finalize(
            ExperimentConfig(
                domain="numbers-coo", eval_budget=10_000 + 10 * per_gen,
                matchmaker=scheme, seed=ACCEPTANCE_SEED,
            )
        )
        runner = TrialRunner(cfg, 0)
        stats = [runner.run_generation() for _ in range(11)]
        diffs = np.diff([s.cumulative_evaluations for s in stats])
        scheme_ok = stats[0].cumulative_evaluations == 10_000 and all(d == per_gen for d in diffs)
        ok = ok and scheme_ok
        details.append(f"{scheme}={per_gen}/gen x10 {'ok' if scheme_ok else 'BAD'}")
    assert report("evaluation-accounting", ok, "; ".join(details))


def _genotype_sum(row):
    return 0.5 * (row["mean_genotype_sum_a"] + row["mean_genotype_sum_b"])


def test_compare_on_one_scaled_reproduction(coo_runs):
    increasing_ok = True
    for scheme, trials in coo_runs.items():
        for t, rows in trials.items():
            first = _genotype_sum(rows[0])
            mid = _genotype_sum(rows[len(rows) // 2])
            last = _genotype_sum(rows[-1])
            if not (first < mid < last):
                increasing_ok = False
    pva_wins = 0
    for t in range(10):
        pva = _genotype_sum(coo_runs["parents-vs-all"][t][-1])
        ava = _genotype_sum(coo_runs["all-vs-all"][t][-1])
        if pva >= ava:
            pva_wins += 1
    ok = increasing_ok and pva_wins >= 7
    assert report(
        "compare-on-one-scaled",
        ok,
        f"sums strictly increasing: {increasing_ok}; parents-vs-all >= all-vs-all in {pva_wins}/10 paired seeds",
    )


def test_compare_on_all_disconnect(coa_runs):
    pva_fired = sum(
        1 for rows in coa_runs["parents-vs-all"].values()
        if any(r["disconnected"] == 1.0 for r in rows)
    )
    ava_fired = sum(
        1 for rows in coa_runs["all-vs-all"].values()
        if any(r["disconnected"] == 1.0 for r in rows)
    )
    ok = pva_fired >= 1 and ava_fired == 0
    assert report(
        "compare-on-all-disconnect",
        ok,
        f"parents-vs-all fired in {pva_fired}/10 trials (need >=1); "
        f"all-vs-all fired in {ava_fired}/10 (need 0)",
    )


def test_sorting_network_perfection(sn_runs):
    t0 = time.perf_counter()
    batcher_ok = sn.verify_network(sn.batcher_network())
    verify_time = time.perf_counter() - t0

    trials_with_perfect = 0
    nonincreasing_ok = True
    for t, rows in sn_runs.items():
        best = [r["best_network_size"] for r in rows]
        seen = [b for b in best if not math.isnan(b)]
        if seen:
            trials_with_perfect += 1
            if any(b2 > b1 for b1, b2 in zip(seen, seen[1:])):
                nonincreasing_ok = False
    ok = batcher_ok and verify_time < 5.0 and trials_with_perfect >= 8 and nonincreasing_ok
    assert report(
        "sorting-network-perfection",
        ok,
        f"batcher verified in {verify_time:.2f}s; perfect network found in "
        f"{trials_with_perfect}/10 trials (need >=8); best-size nonincreasing: {nonincreasing_ok}",
    )


def test_probe_protocol(coo_runs, sn_runs):
    ng_errs = [
        r["probe_mean_error"]
        for trials in coo_runs.values()
        for rows in trials.values()
        for r in rows
        if not math.isnan(r["probe_mean_error"])
    ]
    sn_errs = [
        r["probe_mean_error"]
        for rows in sn_runs.values()
        for r in rows
        if not math.isnan(r["probe_mean_error"])
    ]
    bounds_ok = all(0.0 <= e <= 1.0 for e in ng_errs) and all(
        0.0 <= e <= 16.0 for e in sn_errs
    )

    from phylocoev.engine import TrialRunner

    cfg = finalize(
        ExperimentConfig(
            domain="numbers-coo", eval_budget=40_000, matchmaker="all-vs-all",
            probe_mode="evaluated", seed=ACCEPTANCE_SEED,
        )
    )
    runner = TrialRunner(cfg, 0)
    diag = [runner.run_generation() for _ in range(3)]
    diag_ok = all(s.probe_mean_error == 0.0 and s.probe_evaluations > 0 for s in diag)
    ok = bounds_ok and diag_ok and ng_errs and sn_errs
    assert report(
        "probe-protocol",
        bool(ok),
        f"{len(ng_errs)} numbers probes in [0,1], {len(sn_errs)} sorting probes in [0,16]; "
        f"all-vs-all diagnostic error exactly 0: {diag_ok}",
    )


def test_determinism(tmp_path):
    cfg = finalize(
        ExperimentConfig(
            domain="numbers-coo", eval_budget=40_000, matchmaker="parents-vs-all",
            seed=ACCEPTANCE_SEED, trial_count=2,
        )
    )
    first = run_trials(cfg, tmp_path / "first")
    second = run_trials(cfg, tmp_path / "second")
    parallel = run_trials(
        finalize(ExperimentConfig(**{**vars(cfg), "workers": 2})), tmp_path / "parallel"
    )
    same = all(
        (first / name).read_bytes()
        == (second / name).read_bytes()
        == (parallel / name).read_bytes()
        for name in ("trial_000.csv", "trial_001.csv")
    )
    assert report("determinism", same, "serial x2 and parallel byte-identical")


def test_lexicase_exhaustive_correctness():
    orders = list(itertools.permutations(range(3)))
    rng = np.random.default_rng(ACCEPTANCE_SEED)
    draws = 10_000
    worst = 0.0
    ok = True
    for bits in range(512):
        rows = np.array(
            [[(bits >> (3 * c + t)) & 1 for t in range(3)] for c in range(3)],
            dtype=float,
        )
        exact = np.zeros(3)
        for order in orders:
            alive = [0, 1, 2]
            for t in order:
                best = max(rows[i, t] for i in alive)
                alive = [i for i in alive if rows[i, t] == best]
                if len(alive) == 1:
                    break
            for i in alive:
                exact[i] += 1 / len(alive)
        exact /= len(orders)
        counts = np.zeros(3)
        for _ in range(draws):
            counts[lexicase_event(rows, rng)] += 1
        gap = float(np.max(np.abs(counts / draws - exact)))
        worst = max(worst, gap)
        if gap > 0.02:
            ok = False
    assert report(
        "lexicase-correctness", ok,
        f"512 binary 3x3 instances, worst frequency gap {worst:.4f} (tolerance 0.02)",
    )
