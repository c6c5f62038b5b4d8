"""Generation loop accounting, probe protocol, determinism, CSV and CLI surfaces."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from phylocoev.cli import main as cli_main
from phylocoev.config import ExperimentConfig, finalize
from phylocoev.engine import TrialRunner, run_trials
from phylocoev import sorting_networks as sn


def ng_config(**kw):
    base = dict(domain="numbers-coo", eval_budget=40_000, seed=5)
    base.update(kw)
    return finalize(ExperimentConfig(**base))


def run_gens(cfg, trial=0, n_gens=None):
    runner = TrialRunner(cfg, trial)
    stats = []
    while runner.cumulative_evaluations < cfg.eval_budget:
        stats.append(runner.run_generation())
        if n_gens is not None and len(stats) >= n_gens:
            break
    return runner, stats


class TestBudgetAccounting:
    def test_generation_zero_bootstraps_all_versus_all(self):
        for scheme in ("parents-vs-all", "random-cohorts", "all-vs-all"):
            _, stats = run_gens(ng_config(matchmaker=scheme, eval_budget=10_000))
            assert stats[0].cumulative_evaluations == 10_000

    def test_all_versus_all_per_generation(self):
        _, stats = run_gens(ng_config(matchmaker="all-vs-all", eval_budget=110_000))
        diffs = np.diff([s.cumulative_evaluations for s in stats])
        assert list(diffs) == [10_000] * len(diffs)

    def test_parents_versus_all_per_generation(self):
        _, stats = run_gens(ng_config(matchmaker="parents-vs-all", eval_budget=60_000))
        diffs = np.diff([s.cumulative_evaluations for s in stats])
        assert list(diffs) == [4_375] * len(diffs)

    def test_random_cohorts_per_generation(self):
        _, stats = run_gens(ng_config(matchmaker="random-cohorts", eval_budget=60_000))
        diffs = np.diff([s.cumulative_evaluations for s in stats])
        assert list(diffs) == [5_000] * len(diffs)

    def test_population_sizes_constant(self):
        runner, _ = run_gens(ng_config(eval_budget=40_000))
        assert len(runner.parents_a) + len(runner.children_a) == 100
        assert len(runner.parents_b) + len(runner.children_b) == 100

    def test_budget_terminates_run(self):
        runner, stats = run_gens(ng_config(matchmaker="all-vs-all", eval_budget=35_000))
        assert stats[-1].cumulative_evaluations >= 35_000
        assert len(stats) == 4


class TestProbeProtocol:
    def test_probe_error_within_numbers_range(self):
        _, stats = run_gens(ng_config(eval_budget=40_000))
        for s in stats[1:]:
            assert 0.0 <= s.probe_mean_error <= 1.0

    def test_probe_evaluations_tracked_separately(self):
        _, stats = run_gens(ng_config(eval_budget=40_000, probe_count=50))
        assert stats[0].probe_evaluations == 0  # nothing held out at bootstrap
        assert stats[1].probe_evaluations == 50
        assert stats[-1].probe_evaluations == 50 * (len(stats) - 1)
        # budget column never includes probes
        diffs = np.diff([s.cumulative_evaluations for s in stats])
        assert list(diffs) == [4_375] * len(diffs)

    def test_no_probes_under_all_versus_all(self):
        _, stats = run_gens(ng_config(matchmaker="all-vs-all", eval_budget=40_000))
        assert all(s.probe_evaluations == 0 for s in stats)
        assert all(math.isnan(s.probe_mean_error) for s in stats)

    def test_diagnostic_mode_zero_error(self):
        cfg = ng_config(matchmaker="all-vs-all", eval_budget=40_000, probe_mode="evaluated")
        _, stats = run_gens(cfg)
        for s in stats:
            assert s.probe_mean_error == 0.0
            assert s.probe_evaluations > 0

    def test_probe_outcomes_never_enter_store(self):
        cfg = ng_config(eval_budget=30_000, probe_count=100)
        runner, stats = run_gens(cfg)
        # store only holds plan pairs: children pairs probed but absent
        child_pairs = [
            (ca.taxon, cb.taxon)
            for ca in runner.children_a
            for cb in runner.children_b
        ]
        in_store = sum(1 for p in child_pairs if runner.store.has(*p))
        assert in_store == 0


class TestDeterminism:
    def test_identical_seed_identical_csv(self, tmp_path):
        cfg = ng_config(eval_budget=30_000, trial_count=2, output_path=str(tmp_path / "x"))
        out1 = run_trials(cfg, tmp_path / "a")
        out2 = run_trials(cfg, tmp_path / "b")
        for name in ("trial_000.csv", "trial_001.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_parallel_trials_identical_csv(self, tmp_path):
        cfg = ng_config(eval_budget=30_000, trial_count=2)
        seq = run_trials(cfg, tmp_path / "seq")
        par = run_trials(
            finalize(ExperimentConfig(**{**vars(cfg), "workers": 2})), tmp_path / "par"
        )
        for name in ("trial_000.csv", "trial_001.csv"):
            assert (seq / name).read_bytes() == (par / name).read_bytes()

    def test_chunked_evaluation_identical_csv(self, tmp_path):
        base = ng_config(eval_budget=30_000)
        one = run_trials(base, tmp_path / "w1")
        two = run_trials(
            finalize(ExperimentConfig(**{**vars(base), "workers": 3})), tmp_path / "w3"
        )
        assert (one / "trial_000.csv").read_bytes() == (two / "trial_000.csv").read_bytes()

    def test_trials_differ_from_each_other(self, tmp_path):
        cfg = ng_config(eval_budget=30_000, trial_count=2)
        out = run_trials(cfg, tmp_path / "t")
        assert (out / "trial_000.csv").read_text() != (out / "trial_001.csv").read_text()


class TestOutputs:
    def test_csv_schema_and_manifest(self, tmp_path):
        cfg = ng_config(eval_budget=25_000, trial_count=1)
        out = run_trials(cfg, tmp_path / "o")
        lines = (out / "trial_000.csv").read_text().splitlines()
        assert lines[0] == (
            "trial,generation,cumulative_evaluations,probe_evaluations,"
            "probe_mean_error,mean_genotype_sum_a,mean_genotype_sum_b,disconnected"
        )
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == cfg.seed
        assert manifest["config"]["domain"] == "numbers-coo"
        assert manifest["domain_metrics"] == [
            "mean_genotype_sum_a", "mean_genotype_sum_b", "disconnected"
        ]

    def test_sorting_csv_schema(self, tmp_path):
        cfg = finalize(
            ExperimentConfig(
                domain="sorting", eval_budget=3_000, seed=1,
                n_parents=5, n_children=15, probe_count=20,
            )
        )
        out = run_trials(cfg, tmp_path / "s")
        header = (out / "trial_000.csv").read_text().splitlines()[0]
        assert header.endswith("pct_perfect_networks,best_network_size")

    def test_phylogeny_export(self, tmp_path):
        cfg = ng_config(eval_budget=25_000, export_phylogeny=True)
        out = run_trials(cfg, tmp_path / "p")
        rows = (out / "phylo_pop_a_000.csv").read_text().splitlines()
        assert rows[0] == "id,parent_id,birth_generation,extant"
        assert len(rows) > 100

    def test_unwritable_output_rejected(self):
        cfg = ng_config(eval_budget=25_000)
        with pytest.raises(RuntimeError, match="not writable"):
            run_trials(cfg, "/proc/nope")


class TestUnestimableFallback:
    def test_no_fallbacks_needed_after_bootstrap(self):
        # parent games sit at interaction distance one, so every child-child
        # query stays estimable even at the tightest legal horizon and the
        # per-generation budget is exactly the plan size
        cfg = ng_config(eval_budget=30_000, horizon=1)
        runner = TrialRunner(cfg, 0)
        s0 = runner.run_generation()
        s1 = runner.run_generation()
        s2 = runner.run_generation()
        assert s1.cumulative_evaluations - s0.cumulative_evaluations == 4_375
        assert s2.cumulative_evaluations - s1.cumulative_evaluations == 4_375

    def test_fallback_evaluates_records_and_charges(self, monkeypatch):
        # force every estimate to fail: each missing pair must be truly
        # evaluated, charged to the budget, and written to the store
        from phylocoev.outcomes import InteractionEstimator, UnestimableError

        def always_unestimable(self, a, b):
            raise UnestimableError("forced")

        cfg = ng_config(eval_budget=30_000)
        runner = TrialRunner(cfg, 0)
        runner.run_generation()
        taxa_a = [i.taxon for i in runner.parents_a + runner.children_a]
        taxa_b = [i.taxon for i in runner.parents_b + runner.children_b]
        monkeypatch.setattr(InteractionEstimator, "estimate_values", always_unestimable)
        before = runner.cumulative_evaluations
        stats = runner.run_generation()
        per_gen = stats.cumulative_evaluations - before
        assert per_gen == 10_000  # 4,375 planned + 5,625 fallbacks
        # every pair whose taxa survived pruning is now truly recorded
        kept_a = [a for a in taxa_a if a in runner.tree_a]
        kept_b = [b for b in taxa_b if b in runner.tree_b]
        assert kept_a and kept_b
        assert all(runner.store.has(a, b) for a in kept_a for b in kept_b)


class TestSortingSmoke:
    def test_small_run_produces_sane_metrics(self):
        cfg = finalize(
            ExperimentConfig(
                domain="sorting", eval_budget=2_000, seed=2,
                n_parents=4, n_children=12, probe_count=25,
            )
        )
        _, stats = run_gens(cfg)
        for s in stats:
            assert 0.0 <= s.domain_metrics["pct_perfect_networks"] <= 100.0
            if not math.isnan(s.probe_mean_error):
                assert 0.0 <= s.probe_mean_error <= 16.0

    def test_seeded_perfect_network_detected(self):
        # drop a known-perfect network into the founders and confirm the
        # metrics see it without affecting scoring machinery
        cfg = finalize(
            ExperimentConfig(
                domain="sorting", eval_budget=400, seed=3,
                n_parents=3, n_children=7, probe_count=10,
            )
        )
        runner = TrialRunner(cfg, 0)
        runner.children_a[0].genome = sn.batcher_network()
        stats = runner.run_generation()
        assert stats.domain_metrics["pct_perfect_networks"] == pytest.approx(10.0)
        assert stats.domain_metrics["best_network_size"] == 63.0


class TestCli:
    def test_run_and_verify(self, tmp_path, capsys):
        cfg_file = tmp_path / "ng.cfg"
        cfg_file.write_text(
            "domain = numbers-coo\neval_budget = 21000\nseed = 4\n"
            "matchmaker = parents-vs-all\nprobe_count = 20\n"
        )
        rc = cli_main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "out")])
        assert rc == 0
        assert (tmp_path / "out" / "trial_000.csv").exists()

        net_file = tmp_path / "net.txt"
        net_file.write_text(sn.batcher_network().to_text())
        assert cli_main(["verify-network", "--file", str(net_file)]) == 0
        assert "perfect=true" in capsys.readouterr().out

    def test_sweep(self, tmp_path, capsys):
        configs = tmp_path / "configs"
        configs.mkdir()
        for i, scheme in enumerate(("all-vs-all", "parents-vs-all")):
            (configs / f"{i}_{scheme}.cfg").write_text(
                f"domain = numbers-coo\neval_budget = 15000\nseed = 4\n"
                f"matchmaker = {scheme}\nprobe_count = 10\n"
            )
        rc = cli_main(["sweep", "--configs", str(configs), "--out", str(tmp_path / "swept")])
        assert rc == 0
        assert (tmp_path / "swept" / "0_all-vs-all" / "manifest.json").exists()
        assert (tmp_path / "swept" / "1_parents-vs-all" / "trial_000.csv").exists()

    def test_config_error_reported(self, tmp_path, capsys):
        rc = cli_main(["run", "--domain", "numbers-coo"])
        assert rc == 2
        assert "eval_budget" in capsys.readouterr().err
