"""Accuracy, Welch's test, trial statistics, and report files."""

import csv

import numpy as np
import pytest
from scipy.special import betainc

from graph_ssl.bench import (
    CellSummary,
    TrialReport,
    accuracy,
    emit_report,
    run_single_trial,
    run_trials,
    welch_t_test,
)
from graph_ssl.errors import ContractError
from graph_ssl.train import TrainConfig

from helpers import toy_dataset


class TestAccuracy:
    def test_perfect_and_zero(self):
        ds = toy_dataset(n=5, k=2, d=3, seed=0)
        mask = np.ones(5, dtype=bool)
        right = np.eye(2)[ds.labels]
        assert accuracy(right, ds, mask) == 1.0
        assert accuracy(np.eye(2)[1 - ds.labels], ds, mask) == 0.0

    def test_three_of_five(self):
        ds = toy_dataset(n=5, k=2, d=3, seed=1)
        preds = np.eye(2)[ds.labels].copy()
        preds[0] = np.eye(2)[1 - ds.labels[0]]
        preds[3] = np.eye(2)[1 - ds.labels[3]]
        assert accuracy(preds, ds, np.ones(5, dtype=bool)) == pytest.approx(0.6)

    def test_empty_mask_rejected(self):
        ds = toy_dataset(n=5, k=2, d=3, seed=2)
        with pytest.raises(ContractError):
            accuracy(np.eye(2)[ds.labels], ds, np.zeros(5, dtype=bool))

    def test_tie_breaks_to_lowest_class(self):
        ds = toy_dataset(n=2, k=3, d=3, seed=3)
        object.__setattr__(ds, "labels", np.array([0, 1]))
        uniform = np.full((2, 3), 1 / 3)
        assert accuracy(uniform, ds, np.ones(2, dtype=bool)) == pytest.approx(0.5)


class TestWelch:
    def test_identical_samples_give_one(self):
        assert welch_t_test([1.0, 1.0, 1.0], [1.0, 1.0, 1.0]) == 1.0

    def test_extreme_separation(self):
        rng = np.random.default_rng(0)
        a = np.zeros(4) + rng.normal(scale=1e-9, size=4)
        b = np.ones(4) + rng.normal(scale=1e-9, size=4)
        assert welch_t_test(a, b) < 0.001
        # exactly zero variance with different means: degenerate limit
        assert welch_t_test([0.0, 0.0], [1.0, 1.0]) == 0.0

    def test_textbook_worked_example(self):
        # classic unequal-variance example: t = -2.2192, dof = 24.496
        a = [19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0]
        b = [28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7,
             23.2, 17.5, 20.6, 18.0, 23.9, 21.6, 24.3, 20.4, 24.0, 13.2]
        assert welch_t_test(a, b) == pytest.approx(0.03597, abs=1e-3)

    def test_matches_direct_formula_on_random_samples(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            a = rng.normal(0.0, 1.0, size=8)
            b = rng.normal(0.5, 2.0, size=12)
            va, vb = a.var(ddof=1), b.var(ddof=1)
            se2 = va / 8 + vb / 12
            t = (a.mean() - b.mean()) / np.sqrt(se2)
            dof = se2**2 / ((va / 8) ** 2 / 7 + (vb / 12) ** 2 / 11)
            want = betainc(dof / 2.0, 0.5, dof / (dof + t * t))
            assert welch_t_test(a, b) == pytest.approx(float(want), abs=1e-10)

    def test_small_samples_rejected(self):
        with pytest.raises(ContractError):
            welch_t_test([1.0], [2.0, 3.0])


def small_config(**kw):
    defaults = dict(model="gcn", hidden=8, lr=0.05, max_epochs=6, patience=5, seed=0)
    defaults.update(kw)
    return TrainConfig(**defaults)


class TestRunTrials:
    def test_statistics_over_trials(self):
        ds = toy_dataset(n=14, k=2, d=3, seed=4, n_observed=6)
        cell = run_trials(ds, "standard", small_config(), n_trials=3, base_seed=7,
                          dataset_name="toy")
        accs = cell.accuracies
        assert len(accs) == 3
        assert cell.mean == pytest.approx(np.mean(accs))
        assert cell.std == pytest.approx(np.std(accs, ddof=1))

    def test_needs_two_trials(self):
        ds = toy_dataset(n=10, k=2, d=3, seed=5)
        with pytest.raises(ContractError):
            run_trials(ds, "standard", small_config(), n_trials=1, base_seed=0)

    def test_single_trial_rerun_is_bit_exact(self):
        ds = toy_dataset(n=14, k=2, d=3, seed=6, n_observed=6)
        cell = run_trials(ds, "reduced_label", small_config(model="sbm_gcn"),
                          n_trials=2, base_seed=3, dataset_name="toy")
        for trial in cell.trials:
            again = run_single_trial(ds, "reduced_label", small_config(model="sbm_gcn"),
                                     trial.seed)
            assert again.test_accuracy == trial.test_accuracy

    def test_reduced_label_resampled_per_trial(self):
        ds = toy_dataset(n=30, k=2, d=3, seed=7, n_observed=16)
        cell = run_trials(ds, "reduced_label", small_config(max_epochs=2), n_trials=2,
                          base_seed=0)
        assert cell.trials[0].seed != cell.trials[1].seed


def make_summary(dataset, setting, model, accs):
    trials = [
        TrialReport(config=small_config(model=model), seed=i, test_accuracy=a,
                    best_epoch=1, wall_time=0.1)
        for i, a in enumerate(accs)
    ]
    arr = np.array(accs)
    return CellSummary(dataset=dataset, setting=setting, model=model,
                       mean=float(arr.mean()), std=float(arr.std(ddof=1)), trials=trials)


class TestEmitReport:
    def test_empty_input_header_only(self, tmp_path):
        csv_path, md_path = emit_report({}, str(tmp_path))
        rows = list(csv.reader(open(csv_path)))
        assert rows == [["dataset", "setting", "model", "mean", "std", "n_trials",
                         "counterpart", "p_value"]]

    def test_single_cell(self, tmp_path):
        cells = {("toy", "standard", "gcn"): make_summary("toy", "standard", "gcn",
                                                          [0.8, 0.82, 0.81])}
        csv_path, md_path = emit_report(cells, str(tmp_path))
        rows = list(csv.reader(open(csv_path)))
        assert len(rows) == 2
        assert rows[1][:3] == ["toy", "standard", "gcn"]
        md = open(md_path).read()
        assert "| gcn |" in md and "standard" in md

    def test_markers(self, tmp_path):
        cells = {
            ("toy", "standard", "gcn"): make_summary("toy", "standard", "gcn",
                                                     [0.70, 0.71, 0.69, 0.70]),
            ("toy", "standard", "sbm_gcn"): make_summary("toy", "standard", "sbm_gcn",
                                                         [0.80, 0.81, 0.79, 0.80]),
        }
        _, md_path = emit_report(cells, str(tmp_path))
        md = open(md_path).read()
        # generative model is best, beats counterpart, significantly
        assert "**_0.800 ± 0.008_***" in md
        rows = list(csv.reader(open(md_path.replace("summary.md", "summary.csv"))))
        sbm_row = next(r for r in rows if r[2] == "sbm_gcn")
        assert sbm_row[6] == "gcn"
        assert float(sbm_row[7]) < 0.05
