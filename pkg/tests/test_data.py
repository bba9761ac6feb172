"""Dataset loading, round trips, setting transforms, synthetic generation."""

import json
import os

import numpy as np
import pytest

from graph_ssl.data import apply_setting, load_dataset, save_dataset, synth_sbm_generate
from graph_ssl.errors import ConfigError, DataFormatError

from helpers import toy_dataset


def write_toy_directory(path, n=4, d=2, k=2, edges=((0, 1), (1, 2), (2, 3))):
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "meta.json"), "w") as f:
        json.dump({"num_nodes": n, "num_features": d, "num_classes": k}, f)
    with open(os.path.join(path, "features.tsv"), "w") as f:
        for i in range(n):
            f.write("\t".join(str(float(i + j)) for j in range(d)) + "\n")
    with open(os.path.join(path, "labels.tsv"), "w") as f:
        for i in range(n):
            f.write(f"{i % k}\n")
    with open(os.path.join(path, "edges.tsv"), "w") as f:
        for u, v in edges:
            f.write(f"{u}\t{v}\n")
    with open(os.path.join(path, "split.json"), "w") as f:
        json.dump({"train": [0], "val": [1], "test": [2, 3]}, f)
    return path


class TestLoadDataset:
    def test_well_formed_toy(self, tmp_path):
        ds = load_dataset(write_toy_directory(tmp_path / "toy"))
        assert ds.n == 4 and ds.num_features == 2 and ds.num_classes == 2
        assert ds.graph.num_edges == 3
        assert ds.observed_mask.sum() == 1

    def test_reversed_duplicate_edge_deduped(self, tmp_path):
        ds = load_dataset(write_toy_directory(tmp_path / "toy", edges=((0, 1), (1, 0))))
        assert ds.graph.num_edges == 1

    def test_missing_file(self, tmp_path):
        path = write_toy_directory(tmp_path / "toy")
        os.remove(os.path.join(path, "labels.tsv"))
        with pytest.raises(DataFormatError, match="labels.tsv"):
            load_dataset(path)

    def test_label_out_of_range_names_line(self, tmp_path):
        path = write_toy_directory(tmp_path / "toy")
        with open(os.path.join(path, "labels.tsv"), "w") as f:
            f.write("0\n1\n5\n0\n")
        with pytest.raises(DataFormatError, match="line 3"):
            load_dataset(path)

    def test_feature_shape_mismatch_names_line(self, tmp_path):
        path = write_toy_directory(tmp_path / "toy")
        with open(os.path.join(path, "features.tsv"), "a") as f:
            f.write("1.0\t2.0\n")
        with pytest.raises(DataFormatError, match="features.tsv"):
            load_dataset(path)

    def test_edge_endpoint_out_of_range(self, tmp_path):
        path = write_toy_directory(tmp_path / "toy", edges=((0, 9),))
        with pytest.raises(DataFormatError, match="edges.tsv line 1"):
            load_dataset(path)

    def test_split_overlap_rejected(self, tmp_path):
        path = write_toy_directory(tmp_path / "toy")
        with open(os.path.join(path, "split.json"), "w") as f:
            json.dump({"train": [0], "val": [0], "test": [2]}, f)
        with pytest.raises(DataFormatError, match="disjoint"):
            load_dataset(path)


def test_save_load_round_trip(tmp_path):
    ds = toy_dataset(n=8, k=3, d=4, seed=5)
    save_dataset(ds, tmp_path / "out")
    back = load_dataset(tmp_path / "out")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.graph.edges, ds.graph.edges)
    for mask in ("observed_mask", "train_mask", "val_mask", "test_mask"):
        np.testing.assert_array_equal(getattr(back, mask), getattr(ds, mask))
    # byte-stable rewrite
    save_dataset(back, tmp_path / "out2")
    for name in ("meta.json", "features.tsv", "labels.tsv", "edges.tsv", "split.json"):
        assert (tmp_path / "out" / name).read_bytes() == (tmp_path / "out2" / name).read_bytes()


class TestApplySetting:
    def test_standard_is_identity(self):
        ds = toy_dataset(seed=1)
        assert apply_setting(ds, "standard") is ds

    def test_missing_edge_removes_all_test_incident_edges(self):
        ds = toy_dataset(n=10, seed=2, edge_prob=0.6)
        out = apply_setting(ds, "missing_edge")
        for u, v in out.graph.edges:
            assert not ds.test_mask[u] and not ds.test_mask[v]
        # edges between non-test nodes survive untouched
        kept = {
            (u, v)
            for u, v in ds.graph.edges
            if not ds.test_mask[u] and not ds.test_mask[v]
        }
        assert kept == {tuple(e) for e in out.graph.edges}

    def test_missing_edge_can_empty_the_graph(self):
        ds = toy_dataset(n=4, seed=3, edge_prob=1.0, n_observed=1)
        # every node except node 0 is val/test; all edges touch val or test
        out = apply_setting(ds, "missing_edge")
        test_nodes = np.flatnonzero(ds.test_mask)
        for u, v in out.graph.edges:
            assert u not in test_nodes and v not in test_nodes

    def test_reduced_label_halves_each_class(self):
        rng = np.random.default_rng(0)
        ds = toy_dataset(n=60, k=3, seed=4, n_observed=40)
        out = apply_setting(ds, "reduced_label", rng)
        for c in range(3):
            before = int((ds.train_mask & (ds.labels == c)).sum())
            after = int((out.train_mask & (out.labels == c)).sum())
            assert after == before - (-(-before // 2))
        # dropped nodes keep their ground-truth labels but leave observed mask
        dropped = ds.train_mask & ~out.train_mask
        assert not out.observed_mask[dropped].any()
        np.testing.assert_array_equal(out.labels, ds.labels)

    def test_reduced_label_twenty_becomes_ten(self):
        ds = toy_dataset(n=40, k=2, seed=6, n_observed=40)
        # force one class to have exactly 20 train nodes
        labels = np.zeros(40, dtype=np.int64)
        labels[:20] = 0
        labels[20:] = 1
        ds = type(ds)(**{**ds.__dict__, "labels": labels})
        out = apply_setting(ds, "reduced_label", np.random.default_rng(1))
        assert int((out.train_mask & (labels == 0)).sum()) == 10

    def test_unknown_setting(self):
        with pytest.raises(ConfigError):
            apply_setting(toy_dataset(), "bogus")


class TestSynthSbm:
    def test_extreme_probabilities_give_cliques(self):
        ds = synth_sbm_generate(12, 3, 1.0, 0.0, 4, 0.1, np.random.default_rng(0))
        for u, v in ds.graph.edges:
            assert ds.labels[u] == ds.labels[v]
        for c in range(3):
            nodes = np.flatnonzero(ds.labels == c)
            expected = len(nodes) * (len(nodes) - 1) // 2
            count = sum(
                1 for u, v in ds.graph.edges if ds.labels[u] == c and ds.labels[v] == c
            )
            assert count == expected

    def test_equal_probabilities_mix_classes(self):
        p = 0.3
        ds = synth_sbm_generate(80, 2, p, p, 4, 0.5, np.random.default_rng(1))
        same = ds.labels[ds.graph.edges[:, 0]] == ds.labels[ds.graph.edges[:, 1]]
        labels = ds.labels
        n_same_pairs = sum(
            1 for i in range(80) for j in range(i + 1, 80) if labels[i] == labels[j]
        )
        n_diff_pairs = 80 * 79 // 2 - n_same_pairs
        rate_same = same.sum() / n_same_pairs
        rate_diff = (~same).sum() / n_diff_pairs
        sigma = np.sqrt(p * (1 - p) * (1 / n_same_pairs + 1 / n_diff_pairs))
        assert abs(rate_same - rate_diff) < 3 * sigma

    def test_benchmark_probability_setting(self):
        ds = synth_sbm_generate(120, 2, 0.9, 0.1, 6, 1.0, np.random.default_rng(2))
        same = ds.labels[ds.graph.edges[:, 0]] == ds.labels[ds.graph.edges[:, 1]]
        labels = ds.labels
        n_same_pairs = sum(
            1 for i in range(120) for j in range(i + 1, 120) if labels[i] == labels[j]
        )
        n_diff_pairs = 120 * 119 // 2 - n_same_pairs
        assert abs(same.sum() / n_same_pairs - 0.9) < 3 * np.sqrt(0.9 * 0.1 / n_same_pairs)
        assert abs((~same).sum() / n_diff_pairs - 0.1) < 3 * np.sqrt(0.1 * 0.9 / n_diff_pairs)

    def test_invalid_probability(self):
        with pytest.raises(ConfigError):
            synth_sbm_generate(10, 2, 1.5, 0.0, 4, 0.1, np.random.default_rng(0))

    def test_masks_disjoint_and_labeled_fraction(self):
        ds = synth_sbm_generate(100, 2, 0.5, 0.5, 4, 1.0, np.random.default_rng(3), labeled_frac=0.1)
        ds.validate()
        assert int(ds.train_mask.sum()) == 10
