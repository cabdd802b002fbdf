"""Serialization round trips and format-error reporting."""
import json

import numpy as np
import pytest

from ggmscan import (
    Dataset,
    FitStats,
    FormatError,
    GaussianModel,
    GraphKind,
    PriorGraph,
    ValidationError,
    deserialize_model,
    load_dataset,
    load_graph,
    load_model,
    random_graph_like,
    read_dataset_csv,
    save_dataset,
    save_graph,
    save_model,
    serialize_model,
    write_dataset_csv,
)
from ggmscan.graphs import full_graph, node_only_graph
from ggmscan.io import graph_from_dict, graph_to_dict

from conftest import random_spd_model


class TestDatasetCsv:
    def test_round_trip_exact(self, rng):
        values = rng.standard_normal((4, 3)) * 1e-3
        ds = Dataset(values, ("fa_a", "fa_b", "fa_c"), ("p1", "p2", "p3", "p4"))
        back = read_dataset_csv(write_dataset_csv(ds))
        assert back.region_labels == ds.region_labels
        assert back.subject_ids == ds.subject_ids
        assert (back.values == ds.values).all()  # bit-exact via repr round trip

    def test_file_round_trip(self, tmp_path, rng):
        ds = Dataset(rng.standard_normal((2, 2)), ("a", "b"), ("s1", "s2"))
        path = tmp_path / "ds.csv"
        save_dataset(ds, path)
        back = load_dataset(path)
        assert (back.values == ds.values).all()
        assert path.read_text().startswith("# ggmscan dataset v1\n")

    def test_bad_cell_reports_position(self):
        text = "subject_id,a,b\ns1,1.0,oops\n"
        with pytest.raises(FormatError, match="row 1, column 2"):
            read_dataset_csv(text)

    def test_ragged_row_rejected(self):
        text = "subject_id,a,b\ns1,1.0\n"
        with pytest.raises(FormatError, match="row 1"):
            read_dataset_csv(text)

    def test_header_only_rejected(self):
        with pytest.raises(FormatError):
            read_dataset_csv("subject_id,a\n")

    def test_duplicate_ids_caught_downstream(self):
        text = "subject_id,a\ns1,1.0\ns1,2.0\n"
        with pytest.raises(ValidationError, match="duplicate"):
            read_dataset_csv(text)


class TestGraphJson:
    def test_dict_round_trip(self):
        adj = np.eye(4, dtype=int)
        adj[0, 2] = adj[2, 0] = 1
        adj[1, 3] = adj[3, 1] = 1
        g = PriorGraph(adj, GraphKind.NEIGHBORHOOD)
        back = graph_from_dict(graph_to_dict(g))
        assert back.kind is GraphKind.NEIGHBORHOOD
        assert (back.adjacency == g.adjacency).all()

    def test_file_round_trip(self, tmp_path):
        g = full_graph(3)
        path = tmp_path / "g.json"
        save_graph(g, path)
        back = load_graph(path)
        assert (back.adjacency == g.adjacency).all()
        assert back.kind is GraphKind.FULL

    def test_random_graph_round_trip(self, rng):
        for seed in range(5):
            g = random_graph_like(full_graph(6), seed=seed)
            back = graph_from_dict(graph_to_dict(g))
            assert (back.adjacency == g.adjacency).all()

    def test_edge_out_of_range(self):
        with pytest.raises(FormatError, match="out of range"):
            graph_from_dict({"format_version": 1, "kind": "custom", "d": 2,
                             "edges": [[0, 2]]})

    def test_self_edge_rejected(self):
        with pytest.raises(FormatError):
            graph_from_dict({"format_version": 1, "kind": "custom", "d": 2,
                             "edges": [[1, 1]]})

    def test_missing_key(self):
        with pytest.raises(FormatError, match="malformed"):
            graph_from_dict({"format_version": 1, "d": 2, "edges": []})

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            load_graph(path)


class TestModelJson:
    def test_identity_model_bit_exact(self):
        g = node_only_graph(3)
        m = GaussianModel(np.array([0.5, -1.0, 2.0]), np.eye(3), g, 0.25)
        back, labels = deserialize_model(serialize_model(m))
        assert labels is None
        assert (back.mean == m.mean).all()
        assert (back.precision == m.precision).all()
        assert back.rho == 0.25
        assert back.graph.kind is GraphKind.NODE_ONLY

    def test_random_model_round_trip_property(self, rng):
        for _ in range(20):
            d = int(rng.integers(2, 8))
            g = random_graph_like(full_graph(d), seed=int(rng.integers(1 << 30)))
            m = random_spd_model(d, rng, graph=g)
            back, _ = deserialize_model(serialize_model(m))
            assert (back.mean == m.mean).all()
            assert (back.precision == m.precision).all()
            assert back.rho == m.rho
            assert (back.graph.adjacency == m.graph.adjacency).all()

    def test_constrained_zeros_not_stored(self, rng):
        g = node_only_graph(4)
        m = random_spd_model(4, rng, graph=g)
        obj = json.loads(serialize_model(m))
        assert all(i == j for i, j, _ in obj["precision_triplets"])
        back, _ = deserialize_model(serialize_model(m))
        off = back.precision[~np.eye(4, dtype=bool)]
        assert (off == 0.0).all()

    def test_region_labels_travel(self, tmp_path, rng):
        m = random_spd_model(2, rng)
        path = tmp_path / "m.json"
        save_model(m, path, region_labels=("left", "right"))
        back, labels = load_model(path)
        assert labels == ("left", "right")
        assert (back.precision == m.precision).all()

    def test_fit_stats_round_trip(self):
        g = node_only_graph(2)
        stats = FitStats(iterations=7, final_objective=-3.25, converged=False,
                         objective_trace=(1.0, 2.0, 2.5))
        m = GaussianModel(np.zeros(2), np.eye(2), g, 0.1, stats)
        back, _ = deserialize_model(serialize_model(m))
        assert back.fit_stats == stats

    def test_truncated_stream(self, rng):
        data = serialize_model(random_spd_model(3, rng))
        with pytest.raises(FormatError):
            deserialize_model(data[: len(data) // 2])

    def test_wrong_version(self, rng):
        obj = json.loads(serialize_model(random_spd_model(2, rng)))
        obj["format_version"] = 99
        with pytest.raises(FormatError, match="format_version"):
            deserialize_model(json.dumps(obj).encode())

    def test_support_violation_rejected_on_load(self, rng):
        # hand-craft a stream whose triplets break the declared graph
        obj = json.loads(serialize_model(random_spd_model(2, rng)))
        obj["graph"]["edges"] = []
        obj["graph"]["kind"] = "node_only"
        with pytest.raises(ValidationError):
            deserialize_model(json.dumps(obj).encode())

    def test_non_pd_rejected_on_load(self):
        g = full_graph(2)
        m = GaussianModel(np.zeros(2), np.eye(2), g, 0.0)
        obj = json.loads(serialize_model(m))
        obj["precision_triplets"] = [[0, 0, 1.0], [0, 1, 2.0], [1, 1, 1.0]]
        with pytest.raises(ValidationError):
            deserialize_model(json.dumps(obj).encode())

    def test_triplet_out_of_range(self, rng):
        obj = json.loads(serialize_model(random_spd_model(2, rng)))
        obj["precision_triplets"].append([1, 5, 0.1])
        with pytest.raises(FormatError, match="triplet"):
            deserialize_model(json.dumps(obj).encode())

    def test_label_length_mismatch(self, rng):
        obj = json.loads(serialize_model(random_spd_model(2, rng), region_labels=("a", "b")))
        obj["region_labels"] = ["a"]
        with pytest.raises(FormatError, match="region_labels"):
            deserialize_model(json.dumps(obj).encode())
