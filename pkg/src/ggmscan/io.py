"""File formats: dataset CSV, model JSON, graph JSON.

All floats are written with Python's shortest-repr formatting, so every
read/write round trip is bit-exact. Formats carry an explicit version so
future revisions can stay readable.
"""
from __future__ import annotations

import csv
import io as _io
import json
from typing import Sequence

import numpy as np

from .core import (
    Dataset,
    FitStats,
    FormatError,
    GaussianModel,
    GraphKind,
    PriorGraph,
    ValidationError,
)

DATASET_FORMAT_VERSION = 1
MODEL_FORMAT_VERSION = 1
GRAPH_FORMAT_VERSION = 1

_DATASET_COMMENT = f"# ggmscan dataset v{DATASET_FORMAT_VERSION}"


# ---------------------------------------------------------------------------
# dataset CSV


def write_dataset_csv(ds: Dataset) -> str:
    """Render a dataset as CSV: a version comment, a header row whose cells
    after the first are the region labels, then one row per subject with the
    subject id in the first column."""
    buf = _io.StringIO()
    buf.write(_DATASET_COMMENT + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject_id", *ds.region_labels])
    for sid, row in zip(ds.subject_ids, ds.values):
        writer.writerow([sid, *[repr(float(v)) for v in row]])
    return buf.getvalue()


def read_dataset_csv(text: str) -> Dataset:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = [row for row in csv.reader(lines) if row]
    if len(rows) < 2:
        raise FormatError("dataset CSV needs a header row and at least one subject row")
    header = rows[0]
    if len(header) < 2:
        raise FormatError("dataset CSV header must list at least one region label")
    labels = [c.strip() for c in header[1:]]
    ids = []
    values = np.empty((len(rows) - 1, len(labels)))
    for r, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise FormatError(
                f"row {r + 1} has {len(row)} cells, expected {len(header)}"
            )
        ids.append(row[0].strip())
        for c, cell in enumerate(row[1:]):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise FormatError(
                    f"row {r + 1}, column {c + 1} ({labels[c]!r}): not a number: {cell!r}"
                ) from None
    return Dataset(values, tuple(labels), tuple(ids))


def save_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(write_dataset_csv(ds))


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return read_dataset_csv(fh.read())


# ---------------------------------------------------------------------------
# graph JSON


def graph_to_dict(g: PriorGraph) -> dict:
    return {
        "format_version": GRAPH_FORMAT_VERSION,
        "kind": g.kind.value,
        "d": g.d,
        "edges": [[int(i), int(j)] for i, j in g.edges()],
    }


def graph_from_dict(obj: dict) -> PriorGraph:
    if not isinstance(obj, dict):
        raise FormatError("graph JSON must be an object")
    try:
        kind = GraphKind(obj["kind"])
        d = int(obj["d"])
        edges = obj["edges"]
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"malformed graph JSON: {exc}") from None
    if d < 1:
        raise FormatError(f"graph d must be >= 1, got {d}")
    adjacency = np.eye(d, dtype=np.int8)
    for pair in edges:
        try:
            i, j = (int(pair[0]), int(pair[1]))
        except (ValueError, TypeError, IndexError):
            raise FormatError(f"malformed edge entry: {pair!r}") from None
        if not (0 <= i < j < d):
            raise FormatError(f"edge [{i}, {j}] out of range for d={d} (need 0 <= i < j < d)")
        adjacency[i, j] = adjacency[j, i] = 1
    return PriorGraph(adjacency, kind)


def save_graph(g: PriorGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(g), fh, indent=1)
        fh.write("\n")


def load_graph(path) -> PriorGraph:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid graph JSON: {exc}") from None
    return graph_from_dict(obj)


# ---------------------------------------------------------------------------
# model JSON


def serialize_model(m: GaussianModel, region_labels: Sequence[str] | None = None) -> bytes:
    """Encode a fitted model as versioned JSON bytes.

    The precision matrix is stored as upper-triangle (i, j, value) triplets of
    its nonzero entries, so structural zeros are implicit and restored
    exactly. `region_labels`, when given, travel with the model so scoring
    tools can detect label mismatches.
    """
    i_idx, j_idx = np.nonzero(np.triu(m.precision))
    triplets = [
        [int(i), int(j), float(m.precision[i, j])] for i, j in zip(i_idx, j_idx)
    ]
    fs = m.fit_stats
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "d": m.d,
        "mean": [float(v) for v in m.mean],
        "rho": float(m.rho),
        "graph": graph_to_dict(m.graph),
        "precision_triplets": triplets,
        "fit_stats": {
            "iterations": fs.iterations,
            "final_objective": float(fs.final_objective) if np.isfinite(fs.final_objective) else None,
            "converged": fs.converged,
            "objective_trace": [float(v) for v in fs.objective_trace],
        },
    }
    if region_labels is not None:
        obj["region_labels"] = list(region_labels)
    return (json.dumps(obj, indent=1) + "\n").encode("utf-8")


def deserialize_model(data: bytes) -> tuple[GaussianModel, tuple[str, ...] | None]:
    """Inverse of serialize_model.

    Returns the model and the optional region labels stored with it. The
    reconstructed model passes the full invariant checks (symmetry, positive
    definiteness, support containment); violations raise ValidationError.
    """
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"invalid model JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise FormatError("model JSON must be an object")
    version = obj.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"unsupported model format_version: {version!r}")
    try:
        d = int(obj["d"])
        mean = np.asarray(obj["mean"], dtype=float)
        rho = float(obj["rho"])
        graph = graph_from_dict(obj["graph"])
        triplets = obj["precision_triplets"]
        fs_obj = obj["fit_stats"]
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"malformed model JSON: {exc}") from None
    if mean.ndim != 1 or mean.shape[0] != d:
        raise FormatError(f"mean has length {mean.size}, expected {d}")
    precision = np.zeros((d, d))
    for entry in triplets:
        try:
            i, j, value = int(entry[0]), int(entry[1]), float(entry[2])
        except (ValueError, TypeError, IndexError):
            raise FormatError(f"malformed precision triplet: {entry!r}") from None
        if not (0 <= i <= j < d):
            raise FormatError(f"precision triplet ({i}, {j}) out of range for d={d}")
        precision[i, j] = value
        precision[j, i] = value
    try:
        final = fs_obj.get("final_objective")
        stats = FitStats(
            iterations=int(fs_obj.get("iterations", 0)),
            final_objective=float(final) if final is not None else float("nan"),
            converged=bool(fs_obj.get("converged", True)),
            objective_trace=tuple(float(v) for v in fs_obj.get("objective_trace", ())),
        )
    except (ValueError, TypeError) as exc:
        raise FormatError(f"malformed fit_stats: {exc}") from None
    labels = obj.get("region_labels")
    if labels is not None:
        labels = tuple(str(v) for v in labels)
        if len(labels) != d:
            raise FormatError(f"region_labels has length {len(labels)}, expected {d}")
    model = GaussianModel(mean, precision, graph, rho, stats)
    return model, labels


def save_model(m: GaussianModel, path, region_labels: Sequence[str] | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_model(m, region_labels))


def load_model(path) -> tuple[GaussianModel, tuple[str, ...] | None]:
    with open(path, "rb") as fh:
        return deserialize_model(fh.read())


# ---------------------------------------------------------------------------
# generic CSV emission (figure-ready tables)


def write_table_csv(path, header: Sequence[str], rows) -> None:
    """Write a plain CSV table with a version comment line."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# ggmscan table v{DATASET_FORMAT_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)
