"""Deterministic generators for the four synthetic benchmarks, stream-order
construction, and generic feature-CSV ingestion.

All generators are pure functions of their seed, driven by numpy's default
64-bit PCG64 generator, so fixtures reproduce bit-identically across runs.
Benchmark streams present fresh known-class points first (interleaved),
followed by one contiguous segment per unknown class in arrival order; an
`interleave` flag spreads the known points across the whole stream instead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class CsvFormatError(ValueError):
    """Feature CSV is ragged or contains non-numeric cells."""


@dataclass
class BenchmarkSpec:
    """Which benchmark to build and at what size."""

    dataset_id: int
    points_per_init_class: int = 200
    points_per_stream_segment: int = 200
    seed: int = 0
    interleave: bool = False

    def __post_init__(self) -> None:
        if self.dataset_id not in (1, 2, 3, 4):
            raise ValueError(f"dataset_id must be 1..4, got {self.dataset_id}")
        if self.points_per_init_class < 1 or self.points_per_stream_segment < 1:
            raise ValueError("point counts must be >= 1")


@dataclass
class LabeledStream:
    """Initialization set plus a temporally ordered stream with ground truth.

    stream_labels is None for ingested streams without a label column.
    """

    init_points: np.ndarray
    init_labels: np.ndarray
    stream_points: np.ndarray
    stream_labels: np.ndarray | None
    new_class_ids: list[int] = field(default_factory=list)


def gen_gaussian_class(mean, cov_diag, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. samples from a diagonal-covariance Gaussian."""
    mean = np.asarray(mean, dtype=np.float64)
    var = np.asarray(cov_diag, dtype=np.float64)
    if n < 1:
        raise ValueError("n must be >= 1")
    if np.any(var <= 0):
        raise ValueError("variances must be > 0")
    return mean + rng.standard_normal((n, mean.size)) * np.sqrt(var)


def gen_ring_class(center, radius: float, radial_sigma: float, n: int,
                   rng: np.random.Generator) -> np.ndarray:
    """n points on a noisy circle: uniform angle, Gaussian radial spread."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    center = np.asarray(center, dtype=np.float64)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    r = rng.normal(radius, radial_sigma, size=n) if radial_sigma > 0 else np.full(n, radius)
    return center + np.column_stack([r * np.cos(theta), r * np.sin(theta)])


# class generators per benchmark: (kind, params...) tuples in class-id order
_BENCHMARKS: dict[int, dict] = {
    1: {
        "init": [("gauss", (10, 10), (4, 4)), ("gauss", (20, 20), (4, 4)), ("gauss", (30, 30), (4, 4))],
        "new": [("gauss", (40, 40), (4, 4)), ("gauss", (50, 50), (4, 4))],
    },
    2: {
        "init": [("gauss", (10, 10), (15, 15)), ("gauss", (20, 20), (15, 15)), ("gauss", (30, 30), (15, 15))],
        "new": [("gauss", (40, 40), (15, 15)), ("gauss", (50, 50), (15, 15))],
    },
    3: {
        "init": [("gauss", (10, 20), (5, 5)), ("gauss", (20, 30), (5, 5)), ("gauss", (30, 20), (5, 5))],
        "new": [("gauss", (20, 10), (5, 5)), ("gauss", (20, 20), (5, 5))],
    },
    4: {
        "init": [("ring", (10, 20), 10.0, 1.0), ("ring", (20, 15), 10.0, 1.0)],
        "new": [("gauss", (40, 30), (10, 10))],
    },
}


def _gen_class(desc: tuple, n: int, rng: np.random.Generator) -> np.ndarray:
    if desc[0] == "gauss":
        return gen_gaussian_class(desc[1], desc[2], n, rng)
    return gen_ring_class(desc[1], desc[2], desc[3], n, rng)


def class_descriptions(dataset_id: int) -> dict[int, dict]:
    """Per-class generator descriptors (means/centers) for manifests."""
    bench = _BENCHMARKS[dataset_id]
    out: dict[int, dict] = {}
    for cid, desc in enumerate(bench["init"] + bench["new"]):
        entry = {"kind": desc[0], "known": cid < len(bench["init"])}
        if desc[0] == "gauss":
            entry.update(mean=list(desc[1]), cov_diag=list(desc[2]))
        else:
            entry.update(center=list(desc[1]), radius=desc[2], radial_sigma=desc[3])
        out[cid] = entry
    return out


def make_benchmark(spec: BenchmarkSpec) -> LabeledStream:
    """Build a benchmark's initialization set and stream deterministically.

    The stream opens with points_per_stream_segment fresh known-class points
    (split as evenly as possible among the known classes, order shuffled),
    then appends one contiguous points_per_stream_segment block per unknown
    class.
    """
    bench = _BENCHMARKS[spec.dataset_id]
    rng = np.random.default_rng(spec.seed)
    n_known = len(bench["init"])

    init_parts, init_labels = [], []
    for cid, desc in enumerate(bench["init"]):
        init_parts.append(_gen_class(desc, spec.points_per_init_class, rng))
        init_labels.append(np.full(spec.points_per_init_class, cid, dtype=np.int64))

    seg = spec.points_per_stream_segment
    known_counts = [seg // n_known + (1 if i < seg % n_known else 0) for i in range(n_known)]
    known_parts, known_labels = [], []
    for cid, (desc, cnt) in enumerate(zip(bench["init"], known_counts)):
        known_parts.append(_gen_class(desc, cnt, rng))
        known_labels.append(np.full(cnt, cid, dtype=np.int64))
    known_pts = np.vstack(known_parts)
    known_y = np.concatenate(known_labels)
    perm = rng.permutation(len(known_y))
    known_pts, known_y = known_pts[perm], known_y[perm]

    new_ids = list(range(n_known, n_known + len(bench["new"])))
    new_parts, new_labels = [], []
    for cid, desc in zip(new_ids, bench["new"]):
        new_parts.append(_gen_class(desc, seg, rng))
        new_labels.append(np.full(seg, cid, dtype=np.int64))
    new_pts = np.vstack(new_parts)
    new_y = np.concatenate(new_labels)

    if spec.interleave:
        total = len(known_y) + len(new_y)
        slots = np.sort(rng.choice(total, size=len(known_y), replace=False))
        pts = np.empty((total, known_pts.shape[1]))
        y = np.empty(total, dtype=np.int64)
        mask = np.zeros(total, dtype=bool)
        mask[slots] = True
        pts[mask], y[mask] = known_pts, known_y
        pts[~mask], y[~mask] = new_pts, new_y
        stream_pts, stream_y = pts, y
    else:
        stream_pts = np.vstack([known_pts, new_pts])
        stream_y = np.concatenate([known_y, new_y])

    return LabeledStream(
        init_points=np.vstack(init_parts),
        init_labels=np.concatenate(init_labels),
        stream_points=stream_pts,
        stream_labels=stream_y,
        new_class_ids=new_ids,
    )


def shuffle_stream(s: LabeledStream, rng: np.random.Generator) -> LabeledStream:
    """Uniformly permute the stream order; init set and per-point ground
    truth are preserved."""
    perm = rng.permutation(len(s.stream_points))
    return LabeledStream(
        init_points=s.init_points,
        init_labels=s.init_labels,
        stream_points=s.stream_points[perm],
        stream_labels=s.stream_labels[perm] if s.stream_labels is not None else None,
        new_class_ids=list(s.new_class_ids),
    )


def load_features_csv(path, has_labels: bool, has_header: bool = False):
    """Read a numeric feature CSV; the trailing column holds integer labels
    when has_labels is set.

    Returns (points (n, q) float array, labels (n,) int array or None).
    Ragged rows and non-numeric cells raise CsvFormatError naming the row.
    """
    rows: list[list[float]] = []
    labels: list[int] = []
    width: int | None = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
                if has_labels and width < 2:
                    raise CsvFormatError(f"{path}: row {lineno}: need at least one feature column plus a label")
            elif len(row) != width:
                raise CsvFormatError(
                    f"{path}: row {lineno}: expected {width} columns, got {len(row)}"
                )
            feat = row[:-1] if has_labels else row
            try:
                values = [float(c) for c in feat]
            except ValueError as exc:
                raise CsvFormatError(f"{path}: row {lineno}: {exc}") from exc
            if not all(np.isfinite(values)):
                raise CsvFormatError(f"{path}: row {lineno}: non-finite feature value")
            rows.append(values)
            if has_labels:
                try:
                    labels.append(int(row[-1]))
                except ValueError as exc:
                    raise CsvFormatError(
                        f"{path}: row {lineno}: invalid label {row[-1]!r}"
                    ) from exc
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    points = np.array(rows, dtype=np.float64)
    return points, (np.array(labels, dtype=np.int64) if has_labels else None)


def write_features_csv(path, points, labels=None) -> None:
    """Write points (and optional integer labels) with full float precision."""
    pts = np.asarray(points, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        for i, row in enumerate(pts):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")


def write_manifest(path, spec: BenchmarkSpec, stream: LabeledStream) -> None:
    """JSON manifest describing a generated benchmark."""
    import json

    init_counts = {int(c): int((stream.init_labels == c).sum()) for c in np.unique(stream.init_labels)}
    stream_counts = {int(c): int((stream.stream_labels == c).sum()) for c in np.unique(stream.stream_labels)}
    doc = {
        "dataset_id": spec.dataset_id,
        "seed": spec.seed,
        "counts": {"init": init_counts, "stream": stream_counts},
        "class_means": class_descriptions(spec.dataset_id),
        "new_class_ids": stream.new_class_ids,
        "interleave": spec.interleave,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
