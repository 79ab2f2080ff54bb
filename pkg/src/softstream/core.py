"""Core data types, distance/ranking primitives, and model persistence.

A Model is a collection of per-class footprints. Each footprint is a set of
prototype vectors plus a scale parameter eta (the squared-distance scale at
which a point's typicality to the class drops to 0.5). All other modules
build on these types.

Concurrency: a Model is an exclusively-owned value. Read-only scoring may run
concurrently as long as no mutation is in flight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

MODEL_FORMAT_VERSION = 1

#: Sentinel label for points that matched no known class.
OUTLIER = -1


class DimensionMismatchError(ValueError):
    """Feature vector dimension does not match the model/session dimension."""


class EmptyModelError(RuntimeError):
    """Operation requires a model with at least one prototype."""


class ModelFormatError(ValueError):
    """Model file is malformed or missing required fields."""


class ModelVersionError(ModelFormatError):
    """Model file was written by an incompatible format version."""


def as_vector(coords, dimension: int | None = None) -> np.ndarray:
    """Validate and convert coordinates to a 1-D float64 vector.

    Raises ValueError on non-finite entries and DimensionMismatchError when
    `dimension` is given and does not match.
    """
    vec = np.asarray(coords, dtype=np.float64)
    if vec.ndim != 1 or vec.size < 1:
        raise ValueError(f"feature vector must be 1-D and non-empty, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("feature vector contains non-finite values")
    if dimension is not None and vec.size != dimension:
        raise DimensionMismatchError(f"expected dimension {dimension}, got {vec.size}")
    return vec


@dataclass
class Prototype:
    """A learned representative vector owned by one class."""

    proto_id: int
    class_id: int
    position: np.ndarray


@dataclass
class ClassFootprint:
    """A class's retained summary: its prototypes plus the scale eta.

    eta > 0 is the squared-distance scale at which typicality to this class
    equals 0.5; eta_floor is the coverage scale of the points the footprint
    was last fitted from (0 when disabled) and bounds eta from below when
    the scale is re-estimated. `created_at` is the stream index at which the
    class appeared (0 for initialization classes); `update_count` counts
    footprint mutations.
    """

    class_id: int
    prototypes: list[Prototype]
    eta: float
    created_at: int = 0
    update_count: int = 0
    eta_floor: float = 0.0

    def positions(self) -> np.ndarray:
        return np.stack([p.position for p in self.prototypes])

    def proto_ids(self) -> np.ndarray:
        return np.array([p.proto_id for p in self.prototypes], dtype=np.int64)


@dataclass
class HyperParams:
    """Engine hyperparameters with their standard defaults."""

    n_neurons_per_class: int = 10
    k_query: int = 3
    k_eta: int = 5
    typicality_threshold: float = 0.1
    min_new_class_points: int = 30
    fuzzifier: float = 1.5
    learning_rate: float = 0.1
    neighborhood_range: float = 2.0
    p1m_restarts: int = 3
    p1m_conv_tol: float = 1e-4
    p1m_max_iter: int = 100
    p1m_eta_scale: float = 5.0
    eta_coverage_quantile: float = 0.9
    discovery_eta_boost: float = 2.2

    def __post_init__(self) -> None:
        if self.fuzzifier <= 1:
            raise ValueError("fuzzifier must be > 1")
        if not 0 < self.learning_rate < 1:
            raise ValueError("learning_rate must be in (0, 1)")
        if self.neighborhood_range <= 0:
            raise ValueError("neighborhood_range must be > 0")
        if not 0 < self.typicality_threshold < 1:
            raise ValueError("typicality_threshold must be in (0, 1)")
        if self.k_query < 1 or self.k_eta < 1:
            raise ValueError("k_query and k_eta must be >= 1")
        if self.n_neurons_per_class < 1:
            raise ValueError("n_neurons_per_class must be >= 1")
        if self.min_new_class_points < 0:
            raise ValueError("min_new_class_points must be >= 0")
        if self.p1m_conv_tol <= 0 or self.p1m_max_iter < 1 or self.p1m_restarts < 0:
            raise ValueError("invalid P1M iteration parameters")
        if self.p1m_eta_scale <= 0:
            raise ValueError("p1m_eta_scale must be > 0")
        if not 0 <= self.eta_coverage_quantile <= 1:
            raise ValueError("eta_coverage_quantile must be in [0, 1] (0 disables the floor)")
        if self.discovery_eta_boost < 0:
            raise ValueError("discovery_eta_boost must be >= 0 (0 disables the floor)")


@dataclass
class Model:
    """Live collection of class footprints plus global hyperparameters."""

    dimension: int
    hyperparams: HyperParams
    footprints: dict[int, ClassFootprint] = field(default_factory=dict)
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    next_proto_id: int = 0

    def class_ids(self) -> list[int]:
        return sorted(self.footprints)

    def new_proto_id(self) -> int:
        pid = self.next_proto_id
        self.next_proto_id += 1
        return pid

    def all_prototypes(self) -> list[Prototype]:
        """All prototypes in deterministic (class id, list position) order."""
        out: list[Prototype] = []
        for cid in self.class_ids():
            out.extend(self.footprints[cid].prototypes)
        return out

    def n_prototypes(self) -> int:
        return sum(len(fp.prototypes) for fp in self.footprints.values())

    def prototype_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(positions (N, q), class ids (N,), proto ids (N,)) stacked views."""
        protos = self.all_prototypes()
        if not protos:
            raise EmptyModelError("model has no prototypes")
        positions = np.stack([p.position for p in protos])
        classes = np.array([p.class_id for p in protos], dtype=np.int64)
        ids = np.array([p.proto_id for p in protos], dtype=np.int64)
        return positions, classes, ids


def distance(a, b) -> float:
    """Euclidean distance between two equal-dimension vectors."""
    va = as_vector(a)
    vb = as_vector(b, dimension=va.size)
    return float(np.linalg.norm(va - vb))


def k_nearest_prototypes(
    x,
    model: Model,
    k: int,
    exclude: int | None = None,
) -> list[tuple[Prototype, float]]:
    """The k prototypes nearest to x, ascending by distance.

    Distance ties are broken by lower proto_id so the ranking is
    deterministic. `exclude` drops one prototype by id (used when ranking a
    prototype against its peers). Returns min(k, available) entries.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = as_vector(x, dimension=model.dimension)
    protos = model.all_prototypes()
    if exclude is not None:
        protos = [p for p in protos if p.proto_id != exclude]
    if not protos:
        raise EmptyModelError("model has no prototypes to rank")
    positions = np.stack([p.position for p in protos])
    ids = np.array([p.proto_id for p in protos], dtype=np.int64)
    diffs = positions - x
    dists = np.sqrt((diffs * diffs).sum(axis=1))
    order = np.lexsort((ids, dists))
    return [(protos[i], float(dists[i])) for i in order[:k]]


def _rng_state(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": {k: int(v) for k, v in state["state"].items()},
        "has_uint32": int(state.get("has_uint32", 0)),
        "uinteger": int(state.get("uinteger", 0)),
    }


def _restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng()
    name = rng.bit_generator.state["bit_generator"]
    if state.get("bit_generator") != name:
        raise ModelFormatError(
            f"unsupported rng bit generator {state.get('bit_generator')!r}, expected {name!r}"
        )
    rng.bit_generator.state = {
        "bit_generator": state["bit_generator"],
        "state": {k: int(v) for k, v in state["state"].items()},
        "has_uint32": int(state.get("has_uint32", 0)),
        "uinteger": int(state.get("uinteger", 0)),
    }
    return rng


def model_to_dict(model: Model) -> dict:
    """JSON-serializable document for a model (schema version 1)."""
    return {
        "version": MODEL_FORMAT_VERSION,
        "dimension": model.dimension,
        "hyperparams": asdict(model.hyperparams),
        "footprints": [
            {
                "class": cid,
                "eta": fp.eta,
                "eta_floor": fp.eta_floor,
                "created_at": fp.created_at,
                "update_count": fp.update_count,
                "prototypes": [
                    {"proto_id": p.proto_id, "position": p.position.tolist()}
                    for p in fp.prototypes
                ],
            }
            for cid, fp in sorted(model.footprints.items())
        ],
        "rng_state": _rng_state(model.rng),
        "next_proto_id": model.next_proto_id,
    }


def save_model(model: Model, path) -> None:
    """Write the model as a JSON document. Floats keep full precision."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def model_from_dict(doc: dict, expect_dimension: int | None = None) -> Model:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"model format version {version!r} is not supported (expected {MODEL_FORMAT_VERSION})"
        )
    for key in ("dimension", "hyperparams", "footprints", "rng_state"):
        if key not in doc:
            raise ModelFormatError(f"model document is missing field {key!r}")
    dimension = int(doc["dimension"])
    if expect_dimension is not None and dimension != expect_dimension:
        raise DimensionMismatchError(
            f"model dimension {dimension} does not match session dimension {expect_dimension}"
        )
    try:
        params = HyperParams(**doc["hyperparams"])
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid hyperparams: {exc}") from exc
    footprints: dict[int, ClassFootprint] = {}
    seen_ids: set[int] = set()
    for entry in doc["footprints"]:
        try:
            cid = int(entry["class"])
            eta = float(entry["eta"])
            protos = [
                Prototype(
                    proto_id=int(p["proto_id"]),
                    class_id=cid,
                    position=as_vector(p["position"], dimension=dimension),
                )
                for p in entry["prototypes"]
            ]
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"invalid footprint entry for class {entry.get('class')!r}") from exc
        if eta <= 0:
            raise ModelFormatError(f"class {cid}: eta must be > 0, got {eta}")
        if not protos:
            raise ModelFormatError(f"class {cid}: footprint has no prototypes")
        for p in protos:
            if p.proto_id in seen_ids:
                raise ModelFormatError(f"duplicate proto_id {p.proto_id}")
            seen_ids.add(p.proto_id)
        footprints[cid] = ClassFootprint(
            class_id=cid,
            prototypes=protos,
            eta=eta,
            created_at=int(entry.get("created_at", 0)),
            update_count=int(entry.get("update_count", 0)),
            eta_floor=float(entry.get("eta_floor", 0.0)),
        )
    if not footprints:
        raise ModelFormatError("model has no footprints")
    next_pid = int(doc.get("next_proto_id", max(seen_ids) + 1 if seen_ids else 0))
    return Model(
        dimension=dimension,
        hyperparams=params,
        footprints=footprints,
        rng=_restore_rng(doc["rng_state"]),
        next_proto_id=next_pid,
    )


def load_model(path, expect_dimension: int | None = None) -> Model:
    """Load a model written by save_model.

    Raises ModelFormatError (with location) on malformed files,
    ModelVersionError on incompatible versions, and DimensionMismatchError
    when `expect_dimension` is given and conflicts with the file.
    """
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return model_from_dict(doc, expect_dimension=expect_dimension)
