"""Streaming lifecycle: initialize from labeled data, score each incoming
point softly, update the winning footprint, buffer outliers, and discover
new classes from the buffer with retroactive relabeling.

Stream processing is inherently sequential; the engine is single-writer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    OUTLIER,
    ClassFootprint,
    EmptyModelError,
    HyperParams,
    Model,
    Prototype,
    as_vector,
)
from .neural_gas import NgSchedule, distance_rank_order, train_ng
from .possibilistic import (
    class_typicalities,
    coverage_eta,
    estimate_eta,
    pairwise_eta,
    spacing_eta,
)
from .sp1m import coincidence_check, p1m, seed_sampling

CLASSIFIED = "CLASSIFIED"
OUTLIER_BUFFERED = "OUTLIER_BUFFERED"
NEW_CLASS_CREATED = "NEW_CLASS_CREATED"


def _fit_eta_floor(
    points: np.ndarray,
    positions: np.ndarray,
    params: HyperParams,
    spacing_boost: float = 0.0,
) -> float:
    """Scale floor recorded when a footprint is fitted from a point set.

    The floor is the coverage quantile of the training members' squared
    nearest-prototype distances (0 when disabled). Discovery installs pass a
    spacing_boost > 0, adding a fixed multiple of the prototype-spacing
    estimate: footprints fitted from few, absorption-trimmed members
    systematically underestimate the class extent, which the member
    quantile alone cannot correct.
    """
    floor = 0.0
    if params.eta_coverage_quantile > 0:
        floor = coverage_eta(points, positions, params.eta_coverage_quantile)
    if spacing_boost > 0:
        spacing = spacing_eta(positions, params.k_eta)
        if spacing is not None:
            floor = max(floor, spacing_boost * spacing)
    return floor


class UpdateStrategy(Enum):
    """How the winning class's footprint absorbs a classified point."""

    KNN_INCREMENTAL = "knn"
    RETRAIN_ALL = "retrain_all"
    RETRAIN_PROTOS_PLUS_POINT = "retrain_protos"


@dataclass
class StreamOutput:
    """Per-point result: hardened label, typicality vector, lifecycle event.

    The label is the typicality argmax for CLASSIFIED events and OUTLIER
    otherwise (retroactive relabeling happens through the relabel log, not
    here). For NEW_CLASS_CREATED, `new_class` and `absorbed` identify the
    created class and the buffered stream indices it claimed.
    """

    index: int
    label: int
    typicality: dict[int, float]
    event: str
    new_class: int | None = None
    absorbed: list[int] | None = None


@dataclass
class _BufferEntry:
    point: np.ndarray
    index: int


@dataclass
class OutlierBuffer:
    """Ordered store of sub-threshold points awaiting discovery.

    Entries leave only by absorption into a new class or FIFO eviction when
    a capacity is configured (unbounded by default).
    """

    capacity: int | None = None
    entries: list[_BufferEntry] = field(default_factory=list)
    evicted: int = 0

    def append(self, point: np.ndarray, index: int) -> None:
        self.entries.append(_BufferEntry(point=point, index=index))
        if self.capacity is not None and len(self.entries) > self.capacity:
            drop = len(self.entries) - self.capacity
            self.entries = self.entries[drop:]
            self.evicted += drop

    def __len__(self) -> int:
        return len(self.entries)

    def points_array(self) -> np.ndarray:
        return np.stack([e.point for e in self.entries])

    def indices(self) -> list[int]:
        return [e.index for e in self.entries]

    def remove_positions(self, positions) -> None:
        drop = set(int(i) for i in positions)
        self.entries = [e for i, e in enumerate(self.entries) if i not in drop]


def initialize(points, labels, params: HyperParams | None = None, seed=None,
               schedule: NgSchedule | None = None) -> Model:
    """Build a model from labeled initialization data.

    Trains one footprint per class (n_neurons_per_class prototypes, clamped
    to the class size) and estimates each class's scale from its prototype
    geometry. Deterministic given the inputs and seed.
    """
    pts = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("initialization points must be a non-empty (n, q) array")
    if y.shape != (pts.shape[0],):
        raise ValueError("labels must be one integer per initialization point")
    params = params or HyperParams()
    schedule = schedule or NgSchedule()
    model = Model(dimension=pts.shape[1], hyperparams=params, rng=np.random.default_rng(seed))

    class_ids = sorted(int(c) for c in np.unique(y))
    if any(cid < 0 for cid in class_ids):
        raise ValueError("class ids must be non-negative integers")
    for cid in class_ids:
        cls_pts = pts[y == cid]
        if cls_pts.shape[0] < 1:
            raise ValueError(f"class {cid} has no points")
        positions = train_ng(cls_pts, params.n_neurons_per_class, schedule, model.rng)
        protos = [Prototype(model.new_proto_id(), cid, pos.copy()) for pos in positions]
        model.footprints[cid] = ClassFootprint(
            class_id=cid,
            prototypes=protos,
            eta=1.0,
            eta_floor=_fit_eta_floor(cls_pts, positions, params),
        )
    # scales need a first pass over all footprints so single-prototype
    # classes can fall back to the mean of the others
    raw = {cid: pairwise_eta(fp, params.k_eta) for cid, fp in model.footprints.items()}
    valid = [v for v in raw.values() if v is not None]
    fallback = float(np.mean(valid)) if valid else 1.0
    for cid, fp in model.footprints.items():
        fp.eta = max(raw[cid] if raw[cid] is not None else fallback, fp.eta_floor)
    return model


def update_footprint_knn(
    footprint: ClassFootprint,
    x: np.ndarray,
    t_i: float,
    alpha: float,
    lam: float,
    *,
    k_eta: int = 5,
    eta_fallback: float = 1.0,
    k_cap: int | None = None,
) -> None:
    """Pull the footprint's prototypes toward x by distance rank (in place).

    The prototype of rank k moves by alpha * t_i * exp(-k / lam) * (x - p);
    every gain is < 1, so prototypes stay strictly inside the segment [p, x].
    k_cap limits the update to the k nearest prototypes (default: whole
    class; the exponential decay makes the tail negligible either way). The
    scale is re-estimated afterwards and the update counter incremented.
    """
    if not 0.0 <= t_i <= 1.0:
        raise ValueError("t_i must be in [0, 1]")
    positions = footprint.positions()
    ids = footprint.proto_ids()
    order = distance_rank_order(positions, ids, x)
    ranks = np.empty(len(order), dtype=np.float64)
    ranks[order] = np.arange(1, len(order) + 1)
    gains = alpha * t_i * np.exp(-ranks / lam)
    if k_cap is not None:
        gains[ranks > k_cap] = 0.0
    for proto, g in zip(footprint.prototypes, gains):
        proto.position += g * (x - proto.position)
    footprint.eta = max(
        estimate_eta(footprint, k_eta, fallback=eta_fallback), footprint.eta_floor
    )
    footprint.update_count += 1


def probe_typicalities(model: Model, probes) -> list[dict[int, float]]:
    """Score probe points against the model without mutating it."""
    return [class_typicalities(p, model) for p in np.asarray(probes, dtype=np.float64)]


class StreamEngine:
    """Single-writer engine applying the streaming lifecycle point by point.

    Configure `probes` to record each probe's max typicality after every
    processed point (probes never update the model).
    """

    def __init__(
        self,
        model: Model,
        strategy: UpdateStrategy = UpdateStrategy.KNN_INCREMENTAL,
        *,
        ng_schedule: NgSchedule | None = None,
        knn_update_cap: int | None = None,
        buffer_capacity: int | None = None,
        probes=None,
        retained_points=None,
        retained_labels=None,
    ):
        if not model.footprints:
            raise EmptyModelError("engine requires an initialized model")
        self.model = model
        self.strategy = UpdateStrategy(strategy)
        self.schedule = ng_schedule or NgSchedule()
        self.knn_update_cap = knn_update_cap
        self.buffer = OutlierBuffer(capacity=buffer_capacity)
        self.outputs: list[StreamOutput] = []
        self.relabel_log: list[dict] = []
        self.probes = None if probes is None else np.asarray(probes, dtype=np.float64)
        self.probe_history: list[list[float]] = []
        self.classified_count = 0
        self.absorbed_count = 0
        self._labels: list[int] = []
        self._class_data: dict[int, list[np.ndarray]] = {}
        if self.strategy is UpdateStrategy.RETRAIN_ALL and retained_points is not None:
            pts = np.asarray(retained_points, dtype=np.float64)
            y = np.asarray(retained_labels)
            for cid in np.unique(y):
                self._class_data[int(cid)] = [p.copy() for p in pts[y == cid]]

    @classmethod
    def from_init(
        cls,
        points,
        labels,
        params: HyperParams | None = None,
        seed=None,
        strategy: UpdateStrategy = UpdateStrategy.KNN_INCREMENTAL,
        **kwargs,
    ) -> "StreamEngine":
        schedule = kwargs.get("ng_schedule")
        model = initialize(points, labels, params, seed, schedule=schedule)
        return cls(
            model,
            strategy,
            retained_points=points,
            retained_labels=labels,
            **kwargs,
        )

    @property
    def stream_index(self) -> int:
        return len(self._labels)

    # ------------------------------------------------------------------
    # per-point lifecycle
    # ------------------------------------------------------------------

    def process_point(self, x) -> StreamOutput:
        """Classify one point, update state, and emit the lifecycle event."""
        x = as_vector(x, dimension=self.model.dimension)
        idx = self.stream_index
        typ = class_typicalities(x, self.model)
        label, max_t = self._argmax(typ)

        if max_t > self.model.hyperparams.typicality_threshold:
            self._apply_update(label, x, typ[label])
            out = StreamOutput(index=idx, label=label, typicality=typ, event=CLASSIFIED)
            self.classified_count += 1
            self._labels.append(label)
        else:
            self.buffer.append(x, idx)
            self._labels.append(OUTLIER)
            discovery = self._discover()
            if discovery is None:
                out = StreamOutput(index=idx, label=OUTLIER, typicality=typ, event=OUTLIER_BUFFERED)
            else:
                new_id, absorbed = discovery
                for j in absorbed:
                    self._labels[j] = new_id
                    self.relabel_log.append({"index": j, "old": "OUTLIER", "new": new_id})
                out = StreamOutput(
                    index=idx,
                    label=OUTLIER,
                    typicality=typ,
                    event=NEW_CLASS_CREATED,
                    new_class=new_id,
                    absorbed=absorbed,
                )
        self.outputs.append(out)
        if self.probes is not None:
            self.probe_history.append(
                [max(t.values()) for t in probe_typicalities(self.model, self.probes)]
            )
        return out

    def run(self, stream) -> list[StreamOutput]:
        """Process a whole stream sequentially; errors name the stream index."""
        outputs = []
        for x in stream:
            try:
                outputs.append(self.process_point(x))
            except (ValueError, RuntimeError) as exc:
                raise type(exc)(f"at stream index {self.stream_index}: {exc}") from exc
        return outputs

    def final_labels(self) -> np.ndarray:
        """Label vector with every retroactive reassignment applied."""
        return np.array(self._labels, dtype=np.int64)

    def probe_typicalities(self, probes=None) -> list[dict[int, float]]:
        return probe_typicalities(self.model, self.probes if probes is None else probes)

    # ------------------------------------------------------------------
    # footprint updates
    # ------------------------------------------------------------------

    def _argmax(self, typ: dict[int, float]) -> tuple[int, float]:
        best_id, best_val = None, -1.0
        for cid in sorted(typ):
            if typ[cid] > best_val:
                best_id, best_val = cid, typ[cid]
        return best_id, best_val

    def _eta_fallback(self, class_id: int) -> float:
        others = [fp.eta for cid, fp in self.model.footprints.items() if cid != class_id]
        return float(np.mean(others)) if others else 1.0

    def _apply_update(self, class_id: int, x: np.ndarray, t_i: float) -> None:
        hp = self.model.hyperparams
        if self.strategy is UpdateStrategy.KNN_INCREMENTAL:
            update_footprint_knn(
                self.model.footprints[class_id],
                x,
                t_i,
                hp.learning_rate,
                hp.neighborhood_range,
                k_eta=hp.k_eta,
                eta_fallback=self._eta_fallback(class_id),
                k_cap=self.knn_update_cap,
            )
        elif self.strategy is UpdateStrategy.RETRAIN_ALL:
            self.update_footprint_retrain_all(class_id, x)
        else:
            self.update_footprint_retrain_protos(class_id, x)

    def update_footprint_retrain_all(self, class_id: int, x: np.ndarray) -> None:
        """Append x to the class's retained data and retrain from scratch."""
        data = self._class_data.setdefault(class_id, [])
        data.append(np.array(x, dtype=np.float64))
        pts = np.stack(data)
        self._refit_footprint(class_id, pts, self.model.hyperparams.n_neurons_per_class)

    def update_footprint_retrain_protos(self, class_id: int, x: np.ndarray) -> None:
        """Retrain on the current prototypes plus the new point."""
        fp = self.model.footprints[class_id]
        pts = np.vstack([fp.positions(), x])
        self._refit_footprint(class_id, pts, len(fp.prototypes))

    def _refit_footprint(self, class_id: int, pts: np.ndarray, n_protos: int) -> None:
        hp = self.model.hyperparams
        positions = train_ng(pts, n_protos, self.schedule, self.model.rng)
        fp = self.model.footprints[class_id]
        fp.prototypes = [
            Prototype(self.model.new_proto_id(), class_id, pos.copy()) for pos in positions
        ]
        fp.eta_floor = _fit_eta_floor(pts, positions, hp)
        fp.eta = max(
            estimate_eta(fp, hp.k_eta, fallback=self._eta_fallback(class_id)), fp.eta_floor
        )
        fp.update_count += 1

    # ------------------------------------------------------------------
    # discovery
    # ------------------------------------------------------------------

    def _discover(self) -> tuple[int, list[int]] | None:
        """Search the buffer for a new class; install it when large enough.

        Returns (new class id, absorbed stream indices) or None. A buffer of
        min_new_class_points or fewer can never exceed the size threshold,
        so the search is skipped outright.
        """
        hp = self.model.hyperparams
        if len(self.buffer) <= max(hp.min_new_class_points, 1):
            return None
        pts = self.buffer.points_array()
        existing = [
            (proto.position, self.model.footprints[cid].eta)
            for cid in self.model.class_ids()
            for proto in self.model.footprints[cid].prototypes
        ]
        for _ in range(hp.p1m_restarts):
            seed_idx = seed_sampling(pts, existing, hp.fuzzifier, self.model.rng)
            result = p1m(
                pts,
                seed_idx,
                hp.fuzzifier,
                tol=hp.p1m_conv_tol,
                max_iter=hp.p1m_max_iter,
                eta_scale=hp.p1m_eta_scale,
            )
            if coincidence_check(result.center, existing, hp.fuzzifier):
                continue
            members = np.flatnonzero(result.typicalities > 0.5)
            if len(members) > hp.min_new_class_points:
                return self._install_class(pts[members], members)
            return None
        return None

    def _install_class(self, member_points: np.ndarray, buffer_positions: np.ndarray) -> tuple[int, list[int]]:
        hp = self.model.hyperparams
        new_id = max(self.model.footprints) + 1
        positions = train_ng(member_points, hp.n_neurons_per_class, self.schedule, self.model.rng)
        protos = [Prototype(self.model.new_proto_id(), new_id, pos.copy()) for pos in positions]
        floor = _fit_eta_floor(member_points, positions, hp, spacing_boost=hp.discovery_eta_boost)
        fp = ClassFootprint(
            class_id=new_id,
            prototypes=protos,
            eta=1.0,
            created_at=self.stream_index,
            eta_floor=floor,
        )
        fp.eta = max(estimate_eta(fp, hp.k_eta, fallback=self._eta_fallback(new_id)), floor)
        self.model.footprints[new_id] = fp
        indices = self.buffer.indices()
        absorbed = [indices[int(i)] for i in buffer_positions]
        self.buffer.remove_positions(buffer_positions)
        self.absorbed_count += len(absorbed)
        if self.strategy is UpdateStrategy.RETRAIN_ALL:
            self._class_data[new_id] = [p.copy() for p in member_points]
        return new_id, absorbed
