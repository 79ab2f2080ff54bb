"""Batch neural-gas training of prototype sets.

Prototypes are adapted by distance rank with exponentially decaying
influence: on each presentation of a point x, the prototype of rank k
(1-based, nearest first) moves by eps * exp(-k / lam) * (x - p). Step size
and neighborhood range decay exponentially over the presentation schedule.

The training loop is sequential by definition (each presentation moves the
prototypes the next one sees). A numba-jitted kernel is used when available;
a vectorized numpy loop is the fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Prototype, as_vector


@dataclass
class NgSchedule:
    """Exponential decay schedule for the step size and neighborhood range.

    lambda_start defaults to half the prototype count when left as None.
    param(t) = start * (end / start) ** (t / t_max) per presentation t.
    """

    epsilon_start: float = 0.5
    epsilon_end: float = 0.005
    lambda_start: float | None = None
    lambda_end: float = 0.01
    epochs: int = 50

    def __post_init__(self) -> None:
        if self.epsilon_start < self.epsilon_end or self.epsilon_end <= 0:
            raise ValueError("epsilon schedule must satisfy start >= end > 0")
        if self.lambda_start is not None and self.lambda_start < self.lambda_end:
            raise ValueError("lambda schedule must satisfy start >= end")
        if self.lambda_end <= 0:
            raise ValueError("lambda_end must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def resolve_lambda_start(self, n_prototypes: int) -> float:
        if self.lambda_start is not None:
            return self.lambda_start
        return max(n_prototypes / 2.0, self.lambda_end)


def distance_rank_order(positions: np.ndarray, ids: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Indices of prototypes ordered by (distance to x, id): rank 1 first."""
    diffs = positions - x
    dist2 = (diffs * diffs).sum(axis=1)
    return np.lexsort((ids, dist2))


def ng_adapt_step(prototypes: list[Prototype], x, epsilon: float, lam: float) -> None:
    """Adapt all prototype positions toward x by distance rank (in place).

    Ranks are computed from the positions before any movement; distance ties
    are broken by lower proto_id.
    """
    if not prototypes:
        raise ValueError("need at least one prototype")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must be in (0, 1]")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    x = as_vector(x, dimension=prototypes[0].position.size)
    positions = np.stack([p.position for p in prototypes])
    ids = np.array([p.proto_id for p in prototypes], dtype=np.int64)
    order = distance_rank_order(positions, ids, x)
    ranks = np.empty(len(prototypes), dtype=np.float64)
    ranks[order] = np.arange(1, len(prototypes) + 1)
    gains = epsilon * np.exp(-ranks / lam)
    for p, g in zip(prototypes, gains):
        p.position += g * (x - p.position)


def _train_core_numpy(positions, seq, eps_arr, lam_arr):
    n_proto = positions.shape[0]
    ids = np.arange(n_proto)
    ranks = np.empty(n_proto, dtype=np.float64)
    for t in range(seq.shape[0]):
        x = seq[t]
        diffs = positions - x
        dist2 = (diffs * diffs).sum(axis=1)
        order = np.lexsort((ids, dist2))
        ranks[order] = np.arange(1, n_proto + 1)
        gains = eps_arr[t] * np.exp(-ranks / lam_arr[t])
        positions += gains[:, None] * (x - positions)


def _train_core_kernel(positions, seq, eps_arr, lam_arr):  # pragma: no cover - jit twin
    n_proto, q = positions.shape
    order = np.empty(n_proto, dtype=np.int64)
    dist2 = np.empty(n_proto, dtype=np.float64)
    for t in range(seq.shape[0]):
        x = seq[t]
        for i in range(n_proto):
            acc = 0.0
            for j in range(q):
                diff = positions[i, j] - x[j]
                acc += diff * diff
            dist2[i] = acc
            order[i] = i
        # insertion sort on (dist2, index) keeps the id tie-break exact
        for i in range(1, n_proto):
            key = order[i]
            kd = dist2[key]
            j = i - 1
            while j >= 0 and (dist2[order[j]] > kd or (dist2[order[j]] == kd and order[j] > key)):
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = key
        eps = eps_arr[t]
        lam = lam_arr[t]
        for rank in range(n_proto):
            i = order[rank]
            g = eps * np.exp(-(rank + 1.0) / lam)
            for j in range(q):
                positions[i, j] += g * (x[j] - positions[i, j])


try:
    from numba import njit

    _train_core = njit(cache=True)(_train_core_kernel)
except ImportError:  # pragma: no cover - exercised only without numba
    _train_core = _train_core_numpy


def train_ng(points, n_prototypes: int, schedule: NgSchedule | None = None, rng=None) -> np.ndarray:
    """Train prototype positions on a point set; returns an (n, q) array.

    Prototypes are initialized by sampling n_prototypes distinct points
    (clamped to the point count). Each epoch presents the points in a fresh
    seeded permutation while the step size and neighborhood range decay
    exponentially per presentation. Deterministic given (points, schedule,
    rng seed/state).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("points must be a non-empty (n, q) array")
    if n_prototypes < 1:
        raise ValueError("n_prototypes must be >= 1")
    schedule = schedule or NgSchedule()
    rng = np.random.default_rng(rng)
    n_points = pts.shape[0]
    n_proto = min(n_prototypes, n_points)

    init_idx = rng.choice(n_points, size=n_proto, replace=False)
    positions = pts[init_idx].copy()

    t_max = schedule.epochs * n_points
    frac = np.arange(t_max, dtype=np.float64) / t_max
    eps0, eps1 = schedule.epsilon_start, schedule.epsilon_end
    lam0 = schedule.resolve_lambda_start(n_proto)
    lam1 = schedule.lambda_end
    eps_arr = eps0 * (eps1 / eps0) ** frac
    lam_arr = lam0 * (lam1 / lam0) ** frac

    order = np.concatenate([rng.permutation(n_points) for _ in range(schedule.epochs)])
    _train_core(positions, pts[order], eps_arr, lam_arr)
    return positions


def representation_error(points, prototypes) -> float:
    """Sum of squared distances from each point to its nearest prototype."""
    pts = np.asarray(points, dtype=np.float64)
    if isinstance(prototypes, (list, tuple)) and prototypes and isinstance(prototypes[0], Prototype):
        pos = np.stack([p.position for p in prototypes])
    else:
        pos = np.asarray(prototypes, dtype=np.float64)
    if pts.size == 0 or pos.size == 0:
        raise ValueError("points and prototypes must be non-empty")
    diffs = pts[:, None, :] - pos[None, :, :]
    dist2 = (diffs * diffs).sum(axis=2)
    return float(dist2.min(axis=1).sum())
