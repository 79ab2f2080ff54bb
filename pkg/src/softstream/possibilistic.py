"""Typicality mathematics: scale estimation, fuzzy prototype memberships,
possibilistic typicality, and class-level aggregation.

The classification path for a query x is:
  1. find its k nearest prototypes across all classes,
  2. score each neighbor with the possibilistic typicality of x under the
     neighbor class's scale eta,
  3. weight each score by the neighbor's fuzzy class-membership vector,
  4. average per class and pass through a concave scaling function.

All operations here are pure given a model snapshot.
"""

from __future__ import annotations

import numpy as np

from .core import ClassFootprint, Model, Prototype, as_vector, k_nearest_prototypes


def pcm_typicality(d_squared: float, eta: float, m: float) -> float:
    """Possibilistic typicality 1 / (1 + (d^2 / eta)^(1/(m-1))).

    Equals 1 at d^2 = 0 and exactly 0.5 at d^2 = eta, for any m > 1.
    """
    if d_squared < 0:
        raise ValueError("d_squared must be >= 0")
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if m <= 1:
        raise ValueError("m must be > 1")
    ratio = d_squared / eta
    if ratio == 0.0:
        return 1.0
    with np.errstate(over="ignore"):
        powered = float(np.float64(ratio) ** (1.0 / (m - 1.0)))
    return float(1.0 / (1.0 + powered))


def scale_typicality(t_bar: float) -> float:
    """Concave rescaling: 0 below 0, 2t - t^2 on (0, 1], 1 above 1."""
    if t_bar <= 0.0:
        return 0.0
    if t_bar > 1.0:
        return 1.0
    return 2.0 * t_bar - t_bar * t_bar


def spacing_eta(positions, k_eta: int) -> float | None:
    """Mean distance from each position to its k nearest peers (self
    excluded; k clamped to n - 1), or None when undefined (fewer than two
    positions, or all coincident).
    """
    if k_eta < 1:
        raise ValueError("k_eta must be >= 1")
    positions = np.asarray(positions, dtype=np.float64)
    n = positions.shape[0]
    if n < 2:
        return None
    diffs = positions[:, None, :] - positions[None, :, :]
    dists = np.sqrt((diffs * diffs).sum(axis=2))
    k = min(k_eta, n - 1)
    # drop the self-distance by index, then take each row's k smallest
    off_diag = dists[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    nearest = np.sort(off_diag, axis=1)[:, :k]
    eta = float(nearest.mean())
    return eta if eta > 0 else None


def pairwise_eta(footprint: ClassFootprint, k_eta: int) -> float | None:
    """Within-class prototype-spacing scale of a footprint (see spacing_eta)."""
    if len(footprint.prototypes) < 2:
        if k_eta < 1:
            raise ValueError("k_eta must be >= 1")
        return None
    return spacing_eta(footprint.positions(), k_eta)


def estimate_eta(footprint: ClassFootprint, k_eta: int, fallback: float = 1.0) -> float:
    """Within-class scale from prototype spacing; never zero or negative.

    Where the pairwise estimate is undefined (single-prototype footprint),
    `fallback` is returned instead; callers pass the mean of the other
    classes' scales.
    """
    eta = pairwise_eta(footprint, k_eta)
    if eta is not None:
        return eta
    if fallback <= 0:
        raise ValueError("fallback eta must be > 0")
    return float(fallback)


def coverage_eta(points, positions, quantile: float = 0.9) -> float:
    """Scale needed to cover a training set: the given quantile of the
    points' squared distances to their nearest prototype.

    Footprints fitted from few points have prototype spacings that
    underestimate the class extent; flooring the class scale at its own
    members' coverage keeps freshly trained footprints from rejecting the
    very data they summarize.
    """
    pts = np.asarray(points, dtype=np.float64)
    pos = np.asarray(positions, dtype=np.float64)
    if pts.size == 0 or pos.size == 0:
        raise ValueError("points and positions must be non-empty")
    if not 0 < quantile <= 1:
        raise ValueError("quantile must be in (0, 1]")
    d2 = ((pts[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    return float(np.quantile(d2, quantile))


def prototype_fuzzy_membership(p: Prototype, model: Model, k: int) -> dict[int, float]:
    """Fuzzy class-membership vector of a prototype from its k nearest peers.

    With n_i neighbors of class i out of k, the prototype's own class gets
    0.51 + (n_i / k) * 0.49 and every other class (n_i / k) * 0.49, so the
    entries always sum to exactly 1. A prototype with no peers (degenerate
    one-prototype model) gets membership 1 in its own class.
    """
    class_ids = model.class_ids()
    try:
        neighbors = k_nearest_prototypes(p.position, model, k, exclude=p.proto_id)
    except Exception:
        neighbors = []
    if not neighbors:
        return {cid: (1.0 if cid == p.class_id else 0.0) for cid in class_ids}
    counts: dict[int, int] = {cid: 0 for cid in class_ids}
    for q, _ in neighbors:
        counts[q.class_id] += 1
    base = len(neighbors)
    membership: dict[int, float] = {}
    for cid in class_ids:
        share = (counts[cid] / base) * 0.49
        membership[cid] = 0.51 + share if cid == p.class_id else share
    return membership


def class_typicalities(
    x,
    model: Model,
    k_query: int | None = None,
    m: float | None = None,
) -> dict[int, float]:
    """Scaled per-class typicality vector of x under the model.

    Each of the k nearest prototypes contributes its possibilistic typicality
    (under its own class's eta) weighted by its fuzzy membership vector; the
    per-class averages divide by the requested k even when fewer neighbors of
    a class are present, then pass through the concave scaling. Keys are
    exactly the model's current class ids; values lie in [0, 1].
    """
    k = k_query if k_query is not None else model.hyperparams.k_query
    fuzz = m if m is not None else model.hyperparams.fuzzifier
    x = as_vector(x, dimension=model.dimension)
    neighbors = k_nearest_prototypes(x, model, k)
    class_ids = model.class_ids()
    sums = {cid: 0.0 for cid in class_ids}
    for proto, dist in neighbors:
        eta = model.footprints[proto.class_id].eta
        raw = pcm_typicality(dist * dist, eta, fuzz)
        membership = prototype_fuzzy_membership(proto, model, k)
        for cid in class_ids:
            sums[cid] += membership[cid] * raw
    return {cid: scale_typicality(sums[cid] / k) for cid in class_ids}


def pknn_reference_weight(d: float, eta1: float, eta2: float, m: float) -> float:
    """Two-scale reference weight 1 / (1 + max(0, (d - eta1)/eta2)^(2/(m-1))).

    Reference variant kept for comparison; the streaming path uses
    pcm_typicality/class_typicalities exclusively. Equals 1 for d <= eta1
    and is non-increasing in d.
    """
    if d < 0:
        raise ValueError("d must be >= 0")
    if eta1 < 0 or eta2 <= 0:
        raise ValueError("eta1 must be >= 0 and eta2 > 0")
    if m <= 1:
        raise ValueError("m must be > 1")
    z = max(0.0, (d - eta1) / eta2)
    if z == 0.0:
        return 1.0
    with np.errstate(over="ignore"):
        powered = float(np.float64(z) ** (2.0 / (m - 1.0)))
    return float(1.0 / (1.0 + powered))
