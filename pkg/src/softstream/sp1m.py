"""Possibilistic one-means (P1M) and its sequential multi-cluster wrapper.

P1M finds a single dense cluster by alternating possibilistic memberships
with a weighted-mean center update, while re-estimating the cluster scale
eta from its members' weighted mean squared distance. The sequential
wrapper seeds new searches inversely to the typicality already explained by
accepted clusters and rejects centers that land inside an existing region
of influence.

The scale update multiplies the members' mean squared distance by
`eta_scale`; at 1.0 the region hugs the densest core of a cluster, while
the default of 5.0 widens it so that essentially all points of a compact
cluster end with typicality above 0.5, which is what the downstream
new-class size test counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Lower bound keeping eta strictly positive on degenerate input.
ETA_FLOOR = 1e-12

#: Default multiplier applied to the members-only scale estimate.
DEFAULT_ETA_SCALE = 5.0

#: The scale estimate always uses at least this many nearest points, so the
#: region of influence grows past incidental micro-clumps instead of
#: collapsing onto them.
MIN_SCALE_MEMBERS = 10


@dataclass
class P1mResult:
    """One converged cluster: center, scale, and per-point typicalities.

    The typicalities are recomputed from the final (center, eta) pair, so
    they are self-consistent with the returned state.
    """

    center: np.ndarray
    eta: float
    typicalities: np.ndarray
    iterations: int
    converged: bool


def pcm_memberships(d_squared: np.ndarray, eta: float, m: float) -> np.ndarray:
    """Vectorized possibilistic memberships 1 / (1 + (d^2/eta)^(1/(m-1)))."""
    with np.errstate(over="ignore"):
        powered = (np.asarray(d_squared, dtype=np.float64) / eta) ** (1.0 / (m - 1.0))
    return 1.0 / (1.0 + powered)


def p1m(
    points,
    seed_index: int,
    m: float,
    tol: float = 1e-4,
    max_iter: int = 100,
    eta_scale: float = DEFAULT_ETA_SCALE,
) -> P1mResult:
    """Run possibilistic one-means from the given seed point.

    The center starts at points[seed_index] with eta seeded from the mean
    squared distance to the seed's 5 nearest points. Each iteration computes
    memberships, moves the center to the membership-weighted mean, and
    re-estimates eta as eta_scale times the weighted mean squared distance
    over the cluster's current members (typicality above 0.5, topped up to
    MIN_SCALE_MEMBERS nearest points). It stops when both the center shift
    and the relative eta change fall below tol, or after max_iter iterations.

    Estimating the scale from members only keeps the region of influence
    anchored to the cluster under the center: points of a well-separated
    neighbor cannot enter the estimate before they are already inside the
    region, so the scale cannot ratchet outward shell by shell until the
    cluster swallows its neighbors.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("points must be a non-empty (n, q) array")
    n = pts.shape[0]
    if not 0 <= seed_index < n:
        raise ValueError(f"seed_index {seed_index} out of range for {n} points")

    v = pts[seed_index].copy()
    d2 = ((pts - v) ** 2).sum(axis=1)
    k0 = min(5, n - 1)
    if k0 < 1:
        u = np.ones(1)
        return P1mResult(center=v, eta=ETA_FLOOR, typicalities=u, iterations=0, converged=True)
    eta = max(float(np.sort(d2)[1 : k0 + 1].mean()), ETA_FLOOR)

    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        d2 = ((pts - v) ** 2).sum(axis=1)
        u = pcm_memberships(d2, eta, m)
        w = u**m
        w_sum = float(w.sum())
        if not np.isfinite(w_sum) or w_sum <= 0.0:
            break
        v_new = (w[:, None] * pts).sum(axis=0) / w_sum
        members = u > 0.5
        min_members = min(MIN_SCALE_MEMBERS, n)
        if members.sum() < min_members:
            members = np.zeros(n, dtype=bool)
            members[np.argsort(d2)[:min_members]] = True
        w_members = float(w[members].sum())
        eta_new = max(
            eta_scale * float((w[members] * d2[members]).sum()) / w_members,
            ETA_FLOOR,
        )
        shift = float(np.linalg.norm(v_new - v))
        eta_rel = abs(eta_new - eta) / eta
        v, eta = v_new, eta_new
        if shift < tol and eta_rel < tol:
            converged = True
            break

    d2 = ((pts - v) ** 2).sum(axis=1)
    u = pcm_memberships(d2, eta, m)
    return P1mResult(center=v, eta=float(eta), typicalities=u, iterations=iterations, converged=converged)


def seed_weights(points, existing: list[tuple[np.ndarray, float]], m: float) -> np.ndarray:
    """Seeding weights: 1 minus the max typicality under existing clusters.

    Uniform when no clusters exist yet. `existing` holds (center, eta) pairs.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if not existing:
        return np.ones(n)
    best = np.zeros(n)
    for center, eta in existing:
        d2 = ((pts - np.asarray(center, dtype=np.float64)) ** 2).sum(axis=1)
        np.maximum(best, pcm_memberships(d2, float(eta), m), out=best)
    return 1.0 - best


def seed_sampling(
    points,
    existing: list[tuple[np.ndarray, float]],
    m: float,
    rng: np.random.Generator,
) -> int:
    """Sample a seed index with probability proportional to the seed weights.

    Falls back to uniform sampling when every weight is zero (all points
    fully explained by existing clusters).
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 1:
        raise ValueError("points must be non-empty")
    weights = seed_weights(pts, existing, m)
    total = float(weights.sum())
    if total <= 0.0:
        return int(rng.integers(n))
    return int(rng.choice(n, p=weights / total))


def coincidence_check(
    center,
    existing: list[tuple[np.ndarray, float]],
    m: float,
) -> bool:
    """True (reject) when the center lies inside an existing region of
    influence: its typicality under any existing (center, eta) exceeds 0.5.
    """
    c = np.asarray(center, dtype=np.float64)
    for other, eta in existing:
        d2 = float(((c - np.asarray(other, dtype=np.float64)) ** 2).sum())
        if pcm_memberships(np.array([d2]), float(eta), m)[0] > 0.5:
            return True
    return False


def sp1m(
    points,
    c_max: int,
    restart_cap: int,
    m: float,
    tol: float = 1e-4,
    max_iter: int = 100,
    rng: np.random.Generator | None = None,
    eta_scale: float = DEFAULT_ETA_SCALE,
) -> list[P1mResult]:
    """Sequentially extract up to c_max non-coincident clusters.

    Each attempt seeds away from the clusters found so far, runs P1M, and
    keeps the result unless its center is coincident with an accepted
    cluster. Stops after c_max accepted clusters or restart_cap total P1M
    executions; may return fewer than c_max clusters.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("points must be a non-empty (n, q) array")
    rng = np.random.default_rng(rng)
    accepted: list[P1mResult] = []
    attempts = 0
    while len(accepted) < c_max and attempts < restart_cap:
        existing = [(r.center, r.eta) for r in accepted]
        idx = seed_sampling(pts, existing, m, rng)
        result = p1m(pts, idx, m, tol=tol, max_iter=max_iter, eta_scale=eta_scale)
        attempts += 1
        if not coincidence_check(result.center, existing, m):
            accepted.append(result)
    return accepted
