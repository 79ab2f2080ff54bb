import numpy as np
import pytest

from softstream.sp1m import (
    coincidence_check,
    p1m,
    pcm_memberships,
    seed_sampling,
    seed_weights,
    sp1m,
)

CHI2_3DF_99 = 11.345  # 0.99 quantile, 3 degrees of freedom


def pcm_fixed_eta_oracle(points, eta, m=1.5, iters=200):
    """Brute-force possibilistic one-means with a frozen scale."""
    pts = np.asarray(points, dtype=float)
    v = pts.mean(axis=0)
    for _ in range(iters):
        d2 = ((pts - v) ** 2).sum(axis=1)
        u = 1.0 / (1.0 + (d2 / eta) ** (1.0 / (m - 1.0)))
        w = u**m
        v = (w[:, None] * pts).sum(axis=0) / w.sum()
    d2 = ((pts - v) ** 2).sum(axis=1)
    return v, 1.0 / (1.0 + (d2 / eta) ** (1.0 / (m - 1.0)))


def test_p1m_symmetric_pair() -> None:
    pts = np.array([[-1.0, 0.0], [1.0, 0.0]])
    res = p1m(pts, 0, m=1.5)
    assert res.converged
    assert abs(res.center[1]) < 1e-9
    assert -1.0 <= res.center[0] <= 1.0
    if abs(res.center[0]) < 1e-9:
        assert res.typicalities[0] == pytest.approx(res.typicalities[1], rel=1e-9)


def test_p1m_tight_cluster_ignores_far_outliers() -> None:
    rng = np.random.default_rng(0)
    cluster = rng.normal(0.0, 0.1, size=(100, 2))
    outliers = np.array([[50.0, 0.0], [0.0, 50.0], [-50.0, 0.0], [0.0, -50.0], [35.0, 35.0]])
    pts = np.vstack([cluster, outliers])

    res = p1m(pts, 0, m=1.5)
    assert np.linalg.norm(res.center) < 0.1
    assert (res.typicalities[100:] < 0.1).all()

    # independent check: frozen-eta possibilistic iteration lands in the same place
    fixed_eta = float(((cluster - cluster.mean(0)) ** 2).sum(1).mean())
    oracle_center, oracle_u = pcm_fixed_eta_oracle(pts, fixed_eta)
    assert np.linalg.norm(oracle_center) < 0.1
    assert (oracle_u[100:] < 0.1).all()
    assert np.linalg.norm(res.center - oracle_center) < 0.1


def test_p1m_single_repeated_point() -> None:
    pts = np.array([[2.0, 3.0]] * 5)
    res = p1m(pts, 2, m=1.5)
    assert res.converged
    assert res.center.tolist() == [2.0, 3.0]
    assert (res.typicalities == 1.0).all()


def test_p1m_seed_index_validation() -> None:
    with pytest.raises(ValueError):
        p1m(np.zeros((3, 2)), 5, m=1.5)


def test_p1m_fixed_point_center_consistency() -> None:
    # re-applying the membership and center updates from the returned state
    # moves the center by less than 10x the convergence tolerance
    tol = 1e-4
    rng = np.random.default_rng(1)
    for trial in range(100):
        n = int(rng.integers(10, 60))
        pts = rng.normal(rng.normal(0, 5, 2), rng.uniform(0.3, 2.0), size=(n, 2))
        res = p1m(pts, int(rng.integers(n)), m=1.5, tol=tol, max_iter=200)
        if not res.converged:
            continue
        d2 = ((pts - res.center) ** 2).sum(axis=1)
        u = pcm_memberships(d2, res.eta, 1.5)
        w = u**1.5
        v_next = (w[:, None] * pts).sum(axis=0) / w.sum()
        assert np.linalg.norm(v_next - res.center) < 10 * tol, f"trial {trial}"


def test_p1m_typicalities_consistent_with_returned_state() -> None:
    rng = np.random.default_rng(2)
    pts = rng.normal(0, 1, size=(40, 2))
    res = p1m(pts, 0, m=1.5)
    d2 = ((pts - res.center) ** 2).sum(axis=1)
    assert res.typicalities == pytest.approx(pcm_memberships(d2, res.eta, 1.5), rel=1e-12)


def test_p1m_center_is_convex_combination() -> None:
    rng = np.random.default_rng(3)
    for _ in range(50):
        pts = rng.normal(0, 3, size=(20, 2))
        res = p1m(pts, int(rng.integers(20)), m=1.5)
        assert (res.center >= pts.min(axis=0) - 1e-9).all()
        assert (res.center <= pts.max(axis=0) + 1e-9).all()
        assert ((res.typicalities > 0) & (res.typicalities <= 1.0)).all()


def test_seed_weights_inverse_to_existing_typicality() -> None:
    pts = np.array([[0.0, 0.0], [3.0, 0.0]])
    # cluster at origin with eta chosen so the points score 0.9 and 0.1
    eta = 1.0
    d2 = (pts**2).sum(axis=1)
    u = pcm_memberships(d2, eta, 1.5)
    want = 1.0 - u
    got = seed_weights(pts, [(np.zeros(2), eta)], 1.5)
    assert got == pytest.approx(want, rel=1e-12)

    # exact {0.9, 0.1} target from the inverse of the membership formula
    d2_for = lambda u_target: eta * np.sqrt(1.0 / u_target - 1.0)
    pts2 = np.array([[np.sqrt(d2_for(0.9)), 0.0], [np.sqrt(d2_for(0.1)), 0.0]])
    got2 = seed_weights(pts2, [(np.zeros(2), eta)], 1.5)
    assert got2 == pytest.approx([0.1, 0.9], rel=1e-9)


def test_seed_sampling_uniform_without_clusters() -> None:
    pts = np.arange(8, dtype=float).reshape(4, 2)
    rng = np.random.default_rng(0)
    counts = np.zeros(4)
    draws = 10_000
    for _ in range(draws):
        counts[seed_sampling(pts, [], 1.5, rng)] += 1
    expected = draws / 4
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < CHI2_3DF_99


def test_seed_sampling_never_picks_zero_weight_point() -> None:
    pts = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    existing = [(np.zeros(2), 2.0)]  # first point sits exactly on the center
    rng = np.random.default_rng(1)
    draws = [seed_sampling(pts, existing, 1.5, rng) for _ in range(500)]
    assert 0 not in draws
    assert set(draws) == {1, 2}


def test_seed_sampling_uniform_when_all_weights_zero() -> None:
    pts = np.array([[0.0, 0.0], [0.0, 0.0]])
    existing = [(np.zeros(2), 1.0)]
    rng = np.random.default_rng(2)
    draws = {seed_sampling(pts, existing, 1.5, rng) for _ in range(50)}
    assert draws == {0, 1}


def test_coincidence_at_existing_prototype() -> None:
    assert coincidence_check(np.zeros(2), [(np.zeros(2), 1.0)], 1.5)


def test_coincidence_far_center_not_coincident() -> None:
    eta = 2.0
    center = np.array([np.sqrt(4 * eta), 0.0])  # squared distance 4 * eta
    u = pcm_memberships(np.array([4 * eta]), eta, 1.5)[0]
    assert u == pytest.approx(1.0 / 17.0, rel=1e-9)
    assert not coincidence_check(center, [(np.zeros(2), eta)], 1.5)


def test_coincidence_empty_existing() -> None:
    assert not coincidence_check(np.zeros(2), [], 1.5)


def test_sp1m_two_separated_blobs() -> None:
    for seed in range(10):
        rng = np.random.default_rng(seed)
        a = rng.normal((0.0, 0.0), 1.0, size=(100, 2))
        b = rng.normal((20.0, 20.0), 1.0, size=(100, 2))
        pts = np.vstack([a, b])
        results = sp1m(pts, c_max=2, restart_cap=10, m=1.5, rng=np.random.default_rng(seed + 100))
        assert len(results) == 2
        centers = sorted((r.center.tolist() for r in results), key=lambda c: c[0])
        assert np.linalg.norm(np.array(centers[0]) - a.mean(axis=0)) < 0.5
        assert np.linalg.norm(np.array(centers[1]) - b.mean(axis=0)) < 0.5


def test_sp1m_single_blob_rejects_duplicates() -> None:
    rng = np.random.default_rng(4)
    pts = rng.normal(0, 1, size=(120, 2))
    results = sp1m(pts, c_max=3, restart_cap=9, m=1.5, rng=np.random.default_rng(5))
    assert len(results) == 1


def test_sp1m_c_max_zero() -> None:
    assert sp1m(np.zeros((5, 2)), c_max=0, restart_cap=10, m=1.5, rng=np.random.default_rng(0)) == []


def test_sp1m_accepted_clusters_mutually_non_coincident() -> None:
    for seed in range(10):
        rng = np.random.default_rng(seed)
        pts = np.vstack([
            rng.normal((0, 0), 1.0, size=(60, 2)),
            rng.normal((15, 0), 1.0, size=(60, 2)),
            rng.normal((0, 15), 1.0, size=(60, 2)),
        ])
        results = sp1m(pts, c_max=3, restart_cap=12, m=1.5, rng=np.random.default_rng(seed))
        for j, later in enumerate(results):
            earlier = [(r.center, r.eta) for r in results[:j]]
            assert not coincidence_check(later.center, earlier, 1.5)
