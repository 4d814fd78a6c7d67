import numpy as np
import pytest

from sparsescreen.dataio import Dataset, SparseRow, lambda_max, make_synthetic
from sparsescreen.losses import LossModel
from sparsescreen.oracle import reconstruct_certificate, weighted_sum
from sparsescreen.regularizers import GroupRegularizer, GroupStructure
from sparsescreen.screening import (SafeRegion, ScreenState, WeightRule, build_finite_screen,
                                    certified_gap, dual_scaling, eta_weights, finite_gap,
                                    finite_radius, online_inner_update, online_segment_close,
                                    screen_groups)
from sparsescreen.solvers import pgd_solve


def direct_eta(mu):
    t = len(mu)
    return np.array([mu[s] * np.prod([1 - mu[i] for i in range(s + 1, t)]) for s in range(t)])


def test_weight_rule():
    wr = WeightRule(0.51)
    assert wr.mu(1) == 1.0
    assert 0 < wr.mu(2) < 1
    for bad in (0.5, 1.01, 0.0):
        with pytest.raises(ValueError):
            WeightRule(bad)
    WeightRule(1.0)


def test_eta_examples(rng):
    np.testing.assert_allclose(eta_weights([1 / s for s in range(1, 8)]), np.full(7, 1 / 7),
                               rtol=1e-14)
    assert eta_weights([1.0]).tolist() == [1.0]
    assert eta_weights([]).size == 0
    mu = np.concatenate([[1.0], rng.uniform(0, 1, 19)])
    eta = eta_weights(mu)
    assert abs(eta.sum() - 1) <= 1e-12
    np.testing.assert_allclose(eta, direct_eta(mu), rtol=1e-12, atol=1e-15)


def test_eta_square_sum_decreases():
    wr = WeightRule(0.51)
    # sum of squared weights obeys q_t = mu_t^2 + (1 - mu_t)^2 q_{t-1}
    q, prev = 0.0, np.inf
    for t in range(1, 10001):
        mu = wr.mu(t)
        q = mu * mu + (1 - mu) ** 2 * q
        assert q < prev or t == 1
        prev = q
    mu = [wr.mu(t) for t in range(1, 301)]
    assert np.isclose(np.sum(eta_weights(mu) ** 2), weighted_sum_sq(mu))


def weighted_sum_sq(mu):
    q = 0.0
    for m in mu:
        q = m * m + (1 - m) ** 2 * q
    return q


def test_screen_groups_examples():
    reg = GroupRegularizer("l1", n=3)
    assert screen_groups(SafeRegion(np.zeros(3), np.full(3, 0.5)), reg).tolist() == [0, 1, 2]
    assert screen_groups(SafeRegion(np.zeros(3), np.full(3, 1e9)), reg).size == 0
    assert screen_groups(SafeRegion(np.zeros(3), np.full(3, np.inf)), reg).size == 0
    region = SafeRegion(np.array([0.95, 0.2, 0.99]), np.full(3, 0.1))
    assert screen_groups(region, reg).tolist() == [1]
    # strict inequality: 1 - 0.5 == 0.5 is not eliminated
    assert screen_groups(SafeRegion(np.array([0.5]), np.array([0.5])),
                         GroupRegularizer("l1", n=1)).size == 0


def test_screen_groups_bruteforce(rng):
    reg = GroupRegularizer("group_l12", GroupStructure(rng.permutation(np.arange(20) % 6)))
    for _ in range(50):
        c = rng.standard_normal(reg.n) * 0.4
        r = rng.uniform(0, 0.8, reg.n_groups)
        got = set(screen_groups(SafeRegion(c, r), reg).tolist())
        want = set()
        for g in range(reg.n_groups):
            idx = [j for j in range(reg.n) if reg.structure.labels[j] == g]
            if 1 - np.sqrt(sum(c[j] ** 2 for j in idx)) > r[g]:
                want.add(g)
        assert got == want


def test_safe_region_rejects_bad_radii():
    with pytest.raises(ValueError):
        SafeRegion(np.zeros(2), np.array([-1.0, 0.0]))
    with pytest.raises(ValueError):
        SafeRegion(np.zeros(2), np.array([np.nan, 0.0]))


def test_finite_radius(rng):
    assert finite_radius(0.0, 1.0, 1.0, 1.0) == 0.0
    assert finite_radius(2.0, 1.0, 1.0, 1.0) == 2.0
    assert finite_radius(-1e-14, 3.0, 1.0, 1.0) == 0.0
    for _ in range(50):
        g, n, L, lam = rng.uniform(0.01, 3, 4)
        assert np.isclose(finite_radius(g, n, L, lam), (2 * L * n * g) ** 0.5 / lam)


def test_finite_gap_at_optimum():
    d, _ = make_synthetic(30, 60, 4, seed=2)
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=60)
    lam = lambda_max(d, loss, reg) / 3
    beta = pgd_solve(d, loss, reg, lam, tol=1e-9)
    theta = loss.deriv(d.X @ beta, d.labels)
    eta = np.full(d.m, 1 / d.m)
    a = dual_scaling(theta, d.X, reg, lam, eta)
    assert 0 <= finite_gap(beta, a * theta, d, loss, reg, lam) <= 1e-8
    assert np.isclose(finite_gap(beta, a * theta, d, loss, reg, lam, eta),
                      certified_gap(beta, d.X, d.labels, loss, reg, lam))


def test_finite_gap_origin(rng):
    d = Dataset.from_dense(rng.standard_normal((6, 4)), rng.standard_normal(6))
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=4)
    g = finite_gap(np.zeros(4), np.zeros(6), d, loss, reg, 0.3)
    assert np.isclose(g, np.mean(loss.value(0.0, d.labels)) + np.mean(loss.conjugate(0.0, d.labels)))
    with pytest.raises(ValueError):
        finite_gap(np.zeros(4), np.zeros(5), d, loss, reg, 0.3)


def test_finite_gap_infinite_conjugate():
    d = Dataset.from_dense(np.eye(2), np.array([1.0, -1.0]))
    g = finite_gap(np.zeros(2), np.array([0.5, 0.0]), d, LossModel("logistic"),
                   GroupRegularizer("l1", n=2), 0.1)
    assert g == np.inf


@pytest.mark.parametrize("kind", ["squared", "logistic", "squared_hinge"])
def test_weak_duality(kind, rng):
    d, _ = make_synthetic(20, 15, 3, seed=int(rng.integers(1000)), loss=kind)
    loss = LossModel(kind)
    reg = GroupRegularizer("group_l12", GroupStructure.from_sizes([3] * 5))
    lam = lambda_max(d, loss, reg) * rng.uniform(0.05, 0.9)
    for _ in range(30):
        beta = rng.standard_normal(15)
        theta = loss.deriv(rng.standard_normal(20) * 2, d.labels)
        eta = rng.dirichlet(np.ones(20))
        a = dual_scaling(theta, d.X, reg, lam, eta)
        assert finite_gap(beta, a * theta, d, loss, reg, lam, eta) >= -1e-12


def run_online(data, loss, reg, lam, betas, thetas_from, w, anchor):
    """Drive online_inner_update over a fixed sample path."""
    state = ScreenState.zeros(reg.n, reg.n_groups)
    wr = WeightRule(w)
    hist = []
    for i, beta in zip(thetas_from, betas):
        x, y = data.rows[i], data.labels[i]
        th = float(loss.deriv(x.dot(beta), y))
        online_inner_update(state, x, y, th, anchor, loss, reg, lam, wr)
        hist.append((i, th))
    return state, hist


def test_inner_update_first_step():
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=3)
    x = SparseRow([0, 2], [1.0, -2.0], 3)
    anchor = np.array([0.5, 0.0, 0.25])
    state = ScreenState.zeros(3, 3)
    online_inner_update(state, x, 1.5, 0.3, anchor, loss, reg, 2.0, WeightRule(0.51))
    np.testing.assert_allclose(state.X, -0.3 * x.to_dense() / 2.0)
    assert np.isclose(state.p, loss.value(x.dot(anchor), 1.5) + 2.0 * reg.omega(anchor))
    assert np.isclose(state.d, -loss.conjugate(0.3, 1.5))
    assert state.u == 0.0 and state.k == 1
    np.testing.assert_allclose(state.N, [1.0, 0.0, 4.0])
    assert np.isclose(state.v, loss.value(0.0, 1.5))


def test_inner_update_zero_theta_only_shrinks():
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=2)
    state = ScreenState.zeros(2, 2)
    state.X[:] = [1.0, -2.0]
    state.d = 0.7
    state.k = 3
    wr = WeightRule(0.6)
    mu = wr.mu(4)
    online_inner_update(state, SparseRow([0], [1.0], 2), 0.0, 0.0, np.zeros(2), loss, reg, 1.0, wr)
    np.testing.assert_allclose(state.X, (1 - mu) * np.array([1.0, -2.0]))
    assert np.isclose(state.d, (1 - mu) * 0.7)


def test_inner_update_dim_check():
    state = ScreenState.zeros(3, 3)
    with pytest.raises(ValueError):
        online_inner_update(state, SparseRow([0], [1.0], 4), 1.0, 0.1, np.zeros(3),
                            LossModel("squared"), GroupRegularizer("l1", n=3), 1.0, WeightRule())


def test_inner_update_invalid_conjugate_flags_segment():
    loss, reg = LossModel("logistic"), GroupRegularizer("l1", n=2)
    state = ScreenState.zeros(2, 2)
    online_inner_update(state, SparseRow([0], [1.0], 2), 1.0, 0.4, np.zeros(2), loss, reg, 0.1,
                        WeightRule())
    assert state.invalid
    region, state = online_segment_close(state, reg, loss.L, 0.1)
    assert np.all(np.isinf(region.radii))
    assert screen_groups(region, reg).size == 0


@pytest.mark.parametrize("w", [0.51, 0.75, 1.0])
def test_recursions_match_weighted_sums(w, rng):
    d, _ = make_synthetic(15, 8, 2, seed=1)
    loss = LossModel("squared")
    reg = GroupRegularizer("group_l12", GroupStructure.from_sizes([3, 3, 2]))
    lam = 0.05
    anchor = rng.standard_normal(8) * 0.3
    idx = rng.integers(0, 15, 30)
    betas = [rng.standard_normal(8) for _ in idx]
    state, hist = run_online(d, loss, reg, lam, betas, idx, w, anchor)
    wr = WeightRule(w)
    mu = [wr.mu(t) for t in range(1, 31)]
    cert = reconstruct_certificate([(th, d.rows[i]) for i, th in hist], mu, lam)
    np.testing.assert_allclose(state.X, cert, rtol=0, atol=1e-10)
    ys = d.labels[idx]
    ths = np.array([th for _, th in hist])
    zs = np.array([d.rows[i].dot(anchor) for i in idx])
    assert np.isclose(state.p, weighted_sum(loss.value(zs, ys) + lam * reg.omega(anchor), mu),
                      rtol=0, atol=1e-10)
    assert np.isclose(state.d, weighted_sum(-loss.conjugate(ths, ys), mu), rtol=0, atol=1e-10)
    assert np.isclose(state.v, weighted_sum(loss.value(0.0, ys), mu), rtol=0, atol=1e-10)
    sq = np.array([reg.group_norms(d.rows[i].to_dense()) ** 2 for i in idx])
    np.testing.assert_allclose(state.N, weighted_sum(sq, mu), rtol=0, atol=1e-10)


def test_segment_close_reconstructs_full_certificate(rng):
    d, _ = make_synthetic(12, 6, 2, seed=4)
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=6)
    lam, w = 0.1, 0.6
    wr = WeightRule(w)
    state = ScreenState.zeros(6, 6)
    hist = []
    for seg in range(4):
        anchor = rng.standard_normal(6) * 0.2
        for _ in range(7):
            i = int(rng.integers(12))
            th = float(loss.deriv(d.rows[i].dot(rng.standard_normal(6)), d.labels[i]))
            online_inner_update(state, d.rows[i], d.labels[i], th, anchor, loss, reg, lam, wr)
            hist.append((th, d.rows[i]))
        region, state = online_segment_close(state, reg, loss.L, lam)
        mu = [wr.mu(t) for t in range(1, len(hist) + 1)]
        np.testing.assert_allclose(region.center, reconstruct_certificate(hist, mu, lam),
                                   rtol=0, atol=1e-10)
    assert [h["segment"] for h in state.history] == [0, 1, 2, 3]


def test_two_segments_uniform_weights(rng):
    d, _ = make_synthetic(10, 5, 2, seed=7)
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=5)
    lam = 0.2
    wr = WeightRule(1.0)
    state = ScreenState.zeros(5, 5)
    total = np.zeros(5)
    t2 = 0
    for seg_len in (4, 6):
        for _ in range(seg_len):
            i = int(rng.integers(10))
            th = float(rng.standard_normal())
            online_inner_update(state, d.rows[i], d.labels[i], th, np.zeros(5), loss, reg, lam, wr)
            total += th * d.rows[i].to_dense()
            t2 += 1
        region, state = online_segment_close(state, reg, loss.L, lam)
    np.testing.assert_allclose(region.center, -total / t2 / lam, atol=1e-12)


def test_segment_close_degenerate_zero_data():
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=3)
    state = ScreenState.zeros(3, 3)
    x = SparseRow([], [], 3)
    for _ in range(5):
        online_inner_update(state, x, 0.0, 0.0, np.zeros(3), loss, reg, 1.0, WeightRule())
    region, state = online_segment_close(state, reg, loss.L, 1.0)
    np.testing.assert_array_equal(region.radii, 0.0)
    assert screen_groups(region, reg).tolist() == [0, 1, 2]


def test_segment_close_clamps_negative_residual():
    reg = GroupRegularizer("l1", n=2)
    state = ScreenState.zeros(2, 2)
    state.N[:] = 1.0
    state.p, state.d = 1.0, 1.0 + 1e-14
    state.u, state.inner = 0.5, 3
    region, state = online_segment_close(state, reg, 1.0, 1.0)
    assert region.raw_residual < 0 and region.residual == 0.0
    np.testing.assert_array_equal(region.radii, 0.0)
    assert state.u == 1.0 and state.v == 0.0 and not np.any(state.X)


def test_segment_close_requires_update():
    with pytest.raises(ValueError):
        online_segment_close(ScreenState.zeros(2, 2), GroupRegularizer("l1", n=2), 1.0, 1.0)


def test_state_restrict():
    state = ScreenState.zeros(5, 3)
    state.X[:] = np.arange(5)
    state.N[:] = [7, 8, 9]
    state.restrict(np.array([0, 2]), np.array([0, 1, 4]))
    assert state.X.tolist() == [0, 1, 4] and state.N.tolist() == [7, 9]


@pytest.mark.parametrize("seed", range(5))
def test_finite_screen_safe_at_optimum(seed):
    d, _ = make_synthetic(40, 120, 4, seed=seed)
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=120)
    for ratio in (2, 5, 10):
        lam = lambda_max(d, loss, reg) / ratio
        ref = pgd_solve(d, loss, reg, lam, tol=1e-12)
        region = build_finite_screen(ref, d, loss, reg, lam)
        drop = screen_groups(region, reg)
        assert not set(drop.tolist()) & set(np.flatnonzero(np.abs(ref) > 1e-8).tolist())
        # near the optimum the radius is tiny, so almost every inactive group goes
        slack = 1 - np.abs(region.center)
        assert set(np.flatnonzero(slack > 1e-3).tolist()) <= set(drop.tolist())


def test_finite_screen_group_safe():
    loss = LossModel("logistic")
    d, _ = make_synthetic(40, 60, 6, seed=3, loss="logistic")
    reg = GroupRegularizer("group_l12", GroupStructure.from_sizes([4] * 15))
    lam = lambda_max(d, loss, reg) / 3
    ref = pgd_solve(d, loss, reg, lam, tol=1e-12)
    drop = screen_groups(build_finite_screen(ref, d, loss, reg, lam), reg)
    assert drop.size > 0
    assert np.all(reg.group_norms(ref)[drop] == 0)


def test_finite_screen_zero_anchor_above_lambda_max():
    d, _ = make_synthetic(20, 30, 3, seed=0)
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=30)
    lam = lambda_max(d, loss, reg) * 1.2
    region = build_finite_screen(np.zeros(30), d, loss, reg, lam)
    assert reg.omega_dual(region.center) <= 1
    theta = loss.deriv(np.zeros(20), d.labels)
    assert np.isclose(region.raw_residual, finite_gap(np.zeros(30), theta, d, loss, reg, lam))


def test_finite_screen_single_sample():
    d = Dataset.from_dense(np.array([[1.0, -2.0, 0.5]]), np.array([0.7]))
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=3)
    lam, beta = 0.1, np.array([0.1, 0.0, 0.2])
    region = build_finite_screen(beta, d, loss, reg, lam)
    z = 0.1 - 0.0 + 0.1
    th = z - 0.7
    np.testing.assert_allclose(region.center, -th * np.array([1.0, -2.0, 0.5]) / lam)
    gap = 0.5 * (z - 0.7) ** 2 + lam * 0.3 + (0.5 * th ** 2 + th * 0.7)
    pen = 0.5 * 0.7 ** 2 * max(np.max(np.abs(region.center)) - 1, 0)
    assert np.isclose(region.raw_residual, gap + pen)
    np.testing.assert_allclose(region.radii, np.sqrt(2 * np.array([1, 4, 0.25]) * (gap + pen)) / lam)
