"""Projective transform, the one-step operator, fixed-point iteration, and the
field metrics."""

import numpy as np
import pytest

import urnfield as uf
from urnfield import solver
from urnfield.errors import DimensionMismatchError, DomainError

K = 64


@pytest.fixture
def polya():
    one = uf.point_mass(1.0, upper=1.0, K=K)
    return uf.validate(one, one, beta=1.0, m0=0.5)


@pytest.fixture
def small_grid():
    return dict(Mx=17, My=17, x_star_max=8.0)


def random_field(rng, phi, Mx=17, My=17, K_=K):
    fld = solver.initial_field(phi, Mx=Mx, My=My, x_star_max=8.0)
    Q = fld.Q.copy()
    for i in range(1, Mx):
        for j in range(1, My - 1):
            Q[i, j] = np.sort(rng.random(K_))
    fld.Q = Q
    return fld


# ---------------------------------------------------------------------------
# projective transform
# ---------------------------------------------------------------------------

def test_to_star_examples():
    assert uf.to_star(1.0, 1.0) == pytest.approx((0.5, 0.5))
    assert uf.to_star(4.0, 0.0) == pytest.approx((0.25, 1.0))  # x-axis -> y* = 1
    # far field along x/(x+y) = k approaches (0, k)
    xs, ys = uf.to_star(3e9, 7e9)
    assert xs == pytest.approx(0.0, abs=1e-9) and ys == pytest.approx(0.3)


def test_from_star_examples():
    assert uf.from_star(0.5, 0.5) == pytest.approx((1.0, 1.0))
    assert uf.from_star(1.0, 1.0) == pytest.approx((1.0, 0.0))
    assert uf.from_star(0.25, 0.2) == pytest.approx((0.8, 3.2))


def test_star_round_trip(rng):
    for _ in range(100):
        x, y = rng.uniform(0, 10, 2)
        if x + y == 0:
            continue
        xs, ys = uf.to_star(x, y)
        xb, yb = uf.from_star(xs, ys)
        assert abs(xb - x) <= 1e-12 * max(1, x) and abs(yb - y) <= 1e-12 * max(1, y)


def test_star_domain_errors():
    with pytest.raises(DomainError):
        uf.to_star(0.0, 0.0)
    with pytest.raises(DomainError):
        uf.from_star(0.0, 0.5)


# ---------------------------------------------------------------------------
# operator
# ---------------------------------------------------------------------------

def test_operator_hand_example(polya, small_grid):
    # one step from the proportion-point field at (x, y) = (1, 1):
    # half delta_{2/3} + half delta_{1/3}
    phi = uf.delta_datum(T=17, K=K)
    f0 = solver.initial_field(phi, **small_grid)
    f1 = solver.apply_operator(f0, polya)
    i = int(np.argmin(np.abs(f0.xs - 0.5)))
    j = int(np.argmin(np.abs(f0.ys - 0.5)))
    expect = uf.mixture([(0.5, uf.point_mass(2 / 3, 1.0, K)),
                         (0.5, uf.point_mass(1 / 3, 1.0, K))])
    assert uf.wasserstein(f1.node(i, j), expect) <= 1e-12
    assert uf.wasserstein(f0.node(i, j), f1.node(i, j)) == pytest.approx(1 / 6, abs=1e-12)


def test_operator_constant_field_fixed(rng, polya, small_grid):
    phi = uf.constant_datum(uf.QuantileDist(1.0, np.sort(rng.random(K))), T=17)
    fld = solver.initial_field(phi, **small_grid)
    out = solver.apply_operator(fld, polya)
    assert np.abs(out.Q - fld.Q).max() <= 1e-12


def test_operator_matches_mixture_oracle(rng, polya, small_grid):
    phi = uf.delta_datum(T=17, K=K)
    fld = random_field(rng, phi)
    out = solver.apply_operator(fld, polya)
    for (i, j) in [(1, 1), (3, 9), (8, 8), (16, 15), (2, 1), (16, 1), (1, 15)]:
        ref = solver.apply_operator_at_node(fld, polya, i, j)
        assert np.abs(out.Q[i, j] - ref.q).max() <= 1e-13


def test_operator_matches_mixture_oracle_multi_atom(rng, small_grid):
    pair = uf.scaled_bernoulli_pair(2.0, 1.0, 0.5, K=K)
    phi = uf.delta_datum(T=17, K=K)
    fld = random_field(rng, phi)
    out = solver.apply_operator(fld, pair)
    for (i, j) in [(1, 1), (5, 11), (16, 8), (2, 15)]:
        ref = solver.apply_operator_at_node(fld, pair, i, j)
        assert np.abs(out.Q[i, j] - ref.q).max() <= 1e-13


def test_operator_pins_boundaries(rng, polya, small_grid):
    phi = uf.power_datum(2.0, T=17, K=K)
    fld = random_field(rng, phi)
    out = solver.apply_operator(fld, polya)
    assert np.array_equal(out.Q[:, 0, :], fld.Q[:, 0, :])
    assert np.array_equal(out.Q[:, -1, :], fld.Q[:, -1, :])
    assert np.array_equal(out.Q[0, :, :], fld.Q[0, :, :])


def test_operator_non_expansive_random_fields(rng, polya):
    # exact on the grid: interpolation and quadrature are convex combinations
    phi = uf.delta_datum(T=17, K=K)
    pair_b = uf.scaled_bernoulli_pair(2.0, 1.0, 0.5, K=K)
    for pair in (polya, pair_b):
        for _ in range(10):
            f1 = random_field(rng, phi)
            f2 = random_field(rng, phi)
            a1 = solver.apply_operator(f1, pair)
            a2 = solver.apply_operator(f2, pair)
            for n in (1, 2, 4, 8):
                assert (uf.field_distance(a1, a2, n)
                        <= uf.field_distance(f1, f2, n) + 1e-9)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_constant_boundary_immediate(polya, small_grid, rng):
    xi = uf.QuantileDist(1.0, np.sort(rng.random(K)))
    phi = uf.constant_datum(xi, T=17)
    fld = solver.solve(polya, phi, tol_iter=1e-10, max_iters=50, **small_grid)
    assert fld.meta["converged"]
    assert fld.meta["iterations"] <= 2
    assert solver.residual(fld, polya) <= 1e-12
    assert np.abs(fld.Q - xi.q[None, None, :]).max() <= 1e-12


def test_solve_polya_small_grid_close_to_beta(polya):
    phi = uf.delta_datum(T=33, K=128)
    fld = solver.solve(polya, phi, Mx=33, My=33, x_star_max=8.0,
                       tol_iter=1e-5, max_iters=2000)
    assert fld.meta["converged"]
    # spot check against the closed form at on-grid starred points
    for (x, y) in [(1.0, 1.0), (1.0, 3.0), (3.0, 1.0)]:
        ref = uf.beta_quantile_dist(x, y, K=128)
        got = fld.at_xy(x, y)
        assert uf.wasserstein(got, ref) <= 0.02


def test_solve_records_non_convergence(polya, small_grid):
    phi = uf.delta_datum(T=17, K=K)
    fld = solver.solve(polya, phi, tol_iter=1e-12, max_iters=3, **small_grid)
    assert not fld.meta["converged"]
    assert fld.meta["iterations"] == 3


def test_residual_positive_for_initial_field(polya, small_grid):
    phi = uf.delta_datum(T=17, K=K)
    f0 = solver.initial_field(phi, **small_grid)
    # the one-step displacement at (1,1) alone is 1/6
    assert solver.residual(f0, polya) >= 0.05


def test_multi_start_uniqueness_small(polya):
    phi = uf.delta_datum(T=17, K=K)
    kw = dict(Mx=9, My=17, x_star_max=8.0, tol_iter=1e-9, max_iters=500)
    fa = solver.solve(polya, phi, init="boundary", **kw)
    fb = solver.solve(polya, phi, init="constant0", **kw)
    assert fa.meta["converged"] and fb.meta["converged"]
    assert uf.field_distance(fa, fb) <= 2e-9


# ---------------------------------------------------------------------------
# field metrics
# ---------------------------------------------------------------------------

def test_field_distance_zero_on_equal(rng, polya):
    phi = uf.delta_datum(T=17, K=K)
    fld = random_field(rng, phi)
    assert uf.field_distance(fld, fld) == 0.0
    assert uf.field_distance(fld, fld, 3) == 0.0


def test_field_distance_far_node_needs_large_n(rng):
    phi = uf.delta_datum(T=17, K=K)
    f1 = random_field(rng, phi)
    f2 = f1.copy()
    # perturb a single node with x* = 3.5 (x + y = 2/7 < 1/3)
    i = int(np.argmin(np.abs(f1.xs - 3.5)))
    f2.Q[i, 8] = np.clip(f2.Q[i, 8] + 0.3, 0, 1)
    assert uf.field_distance(f1, f2, 1) == 0.0
    assert uf.field_distance(f1, f2, 3) == 0.0
    assert uf.field_distance(f1, f2, 4) > 0.0


def test_field_distance_definition_unfolding(rng):
    # d = sum over n of 2^-n d_n/(1+d_n) truncated at x*_max; hence d is
    # bounded by the sup-region distance and below by the n=1 term
    phi = uf.delta_datum(T=17, K=K)
    for _ in range(10):
        f1, f2 = random_field(rng, phi), random_field(rng, phi)
        d = uf.field_distance(f1, f2)
        dns = {n: uf.field_distance(f1, f2, n) for n in range(1, 9)}
        expect = sum(2.0 ** -n * dns[n] / (1 + dns[n]) for n in range(1, 9))
        assert d == pytest.approx(expect, abs=1e-14)
        assert d <= max(dns.values())
        assert d >= 0.5 * dns[1] / (1 + dns[1])


def test_field_distance_grid_mismatch(rng):
    phi = uf.delta_datum(T=17, K=K)
    f1 = random_field(rng, phi, Mx=17)
    f2 = random_field(rng, phi, Mx=9)
    with pytest.raises(DimensionMismatchError):
        uf.field_distance(f1, f2)


# ---------------------------------------------------------------------------
# Lipschitz transport of the operator (parameter continuity building blocks)
# ---------------------------------------------------------------------------

def test_operator_parameter_move_bound(rng, polya):
    # moving the parameters moves the one-step image by at most L * d_M for an
    # L-Lipschitz field; the proportion-point start has L = n on x+y >= 1/n
    one = uf.point_mass(1.0, 1.0, K)
    pair1 = uf.validate(one, one, beta=1.0, m0=0.2)
    pair2 = uf.dilute(pair1, 1.0 - 1.0 / 16)
    d_m = uf.manhattan(pair1, pair2)
    phi = uf.delta_datum(T=33, K=K)
    f0 = solver.initial_field(phi, Mx=33, My=33, x_star_max=8.0)
    a1 = solver.apply_operator(f0, pair1)
    a2 = solver.apply_operator(f0, pair2)
    for n in (1, 2):
        assert uf.field_distance(a1, a2, n) <= n * d_m + 0.01


def test_iteration_growth_bound(polya):
    # d_n(A^N under pair1, A^N under pair2) <= n N d_M + slack
    one = uf.point_mass(1.0, 1.0, K)
    pair1 = uf.validate(one, one, beta=1.0, m0=0.2)
    pair2 = uf.dilute(pair1, 1.0 - 1.0 / 32)
    d_m = uf.manhattan(pair1, pair2)
    phi = uf.delta_datum(T=17, K=K)
    f1 = solver.initial_field(phi, Mx=17, My=17, x_star_max=8.0)
    f2 = f1.copy()
    for N in range(1, 6):
        f1 = solver.apply_operator(f1, pair1)
        f2 = solver.apply_operator(f2, pair2)
        assert uf.field_distance(f1, f2, 2) <= 2 * N * d_m + 0.01


# ---------------------------------------------------------------------------
# boundary redundancy: the pure-mu row recursion regenerates phi(1)
# ---------------------------------------------------------------------------

def test_boundary_redundancy_row_recursion(polya):
    # start the y* = 1 row from a wrong value; iterating the row equation
    # V(x*) = integral of V(x*/(1+k x*)) mu(dk) with the far-field value
    # pinned pulls it back to phi(1)
    phi = uf.delta_datum(T=17, K=K)
    Mx = 17
    xs = np.linspace(0, 8, Mx)
    row = np.tile(uf.uniform(0, 1, K=K).q, (Mx, 1))
    row[0] = 1.0  # x* = 0 is the projective limit phi(1) = delta_1
    dx = xs[1] - xs[0]
    for _ in range(400):
        new = row.copy()
        for i in range(1, Mx):
            xp = xs[i] / (1 + xs[i])
            i0 = min(int(xp / dx), Mx - 2)
            s0 = np.sqrt(xs[i0])
            fx = (np.sqrt(xp) - s0) / (np.sqrt(xs[i0 + 1]) - s0)
            new[i] = (1 - fx) * row[i0] + fx * row[i0 + 1]
        row = new
    assert np.abs(row - 1.0).max() <= 1e-3


# ---------------------------------------------------------------------------
# serialization / interpolation
# ---------------------------------------------------------------------------

def test_field_json_round_trip(rng, polya):
    phi = uf.delta_datum(T=9, K=8)
    fld = random_field(rng, phi, Mx=5, My=9, K_=8)
    back = solver.SolutionField.from_dict(fld.to_dict())
    assert np.array_equal(back.Q, fld.Q)
    assert back.x_star_max == fld.x_star_max


def test_at_star_at_nodes(rng):
    phi = uf.delta_datum(T=9, K=8)
    fld = random_field(rng, phi, Mx=5, My=9, K_=8)
    assert np.array_equal(fld.at_star(float(fld.xs[2]), float(fld.ys[3])).q, fld.Q[2, 3])
    with pytest.raises(DomainError):
        fld.at_star(9.0, 0.5)


# ---------------------------------------------------------------------------
# composing a general boundary from the canonical field
# ---------------------------------------------------------------------------

def test_compose_general_matches_direct_solve(polya):
    one = uf.point_mass(1.0, upper=1.0, K=128)
    pair = uf.validate(one, one, beta=1.0, m0=0.2)
    phi_d = uf.delta_datum(T=65, K=128)
    phi_g = uf.power_datum(2.0, T=65, K=128)
    kw = dict(Mx=65, My=65, x_star_max=4.0, tol_iter=1e-6, max_iters=2000)
    canon = solver.solve(pair, phi_d, **kw)
    composed = uf.compose_general(canon, phi_g)
    direct = solver.solve(pair, phi_g, **kw)
    # agreement is interpolation-limited on a grid, not 2*tol + 2/K; see the
    # spot checks against the closed form for the sharp statement
    assert uf.field_distance(composed, direct) <= 0.05
    for y in (1.0, 2.0):
        ref = uf.kumaraswamy_dist(2.0, 1.0, y, K=128)
        assert uf.wasserstein(composed.at_xy(1.0, y), ref) <= 0.03
        assert uf.wasserstein(direct.at_xy(1.0, y), ref) <= 0.03


def test_compose_general_delta_identity(polya):
    phi_d = uf.delta_datum(T=17, K=K)
    fld = solver.solve(polya, phi_d, Mx=17, My=17, x_star_max=4.0,
                       tol_iter=1e-6, max_iters=1000)
    back = uf.compose_general(fld, phi_d)
    assert np.abs(back.Q - fld.Q).mean(axis=2).max() <= 2.0 / K


def test_compose_general_constant(polya, rng):
    phi_d = uf.delta_datum(T=17, K=K)
    fld = solver.solve(polya, phi_d, Mx=17, My=17, x_star_max=4.0,
                       tol_iter=1e-6, max_iters=1000)
    xi = uf.QuantileDist(1.0, np.sort(rng.random(K)))
    out = uf.compose_general(fld, uf.constant_datum(xi, T=17))
    assert np.abs(out.Q - xi.q[None, None, :]).max() <= 1e-12
