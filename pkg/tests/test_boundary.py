"""Boundary data: construction, the sup metric, the mixing maps, the
aggregate, and monotonicity."""

import numpy as np
import pytest

import urnfield as uf
from urnfield.errors import DimensionMismatchError, InputError

from conftest import random_dist

K = 64
T = 65


def test_delta_datum_at_nodes():
    phi = uf.delta_datum(T=T, K=K)
    assert np.allclose(phi.evaluate(0.0).q, 0.0)
    assert np.allclose(phi.evaluate(1.0).q, 1.0)


def test_delta_datum_between_nodes():
    phi = uf.delta_datum(T=4, K=K)  # nodes at 0, 1/3, 2/3, 1
    mid = phi.evaluate(0.5)
    assert np.allclose(mid.q, 0.5, atol=1e-12)  # interp of constant vectors
    assert uf.largest_atom(mid).mass_estimate == 1.0


def test_sup_distance_examples():
    phi = uf.delta_datum(T=T, K=K)
    assert uf.sup_distance(phi, phi) == 0.0
    const0 = uf.constant_datum(uf.point_mass(0.0, 1.0, K), T=T)
    assert uf.sup_distance(phi, const0) == pytest.approx(1.0)  # attained at t=1
    reversed_phi = uf.BoundaryDatum(phi.values[::-1])
    assert uf.sup_distance(phi, reversed_phi) == pytest.approx(1.0)  # max|2t-1|


def test_sup_distance_grid_mismatch():
    with pytest.raises(DimensionMismatchError):
        uf.sup_distance(uf.delta_datum(T=5, K=K), uf.delta_datum(T=7, K=K))


# ---------------------------------------------------------------------------
# gamma map
# ---------------------------------------------------------------------------

def test_gamma_delta_is_identity(rng):
    phi = uf.delta_datum(T=T, K=K)
    xi = random_dist(rng, K)
    assert uf.wasserstein(uf.gamma_map(phi, xi), xi) <= 2.0 / K


def test_gamma_point_evaluation():
    phi = uf.power_datum(2.0, T=T, K=K)
    for t in (0.0, 0.25, 0.5, 1.0):
        got = uf.gamma_map(phi, uf.point_mass(t, 1.0, K))
        assert uf.wasserstein(got, phi.evaluate(t)) <= 1e-12


def test_gamma_constant_family(rng):
    unif = uf.uniform(0, 1, K=K)
    phi = uf.constant_datum(unif, T=T)
    xi = random_dist(rng, K)
    assert uf.wasserstein(uf.gamma_map(phi, xi), unif) <= 1e-12


def test_gamma_lipschitz_for_delta_datum(rng):
    # the delta datum is 1-Lipschitz from [0,1] into the metric space, so the
    # mixing map is 1-Lipschitz up to grid slack
    phi = uf.delta_datum(T=T, K=K)
    for _ in range(20):
        a, b = random_dist(rng, K), random_dist(rng, K)
        assert (uf.wasserstein(uf.gamma_map(phi, a), uf.gamma_map(phi, b))
                <= uf.wasserstein(a, b) + 2.0 / K)


def test_gamma_linearity(rng):
    phi = uf.power_datum(2.0, T=T, K=K)
    a, b = random_dist(rng, K), random_dist(rng, K)
    w = 0.5
    left = uf.gamma_map(phi, uf.mixture([(w, a), (1 - w, b)]))
    right = uf.mixture([(w, uf.gamma_map(phi, a)), (1 - w, uf.gamma_map(phi, b))])
    assert uf.wasserstein(left, right) <= 2.0 / K


def test_gamma_h_equivariance_at_nodes():
    # h(gamma(phi, xi)) = gamma(h o phi, xi) exactly when xi's atoms sit on
    # t-nodes (no interpolation enters); pooling commutes with monotone maps
    phi = uf.delta_datum(T=T, K=K)
    h = lambda t: t ** 2
    hphi = uf.pushforward_datum(phi, h)
    nodes = phi.t_nodes()
    xi = uf.mixture([(0.25, uf.point_mass(nodes[4], 1.0, K)),
                     (0.25, uf.point_mass(nodes[16], 1.0, K)),
                     (0.5, uf.point_mass(nodes[40], 1.0, K))])
    left = uf.gamma_map(hphi, xi)
    right = uf.pushforward_monotone(uf.gamma_map(phi, xi), h)
    assert uf.wasserstein(left, right) <= 1e-9


def test_gamma_rejects_wrong_support():
    phi = uf.delta_datum(T=T, K=K)
    with pytest.raises(InputError):
        uf.gamma_map(phi, uf.point_mass(1.0, upper=2.0, K=K))


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

def test_aggregate_constant(rng):
    xi = random_dist(rng, K)
    phi = uf.constant_datum(xi, T=T)
    assert uf.wasserstein(uf.aggregate_phi(phi), xi) <= 1e-12


def test_aggregate_delta_is_lebesgue():
    phi = uf.delta_datum(T=T, K=K)
    got = uf.aggregate_phi(phi)
    assert uf.wasserstein(got, uf.uniform(0, 1, K=K)) <= 1.0 / T + 1.0 / K


def test_aggregate_atom():
    phi = uf.constant_datum(uf.point_mass(0.5, 1.0, K), T=T)
    agg = uf.aggregate_phi(phi)
    assert uf.largest_atom(agg).mass_estimate == 1.0


# ---------------------------------------------------------------------------
# monotonicity
# ---------------------------------------------------------------------------

def test_monotonic_delta_and_reverse():
    phi = uf.delta_datum(T=T, K=K)
    assert uf.is_monotonic(phi)
    assert not uf.is_monotonic(uf.BoundaryDatum(phi.values[::-1]))


def test_monotonic_rejects_crossing_cdfs():
    # increasing means but crossing CDFs: narrow U[0.4, 0.6] to wide U[0.02, 1]
    lo = uf.uniform(0.4, 0.6, upper=1.0, K=K)
    hi = uf.uniform(0.02, 1.0, upper=1.0, K=K)
    assert hi.mean() > lo.mean()
    phi = uf.BoundaryDatum(np.stack([lo.q, hi.q]))
    assert not uf.is_monotonic(phi)


def test_power_datum_monotone():
    assert uf.is_monotonic(uf.power_datum(0.5, T=T, K=K))
    assert uf.is_monotonic(uf.power_datum(2.0, T=T, K=K))


# ---------------------------------------------------------------------------
# serialization / specs
# ---------------------------------------------------------------------------

def test_boundary_round_trip():
    phi = uf.power_datum(2.0, T=17, K=K)
    back = uf.BoundaryDatum.from_dict(phi.to_dict())
    assert np.array_equal(back.values, phi.values)


def test_parse_boundary_specs(tmp_path):
    assert uf.parse_boundary_spec("delta", T=9, K=8).T == 9
    c = uf.parse_boundary_spec("constant:uniform:0,1", T=9, K=8)
    assert np.allclose(c.values[0], c.values[-1])
    p = uf.parse_boundary_spec("power:gamma=2", T=9, K=8)
    assert np.allclose(p.values[4, 0], 0.5 ** 0.5)
    h = uf.parse_boundary_spec("hdelta:kmu=2,knu=1", T=9, K=8)
    assert h.values[4, 0] == pytest.approx(0.5 / 1.5)
    path = tmp_path / "b.json"
    path.write_text(__import__("json").dumps(uf.delta_datum(T=5, K=8).to_dict()))
    f = uf.parse_boundary_spec(f"file:{path}", T=5, K=8)
    assert f.T == 5


def test_parse_boundary_spec_rejects():
    with pytest.raises(InputError):
        uf.parse_boundary_spec("power:alpha=2", T=9, K=8)
    with pytest.raises(InputError):
        uf.parse_boundary_spec("wavelet", T=9, K=8)


# ---------------------------------------------------------------------------
# psi map on solution fields
# ---------------------------------------------------------------------------

def _small_canonical():
    from urnfield import solver
    one = uf.point_mass(1.0, upper=1.0, K=K)
    pair = uf.validate(one, one, beta=1.0, m0=0.2)
    phi = uf.delta_datum(T=33, K=K)
    return pair, solver.solve(pair, phi, Mx=33, My=33, x_star_max=4.0,
                              tol_iter=1e-6, max_iters=2000)


def test_psi_delta_identity():
    _, canon = _small_canonical()
    ident = uf.psi_map(uf.delta_datum(T=33, K=K), canon)
    assert np.abs(ident.Q - canon.Q).mean(axis=2).max() <= 2.0 / K


def test_psi_constant_family(rng):
    _, canon = _small_canonical()
    xi = uf.QuantileDist(1.0, np.sort(rng.random(K)))
    out = uf.psi_map(uf.constant_datum(xi, T=33), canon)
    assert np.abs(out.Q - xi.q[None, None, :]).max() <= 1e-12


def test_psi_power_gives_kumaraswamy_at_origin_row():
    # mixing the power-map family over the canonical field at (1, y) gives the
    # gamma-power pushforward of Beta(1, y)
    gamma = 2.0
    _, canon = _small_canonical()
    comp = uf.psi_map(uf.power_datum(gamma, T=33, K=K), canon)
    for y in (1.0, 2.0):
        ref = uf.kumaraswamy_dist(gamma, 1.0, y, K=K)
        assert uf.wasserstein(comp.at_xy(1.0, y), ref) <= 0.03


def test_psi_repins_boundaries():
    _, canon = _small_canonical()
    phi = uf.power_datum(2.0, T=33, K=K)
    out = uf.psi_map(phi, canon)
    assert np.array_equal(out.Q[:, 0, :], np.tile(phi.values[0], (out.Mx, 1)))
    assert np.array_equal(out.Q[:, -1, :], np.tile(phi.values[-1], (out.Mx, 1)))
