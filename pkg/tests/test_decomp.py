from fractions import Fraction
from math import ceil

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from xray_sharp.bumps import beta0
from xray_sharp.curves import LiftedCurve, finite_type_curve, moment_curve, perturbed_moment_curve
from xray_sharp.decomp import (
    CoverBlock,
    J_index_set,
    MuSymbol,
    Y_coordinates,
    block_claims,
    cover_check,
    decoupling_ratio,
    delta_schedule,
    g_recursion,
    lifted_moment_derivative,
    make_frame,
    packet_decoupling,
    packet_field,
    packet_profile_ft,
    packet_spectrum,
    partition_check,
    projection_P,
    rescaled_curve,
    reverse_cover,
    sample_admissible,
    sample_admissible_y,
    split_anu,
    split_mu12,
    y_coords,
    y_reconstruct,
)
from xray_sharp.errors import FrameDegenerate, InadmissibleFrequency, InvalidArgument, SupportViolation
from xray_sharp.fields import GridSpec, apply_multiplier, param_axis, random_field


# ---- frames ------------------------------------------------------------------


@pytest.mark.parametrize("d, N, s", [(2, 2, 0.0), (3, 2, 0.4), (3, 3, -0.3), (4, 3, 0.7)])
def test_frame_scales_derivatives(d, N, s):
    c = perturbed_moment_curve(d, 0.05)
    delta = 0.1
    fr = make_frame(c, s, delta, N)
    for j in range(1, N):
        g = c.eval_deriv(s, j)
        np.testing.assert_allclose(fr.Ltilde.T @ g, delta ** (N - j) * g, atol=1e-13)
    V = c.derivative_matrix(s, range(1, N))
    w = np.linalg.svd(V.T)[2][-1]  # a unit vector orthogonal to span(V)
    np.testing.assert_allclose(fr.Ltilde.T @ w, w, atol=1e-12)
    np.testing.assert_allclose(fr.M, delta ** (-N) * fr.Ltilde)


def test_frame_full_map_structure():
    c = moment_curve(2)
    s, delta = 0.3, 0.25
    fr = make_frame(c, s, delta, 2)
    tau, xi = 0.7, np.array([1.5, -2.0])
    v = fr.Lfull @ np.concatenate([[tau], xi])
    np.testing.assert_allclose(v[1:], fr.Ltilde @ xi)
    assert v[0] == pytest.approx(delta**2 * tau - c(s) @ fr.Ltilde.T @ xi)


def test_frame_moment_curve_at_origin_is_diagonal():
    fr = make_frame(moment_curve(3), 0.0, 0.5, 3)
    np.testing.assert_allclose(fr.Ltilde, np.diag([0.25, 0.5, 1.0]), atol=1e-15)


def test_frame_D_columns():
    fr = make_frame(moment_curve(2), 0.2, 0.5, 2)
    for j in range(1, 4):
        np.testing.assert_allclose(fr.D[:, j - 1], 0.5**j * lifted_moment_derivative(0.2, j, 2))


def test_frame_errors():
    with pytest.raises(FrameDegenerate):
        make_frame(finite_type_curve([2, 3]), 0.0, 0.5, 2)
    with pytest.raises(InvalidArgument):
        make_frame(moment_curve(2), 0.0, 0.5, 1)
    with pytest.raises(InvalidArgument):
        make_frame(moment_curve(2), 0.0, 0.0, 2)


def test_lifted_moment_derivative_values():
    np.testing.assert_allclose(lifted_moment_derivative(2.0, 0, 2), [2.0, 2.0, 8.0 / 6.0])
    np.testing.assert_allclose(lifted_moment_derivative(2.0, 2, 2), [0.0, 1.0, 2.0])
    np.testing.assert_allclose(lifted_moment_derivative(0.0, 3, 2), [0.0, 0.0, 1.0])


@pytest.mark.parametrize("delta", [0.5, 0.125])
def test_rescaled_moment_curve_is_self_similar(delta):
    # at the origin the rescaling maps the moment curve to itself
    c = moment_curve(2)
    r = rescaled_curve(c, 0.0, delta, 2)
    s = np.linspace(-1, 1, 9)
    np.testing.assert_allclose(r(s), c(s), atol=1e-14)
    np.testing.assert_allclose(r.eval_deriv(s, 1), c.eval_deriv(s, 1), atol=1e-14)


def test_rescaled_curve_low_derivatives():
    c = perturbed_moment_curve(3, 0.05)
    r = rescaled_curve(c, 0.3, 0.2, 3)
    np.testing.assert_allclose(r(0.0), np.zeros(3), atol=1e-15)
    for j in (1, 2):
        np.testing.assert_allclose(r.eval_deriv(0.0, j), c.eval_deriv(0.3, j), atol=1e-12)


def test_rescaled_curve_interval_check():
    with pytest.raises(InvalidArgument):
        rescaled_curve(moment_curve(2), 0.9, 0.2, 2)


# ---- schedules -----------------------------------------------------------------


@pytest.mark.parametrize("k", [27, 40, 100, 1000])
def test_schedule_exact_condition(k):
    sched = delta_schedule(2.0**-13, 1.0, 2, k, 2)
    assert sched.check()
    assert sched.log2_deltas[-1] == Fraction(-k, 2)
    assert sched.deltas[0] == 2.0**-13
    e = sched.log2_deltas
    for j in range(sched.J):
        assert 6 + Fraction(3, 2) * e[j] <= e[j + 1] < e[j]
    assert sched.J <= 10 * np.log2(k)


@given(st.integers(2, 4), st.integers(2, 3), st.integers(0, 2000))
def test_schedule_property(d, N, extra):
    a = -3 * d * N - 1
    k = -N * a + 1 + extra
    sched = delta_schedule(2.0**a, 1.0, N, k, d)
    assert sched.check()
    assert all(x > y for x, y in zip(sched.deltas, sched.deltas[1:]))


def test_schedule_rejects_boundary_and_range():
    with pytest.raises(InvalidArgument, match="strictly"):
        delta_schedule(2.0**-12, 1.0, 2, 40, 2)
    with pytest.raises(InvalidArgument):
        delta_schedule(2.0**-11, 1.0, 2, 40, 2)
    with pytest.raises(InvalidArgument):
        delta_schedule(2.0**-30, 1.0, 2, 40, 2)


def test_schedule_float_path():
    sched = delta_schedule(3e-5, 1.0, 2, 60, 2)
    assert sched.log2_deltas is None
    assert sched.check()
    assert sched.deltas[-1] == pytest.approx(2.0**-30)


# ---- y coordinates and the recursion ----------------------------------------------


def test_y_coords_moment_origin():
    y = y_coords(LiftedCurve(moment_curve(2)), 0, 0.1, 0.7, np.array([2.0, -3.0]), 2)
    np.testing.assert_allclose(y, [0.7, 2.0, -3.0])


def test_y_coords_shifted():
    # at s0 = 0.5: y0 = tau + xi1/2 + xi2/8, y1 = xi1 + xi2/2, y2 = xi2
    y = y_coords(LiftedCurve(moment_curve(2)), 5, 0.1, 1.0, np.array([2.0, 4.0]), 2)
    np.testing.assert_allclose(y, [1.0 + 1.0 + 0.5, 4.0, 4.0])


def test_recursion_N2_closed_form():
    y = np.array([1.0, 3.0, 2.0])
    g, om = g_recursion(y, 2)
    assert om == 1.5
    np.testing.assert_allclose(g, [1.0 - 9.0 / 4.0, 0.0, 2.0])
    np.testing.assert_allclose(y_reconstruct(g, om, 2), y)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_recursion_round_trip(N):
    y = sample_admissible_y(np.random.default_rng(N), 5000, N)
    g, om = g_recursion(y, N)
    assert np.max(np.abs(g[:, N - 1])) <= 1e-12
    back = y_reconstruct(g, om, N)
    assert np.max(np.abs(back - y)) <= 1e-12 * np.max(np.abs(y))


@given(st.integers(2, 5), st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.floats(0.5, 1.0))
def test_recursion_round_trip_property(N, vals, top):
    y = np.array(vals[: N + 1])
    y[N] = top
    g, om = g_recursion(y, N)
    np.testing.assert_allclose(y_reconstruct(g, om, N), y, atol=1e-13)


def test_recursion_errors():
    with pytest.raises(InadmissibleFrequency):
        g_recursion(np.array([1.0, 1.0, 0.0]), 2)
    with pytest.raises(InvalidArgument):
        g_recursion(np.ones(4), 2)


# ---- the localized symbol ------------------------------------------------------------


@pytest.fixture(scope="module")
def mu_symbol():
    return MuSymbol(moment_curve(2), 2, 40, 1.0, 2.0**-14, 0)


@pytest.fixture(scope="module")
def mu_samples(mu_symbol):
    return mu_symbol.sample_support(np.random.default_rng(11), 800)


def test_support_samples_are_nonzero(mu_symbol, mu_samples):
    s, t, y0, xi = mu_samples
    assert len(s) == 800
    assert np.all(mu_symbol(s, t, y0, xi) != 0)


def test_mu_sigma_closed_form(mu_symbol, mu_samples):
    xi = mu_samples[3]
    np.testing.assert_allclose(mu_symbol.sigma(xi), -xi[:, 0] / xi[:, 1], atol=1e-14)


def test_gN_functional_direct_formula(mu_symbol):
    # N = 2: G_N = (2^{-k} |g^0|)^2 + (s - sigma)^4, G_N^0 = (s - sigma)^4
    k = mu_symbol.k
    xi = np.array([[3e9, 2.0**k]])
    y0 = np.array([5e6])
    s = np.array([0.01])
    G, G0 = mu_symbol.gN_functional(s, y0, xi)
    g0 = y0[0] - xi[0, 0] ** 2 / (2 * xi[0, 1])
    sig = -xi[0, 0] / xi[0, 1]
    assert G[0] == pytest.approx((2.0**-k * abs(g0)) ** 2 + (s[0] - sig) ** 4, rel=1e-12)
    assert G0[0] == pytest.approx((s[0] - sig) ** 4, rel=1e-12)


def test_gN_functional_scaling(mu_symbol):
    # scaling (y0, xi) by 2^m and k by m leaves G_N unchanged
    xi = np.array([[3e9, 2.0**40]])
    y0 = np.array([5e6])
    s = np.array([0.01])
    a2 = MuSymbol(mu_symbol.curve, 2, 43, 1.0, mu_symbol.delta0, 0)
    G1 = mu_symbol.gN_functional(s, y0, xi)[0]
    G2 = a2.gN_functional(s, 8 * y0, 8 * xi)[0]
    assert G2[0] == pytest.approx(G1[0], rel=1e-12)


@pytest.mark.parametrize("mu, n", [(0, 0), (3, 1), (-2, 2)])
def test_J_index_set_sizes(mu, n):
    d0, d1 = 2.0**-14, 2.0**-15
    w = 2.0**n * d1
    plain = J_index_set(mu, d0, d1, n, widened=False)
    wide = J_index_set(mu, d0, d1, n)
    assert np.all(np.abs(w * plain - d0 * mu) <= d0)
    assert np.all(np.abs(w * wide - d0 * mu) < d0 + w)
    assert set(plain) <= set(wide)
    cand = np.arange(-200, 201)
    np.testing.assert_array_equal(wide, cand[np.abs(w * cand - d0 * mu) < d0 + w])
    np.testing.assert_array_equal(plain, cand[np.abs(w * cand - d0 * mu) <= d0])


def test_partition_of_unity(mu_symbol, mu_samples):
    rep = partition_check(mu_symbol, 2.0**-15, mu_samples)
    assert rep.max_residual <= 1e-10
    assert rep.n_levels >= 2


def test_split_anu_rejects_bad_scales(mu_symbol):
    with pytest.raises(InvalidArgument):
        split_anu(mu_symbol, 2.0**-20, 0)
    with pytest.raises(InvalidArgument):
        split_anu(mu_symbol, 2.0**-15, -1)


def test_split_mu12_sums_to_piece(mu_symbol, mu_samples):
    s, t, y0, xi = mu_samples
    pieces = split_anu(mu_symbol, 2.0**-15, 1)
    for piece in pieces[:: max(1, len(pieces) // 4)]:
        a1, a2 = split_mu12(piece, 2.0**6 * 100.0)
        np.testing.assert_allclose(a1(s, t, y0, xi) + a2(s, t, y0, xi), piece(s, t, y0, xi), atol=1e-15)
    with pytest.raises(InvalidArgument):
        split_mu12(pieces[0], 1.0)


@pytest.mark.parametrize("mu", [0, 7])
def test_Y_map_invertible_and_consistent(mu):
    c = moment_curve(3)
    Y = Y_coordinates(LiftedCurve(c), mu, 2.0**-6, 10, 2)
    v = np.random.default_rng(mu).normal(size=(20, 4))
    np.testing.assert_allclose(Y(v[:, 0], v[:, 1:]) @ Y.inverse().T, v, atol=1e-9)
    a = MuSymbol(c, 2, 10, 1.0, 2.0**-6, mu)
    y0 = a.to_centered(v[:, 0], v[:, 1:])
    np.testing.assert_allclose(Y.from_ybar(a.ybar(y0, v[:, 1:])), Y(v[:, 0], v[:, 1:])[:, :3], rtol=1e-9, atol=1e-9)


def test_block_claims_small():
    c = moment_curve(3)
    a = MuSymbol(c, 2, 44, 1.0, 2.0**-20, 0)
    S = a.sample_support(np.random.default_rng(2), 500)
    rep = block_claims(a, 2.0**-21, S, 2)
    assert rep.in_block_fraction == 1.0
    assert rep.C_measured <= rep.C_apriori
    assert rep.as_dict()["check_name"] == "block_assignment"


# ---- covers ------------------------------------------------------------------------------


@pytest.mark.parametrize("delta", [1.0, 0.5, 0.25, 0.1])
def test_reverse_cover_count(delta):
    blocks = reverse_cover(delta, 2)
    assert len(blocks) == ceil(4 / delta) + 1
    assert blocks[0].center == -1.0 and blocks[-1].center >= 1.0


@pytest.mark.parametrize("delta, N", [(0.5, 2), (0.125, 2), (0.25, 3)])
def test_reverse_cover_covers_admissible_points(delta, N):
    _, pts = sample_admissible(np.random.default_rng(1), 2000, delta, N)
    rep = cover_check(reverse_cover(delta, N), pts)
    assert rep.covered_fraction == 1.0
    assert rep.max_overlap <= 8


def test_sampled_point_is_in_own_block():
    s, pts = sample_admissible(np.random.default_rng(3), 200, 0.25, 2)
    for si, z in zip(s, pts):
        assert CoverBlock(si, 0.25, 2).contains(z[None])[0]


def test_reverse_cover_rejects_delta():
    with pytest.raises(InvalidArgument):
        reverse_cover(0.0, 2)


# ---- projections and decoupling -------------------------------------------------------------


def test_projection_P_matches_explicit_multiplier(rng):
    g = GridSpec(2, 32, param_axis(5))
    f = random_field(g, rng)
    delta, C0, k = 0.25, 1.0, 3
    out = projection_P(f, moment_curve(2), 0.0, delta, C0, k, 2)
    xi = g.xi_points
    r = np.hypot(xi[:, 0] / delta, xi[:, 1]).reshape(32, 32)
    expect = apply_multiplier(f, beta0(r / (C0 * 2.0**k)))
    np.testing.assert_allclose(out.values, expect.values, atol=1e-12)


def test_decoupling_ratio_trivial_cases(rng):
    g = GridSpec(1, 64, param_axis(3))
    F = random_field(g, rng)
    one = decoupling_ratio([F], 4)
    assert one.ratio_l2 == pytest.approx(1.0) and one.ratio_lp == pytest.approx(1.0)
    two = decoupling_ratio([F, F], 4)
    assert two.ratio_l2 == pytest.approx(np.sqrt(2))
    assert two.ratio_lp == pytest.approx(2 / 2**0.25)
    with pytest.raises(InvalidArgument):
        decoupling_ratio([], 2)


def test_decoupling_ratio_detects_leak(rng):
    g = GridSpec(2, 16, param_axis(3))
    F = random_field(g, rng)
    with pytest.raises(SupportViolation):
        decoupling_ratio([F], 4, blocks=[CoverBlock(0.0, 0.1, 1)])


@pytest.mark.parametrize("w", [0.0, 0.5, 3.0, 17.0])
def test_packet_profile_ft_quadrature(w):
    expect = quad(lambda x: (1 - x * x) ** 4 * np.cos(w * x), -1, 1, limit=200)[0]
    assert packet_profile_ft(w) == pytest.approx(expect, abs=1e-12)


def test_packet_field_matches_quadrature():
    blk = CoverBlock(0.2, 0.5, 1)
    # brute-force integral of the spectrum on a fine grid in R^2
    u = np.linspace(-3, 3, 601)
    Z = np.stack(np.meshgrid(u, u, indexing="ij"), -1).reshape(-1, 2)
    spec = packet_spectrum(Z, blk)
    dA = (u[1] - u[0]) ** 2
    for X in ([0.0, 0.0], [1.3, -0.7], [4.0, 2.0]):
        num = np.sum(spec * np.exp(1j * Z @ np.array(X))) * dA
        assert abs(packet_field(blk, np.array(X))[0] - num) < 1e-6 * max(1.0, abs(num))


def test_packet_decoupling_reproducible():
    a = packet_decoupling(0.25, 2, 6, 8, 64, np.random.default_rng(4))
    b = packet_decoupling(0.25, 2, 6, 8, 64, np.random.default_rng(4))
    np.testing.assert_array_equal(a, b)
    assert np.all(a > 0) and np.all(np.isfinite(a))


def test_packet_mc_agrees_with_grid_norms():
    # ||F_b||_p^p from the closed form vs a direct sum on a large periodic box (N = 1)
    blk = CoverBlock(0.0, 0.5, 1)
    p = 4
    L, n = 160.0, 801
    x = np.linspace(-L / 2, L / 2, n)
    X = np.stack(np.meshgrid(x, x, indexing="ij"), -1).reshape(-1, 2)
    grid_pp = np.sum(np.abs(packet_field(blk, X)) ** p) * (x[1] - x[0]) ** 2
    w = np.linspace(-200, 200, 400001)
    mass = np.trapezoid(np.abs(packet_profile_ft(w)) ** p, w)
    r = np.array([0.5, 0.25])
    closed = np.prod(r ** (p - 1)) * mass**2
    assert grid_pp == pytest.approx(closed, rel=2e-2)
