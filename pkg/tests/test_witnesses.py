import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xray_sharp.curves import LiftedCurve, moment_curve
from xray_sharp.errors import GridTooCoarse, InvalidArgument
from xray_sharp.fields import GridSpec, fourier_support_fraction, lp_norm, param_axis, time_axis
from xray_sharp.harness.fit import fit_decay
from xray_sharp.witnesses import (
    BandLimitedProfile,
    RandomPhaseWitness,
    alpha_of_p,
    alpha_tilde_of_p,
    exponent_table,
    finite_type_predicted_slopes,
    focusing_predicted_slopes,
    kernel_direction,
    measure_forward_norms,
    modulated_profile,
    random_phase_predicted_slope,
    taylor_order,
    witness_csv_rows,
    witness_finite_type,
    witness_focusing,
    witness_random_phase,
)
from xray_sharp.xray import default_cutoffs

CUT = default_cutoffs()


@pytest.mark.parametrize(
    "d, p, alpha, alpha_t",
    [
        (2, 1.2, 1 - 1 / 1.2, np.nan),
        (2, 2.0, 0.25, 0.5),
        (2, 4.0, 0.125, 0.25),
        (3, 2.0, 1 / 6, 1 / 3),
        (3, 4.0, 1 / 12, 0.25),
        (3, 6.0, 1 / 18, 1 / 6),
    ],
)
def test_exponent_values(d, p, alpha, alpha_t):
    assert alpha_of_p(p, d) == pytest.approx(alpha, abs=1e-15)
    if np.isnan(alpha_t):
        assert np.isnan(alpha_tilde_of_p(p, d))
    else:
        assert alpha_tilde_of_p(p, d) == pytest.approx(alpha_t, abs=1e-15)


def test_exponent_table_fields():
    tab = exponent_table(3, 2.0)
    assert tab.L == 3 and tab.p_d == pytest.approx(1.2)
    assert tab.alpha == pytest.approx(1 / 6)
    assert tab.necessary == pytest.approx(1 / 6)
    assert exponent_table(2, 4.0, L=5).necessary == pytest.approx(1 / 20)
    with pytest.raises(InvalidArgument):
        exponent_table(3, 2.0, L=2)
    with pytest.raises(InvalidArgument):
        exponent_table(1, 2.0)


@given(st.integers(2, 6), st.floats(1.0, 20.0))
def test_alpha_bounded_by_necessary(d, p):
    tab = exponent_table(d, p)
    assert tab.alpha <= tab.necessary + 1e-15
    assert tab.alpha > 0 or p == 1.0


def test_finite_type_123_matches_moment_exponent():
    for p in (2.0, 3.0, 6.0):
        assert finite_type_predicted_slopes((1, 2, 3), p)["critical_alpha"] == pytest.approx(alpha_of_p(p, 3))


def test_predicted_slope_formulas():
    assert focusing_predicted_slopes(2, 4.0)["norm_f"] == -0.75
    assert focusing_predicted_slopes(2, 4.0)["norm_Rf"] == -1.5
    assert random_phase_predicted_slope(2, 4.0) == 1.0
    assert finite_type_predicted_slopes((1, 2, 4), 2.0)["norm_f"] == -7 / 8


# ---- profiles ----------------------------------------------------------------


def test_band_limited_profile_lower_bound():
    prof = BandLimitedProfile(0.2, 3.0)
    u = np.linspace(-3, 3, 301)
    assert prof(u).min() >= 1.0 - 1e-12
    assert prof.fourier(0.21) == 0.0
    with pytest.raises(InvalidArgument):
        BandLimitedProfile(1.0, 2.0)


def test_profile_fourier_transform_numeric():
    prof = BandLimitedProfile(0.5, 1.0)
    u = np.linspace(-400, 400, 80001)
    for w in (0.0, 0.3):
        num = np.trapezoid(prof(u) * np.cos(w * u), u)
        assert num == pytest.approx(prof.fourier(w), rel=1e-6)


# ---- focusing ------------------------------------------------------------------


@pytest.fixture(scope="module")
def focus_grid():
    return GridSpec(2, 128, time_axis(), 2.0)


@pytest.mark.parametrize("lam", [8, 16])
def test_focusing_spectrum_in_band(focus_grid, lam):
    f, _ = witness_focusing(lam, focus_grid, moment_curve(2), CUT)
    fr = focus_grid.freq_axis / lam
    band = (fr >= 11 / 8 - 1e-12) & (fr <= 25 / 8 + 1e-12)
    mask = band[:, None] & band[None, :]
    tol = 1e-10 * np.abs(f.as_fourier().values).max()
    assert fourier_support_fraction(f, mask, tol=tol) == 1.0


def test_focusing_is_large_on_core(focus_grid):
    f, _ = witness_focusing(16, focus_grid, moment_curve(2), CUT)
    vals = np.abs(f.as_physical().values)
    x = focus_grid.x_axis
    core = np.abs(x) <= 1 / 16
    mid = f.grid.n_aux // 2
    assert vals[np.ix_(core, core)][..., mid].min() >= 1.0 - 1e-9


def test_focusing_grid_guard():
    with pytest.raises(GridTooCoarse):
        witness_focusing(64, GridSpec(2, 128, time_axis(), 2.0), moment_curve(2), CUT)
    with pytest.raises(InvalidArgument):
        witness_focusing(12, GridSpec(2, 128, time_axis(), 2.0), moment_curve(2), CUT)


def test_measure_norm_f_matches_direct(focus_grid):
    f, _ = witness_focusing(8, focus_grid, moment_curve(2), CUT)
    m = measure_forward_norms(f, moment_curve(2), CUT, param_axis(17), [2.0, 4.0])
    for p in (2.0, 4.0):
        assert m["norm_f"][p] == pytest.approx(lp_norm(f, p), rel=1e-12)
        assert m["norm_Rf"][p] > 0


# ---- random phase ----------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3])
def test_random_phase_directions_are_orthogonal(d):
    w = witness_random_phase(8, 0.25, 0, moment_curve(d))
    lifted = LiftedCurve(moment_curve(d))
    for s, Xi in zip(w.s_nodes[::5], w.Xi[::5]):
        assert np.linalg.norm(Xi) == pytest.approx(1.0)
        for j in range(d):
            assert abs(lifted.eval_deriv(s, j) @ Xi) < 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_random_phase_taylor_order(d):
    w = witness_random_phase(8, 0.25, 0, moment_curve(d))
    lifted = LiftedCurve(moment_curve(d))
    for s, Xi in zip(w.s_nodes[::7], w.Xi[::7]):
        assert abs(taylor_order(lifted, s, Xi) - d) < 0.1


def test_kernel_direction_sign_convention():
    v = kernel_direction(LiftedCurve(moment_curve(2)), 0.0, 2)
    np.testing.assert_allclose(v, [0.0, 0.0, 1.0], atol=1e-14)


def test_random_phase_node_spacing():
    w = witness_random_phase(64, 0.25, 0, moment_curve(2))
    np.testing.assert_allclose(np.diff(w.s_nodes), 0.25 * 64**-0.5)
    assert w.s_nodes.min() >= -0.8 and w.s_nodes.max() <= 0.8


def test_random_phase_draws_reproducible():
    w = witness_random_phase(8, 0.25, 5, moment_curve(2))
    np.testing.assert_array_equal(w.draws(4), w.draws(4))
    other = witness_random_phase(8, 0.25, 6, moment_curve(2))
    assert not np.array_equal(w.draws(4), other.draws(4))


def _h_numeric(prof, p, w):
    u = np.linspace(-400, 400, 40001)
    return np.trapezoid(prof(u) ** p * np.cos(w * u), u)


def test_random_phase_moments_against_quadrature():
    base = witness_random_phase(8, 0.25, 0, moment_curve(2))
    prof = base.profile
    Xi = base.Xi[:2]
    w = RandomPhaseWitness(8, 2, base.s_nodes[:2], Xi, prof, 0.25, 0)
    V = 8 * (Xi[0] - Xi[1])
    h2 = [_h_numeric(prof, 2, v) for v in (0.0, *V)]
    single = h2[0] ** 3
    cross = np.prod(h2[1:])
    got = w.norms_pp(2, np.array([[1.0, 1.0], [1.0, -1.0]]))
    np.testing.assert_allclose(got, [2 * single + 2 * cross, 2 * single - 2 * cross], rtol=1e-6)
    one = RandomPhaseWitness(8, 2, base.s_nodes[:1], Xi[:1], prof, 0.25, 0)
    assert one.norms_pp(4, np.ones((1, 1)))[0] == pytest.approx(_h_numeric(prof, 4, 0.0) ** 3, rel=1e-6)
    with pytest.raises(InvalidArgument):
        one.norms_pp(3, np.ones((1, 1)))


def test_random_phase_value_at_origin():
    # every wave has phase 1 at X = 0
    base = witness_random_phase(8, 0.25, 0, moment_curve(2))
    X = np.zeros((3, 3))
    signs = base.draws(1)[0]
    vals = base(X, signs)
    assert vals.shape == (3,)
    assert abs(vals[0]) == pytest.approx(abs(np.prod(base.profile(X[0])) * signs.sum()))


# ---- finite type --------------------------------------------------------------------


def test_finite_type_focusing_minimum_stable():
    mins = [witness_finite_type(lam, (1, 2, 4), None, CUT).focusing_minimum() for lam in (8, 32, 128)]
    assert min(mins) > 0.05
    assert max(mins) / min(mins) < 2.0


def test_finite_type_norm_slope():
    lams = [8, 16, 32, 64]
    pts = [(np.log2(l), witness_finite_type(l, (1, 2, 4), None, CUT).norm_p(2.0)) for l in lams]
    fit = fit_decay(pts)
    assert abs(fit.slope - finite_type_predicted_slopes((1, 2, 4), 2.0)["norm_f"]) < 0.1


def test_finite_type_guards():
    with pytest.raises(GridTooCoarse):
        witness_finite_type(64, (1, 2), GridSpec(2, 128, time_axis()), CUT)
    w = witness_finite_type(16, (1, 2, 4), None, CUT)
    np.testing.assert_allclose(w.scales(), [2.0, 4.0, 16.0])


def test_modulated_profile_band():
    eta, carrier = modulated_profile()
    assert carrier - eta.eps == 11 / 8 and carrier + eta.eps == 25 / 8


def test_witness_csv_rows():
    text = witness_csv_rows([{"family": "focusing", "lambda": 8, "p": 2.0, "norm_f": 0.5}])
    lines = text.splitlines()
    assert lines[0].split(",")[:3] == ["family", "lambda", "p"]
    assert lines[1] == "focusing,8,2.0,,0.5,,,"
