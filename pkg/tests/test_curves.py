import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xray_sharp.curves import (
    LiftedCurve,
    RegularityBound,
    check_nondegenerate,
    curve_bound,
    curve_from_callable,
    finite_type_curve,
    make_curve,
    max_type,
    moment_curve,
    perturbed_moment_curve,
    vol_parallelepiped,
    wronskian_det,
)
from xray_sharp.errors import InvalidArgument, TypeUndetermined


@pytest.mark.parametrize("j", [1, 2, 3])
def test_moment_derivatives_at_zero_are_basis(j):
    np.testing.assert_array_equal(moment_curve(3).eval_deriv(0.0, j), np.eye(3)[j - 1])


def test_moment_curve_examples():
    np.testing.assert_allclose(moment_curve(2).eval_deriv(0.5, 2), [0.0, 1.0])
    np.testing.assert_array_equal(moment_curve(4).eval_deriv(0.37, 5), np.zeros(4))
    with pytest.raises(InvalidArgument):
        moment_curve(1)


def test_moment_values_match_taylor_formula():
    s = np.linspace(-1, 1, 11)
    from math import factorial

    expect = np.stack([s**n / factorial(n) for n in range(1, 5)], axis=-1)
    np.testing.assert_allclose(moment_curve(4)(s), expect, rtol=0, atol=1e-15)


def test_finite_type_reduces_to_moment():
    s = np.linspace(-1, 1, 7)
    for j in range(5):
        np.testing.assert_allclose(finite_type_curve((1, 2, 3)).eval_deriv(s, j), moment_curve(3).eval_deriv(s, j), atol=1e-14)


def test_finite_type_third_derivative_vanishes():
    np.testing.assert_array_equal(finite_type_curve((1, 2, 4)).eval_deriv(0.0, 3), np.zeros(3))


@pytest.mark.parametrize("bad", [(2, 1, 3), (1, 1, 2), (0, 1, 2)])
def test_finite_type_rejects_bad_exponents(bad):
    with pytest.raises(InvalidArgument):
        finite_type_curve(bad)


def _rank_type_oracle(curve, interval, n=101, tol=1e-8):
    # independent brute force: smallest l with rank d, via numpy matrix_rank
    worst = 0
    for s in np.linspace(*interval, n):
        for ell in range(1, 3 * curve.dim + 2):
            V = np.stack([curve.eval_deriv(s, j) for j in range(1, ell + 1)])
            sv = np.linalg.svd(V, compute_uv=False)
            if np.sum(sv > tol * sv[0]) == curve.dim:
                worst = max(worst, ell)
                break
    return worst


@pytest.mark.parametrize("exps,L", [((1, 2, 4), 4), ((2, 3, 4), 4), ((1, 2, 3), 3)])
def test_max_type_matches_rank_oracle(exps, L):
    c = finite_type_curve(exps)
    assert max_type(c) == L == _rank_type_oracle(c, (-0.5, 0.5))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_max_type_moment(d):
    assert max_type(moment_curve(d)) == d


def test_max_type_undetermined():
    flat = curve_from_callable(lambda s: np.stack([s, np.zeros_like(s)], axis=-1), 2)
    with pytest.raises(TypeUndetermined):
        max_type(flat, cap=3)


def test_vol_examples():
    e = np.eye(3)
    assert vol_parallelepiped([e[0], e[1]]) == pytest.approx(1.0)
    assert vol_parallelepiped([e[0], 2 * e[0]]) == pytest.approx(0.0, abs=1e-12)
    c = moment_curve(3)
    V = np.stack([c.eval_deriv(0.3, j) for j in (1, 2, 3)])
    assert vol_parallelepiped(V) == pytest.approx(abs(np.linalg.det(V)), rel=1e-12)
    assert vol_parallelepiped(V) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(InvalidArgument):
        vol_parallelepiped(np.eye(4)[:, :3])


vecs = st.lists(st.lists(st.floats(-10, 10), min_size=4, max_size=4), min_size=1, max_size=4)


@given(vecs, st.randoms(use_true_random=False))
def test_vol_permutation_invariant_and_hadamard(v, r):
    V = np.array(v)
    perm = list(range(len(V)))
    r.shuffle(perm)
    a, b = vol_parallelepiped(V), vol_parallelepiped(V[perm])
    assert abs(a - b) <= 1e-12 * max(1.0, a) + 1e-9
    assert a <= np.prod(np.linalg.norm(V, axis=1)) * (1 + 1e-9) + 1e-9


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_wronskian_moment_is_one(d):
    for s in np.linspace(-1, 1, 9):
        assert wronskian_det(moment_curve(d), s) == pytest.approx(1.0, abs=1e-12)


def test_wronskian_finite_type():
    c = finite_type_curve((1, 2, 4))
    assert wronskian_det(c, 0.0) == 0.0
    fd = curve_from_callable(c, 3)
    assert wronskian_det(c, 0.5) == pytest.approx(wronskian_det(fd, 0.5), abs=1e-6)


def test_check_nondegenerate_examples():
    ok, m = check_nondegenerate(moment_curve(3))
    assert ok and m == pytest.approx(1.0)
    ok, m = check_nondegenerate(finite_type_curve((1, 2, 4)))
    assert not ok and m == 0.0
    assert check_nondegenerate(moment_curve(5))[0]
    with pytest.raises(InvalidArgument):
        check_nondegenerate(moment_curve(2), n_samples=1)


def test_curve_bound_examples():
    c = moment_curve(2)
    s = np.linspace(-1, 1, 201)
    total = sum(np.linalg.norm(c.eval_deriv(s, j), axis=-1) for j in range(8))
    assert curve_bound(c).B == pytest.approx(100 * total.max())
    assert curve_bound(c).B >= 1
    assert curve_bound(c.scaled(2.0)).B == pytest.approx(2 * curve_bound(c).B)
    with pytest.raises(InvalidArgument):
        RegularityBound(0.5)


@pytest.mark.parametrize("j", [0, 1, 2, 3, 4])
def test_lifted_curve_first_coordinate(j):
    G = LiftedCurve(moment_curve(3)).eval_deriv(np.linspace(-1, 1, 5), j)
    assert np.all(G[..., 0] == (1.0 if j == 0 else 0.0))


@pytest.mark.parametrize("curve", [moment_curve(3), perturbed_moment_curve(3, 0.05), finite_type_curve((1, 2, 4))], ids=lambda c: c.label)
@pytest.mark.parametrize("j", [0, 1, 2])
def test_centered_differences_converge_quadratically(curve, j):
    s = 0.31
    errs = []
    for h in (1e-2, 5e-3):
        fd = (curve.eval_deriv(s + h, j) - curve.eval_deriv(s - h, j)) / (2 * h)
        errs.append(np.linalg.norm(fd - curve.eval_deriv(s, j + 1)))
    if errs[0] > 1e-12:
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_callable_curve_matches_exact():
    c = perturbed_moment_curve(3, 0.05)
    fd = curve_from_callable(c, 3)
    for j in (1, 2, 3):
        np.testing.assert_allclose(fd.eval_deriv(0.2, j), c.eval_deriv(0.2, j), atol=1e-7)


def test_registry():
    assert make_curve("moment", d=3).dim == 3
    assert make_curve("finite_type", exponents=(1, 2, 4)).label.startswith("finite_type")
    with pytest.raises(InvalidArgument):
        make_curve("helix", d=3)


def test_increment_matches_difference():
    c = perturbed_moment_curve(3, 0.05)
    s, s0 = np.array([0.3, -0.2]), np.array([0.1, 0.5])
    np.testing.assert_allclose(c.increment(s, s0), c(s) - c(s0), atol=1e-15)
