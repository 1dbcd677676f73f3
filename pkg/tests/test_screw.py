import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import rk4_exp
from soro_spt.screw import (Pose, ad_small, adjoint_of, exp_adjoint, exp_se3, hat, tangent_exp,
                            tangent_exp_dot, vee)

finite = st.floats(-3, 3, allow_nan=False)
screws = arrays(float, 6, elements=finite)
lengths = st.floats(0.0, 1.5)


def expm(xi, s):
    from scipy.linalg import expm as _e
    return _e(s * hat(xi))


def test_hat_vee_examples():
    assert np.array_equal(hat([0, 0, 1, 0, 0, 0])[:3, :3], [[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    assert np.array_equal(hat([0, 0, 0, 1, 2, 3])[:3, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        vee(np.eye(4))


@given(screws)
def test_vee_inverts_hat(x):
    assert np.array_equal(vee(hat(x)), x)


def test_exp_examples():
    g = exp_se3([0, 0, 0, 1, 0, 0], 2.0)
    assert np.allclose(g.rotation, np.eye(3)) and np.allclose(g.position, [2, 0, 0])
    g = exp_se3([0, 0, np.pi / 2, 0, 0, 0], 1.0)
    assert np.allclose(g.rotation, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)
    # constant-curvature arc: unit stretch, curvature kappa about z, length s
    k, s = 2.0, 0.7
    g = exp_se3([0, 0, k, 1, 0, 0], s)
    assert np.allclose(g.position, [np.sin(k * s) / k, (1 - np.cos(k * s)) / k, 0], atol=1e-14)
    with pytest.raises(ValueError):
        exp_se3(np.zeros(6), -1.0)
    with pytest.raises(FloatingPointError):
        exp_se3([np.nan, 0, 0, 0, 0, 0], 1.0)


@given(screws, lengths)
def test_exp_matches_rk4(xi, s):
    assert np.abs(exp_se3(xi, s).as_matrix() - rk4_exp(xi, s)).max() <= 1e-8


@given(screws, lengths)
def test_exp_is_a_rigid_motion(xi, s):
    exp_se3(xi, s).validate()


def test_small_angle_branch_is_continuous():
    base = np.array([1.0, -0.5, 0.3, 0.2, 1.0, -0.4])
    for scale in (1e-5, 1.01e-6, 0.99e-6, 1e-8):
        xi = base.copy()
        xi[:3] *= scale
        assert np.abs(exp_se3(xi, 1.0).as_matrix() - expm(xi, 1.0)).max() < 1e-14


@given(screws, lengths, lengths)
def test_one_parameter_subgroup(xi, a, b):
    lhs = (exp_se3(xi, a) @ exp_se3(xi, b)).as_matrix()
    assert np.abs(lhs - exp_se3(xi, a + b).as_matrix()).max() <= 1e-9 * max(1.0, np.abs(lhs).max())


@given(screws, screws, lengths, lengths)
def test_adjoint_homomorphism(x, y, a, b):
    g, h = exp_se3(x, a), exp_se3(y, b)
    lhs = adjoint_of(g @ h)
    rhs = adjoint_of(g) @ adjoint_of(h)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(lhs).max())


@given(screws, lengths)
def test_adjoint_inverse(xi, s):
    g = exp_se3(xi, s)
    assert np.allclose(adjoint_of(g, inverse=True), np.linalg.inv(adjoint_of(g)), atol=1e-10)
    assert np.allclose(adjoint_of(g.inverse()), adjoint_of(g, inverse=True), atol=1e-12)


@given(screws, st.floats(-1.5, 1.5))
def test_exp_adjoint_matches_adjoint_of_exp(xi, t):
    g = exp_se3(xi, abs(t))
    ref = adjoint_of(g) if t >= 0 else adjoint_of(g, inverse=True)
    assert np.abs(exp_adjoint(xi, t) - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


@given(screws, screws)
def test_ad_is_the_bracket(x, y):
    lhs = hat(ad_small(x) @ y)
    rhs = hat(x) @ hat(y) - hat(y) @ hat(x)
    assert np.allclose(lhs, rhs, atol=1e-12)
    assert np.array_equal(ad_small(x, co=True), -ad_small(x).T)


def test_adjoint_of_pure_translation():
    g = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
    Ad = adjoint_of(g)
    # a unit rotation about x seen from a frame shifted along z gains a linear part
    assert np.allclose(Ad @ [1, 0, 0, 0, 0, 0], [1, 0, 0, 0, 1, 0])


@given(screws, screws, st.floats(0.05, 1.5))
def test_tangent_matches_finite_difference(xi, d, s):
    h = 1e-6
    g = exp_se3(xi, s).as_matrix()
    dg = (exp_se3(xi + h * d, s).as_matrix() - exp_se3(xi - h * d, s).as_matrix()) / (2 * h)
    fd = vee(np.linalg.inv(g) @ dg, tol=1e-4)
    an = tangent_exp(xi, s) @ d
    assert np.linalg.norm(an - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))


@given(screws, screws, st.floats(0.05, 1.5))
def test_tangent_dot_matches_finite_difference(xi, xd, s):
    h = 1e-6
    fd = (tangent_exp(xi + h * xd, s) - tangent_exp(xi - h * xd, s)) / (2 * h)
    assert np.abs(tangent_exp_dot(xi, xd, s) - fd).max() <= 1e-6 * max(1.0, np.abs(fd).max())


def test_tangent_at_zero_length_is_zero():
    assert np.array_equal(tangent_exp(np.ones(6), 0.0), np.zeros((6, 6)))
    assert np.allclose(tangent_exp(np.zeros(6), 0.8), 0.8 * np.eye(6))
