import numpy as np
import pytest
import scipy.linalg
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from procrustes_mads import manifold as mf
from procrustes_mads.exceptions import ContractError

S2 = 1.0 / np.sqrt(2.0)
E2 = np.array([[0.0, S2], [-S2, 0.0]])


def coeff_vectors(d, max_norm=3.0):
    m = mf.tangent_dim(d)
    return st.lists(st.floats(-max_norm, max_norm, allow_nan=False), min_size=m, max_size=m).map(np.array)


def orth_err(W):
    return np.linalg.norm(W.T @ W - np.eye(W.shape[0]))


# --------------------------------------------------------------------------- coefficients and bases


@pytest.mark.parametrize("d", [2, 3, 5])
def test_skew_roundtrip(d):
    c = np.random.default_rng(d).standard_normal(mf.tangent_dim(d))
    omega = mf.skew_from_coeffs(c, d)
    assert np.linalg.norm(omega + omega.T) <= 1e-12
    np.testing.assert_allclose(mf.coeffs_from_skew(omega), c, atol=1e-15)
    # coefficient dot product is the trace metric
    assert np.trace(omega.T @ omega) == pytest.approx(c @ c, rel=1e-14)


def test_canonical_basis_d2_identity():
    basis = mf.canonical_basis(np.eye(2))
    assert len(basis.vectors) == 1
    np.testing.assert_allclose(basis.vectors[0].ambient, E2, atol=1e-15)


def test_canonical_basis_d3_gram():
    basis = mf.canonical_basis(np.eye(3))
    assert len(basis.vectors) == 3
    G = np.array([[np.trace(x.skew.T @ y.skew) for y in basis.vectors] for x in basis.vectors])
    np.testing.assert_allclose(G, np.eye(3), atol=1e-12)


def test_canonical_basis_at_rotated_point():
    p = mf.rotation_2d(5 * np.pi / 8)
    v = mf.canonical_basis(p).vectors[0]
    np.testing.assert_allclose(v.ambient, p @ E2, atol=1e-15)
    # the trace metric of the ambient form p @ Omega equals that of Omega
    amb = v.ambient
    assert np.trace(amb.T @ amb) == pytest.approx(1.0, rel=1e-14)


# --------------------------------------------------------------------------- exponential map


def test_exp_zero_is_identity_map():
    p = mf.random_orthogonal(4, rng=0)
    np.testing.assert_array_equal(mf.exp_map(p, np.zeros(6)), p)


@pytest.mark.parametrize("alpha", [0.3, -1.2, 2.9])
def test_exp_d2_closed_form(alpha):
    # Omega = [[0, a], [-a, 0]] exponentiates to [[cos a, sin a], [-sin a, cos a]],
    # which is the package's rotation_2d(a)
    W = mf.exp_map(np.eye(2), np.array([np.sqrt(2.0) * alpha]))
    np.testing.assert_allclose(W, [[np.cos(alpha), np.sin(alpha)], [-np.sin(alpha), np.cos(alpha)]], atol=1e-15)
    np.testing.assert_allclose(W, mf.rotation_2d(alpha), atol=1e-15)


def test_exp_d3_half_turn():
    c = np.array([np.pi * np.sqrt(2.0), 0.0, 0.0])
    np.testing.assert_allclose(mf.exp_map(np.eye(3), c), np.diag([-1.0, -1.0, 1.0]), atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7])
def test_exp_matches_scipy_expm(d):
    rng = np.random.default_rng(10 + d)
    for _ in range(20):
        p = mf.random_orthogonal(d, sign=int(rng.choice([-1, 1])), rng=rng)
        c = rng.standard_normal(mf.tangent_dim(d)) * rng.uniform(0, 3)
        expected = p @ scipy.linalg.expm(mf.skew_from_coeffs(c, d))
        np.testing.assert_allclose(mf.exp_map(p, c), expected, atol=1e-13)


def test_exp_small_angle_branch():
    c = np.array([1e-9, -2e-9, 3e-9])
    expected = scipy.linalg.expm(mf.skew_from_coeffs(c, 3))
    np.testing.assert_allclose(mf.exp_map(np.eye(3), c), expected, atol=1e-17)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_exp_preserves_orthogonality_and_component(d):
    rng = np.random.default_rng(d)
    for _ in range(1000):
        sign = int(rng.choice([-1, 1]))
        p = mf.random_orthogonal(d, sign, rng)
        W = mf.exp_map(p, rng.standard_normal(mf.tangent_dim(d)) * 2.0)
        assert orth_err(W) <= 1e-10
        assert mf.component(W) == sign


def test_exp_accepts_tangent_vector():
    p = mf.random_orthogonal(3, rng=1)
    c = np.array([0.1, 0.2, -0.3])
    np.testing.assert_array_equal(mf.exp_map(p, mf.TangentVector(p, c)), mf.exp_map(p, c))
    with pytest.raises(ContractError):
        mf.exp_map(p, mf.TangentVector(np.eye(3), c))
    with pytest.raises(ContractError):
        mf.exp_map(p, np.zeros(2))


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3, allow_nan=False), st.floats(-3, 3, allow_nan=False))
def test_so2_is_a_one_parameter_group(a1, a2):
    def X(a):
        return np.array([np.sqrt(2.0) * a])

    lhs = mf.exp_map(np.eye(2), X(a1 + a2))
    rhs = mf.exp_map(np.eye(2), X(a1)) @ mf.exp_map(np.eye(2), X(a2))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(coeff_vectors(3), st.integers(0, 2**32 - 1))
def test_exp_property_d3(c, seed):
    p = mf.random_orthogonal(3, rng=seed)
    W = mf.exp_map(p, c)
    assert orth_err(W) <= 1e-10
    assert mf.component(W) == mf.component(p)


# --------------------------------------------------------------------------- QR retraction


def test_qr_zero():
    p = mf.random_orthogonal(3, sign=-1, rng=2)
    np.testing.assert_allclose(mf.qr_retract(p, np.zeros(3)), p, atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_qr_agrees_with_exp_to_second_order(d):
    rng = np.random.default_rng(20 + d)
    for _ in range(50):
        p = mf.random_orthogonal(d, rng=rng)
        c = rng.standard_normal(mf.tangent_dim(d))
        c /= np.linalg.norm(c)
        t = 1e-4
        assert np.linalg.norm(mf.qr_retract(p, t * c) - mf.exp_map(p, t * c)) <= 1e-7


def test_qr_d2_is_exp_with_reparametrized_angle():
    # I + a J has Q factor R(atan a): the QR curve traces the same circle as exp,
    # at angle atan(a) instead of a
    for a in [0.01, 0.5, 2.0, -1.3]:
        p = mf.rotation_2d(0.7)
        qr = mf.qr_retract(p, np.array([np.sqrt(2.0) * a]))
        np.testing.assert_allclose(qr, mf.exp_map(p, np.array([np.sqrt(2.0) * np.arctan(a)])), atol=1e-14)


def test_qr_d2_differs_from_exp_beyond_first_order():
    p = np.eye(2)
    c = np.array([np.sqrt(2.0) * 0.5])
    assert np.linalg.norm(mf.qr_retract(p, c) - mf.exp_map(p, c)) > 1e-2


@pytest.mark.parametrize("d", [2, 3, 5])
def test_retraction_derivative_is_identity(d):
    rng = np.random.default_rng(30 + d)
    h = 1e-5
    for _ in range(50):
        p = mf.random_orthogonal(d, sign=int(rng.choice([-1, 1])), rng=rng)
        c = rng.standard_normal(mf.tangent_dim(d))
        c /= np.linalg.norm(c)
        ambient = mf.TangentVector(p, c).ambient
        for retract in (mf.qr_retract, mf.exp_map):
            fd = (retract(p, h * c) - retract(p, -h * c)) / (2 * h)
            assert np.abs(fd - ambient).max() <= 1e-6


@pytest.mark.parametrize("d", [2, 3, 5])
def test_qr_preserves_orthogonality_and_component(d):
    rng = np.random.default_rng(40 + d)
    for _ in range(200):
        sign = int(rng.choice([-1, 1]))
        p = mf.random_orthogonal(d, sign, rng)
        W = mf.qr_retract(p, 3 * rng.standard_normal(mf.tangent_dim(d)))
        assert orth_err(W) <= 1e-10
        assert mf.component(W) == sign


def test_retract_dispatch():
    p = mf.random_orthogonal(3, rng=3)
    c = np.array([0.2, 0.1, 0.0])
    np.testing.assert_array_equal(mf.retract(p, c), mf.exp_map(p, c))
    np.testing.assert_array_equal(mf.retract(p, c, "qr"), mf.qr_retract(p, c))
    q = mf.random_orthogonal(9, rng=3)
    c9 = np.full(36, 0.01)
    np.testing.assert_array_equal(mf.retract(q, c9), mf.qr_retract(q, c9))
    with pytest.raises(ContractError):
        mf.retract(p, c, "cayley")


# --------------------------------------------------------------------------- transport


def test_transport_to_same_point():
    p = mf.random_orthogonal(3, rng=4)
    b = mf.canonical_basis(p)
    t = mf.transport_basis(b, p)
    np.testing.assert_array_equal(t.coeffs, b.coeffs)
    np.testing.assert_array_equal(t.base, p)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_transport_preserves_gram(d):
    rng = np.random.default_rng(50 + d)
    for _ in range(100):
        sign = int(rng.choice([-1, 1]))
        p, q = mf.random_orthogonal(d, sign, rng), mf.random_orthogonal(d, sign, rng)
        b = mf.canonical_basis(p)
        t = mf.transport_basis(b, q)
        amb = [v.ambient for v in t.vectors]
        G = np.array([[np.trace(x.T @ y) for y in amb] for x in amb])
        np.testing.assert_allclose(G, np.eye(mf.tangent_dim(d)), atol=1e-10)
        np.testing.assert_array_equal(t.gram(), b.gram())


def test_transport_d2_ambient():
    q = mf.rotation_2d(1.1)
    t = mf.transport_basis(mf.canonical_basis(np.eye(2)), q)
    np.testing.assert_allclose(t.vectors[0].ambient, q @ E2, atol=1e-15)


def test_transport_rejects_other_component():
    b = mf.canonical_basis(np.eye(3))
    with pytest.raises(ContractError):
        mf.transport_basis(b, mf.canonical_point(3, -1))
    with pytest.raises(ContractError):
        mf.transport_basis(b, np.eye(2))


# --------------------------------------------------------------------------- sampling and 2-D helpers


def test_random_orthogonal_d1():
    np.testing.assert_array_equal(mf.random_orthogonal(1, 1, rng=0), [[1.0]])
    np.testing.assert_array_equal(mf.random_orthogonal(1, -1, rng=0), [[-1.0]])


@pytest.mark.parametrize("d", [1, 2, 3, 6])
@pytest.mark.parametrize("sign", [1, -1])
def test_random_orthogonal_invariants(d, sign):
    rng = np.random.default_rng(d)
    for _ in range(50):
        W = mf.random_orthogonal(d, sign, rng)
        assert orth_err(W) <= 1e-10
        assert np.sign(np.linalg.det(W)) == sign


def test_random_rotation_angles_are_uniform():
    rng = np.random.default_rng(123)
    angles = [mf.rotation_angle(mf.random_orthogonal(2, 1, rng)) for _ in range(10_000)]
    res = scipy.stats.kstest(angles, scipy.stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf)
    assert res.pvalue > 0.01


def test_random_orthogonal_rejects_bad_args():
    with pytest.raises(ContractError):
        mf.random_orthogonal(0)
    with pytest.raises(ContractError):
        mf.random_orthogonal(2, sign=0)


def test_rotation_2d_examples():
    np.testing.assert_array_equal(mf.rotation_2d(0.0), np.eye(2))
    np.testing.assert_allclose(mf.rotation_2d(np.pi / 2), [[0.0, 1.0], [-1.0, 0.0]], atol=1e-16)
    for a in np.linspace(-3, 3, 13):
        np.testing.assert_allclose(mf.rotation_2d(a) @ mf.rotation_2d(-a), np.eye(2), atol=1e-15)


def test_rotation_angle_inverts_rotation_2d():
    for a in np.linspace(-3.1, 3.1, 25):
        assert mf.rotation_angle(mf.rotation_2d(a)) == pytest.approx(a, abs=1e-14)
    with pytest.raises(ContractError):
        mf.rotation_angle(np.diag([1.0, -1.0]))


def test_check_orthogonal_and_canonical_point():
    with pytest.raises(ContractError):
        mf.check_orthogonal(np.ones((2, 2)))
    with pytest.raises(ContractError):
        mf.check_orthogonal(np.eye(3)[:2])
    assert mf.component(mf.canonical_point(4, -1)) == -1
    assert mf.component(mf.canonical_point(4, 1)) == 1
    with pytest.raises(ContractError):
        mf.canonical_point(3, 2)


# --------------------------------------------------------------------------- injectivity radius


def test_injectivity_radius_constant():
    assert mf.injectivity_radius(2) == np.pi
    assert {mf.injectivity_radius(d) for d in range(2, 12)} == {np.pi}
    with pytest.raises(ContractError):
        mf.injectivity_radius(1)


def test_exp_injective_within_radius_d3():
    # inside the radius the principal logarithm inverts exp, so exp is one-to-one there
    rng = np.random.default_rng(7)
    for _ in range(500):
        c = rng.standard_normal(3)
        c *= rng.uniform(0, np.pi) / np.linalg.norm(c)
        W = mf.exp_map(np.eye(3), c)
        back = np.real(scipy.linalg.logm(W))
        np.testing.assert_allclose(mf.coeffs_from_skew(back), c, atol=1e-8)
