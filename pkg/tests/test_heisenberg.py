from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgegrowth import group as grp
from edgegrowth import heisenberg as hb
from edgegrowth.heisenberg import HeisenbergPoint

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def exact_points(tag_dim=4, n=2):
    coords = st.lists(rationals, min_size=tag_dim * (n - 1) + tag_dim - 1,
                      max_size=tag_dim * (n - 1) + tag_dim - 1)
    return coords.map(lambda c: HeisenbergPoint.from_real(np.array(c, dtype=object), "H", n))


def hpoint(X, Z, d=4):
    X = np.array(X, dtype=float).reshape(-1, d)
    return HeisenbergPoint(X, np.array(Z, dtype=float))


def test_dimensions():
    assert [hb.homogeneous_dimension(f, 2) for f in "RCH"] == [1, 4, 10]
    assert hb.homogeneous_dimension("H", 3) == 14          # 4n + 2
    assert hb.homogeneous_dimension("C", 5) == 10          # 2n
    assert hb.homogeneous_dimension("R", 6) == 5           # n - 1
    assert [hb.haar_weight(f) for f in "HCR"] == [8.0, 2.0, 1.0]


def test_real_part_of_z_rejected():
    with pytest.raises(ValueError):
        HeisenbergPoint(np.zeros((1, 2)), np.array([1.0, 0.0]))


def test_bracket_examples():
    one = hpoint([1, 0, 0, 0], [0, 0, 0, 0])
    i = hpoint([0, 1, 0, 0], [0, 0, 0, 0])
    assert np.array_equal(hb.bracket(one, i).Z, [0, 1, 0, 0])
    assert np.array_equal(hb.bracket(one, one).Z, np.zeros(4))
    central = hpoint([0, 0, 0, 0], [0, 2, -1, 3])
    assert np.array_equal(hb.bracket(one, central).Z, np.zeros(4))


def test_group_law_example_against_matrices():
    p = hpoint([1, 0, 0, 0], [0, 0, 0, 0])
    q = hpoint([0, 1, 0, 0], [0, 0, 0, 0])
    r = hb.group_law(p, q)
    # frozen from the product of the two exponential matrices
    assert np.array_equal(r.X, [[1, 1, 0, 0]]) and np.array_equal(r.Z, [0, 0.5, 0, 0])
    prod = hb.exp_to_group(p) @ hb.exp_to_group(q)
    assert np.allclose(prod.entries, hb.exp_matrix(r), atol=1e-15)


@given(exact_points(), exact_points(), exact_points())
def test_group_law_associative_exact(p, q, r):
    lhs = hb.group_law(hb.group_law(p, q), r)
    rhs = hb.group_law(p, hb.group_law(q, r))
    assert np.array_equal(lhs.X, rhs.X) and np.array_equal(lhs.Z, rhs.Z)
    e = hb.group_law(p, -p)
    assert all(v == 0 for v in e.to_real())


@given(exact_points(), st.integers(-3, 3))
def test_gauge_homogeneity_exact(p, k):
    # e^t = 2^k keeps everything rational; compare fourth powers exactly
    s = Fraction(2) ** k
    q = HeisenbergPoint(p.X * s, p.Z * s * s)
    g4 = lambda x: x.norm_x2() ** 2 / 16 + x.abs_z2()
    assert g4(q) == s ** 4 * g4(p)


def test_gauge_examples():
    Z = np.array([0, 0.3, -0.4, 0])
    assert hb.gauge(hpoint([0, 0, 0, 0], Z)) == pytest.approx(0.5 ** 0.5)
    assert hb.gauge(hpoint([3, 0, 4, 0], np.zeros(4))) == pytest.approx(2.5)
    assert hb.gauge(hb.origin("H", 2)) == 0


def test_dilation(rng):
    p = hb.random_points("H", 3, 50, rng)
    q = hb.dilation(hb.dilation(p, 0.4), -1.1)
    r = hb.dilation(p, -0.7)
    assert np.allclose(q.X, r.X) and np.allclose(q.Z, r.Z)
    assert np.allclose(hb.gauge(hb.dilation(p, 0.8)), np.exp(0.8) * hb.gauge(p))
    assert np.allclose(hb.dilation(p, 0.0).X, p.X)


@pytest.mark.parametrize("n", [2, 3])
def test_exp_in_group_and_intertwines(field, n, rng):
    p = hb.random_points(field, n, 1000, rng)
    q = hb.random_points(field, n, 1000, rng)
    Mp, Mq, Mpq = hb.exp_matrix(p), hb.exp_matrix(q), hb.exp_matrix(hb.group_law(p, q))
    for k in range(0, 1000, 50):
        g = grp.GroupElement(p.tag, n, Mp[k])
        assert grp.is_in_group(g)
        prod = g @ grp.GroupElement(p.tag, n, Mq[k])
        assert np.abs(prod.entries - Mpq[k]).max() < 1e-10
    assert np.array_equal(hb.exp_matrix(hb.origin(field, n)), grp.identity(field, n).entries)


def test_ad_a_minus_t_is_dilation(field, rng):
    p = hb.random_points(field, 3, 20, rng)
    for k in range(20):
        t = rng.uniform(-2, 2)
        g = hb.exp_to_group(p[k])
        conj = grp.a_t(-t, field, 3) @ g @ grp.a_t(t, field, 3)
        target = hb.exp_to_group(hb.dilation(p[k], t))
        assert np.abs(conj.entries - target.entries).max() < 1e-10 * max(1, np.exp(2 * abs(t)))


def test_horizontal_derivative_examples():
    tag, n = "H", 2
    p = hpoint([1, 0, 0, 0], [0, 0, 0, 0])
    f = lambda q: q.norm_x2()
    assert hb.horizontal_derivative(f, 0, p) == pytest.approx(2.0, abs=1e-9)
    assert hb.horizontal_derivative(lambda q: np.ones(q.batch_shape), 2, p) == 0
    zc = lambda q: q.Z[..., 1]
    assert abs(hb.horizontal_derivative(zc, 1, hb.origin(tag, n))) < 1e-14
    with pytest.raises(IndexError):
        hb.horizontal_derivative(f, 4, p)


def test_horizontal_derivative_is_group_derivative(field, rng):
    """E_j f(p) = d/ds f(p . s e_j), compared with a centered difference along the group curve."""
    p = hb.random_points(field, 3, 1, rng)[0]
    f = lambda q: np.sin(q.to_real() @ np.arange(1, q.to_real().shape[-1] + 1) / 7) \
        * np.cos(hb.gauge(q))
    h = 1e-5
    for j, e in enumerate(hb.horizontal_basis(field, 3)):
        step = lambda s: f(hb.group_law(p, HeisenbergPoint(s * e.X, e.Z)))
        fd = (step(h) - step(-h)) / (2 * h)
        assert hb.horizontal_derivative(f, j, p) == pytest.approx(fd, abs=1e-8)


def test_real_coordinates_round_trip(field, rng):
    p = hb.random_points(field, 3, 7, rng)
    q = HeisenbergPoint.from_real(p.to_real(), field, 3)
    assert np.array_equal(p.X, q.X) and np.array_equal(p.Z, q.Z)


def test_field_coefficients_match_bracket(field, rng):
    """E_j has Z-part (1/2) Im(X^* V_j) with V_j the j-th basis vector."""
    p = hb.random_points(field, 3, 1, rng)[0]
    for j, e in enumerate(hb.horizontal_basis(field, 3)):
        expected = 0.5 * hb.bracket(p, e).Z[1:]
        v = hb.field_direction(p, j)
        assert np.allclose(v[hb.n_horizontal(field, 3):], expected, atol=1e-14)
