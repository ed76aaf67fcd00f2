import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypkern.minkowski import (
    Field,
    HoroPoint,
    Isometry,
    MinkowskiPoint,
    MinkowskiSpace,
    boost,
    cartan_arg,
    cartan_tensor,
    cosh_dist,
    cosh_dist_matrix,
    diagonal_to_horo,
    dist,
    hilbert_rotation,
    horo_form,
    horo_point,
    horo_to_diagonal,
    mink_form,
    random_isometry,
    random_points,
    tautological_kernel,
    translation_length,
)
from hypkern.numcore import DomainError

C1 = MinkowskiSpace(Field.COMPLEX, 1)
C3 = MinkowskiSpace(Field.COMPLEX, 3)
R2 = MinkowskiSpace(Field.REAL, 2)


def test_form_hand_value():
    # B(2 (+) 1, 1 (+) i) = 2 * 1 - conj(1) * i
    assert mink_form(np.array([2, 1], complex), np.array([1, 1j])) == pytest.approx(2 - 1j)


def test_form_is_conjugate_linear_in_first_slot():
    x = np.array([1.0, 0.5j])
    y = np.array([2.0, 1.0])
    assert mink_form(1j * x, y) == pytest.approx(-1j * mink_form(x, y))
    assert mink_form(x, 1j * y) == pytest.approx(1j * mink_form(x, y))


def test_origin_and_signature():
    assert np.array_equal(C3.origin().coords, [1, 0, 0, 0])
    assert np.array_equal(np.diag(C1.signature()), [1, -1])
    assert C3.dim == 4


def test_point_normalisation():
    with pytest.raises(DomainError):
        MinkowskiPoint(C1, [2.0, 0.0])
    p = MinkowskiPoint.from_vector(C1, [2j, 0.0])
    assert np.allclose(p.coords, [1, 0])
    with pytest.raises(DomainError):
        MinkowskiPoint.from_vector(C1, [1.0, 2.0])


def test_distance_hand_values():
    o = C1.origin()
    y = MinkowskiPoint(C1, [math.sqrt(2), 1.0])
    assert cosh_dist(o, y) == pytest.approx(math.sqrt(2))
    assert dist(o, o) == 0.0
    b = boost(R2, 0.8)
    assert dist(R2.origin(), b(R2.origin())) == pytest.approx(0.8)


def test_cartan_hand_value():
    # B(x,y) = sqrt2, B(y,z) = 2 - i, B(z,x) = sqrt2
    x = C1.origin()
    y = MinkowskiPoint(C1, [math.sqrt(2), 1.0])
    z = MinkowskiPoint(C1, [math.sqrt(2), 1j])
    assert cartan_arg(x, y, z) == pytest.approx(-math.atan(0.5), abs=1e-15)
    assert cartan_arg(y, x, z) == pytest.approx(math.atan(0.5), abs=1e-15)
    assert cartan_arg(x, x, z) == 0.0


def test_cartan_tensor_alternating(rng):
    P = np.array([p.coords for p in random_points(C3, 6, rng)])
    A = cartan_tensor(P)
    assert np.allclose(A, -A.transpose(1, 0, 2))
    assert np.allclose(A, -A.transpose(0, 2, 1))
    assert A[1, 3, 5] == pytest.approx(cartan_arg(P[1], P[3], P[5]), abs=1e-14)
    assert np.abs(A).max() < math.pi / 2


def test_cosh_matrix_clamps_rounding():
    p = MinkowskiPoint.lift(C1, [0.3])
    P = np.array([p.coords, p.coords])
    assert np.array_equal(cosh_dist_matrix(P), np.ones((2, 2)))


def test_tautological_kernel_shape(rng):
    K = tautological_kernel(random_points(C3, 5, rng), labels=list("abcde"))
    assert K.labels == list("abcde")
    assert np.allclose(np.diag(K.beta), 1)
    assert all(i < j < k for i, j, k in K.alpha)


def test_isometry_checks():
    with pytest.raises(DomainError):
        Isometry(R2, np.diag([2.0, 1.0, 1.0]))
    g = boost(R2, 0.3) @ boost(R2, 0.4)
    assert np.allclose(g.matrix, boost(R2, 0.7).matrix)
    assert np.array_equal(Isometry.identity(C1).matrix, np.eye(2))


def test_horo_chart_and_points():
    p = horo_point(0.0, [0.0])
    assert np.allclose(p.coords, [0.5, 1.0, 0.0])
    assert p.form(p) == pytest.approx(1.0)
    v = np.array([0.4, -1.2])
    q = horo_point(0.3, v)
    assert q.form(q) == pytest.approx(1.0)
    # B(sigma_0(v), sigma_0(0)) = 1 + |v|^2 / 2
    assert horo_point(0.0, v).form(horo_point(0.0, [0, 0])) == pytest.approx(1 + 0.5 * v @ v)
    m = q.to_minkowski()
    assert mink_form(m, m) == pytest.approx(1.0)
    assert np.allclose(diagonal_to_horo(horo_to_diagonal(q.coords)), q.coords)
    assert isinstance(q, HoroPoint)


def test_translation_length_boost():
    tl = translation_length(boost(R2, 0.7), R2.origin(), 64)
    assert abs(tl.estimate - 0.7) < 1e-3
    assert tl.naive < tl.estimate  # the naive quotient is biased low
    assert tl.monotone


def test_translation_length_elliptic_is_zero():
    th = 0.9
    U = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    tl = translation_length(hilbert_rotation(R2, U), R2.origin(), 32)
    assert tl.estimate == pytest.approx(0.0, abs=1e-12)


def test_translation_length_overflow_truncates():
    with pytest.warns(RuntimeWarning):
        tl = translation_length(boost(R2, 20.0), R2.origin(), 64)
    assert tl.n_used < 64
    assert abs(tl.estimate - 20.0) < 1e-6


# -- properties ------------------------------------------------------------

def test_cocycle_identity_on_quadruples(rng):
    P = random_points(C3, 4000, rng)
    worst = 0.0
    for q in range(1000):
        a, b, c, d = P[4 * q: 4 * q + 4]
        da = cartan_arg(b, c, d) - cartan_arg(a, c, d) + cartan_arg(a, b, d) - cartan_arg(a, b, c)
        worst = max(worst, abs(da))
    assert worst < 1e-10


@given(st.integers(0, 2**32 - 1))
def test_isometry_invariance(seed):
    rng = np.random.default_rng(seed)
    g = random_isometry(C3, rng)
    x, y, z = random_points(C3, 3, rng)
    assert abs(dist(g(x), g(y)) - dist(x, y)) < 1e-9
    assert abs(cartan_arg(g(x), g(y), g(z)) - cartan_arg(x, y, z)) < 1e-9


@given(st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_totally_real_points_have_no_cartan(m, seed):
    rng = np.random.default_rng(seed)
    pts = [MinkowskiPoint(C3, p.coords.astype(complex))
           for p in random_points(MinkowskiSpace(Field.REAL, 3), m, rng)]
    A = cartan_tensor(np.array([p.coords for p in pts]))
    assert np.abs(A).max() < 1e-10


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_horo_conversion_preserves_form(n, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(2, n + 2))
    direct = horo_form(a, b)
    via = mink_form(horo_to_diagonal(a), horo_to_diagonal(b)).real
    assert abs(direct - via) < 1e-12 * max(1.0, np.abs(a).max() * np.abs(b).max())
