import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypkern.deform import (
    ZETA,
    ProofPathError,
    anisotropic_deform,
    power_kernel,
    power_proof_path,
    r_plus_one,
    rigidity_points,
    rigidity_witness,
    second_order_extrapolate,
    triangle_det,
    triangle_matrix,
    witness_search_power,
)
from hypkern.kernels import ComplexHyperbolicKernel, Status, validate_cht, validate_rht
from hypkern.minkowski import Field, MinkowskiSpace, cosh_dist_matrix, random_points, tautological_kernel
from hypkern.numcore import DomainError, Verdict


def sample(seed, m=6, n=2, scale=1.0):
    rng = np.random.default_rng(seed)
    return tautological_kernel(random_points(MinkowskiSpace(Field.COMPLEX, n), m, rng, scale))


# -- power kernel ------------------------------------------------------------

def test_power_one_is_identity():
    K = sample(0)
    K1 = power_kernel(K, 1.0)
    assert np.array_equal(K1.beta, K.beta) and K1.alpha == K.alpha


def test_power_zero_collapses():
    K0 = power_kernel(sample(0), 0.0)
    assert np.array_equal(K0.beta, np.ones_like(K0.beta))
    assert K0.alpha == {}
    assert validate_cht(K0).verdict is Status.VALID


def test_power_half_valid():
    assert validate_cht(power_kernel(sample(0), 0.5)).verdict is Status.VALID


def test_power_domain_error_names_triple():
    K = ComplexHyperbolicKernel("abc", np.eye(3), {(0, 1, 2): 1.0})
    with pytest.raises(DomainError, match=r"\[0, 1, 2\]"):
        power_kernel(K, 1.6)


def test_power_above_one_falsified():
    found = witness_search_power(sample(0, m=5, n=1, scale=0.5), 1.7)
    assert found is not None
    base, c = found
    Kt = power_kernel(sample(0, m=5, n=1, scale=0.5), 1.7)
    assert np.real(c.conj() @ Kt.phi(base, keep_base=True) @ c) < 0


def test_witness_search_inconclusive_on_domain_error():
    K = ComplexHyperbolicKernel("abc", np.eye(3), {(0, 1, 2): 1.0})
    assert witness_search_power(K, 1.6) is None


@pytest.mark.parametrize("seed", range(8))
def test_monotone_family(seed):
    K = sample(seed, m=7, n=3)
    for t in (1.0, 0.8, 0.6, 0.4, 0.2):
        assert validate_cht(power_kernel(K, t)).verdict is Status.VALID


# -- proof path ----------------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.sampled_from([0.2, 0.4, 0.6, 0.8]), st.integers(0, 5))
def test_proof_path_equivalence(seed, t, base):
    tr = power_proof_path(sample(seed), t, base)
    assert tr.residual < 1e-9
    assert all(r.ok for r in tr.reports.values())
    assert np.abs(tr.M1).max() < 1


def test_proof_path_diagonal():
    tr = power_proof_path(sample(3), 0.3)
    assert np.allclose(np.diag(tr.N).real, tr.b ** 0.6 - 1, atol=1e-12)


def test_proof_path_continuity_at_one():
    # N - M = O((1 - t) |M| log|M|), so the probe is relative to max|M|
    tr = power_proof_path(sample(5), 0.999)
    assert np.abs(tr.N - tr.M).max() / max(1.0, np.abs(tr.M).max()) < 1e-2


def test_proof_path_closed_form_on_tree_path():
    K = ComplexHyperbolicKernel.real([[1, 2, 4], [2, 1, 2], [4, 2, 1]])
    tr = power_proof_path(K, 0.5, base_index=0)
    assert tr.closed_form_residual < 1e-10
    assert tr.series_tail_bound < 1e-13


def test_proof_path_rejects_invalid_input():
    bad = ComplexHyperbolicKernel.real([[1, 1, 5], [1, 1, 1], [5, 1, 1]])
    with pytest.raises(ProofPathError):
        power_proof_path(bad, 0.5, base_index=1)


def test_proof_path_t_range():
    with pytest.raises(DomainError):
        power_proof_path(sample(1), 1.0)


def test_trace_serialises():
    d = power_proof_path(sample(1), 0.5).to_dict()
    assert {"M", "M1", "M2", "N", "residual"} <= set(d)


# -- anisotropic deformation --------------------------------------------------

def _hyperbolic_sample(seed, m=8, n=3):
    pts = random_points(MinkowskiSpace(Field.REAL, n), m, np.random.default_rng(seed))
    return cosh_dist_matrix(np.array([p.coords for p in pts]))


def test_delta_zero_is_identity():
    B = _hyperbolic_sample(0)
    assert np.allclose(anisotropic_deform(B, np.exp(-np.arccosh(B)), 0.0), B)


def test_exp_identity():
    # 2 cosh d - exp(-d) = exp(d)
    B = _hyperbolic_sample(1)
    out = anisotropic_deform(B, np.exp(-np.arccosh(B)), math.acosh(math.sqrt(2)))
    assert np.abs(out - np.exp(np.arccosh(B))).max() < 1e-10


@pytest.mark.parametrize("delta", [0.3, 1.0, 2.0])
def test_anisotropic_valid(delta):
    rng = np.random.default_rng(7)
    B = _hyperbolic_sample(2)
    V = rng.normal(size=(B.shape[0], 4))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    assert validate_rht(anisotropic_deform(B, V @ V.T, delta)).verdict is Status.VALID


def test_anisotropic_rejects_bad_phi():
    B = _hyperbolic_sample(3, m=3)
    with pytest.raises(ValueError, match="diagonal"):
        anisotropic_deform(B, 2 * np.eye(3), 1.0)
    with pytest.raises(ValueError, match="positive type"):
        anisotropic_deform(B, np.array([[1, 2, 0], [2, 1, 0], [0, 0, 1.0]]), 1.0)


# -- rigidity ----------------------------------------------------------------

def _r_exact(t, s, eps):
    mpmath.mp.dps = 50
    e = mpmath.mpf(eps)
    w = 1 + e - e * mpmath.exp(2j * mpmath.pi / 3)
    val = 2 * abs(w) ** t * mpmath.cos(s * mpmath.arg(w)) - 3 * (1 + e) ** t
    return float(val + 1)


def test_points_and_triangle():
    pts = rigidity_points(0.01)
    assert len(pts) == 4
    K = tautological_kernel(pts)
    assert K.beta[1, 2] == pytest.approx(K.beta[2, 3])
    z = 0.3 + 0.2j
    assert triangle_det(z) == pytest.approx(np.linalg.det(triangle_matrix(z)).real)
    assert abs(ZETA ** 3 - 1) < 1e-15


def test_r_at_zero_limit():
    w = rigidity_witness(0.5, 0.0, 1e-6)
    assert abs(w.R_value + 1) < 1e-9


@pytest.mark.parametrize("t,s,eps", [(0.5, 0.0, 0.01), (0.25, 0.25, 1e-3), (0.75, 0.3, 0.1), (0.5, 0.5, 1e-4)])
def test_r_plus_one_matches_high_precision(t, s, eps):
    assert r_plus_one(t, s, eps) == pytest.approx(_r_exact(t, s, eps), rel=1e-9, abs=1e-14 * eps)


def test_violation_at_half():
    w = rigidity_witness(0.5, 0.0, 0.01)
    assert w.R_plus_one > 0
    assert w.matrix_verdict.verdict is Verdict.NOT_PSD


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_s_equal_t_is_psd(eps):
    assert rigidity_witness(0.5, 0.5, eps).matrix_verdict.verdict is Verdict.PSD
    assert rigidity_witness(0.5, -0.5, eps).matrix_verdict.verdict is Verdict.PSD


def test_second_order_coefficient():
    # direct Taylor expansion: R(eps) = -1 + 0.75 (t^2 - s^2) eps^2 + O(eps^3)
    for t, s in ((0.5, 0.0), (0.75, 0.25), (0.25, -0.1)):
        assert second_order_extrapolate(t, s) == pytest.approx(1.5 * (t * t - s * s), rel=1e-3)


@pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("frac", [0.0, 0.5, -0.5, 1.0, -1.0])
def test_rigidity_scan(t, frac):
    s = frac * t
    w = rigidity_witness(t, s, 1e-2)
    assert abs(w.R_plus_one) > 1e-7
    want = Verdict.NOT_PSD if abs(s) < t else Verdict.PSD
    assert w.matrix_verdict.verdict is want
