"""Power deformation of kernels, its proof-path cross-check, anisotropic
deformation and the four-point witness for argument/length rigidity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hypkern.kernels import (
    HALF_PI,
    ComplexHyperbolicKernel,
    Status,
    validate_rht,
)
from hypkern.minkowski import Field, MinkowskiPoint, MinkowskiSpace, tautological_kernel
from hypkern.numcore import (
    DEFAULT_TOL,
    DomainError,
    PsdReport,
    mixed_power,
    psd_check,
    q_series,
    q_tail_bound,
    q_terms_for,
)

PROOF_PATH_TOL = 1e-9
ZETA = complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))


class ProofPathError(ArithmeticError):
    pass


def power_kernel(K, t):
    """``(beta ** t, t * alpha)``; raises :class:`DomainError` if some ``|t alpha| >= pi/2``."""
    t = float(t)
    alpha = {}
    for ijk, v in K.alpha.items():
        if not abs(t * v) < HALF_PI:
            raise DomainError(f"|t * alpha{list(ijk)}| = {abs(t * v):.6f} >= pi/2")
        alpha[ijk] = t * v
    beta = K.beta ** t
    lam = K.lam ** t if K.lam is not None else None
    return ComplexHyperbolicKernel(K.labels, beta, alpha, lam=lam)


@dataclass
class PowerProofTrace:
    t: float
    base_index: int
    b: np.ndarray
    C: np.ndarray
    M: np.ndarray
    D: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    N: np.ndarray
    direct: np.ndarray
    residual: float
    closed_form_residual: float
    series_terms: int
    series_tail_bound: float
    reports: dict

    def to_dict(self):
        def cm(a):
            return [[[float(x.real), float(x.imag)] for x in row] for row in np.atleast_2d(a)]
        return {
            "t": self.t,
            "base_index": self.base_index,
            "b": self.b.tolist(),
            "M": cm(self.M),
            "M1": cm(self.M1),
            "M2": cm(self.M2),
            "N": cm(self.N),
            "residual": self.residual,
            "closed_form_residual": self.closed_form_residual,
            "series_terms": self.series_terms,
            "series_tail_bound": self.series_tail_bound,
            "reports": {k: r.to_dict() for k, r in self.reports.items()},
        }


def power_proof_path(K, t, base_index=0, tol=DEFAULT_TOL, check=True):
    """Rebuild ``b^t b^t* - C^(t,t)`` through the Schur-product route.

    ``M = b b* - C``, ``M1 = 1 1* - D C D``, ``M2 = q(M1)`` entrywise via the
    power series, ``N = diag(b^t) M2 diag(b^t)``. ``N`` is compared against the
    directly computed Hadamard mixed power.
    """
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"proof path needs 0 < t < 1, got {t}")
    n = K.n
    rest = np.delete(np.arange(n), base_index)
    b = K.beta[rest, base_index].astype(float)
    sub = K.beta[np.ix_(rest, rest)]
    if K.is_real:
        C = sub.astype(np.complex128)
    else:
        C = np.exp(1j * K.alpha_tensor()[base_index][np.ix_(rest, rest)]) * sub
    M = np.outer(b, b) - C
    D = np.diag(1.0 / b)
    M1 = np.ones_like(C) - D @ C @ D
    r = float(np.max(np.abs(M1))) if M1.size else 0.0
    if r >= 1.0:
        raise ProofPathError(f"|M1| entry {r!r} >= 1: input kernel is not of hyperbolic type")
    terms = q_terms_for(t, r)
    M2 = q_series(M1, t, terms) if M1.size else M1.copy()
    bt = b ** t
    N = bt[:, None] * M2 * bt[None, :]
    direct = np.outer(bt, bt) - mixed_power(C, t, t) if C.size else C.copy()
    residual = float(np.max(np.abs(N - direct))) if N.size else 0.0
    closed = 1.0 - mixed_power(1.0 - M1, t, t) if M1.size else M1
    closed_res = float(np.max(np.abs(M2 - closed))) if M1.size else 0.0
    reports = {name: psd_check(_herm(X), tol) for name, X in (("M1", M1), ("M2", M2), ("N", N))}
    trace = PowerProofTrace(t, base_index, b, C, M, D, M1, M2, N, direct, residual, closed_res,
                            terms, q_tail_bound(t, terms, r) if M1.size else 0.0, reports)
    if check:
        if residual > PROOF_PATH_TOL:
            raise ProofPathError(f"proof path and direct power differ by {residual:.3e}")
        bad = [k for k, rep in reports.items() if not rep.ok]
        if bad:
            raise ProofPathError(f"matrices {bad} are not PSD")
    return trace


def _herm(X):
    return 0.5 * (X + X.conj().T)


def anisotropic_deform(beta, phi, delta, check=True, tol=DEFAULT_TOL):
    """``cosh(delta)**2 beta - sinh(delta)**2 phi`` for a unit-diagonal positive kernel ``phi``."""
    if delta < 0:
        raise DomainError("delta must be >= 0")
    B = beta.beta if isinstance(beta, ComplexHyperbolicKernel) else np.asarray(beta, dtype=float)
    P = np.asarray(phi, dtype=float)
    if P.shape != B.shape:
        raise ValueError(f"shape mismatch: beta {B.shape}, phi {P.shape}")
    if np.max(np.abs(np.diag(P) - 1.0)) > 1e-12:
        raise ValueError("phi must take the value 1 on the diagonal")
    if check:
        rep = psd_check(P, tol)
        if not rep.ok:
            raise ValueError(f"phi is not of positive type (min eigenvalue {rep.min_eig:.3e})")
        if validate_rht(B, tol=tol).verdict is Status.INVALID:
            raise ValueError("beta is not of real hyperbolic type")
    out = math.cosh(delta) ** 2 * B - math.sinh(delta) ** 2 * P
    np.fill_diagonal(out, 1.0)
    if isinstance(beta, ComplexHyperbolicKernel):
        return ComplexHyperbolicKernel(beta.labels, out, {})
    return out


# --------------------------------------------------------------------------
# four-point rigidity witness in H_C^1
# --------------------------------------------------------------------------

def triangle_matrix(z):
    """Circulant ``[[1, z, z*], [z*, 1, z], [z, z*, 1]]``."""
    zc = np.conj(z)
    return np.array([[1, z, zc], [zc, 1, z], [z, zc, 1]], dtype=np.complex128)


def triangle_det(z):
    """``det M(z) = (2a + 1)(a - 1 + sqrt3 b)(a - 1 - sqrt3 b)`` for ``z = a + ib``."""
    a, b = z.real, z.imag
    r3 = math.sqrt(3.0)
    return (2 * a + 1) * (a - 1 + r3 * b) * (a - 1 - r3 * b)


def rigidity_points(eps):
    """``x0 = 1 (+) 0`` and ``x_j = sqrt(1+eps) (+) sqrt(eps) zeta^j`` for j = 1, 2, 3."""
    space = MinkowskiSpace(Field.COMPLEX, 1)
    pts = [space.origin()]
    for j in (1, 2, 3):
        pts.append(MinkowskiPoint(space, [math.sqrt(1 + eps), math.sqrt(eps) * ZETA ** j]))
    return pts


def r_plus_one(t, s, eps):
    """``R(eps) + 1`` evaluated without the cancellation against ``-1``."""
    mod2 = 3 * eps + 3 * eps * eps
    theta = -math.atan(math.sqrt(3) * eps / (2 + 3 * eps))
    a = math.expm1(0.5 * t * math.log1p(mod2))
    cos_m1 = -2.0 * math.sin(0.5 * s * theta) ** 2
    two_re = 2.0 * (a * (1.0 + cos_m1) + cos_m1)
    return two_re - 3.0 * math.expm1(t * math.log1p(eps))


@dataclass
class RigidityWitness:
    t: float
    s: float
    eps: float
    R_value: float
    R_plus_one: float
    matrix: np.ndarray
    matrix_verdict: PsdReport
    second_order: float


def rigidity_witness(t, s, eps, tol=DEFAULT_TOL):
    """Four-point test of whether ``(beta**t, s alpha)`` can be of complex hyperbolic type.

    Returns ``R(eps) = 2 Re (1 + eps - eps zeta)^(t,s) - 3 (1 + eps)^t``, the
    PSD verdict on the 3x3 base-point matrix, and ``2 (R + 1) / eps**2``.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    K = tautological_kernel(rigidity_points(eps))
    A = K.alpha_tensor()
    idx = [1, 2, 3]
    beta = K.beta[np.ix_(idx, idx)]
    phase = np.exp(1j * s * A[0][np.ix_(idx, idx)])
    mat = (1 + eps) ** t - phase * beta ** t
    report = psd_check(_herm(mat), tol)
    w = 1 + eps - eps * ZETA
    R = 2 * mixed_power(w, t, s).real - 3 * (1 + eps) ** t
    rp1 = r_plus_one(t, s, eps)
    return RigidityWitness(t, s, eps, float(R), rp1, mat, report, 2 * rp1 / eps ** 2)


def second_order_extrapolate(t, s, eps_coarse=1e-2, eps_fine=1e-3):
    """Richardson extrapolation of ``2 (R + 1) / eps**2`` to ``eps -> 0`` (first-order error)."""
    c = rigidity_witness(t, s, eps_coarse).second_order
    f = rigidity_witness(t, s, eps_fine).second_order
    q = eps_coarse / eps_fine
    return (q * f - c) / (q - 1)


def witness_search_power(K, t, tol=DEFAULT_TOL) -> Optional[tuple]:
    """Look for a base point at which ``power_kernel(K, t)`` fails; ``None`` if inconclusive."""
    from hypkern.kernels import validate_cht

    try:
        Kt = power_kernel(K, t)
    except DomainError:
        return None
    rep = validate_cht(Kt, tol=tol)
    if rep.verdict is Status.INVALID and rep.witness is not None:
        return rep.witness
    return None
