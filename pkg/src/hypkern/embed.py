"""Explicit hyperbolic embeddings of kernels, and the twisted action of their symmetries."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hypkern.kernels import ComplexHyperbolicKernel, Status, validate_cht
from hypkern.minkowski import (
    Field,
    MinkowskiPoint,
    MinkowskiSpace,
    cartan_tensor,
    cosh_dist_matrix,
    tautological_kernel,
)
from hypkern.numcore import DEFAULT_TOL, gram_factor

ROUNDTRIP_TOL = 1e-8
SYMMETRY_TOL = 1e-10


class EmbeddingError(ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SymmetryError(ValueError):
    pass


@dataclass
class Embedding:
    kernel: ComplexHyperbolicKernel
    base_index: int
    points: list
    beta_residual: float
    alpha_residual: float

    @property
    def space(self):
        return self.points[0].space

    @property
    def coords(self):
        return np.array([p.coords for p in self.points])

    def tautological(self):
        return tautological_kernel(self.points, self.kernel.labels)


def _roundtrip_residuals(K, P):
    beta = cosh_dist_matrix(P)
    db = float(np.max(np.abs(beta - K.beta) / np.maximum(1.0, K.beta)))
    da = 0.0
    if K.n >= 3 and np.iscomplexobj(P):
        da = float(np.max(np.abs(cartan_tensor(P) - K.alpha_tensor())))
    elif K.alpha:
        da = max(abs(v) for v in K.alpha.values())
    return db, da


def gns_embed(K, base_index=0, tol=DEFAULT_TOL):
    """Points ``f(x) = beta(x, x0) (+) h(x)`` with ``h`` the Gram factor of the base-point kernel.

    Round-trips ``beta`` and ``alpha`` within ``1e-8`` or raises
    :class:`EmbeddingError`. Real kernels embed in the real hyperboloid.
    """
    report = validate_cht(K, base=base_index, tol=tol)
    if report.verdict is Status.INVALID:
        raise EmbeddingError(
            f"kernel is not of hyperbolic type at base {base_index} "
            f"(cocycle residual {report.cocycle_residual:.2e}, margin {report.min_margin:.2e})",
            report)
    n = K.n
    rest = np.delete(np.arange(n), base_index)
    rank_rows = gram_factor(K.phi(base_index), tol) if n > 1 else np.zeros((0, 0))
    r = rank_rows.shape[1] if rank_rows.size else 0
    if r:
        # canonical gauge: largest entry of each Hilbert coordinate real positive
        piv = rank_rows[np.argmax(np.abs(rank_rows), axis=0), np.arange(r)]
        rank_rows = rank_rows * (np.abs(piv) / piv)[None, :]
    H = np.zeros((n, r), dtype=np.complex128)
    if r:
        H[rest] = rank_rows
    real = K.is_real
    field = Field.REAL if real else Field.COMPLEX
    space = MinkowskiSpace(field, r)
    points = []
    for j in range(n):
        if j == base_index:
            points.append(space.origin())
            continue
        v = np.concatenate(([K.beta[j, base_index]], H[j]))
        if real:
            v = v.real
        points.append(MinkowskiPoint.from_vector(space, v, canonical=False))
    P = np.array([p.coords for p in points])
    db, da = _roundtrip_residuals(K, P)
    if db > ROUNDTRIP_TOL or da > ROUNDTRIP_TOL:
        raise EmbeddingError(f"round-trip residuals too large: beta {db:.2e}, alpha {da:.2e}", report)
    return Embedding(K, base_index, points, db, da)


# --------------------------------------------------------------------------
# projective action of kernel symmetries on C[X]
# --------------------------------------------------------------------------

def check_symmetry(K, perm, tol=SYMMETRY_TOL):
    perm = np.asarray(perm, dtype=np.intp)
    n = K.n
    if sorted(perm.tolist()) != list(range(n)):
        raise SymmetryError(f"{perm.tolist()} is not a permutation of {n} points")
    db = np.abs(K.beta[np.ix_(perm, perm)] - K.beta)
    if db.max() > tol * max(1.0, float(K.beta.max())):
        j, k = np.unravel_index(int(np.argmax(db)), db.shape)
        raise SymmetryError(f"permutation does not preserve beta at [{j}][{k}]")
    A = K.alpha_tensor()
    da = np.abs(A[np.ix_(perm, perm, perm)] - A)
    if da.size and da.max() > tol:
        i, j, k = np.unravel_index(int(np.argmax(da)), da.shape)
        raise SymmetryError(f"permutation does not preserve alpha at ({i}, {j}, {k})")
    return perm


def twisted_gram(K, z):
    """Matrix ``G[x, y] = exp(i alpha(z,x,y)) beta(x,y)`` of the twisted form ``B_z``.

    The action below preserves ``B_z(phi, psi) = phi^T G conj(psi)``, the form
    that is conjugate-linear in its second slot. With the conjugation on the
    first slot the phase ``exp(i alpha(z, gz, x))`` would have to be inverted.
    """
    return np.exp(1j * K.alpha_tensor()[z]) * K.beta


def action_matrix(K, perm, z):
    """Matrix of ``(g.phi)(x) = exp(i alpha(z, gz, x)) phi(g^-1 x)`` on the basis of point masses."""
    perm = np.asarray(perm, dtype=np.intp)
    n = K.n
    A = K.alpha_tensor()
    gz = perm[z]
    U = np.zeros((n, n), dtype=np.complex128)
    for y in range(n):
        x = perm[y]
        U[x, y] = np.exp(1j * A[z, gz, x])
    return U


@dataclass
class ProjectiveActionReport:
    matrix: np.ndarray
    invariance_residual: float
    multiplier: Optional[complex] = None
    multiplier_residual: Optional[float] = None


def projective_action(K, perm, z=0, other=None, tol=SYMMETRY_TOL):
    """Twisted action of a symmetry ``g`` (``perm[i] = g(i)``) preserving the form ``B_z``.

    With a second symmetry ``other = h`` also audits
    ``g.(h.phi) = exp(i alpha(z, gz, ghz)) (gh).phi``.
    """
    g = check_symmetry(K, perm, tol)
    U = action_matrix(K, g, z)
    G = twisted_gram(K, z)
    scale = max(1.0, float(np.max(np.abs(G))))
    inv = float(np.max(np.abs(U.T @ G @ U.conj() - G))) / scale
    report = ProjectiveActionReport(U, inv)
    if other is not None:
        h = check_symmetry(K, other, tol)
        gh = g[h]
        Ugh = action_matrix(K, gh, z)
        Uh = action_matrix(K, h, z)
        m = np.exp(1j * K.alpha_at(z, int(g[z]), int(gh[z])))
        report.multiplier = complex(m)
        report.multiplier_residual = float(np.max(np.abs(U @ Uh - m * Ugh)))
    return report


def elliptic_orbit_kernel(order=3, radius=0.8, extra=(), phase=0.0):
    """Kernel of the orbit of ``radius`` under the rotation by ``2 pi / order`` in H_C^1.

    ``extra`` adds further orbit radii; points are ordered orbit by orbit so the
    cyclic shift inside each orbit is a kernel symmetry.
    """
    space = MinkowskiSpace(Field.COMPLEX, 1)
    pts = []
    for r in (radius, *extra):
        u = math.sinh(r) * np.exp(1j * phase)
        for j in range(order):
            w = u * np.exp(2j * math.pi * j / order)
            pts.append(MinkowskiPoint.lift(space, [w]))
    K = tautological_kernel(pts)
    perm = []
    for o in range(1 + len(extra)):
        perm.extend(o * order + (j + 1) % order for j in range(order))
    return K, np.array(perm)
