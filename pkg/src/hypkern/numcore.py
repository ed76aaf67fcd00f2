"""Dense Hermitian linear algebra used by every validator in the package.

PSD and conditionally-negative verdicts, Gram factorisation, Hadamard mixed
powers and the binomial series ``q(z) = 1 - (1 - z)**t``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hypkern._kernels import jacobi_eigh, series_horner

DEFAULT_TOL = 1e-9
HERMITIAN_RTOL = 1e-12
Q_DEFAULT_TERMS = 512


class NotHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    """Raised by :func:`gram_factor`; carries the failing :class:`PsdReport`."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class DomainError(ValueError):
    pass


class Verdict(str, enum.Enum):
    PSD = "PSD"
    NOT_PSD = "NOT_PSD"
    MARGINAL = "MARGINAL"


def _hermitian_residual(a):
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    resid = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    return resid, scale


class HermitianMatrix:
    """Complex Hermitian matrix, checked and exactly symmetrised on construction."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
        resid, scale = _hermitian_residual(a)
        if resid > HERMITIAN_RTOL * scale:
            raise NotHermitianError(
                f"matrix is not Hermitian: residual {resid:.3e} > {HERMITIAN_RTOL:g} * {scale:.3e}")
        a = 0.5 * (a + a.conj().T)
        a[np.diag_indices_from(a)] = a.diagonal().real
        self.entries = a

    @property
    def n(self):
        return self.entries.shape[0]

    @classmethod
    def coerce(cls, obj):
        return obj if isinstance(obj, cls) else cls(obj)

    def quad(self, c):
        """The quadratic form c* H c (real part)."""
        c = np.asarray(c, dtype=np.complex128)
        return float(np.real(c.conj() @ self.entries @ c))

    def eigh(self):
        w, v, _ = jacobi_eigh(self.entries)
        return w, v

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"HermitianMatrix(n={self.n})"


@dataclass(frozen=True)
class PsdReport:
    min_eig: float
    max_eig: float
    verdict: Verdict
    witness: Optional[np.ndarray] = None
    tol: float = DEFAULT_TOL

    @property
    def scale(self):
        return max(1.0, self.max_eig)

    @property
    def margin(self):
        """Smallest eigenvalue relative to the verdict scale."""
        return self.min_eig / self.scale

    @property
    def ok(self):
        """PSD or MARGINAL: anything that is not a hard failure."""
        return self.verdict is not Verdict.NOT_PSD

    def to_dict(self):
        d = {
            "min_eig": self.min_eig,
            "max_eig": self.max_eig,
            "verdict": self.verdict.value,
        }
        if self.witness is not None:
            d["witness"] = _complex_list(self.witness)
        return d


def _complex_list(v):
    v = np.asarray(v)
    return [[float(np.real(x)), float(np.imag(x))] for x in v.ravel()]


def classify(min_eig, max_eig, tol):
    scale = max(1.0, max_eig)
    if min_eig >= -tol * scale:
        return Verdict.PSD
    if min_eig < -10.0 * tol * scale:
        return Verdict.NOT_PSD
    return Verdict.MARGINAL


def _report_from_eigs(w, v, tol):
    if w.size == 0:
        return PsdReport(0.0, 0.0, Verdict.PSD, None, tol)
    lo, hi = float(w[0]), float(w[-1])
    verdict = classify(lo, hi, tol)
    witness = None
    if verdict is Verdict.NOT_PSD:
        witness = v[:, 0] / np.linalg.norm(v[:, 0])
    return PsdReport(lo, hi, verdict, witness, tol)


def psd_check(H, tol=DEFAULT_TOL):
    """Decide positive semi-definiteness of a Hermitian matrix.

    The verdict is PSD when ``min_eig >= -tol * max(1, max_eig)``, NOT_PSD
    below ten times that threshold and MARGINAL in between. A NOT_PSD report
    carries the unit eigenvector of the smallest eigenvalue as witness.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    H = HermitianMatrix.coerce(H)
    if H.n == 0:
        return PsdReport(0.0, 0.0, Verdict.PSD, None, tol)
    w, v = H.eigh()
    return _report_from_eigs(w, v, tol)


def centering(n):
    return np.eye(n) - np.full((n, n), 1.0 / n)


def cnd_check(K, tol=DEFAULT_TOL):
    """Conditional negativity of a real symmetric kernel matrix.

    Runs :func:`psd_check` on ``-P K P`` with ``P`` the centering projection,
    so the witness (if any) is a centered vector with ``c.K.c > 0``.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {K.shape}")
    resid, scale = _hermitian_residual(K)
    if resid > HERMITIAN_RTOL * scale:
        raise NotHermitianError(f"kernel is not symmetric: residual {resid:.3e}")
    n = K.shape[0]
    if n == 0:
        return PsdReport(0.0, 0.0, Verdict.PSD, None, tol)
    P = centering(n)
    A = -(P @ K @ P)
    return psd_check(0.5 * (A + A.T), tol)


def gram_factor(G, tol=DEFAULT_TOL):
    """Vectors ``h_j`` (rows of the returned array) with ``<h_j, h_k> = G[j, k]``.

    The inner product is conjugate-linear in the first slot. Eigenvalues below
    ``tol * max(1, max_eig)`` are dropped, so the column count is the numerical
    rank of ``G``.
    """
    G = HermitianMatrix.coerce(G)
    if G.n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    w, v = G.eigh()
    report = _report_from_eigs(w, v, tol)
    if report.verdict is Verdict.NOT_PSD:
        raise NotPSDError(
            f"Gram matrix is not PSD (min eigenvalue {report.min_eig:.3e})", report)
    keep = w > tol * report.scale
    return v[:, keep].conj() * np.sqrt(w[keep])


def gram_of(vectors):
    """Gram matrix ``<h_j, h_k>`` of row vectors."""
    h = np.asarray(vectors)
    return h.conj() @ h.T


def mixed_power(z, t, s):
    """``|z|**t * exp(1j * s * arg z)`` on the plane slit along the non-positive reals.

    Accepts scalars or arrays. With ``s == t`` this is the principal power.
    """
    z = np.asarray(z, dtype=np.complex128)
    on_slit = (z.real <= 0.0) & (z.imag == 0.0)
    if np.any(on_slit):
        raise DomainError("mixed power undefined on the slit Re z <= 0, Im z = 0")
    out = np.abs(z) ** t * np.exp(1j * s * np.angle(z))
    return out[()] if out.ndim == 0 else out


def hadamard_mixed_power(C, t, s=None):
    """Entrywise :func:`mixed_power` of a matrix (``s`` defaults to ``t``)."""
    return mixed_power(C, t, t if s is None else s)


def q_coefficients(t, n_terms):
    """Coefficients ``a_1..a_N`` of ``q(z) = sum_m a_m z**m``.

    ``a_1 = t`` and ``a_{m+1} = a_m (m - t) / (m + 1)``, all nonnegative for
    ``0 < t <= 1``.
    """
    if n_terms < 1:
        return np.zeros(0)
    m = np.arange(1, n_terms, dtype=np.float64)
    ratios = (m - t) / (m + 1.0)
    return t * np.concatenate(([1.0], np.cumprod(ratios)))


def q_tail_bound(t, n_terms, r):
    """Upper bound on the omitted tail ``sum_{m > N} a_m r**m`` for ``r < 1``."""
    nxt = q_coefficients(t, n_terms + 1)[-1]
    return float(nxt * r ** (n_terms + 1) / (1.0 - r))


def q_series(z, t, n_terms=Q_DEFAULT_TERMS, return_bound=False):
    """Partial sum of the series for ``1 - (1 - z)**t``; scalar or array ``z``.

    With ``return_bound=True`` also returns the tail bound computed from the
    first omitted coefficient.
    """
    if not 0.0 < t <= 1.0:
        raise DomainError(f"q_series needs 0 < t <= 1, got {t}")
    z = np.asarray(z, dtype=np.complex128)
    r = float(np.max(np.abs(z))) if z.size else 0.0
    if r >= 1.0:
        raise DomainError(f"q_series needs |z| < 1, got |z| = {r}")
    value = series_horner(q_coefficients(t, n_terms), z)
    value = value[()] if value.ndim == 0 else value
    if return_bound:
        return value, q_tail_bound(t, n_terms, r)
    return value


def q_terms_for(t, r, target=1e-14, minimum=Q_DEFAULT_TERMS, cap=2_000_000):
    """Smallest power-of-two term count whose tail bound at radius ``r`` is below ``target``."""
    n = minimum
    while q_tail_bound(t, n, r) > target and n < cap:
        n *= 2
    return n
