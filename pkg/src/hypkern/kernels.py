"""Kernels of real and complex hyperbolic type and their validators."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hypkern._kernels import cocycle_residual
from hypkern.numcore import (
    DEFAULT_TOL,
    PsdReport,
    Verdict,
    cnd_check,
    psd_check,
)

COCYCLE_TOL = 1e-9
SYMMETRY_RTOL = 1e-12
HALF_PI = 0.5 * math.pi


class KernelStructureError(ValueError):
    pass


class BusemannInfeasibleError(ValueError):
    pass


class Status(str, enum.Enum):
    VALID = "VALID"
    INVALID = "INVALID"
    MARGINAL = "MARGINAL"


def _check_beta(beta):
    beta = np.array(beta, dtype=np.float64)
    if beta.ndim != 2 or beta.shape[0] != beta.shape[1] or beta.shape[0] == 0:
        raise KernelStructureError(f"beta must be a non-empty square matrix, got shape {beta.shape}")
    if not np.all(np.isfinite(beta)):
        j, k = np.argwhere(~np.isfinite(beta))[0]
        raise KernelStructureError(f"beta[{j}][{k}] is not finite")
    scale = max(1.0, float(np.max(np.abs(beta))))
    asym = np.abs(beta - beta.T)
    if asym.max() > SYMMETRY_RTOL * scale:
        j, k = np.unravel_index(int(np.argmax(asym)), asym.shape)
        raise KernelStructureError(
            f"beta is not symmetric at [{j}][{k}]: {float(beta[j, k])!r} vs {float(beta[k, j])!r}")
    diag = np.abs(np.diag(beta) - 1.0)
    if diag.max() > SYMMETRY_RTOL:
        j = int(np.argmax(diag))
        raise KernelStructureError(f"beta[{j}][{j}] = {float(beta[j, j])!r}, expected 1")
    if beta.min() < 0:
        j, k = np.argwhere(beta < 0)[0]
        raise KernelStructureError(f"beta[{j}][{k}] = {float(beta[j, k])!r} is negative")
    beta = 0.5 * (beta + beta.T)
    np.fill_diagonal(beta, 1.0)
    return beta


def _check_alpha(alpha, n):
    out = {}
    for key, v in dict(alpha).items():
        ijk = tuple(int(x) for x in key)
        if len(ijk) != 3 or not (0 <= ijk[0] < ijk[1] < ijk[2] < n):
            raise KernelStructureError(f"alpha index {list(key)} is not a strictly increasing triple in [0, {n})")
        v = float(v)
        if not abs(v) < HALF_PI:
            raise KernelStructureError(f"alpha{list(ijk)} = {float(v)!r} is outside (-pi/2, pi/2)")
        if v != 0.0:
            out[ijk] = v
    return out


class ComplexHyperbolicKernel:
    """Finite kernel ``(beta, alpha)``.

    ``alpha`` is stored sparsely on strictly increasing triples; absent triples
    are zero and the full alternating extension is built on demand. ``lam`` is
    optional provenance for kernels of the form ``lam ** d``.
    """

    def __init__(self, labels, beta, alpha=None, lam=None):
        self.beta = _check_beta(beta)
        n = self.beta.shape[0]
        labels = list(labels)
        if len(labels) != n:
            raise KernelStructureError(f"{len(labels)} labels for a {n}x{n} beta")
        if len(set(labels)) != n:
            raise KernelStructureError("labels are not unique")
        self.labels = labels
        self.alpha = _check_alpha(alpha or {}, n)
        self.lam = lam
        self._tensor = None

    @classmethod
    def real(cls, beta, labels=None, lam=None):
        beta = np.asarray(beta)
        if labels is None:
            labels = [str(i) for i in range(beta.shape[0])]
        return cls(labels, beta, {}, lam=lam)

    @property
    def n(self):
        return self.beta.shape[0]

    @property
    def is_real(self):
        return not self.alpha

    def alpha_tensor(self):
        if self._tensor is None:
            n = self.n
            A = np.zeros((n, n, n))
            for (i, j, k), v in self.alpha.items():
                A[i, j, k] = A[j, k, i] = A[k, i, j] = v
                A[j, i, k] = A[i, k, j] = A[k, j, i] = -v
            self._tensor = A
        return self._tensor

    def alpha_at(self, i, j, k):
        return float(self.alpha_tensor()[i, j, k])

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def phi(self, base, keep_base=False):
        """``beta(x, x0) beta(x0, y) - exp(i alpha(x0, x, y)) beta(x, y)``.

        Rows/columns run over all indices except ``base`` unless ``keep_base``.
        """
        n = self.n
        idx = np.arange(n) if keep_base else np.delete(np.arange(n), base)
        b = self.beta[idx, base]
        sub = self.beta[np.ix_(idx, idx)]
        if self.is_real:
            return np.outer(b, b) - sub
        phase = np.exp(1j * self.alpha_tensor()[base][np.ix_(idx, idx)])
        return np.outer(b, b) - phase * sub

    def max_difference(self, other):
        """Largest entrywise gap in beta (relative to max(1, beta)) and in alpha."""
        if other.n != self.n:
            return math.inf, math.inf
        db = np.abs(self.beta - other.beta) / np.maximum(1.0, np.abs(self.beta))
        da = np.abs(self.alpha_tensor() - other.alpha_tensor())
        return float(db.max()), float(da.max()) if da.size else 0.0

    def __repr__(self):
        return f"ComplexHyperbolicKernel(n={self.n}, alpha_triples={len(self.alpha)})"


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

@dataclass
class ValidationReport:
    per_base: dict
    cocycle_residual: float
    verdict: Status
    witness: Optional[tuple] = None
    cocycle_witness: Optional[tuple] = None

    @property
    def min_margin(self):
        return min((r.margin for r in self.per_base.values()), default=0.0)

    def to_dict(self):
        d = {
            "verdict": self.verdict.value,
            "cocycle_residual": self.cocycle_residual,
            "per_base": {str(b): r.to_dict() for b, r in sorted(self.per_base.items())},
        }
        if self.witness is not None:
            base, vec = self.witness
            d["witness"] = {"base": base, "coefficients": [[float(c.real), float(c.imag)] for c in vec]}
        if self.cocycle_witness is not None:
            d["cocycle_witness"] = list(self.cocycle_witness)
        return d


@dataclass
class CocycleAudit:
    residual: float
    quadruple: Optional[tuple]
    alternating_residual: float


def check_cocycle(alpha, n_points=None):
    """Largest ``|d alpha|`` over quadruples, plus an audit of alternation.

    ``alpha`` is a kernel, a sparse triple map or a dense ``n x n x n`` array.
    """
    if isinstance(alpha, ComplexHyperbolicKernel):
        A = alpha.alpha_tensor()
    elif isinstance(alpha, dict):
        if n_points is None:
            n_points = 1 + max((max(k) for k in alpha), default=-1)
        A = ComplexHyperbolicKernel(range(n_points), np.eye(n_points), alpha).alpha_tensor()
    else:
        A = np.asarray(alpha, dtype=float)
    alt = 0.0
    if A.size:
        for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
            alt = max(alt, float(np.max(np.abs(A + A.transpose(perm)))))
    best, arg = cocycle_residual(A)
    quad = tuple(int(x) for x in arg) if arg[0] >= 0 else None
    return CocycleAudit(best, quad, alt)


def _verdict(per_base, cocycle):
    verdicts = [r.verdict for r in per_base.values()]
    if cocycle > COCYCLE_TOL or Verdict.NOT_PSD in verdicts:
        return Status.INVALID
    if Verdict.MARGINAL in verdicts:
        return Status.MARGINAL
    return Status.VALID


def validate_cht(K, base=None, tol=DEFAULT_TOL):
    """Check that ``(beta, alpha)`` is of complex hyperbolic type.

    ``base=None`` tests every base point, an integer tests only that one.
    """
    n = K.n
    bases = range(n) if base is None else [int(base)]
    audit = check_cocycle(K) if K.alpha and n >= 4 else CocycleAudit(0.0, None, 0.0)
    per_base = {}
    witness = None
    for b in bases:
        if not 0 <= b < n:
            raise IndexError(f"base {b} out of range for {n} points")
        rep = psd_check(K.phi(b), tol) if n > 1 else PsdReport(0.0, 0.0, Verdict.PSD, None, tol)
        per_base[b] = rep
        if witness is None and rep.witness is not None:
            full = np.zeros(n, dtype=np.complex128)
            full[np.arange(n) != b] = rep.witness
            witness = (b, full)
    verdict = _verdict(per_base, audit.residual)
    cw = audit.quadruple if audit.residual > COCYCLE_TOL else None
    return ValidationReport(per_base, audit.residual, verdict, witness, cw)


def validate_rht(beta, base=None, tol=DEFAULT_TOL):
    """Real hyperbolic type: ``beta(x, x0) beta(x0, y) - beta(x, y)`` of positive type."""
    if isinstance(beta, ComplexHyperbolicKernel):
        K = ComplexHyperbolicKernel(beta.labels, beta.beta, {}, lam=beta.lam)
    else:
        K = ComplexHyperbolicKernel.real(beta)
    return validate_cht(K, base, tol)


def _beta_of(beta):
    return beta.beta if isinstance(beta, ComplexHyperbolicKernel) else _check_beta(beta)


# --------------------------------------------------------------------------
# Schoenberg transforms and polarisation
# --------------------------------------------------------------------------

DEFAULT_T_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass
class SchoenbergReport:
    log_cnd: PsdReport
    inverse_powers: dict

    @property
    def ok(self):
        return self.log_cnd.ok and all(r.ok for r in self.inverse_powers.values())


def schoenberg_suite(beta, t_grid=DEFAULT_T_GRID, tol=DEFAULT_TOL):
    """``log beta`` conditionally negative and ``beta ** -t`` positive for each ``t``."""
    B = _beta_of(beta)
    if np.any(B <= 0):
        raise KernelStructureError("beta must be strictly positive for the log transform")
    log_rep = cnd_check(np.log(B), tol)
    powers = {float(t): psd_check(B ** (-float(t)), tol) for t in t_grid}
    return SchoenbergReport(log_rep, powers)


@dataclass
class PolarisationReport:
    phi: np.ndarray
    psi: np.ndarray
    identity_residual: float
    phi_report: PsdReport
    psi_report: PsdReport

    @property
    def agree(self):
        return self.phi_report.ok == self.psi_report.ok


def polarisation_equiv(beta, x0, tol=DEFAULT_TOL):
    """Compare ``Phi`` (positive type) against ``Psi`` (conditionally negative).

    ``Psi(x,y) = 1/2 (beta(x,x0) - beta(x0,y))**2 + beta(x,y) - 1`` and
    ``Phi(x,y) = Psi(x,x0) + Psi(x0,y) - Psi(x,y)``. The identity residual is
    relative to ``max(1, max beta**2)``, the size of the terms involved.
    """
    B = _beta_of(beta)
    b = B[:, x0]
    psi = 0.5 * (b[:, None] - b[None, :]) ** 2 + B - 1.0
    phi_via_psi = psi[:, [x0]] + psi[[x0], :] - psi
    phi = np.outer(b, b) - B
    scale = max(1.0, float(np.max(B)) ** 2)
    resid = float(np.max(np.abs(phi - phi_via_psi))) / scale
    return PolarisationReport(phi, psi, resid, psd_check(phi, tol), cnd_check(psi, tol))


# --------------------------------------------------------------------------
# Busemann decomposition
# --------------------------------------------------------------------------

@dataclass
class BusemannReport:
    psi: dict
    cnd: Optional[PsdReport] = None
    labels: list = field(default_factory=list)


def _inverse_map(table, identity, labels):
    inv = {}
    for a in labels:
        for b in labels:
            if table.get((a, b)) == identity:
                inv[a] = b
                break
        else:
            raise KeyError(f"no inverse of {a!r} in the multiplication table")
    return inv


def busemann_decompose(F_values, chi, identity=None, table=None, tol=DEFAULT_TOL):
    """Solve ``F(g) = cosh chi(g) + exp(-chi(g)) Psi(g)`` for ``Psi``.

    With a multiplication table ``{(a, b): a*b}`` the matrix ``Psi(g_j^-1 g_k)``
    is also tested for conditional negativity.
    """
    labels = list(F_values)
    psi = {}
    for g in labels:
        c = float(chi[g])
        p = math.exp(c) * (float(F_values[g]) - math.cosh(c))
        if p < -tol * max(1.0, math.exp(c) * abs(float(F_values[g]))):
            raise BusemannInfeasibleError(
                f"Psi({g!r}) = {p:.3e} < 0: the action does not fix the asserted boundary point")
        psi[g] = p
    if identity is not None:
        if abs(float(F_values[identity]) - 1.0) > 1e-12 or abs(float(chi[identity])) > 1e-12:
            raise ValueError("F(identity) must be 1 and chi(identity) must be 0")
    cnd = None
    if table is not None:
        if identity is None:
            raise ValueError("a multiplication table needs the identity label")
        inv = _inverse_map(table, identity, labels)
        K = np.empty((len(labels), len(labels)))
        for j, a in enumerate(labels):
            for k, b in enumerate(labels):
                K[j, k] = psi[table[(inv[a], b)]]
        cnd = cnd_check(0.5 * (K + K.T), tol)
    return BusemannReport(psi, cnd, labels)


def busemann_synthesize(chi, psi):
    """Forward map ``(chi, Psi) -> F``, inverse of :func:`busemann_decompose`."""
    return {g: math.cosh(float(chi[g])) + math.exp(-float(chi[g])) * float(psi[g]) for g in psi}


def busemann_from_affine(elements):
    """Values of ``F(g) = cosh d(g p, p)`` for an action fixing a boundary point.

    ``elements`` maps a label to ``(chi, A, b)``: ``g_* v = A v + b`` is an affine
    isometry of the horospherical factor and ``g`` acts by
    ``sigma_s(v) -> sigma_{s - chi}(exp(-chi) g_* v)``, with base point
    ``p = sigma_0(0)``. Returns ``(F, chi, psi)`` where ``psi = 1/2 |g_* 0|**2``
    is computed independently of ``F``.
    """
    from hypkern.minkowski import horo_point

    p = horo_point(0.0, np.zeros(1))
    F, chi, psi = {}, {}, {}
    for g, (c, A, b) in elements.items():
        b = np.atleast_1d(np.asarray(b, dtype=float))
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if np.max(np.abs(A.T @ A - np.eye(A.shape[0]))) > 1e-10:
            raise ValueError(f"linear part of {g!r} is not orthogonal")
        c = float(c)
        gp = horo_point(-c, math.exp(-c) * b)
        F[g] = gp.form(np.concatenate(([0.5, 1.0], np.zeros(b.size))))
        chi[g] = c
        psi[g] = 0.5 * float(b @ b)
    return F, chi, psi
