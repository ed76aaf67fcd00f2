"""Minkowski model of real and complex hyperbolic space.

Vectors live in ``F (+) F^n`` (``F`` real or complex) with the Hermitian form
``B(z+u, w+v) = conj(z) w - <u, v>``, conjugate-linear in the first slot.
Points are positive lines; the stored lift is normalised to ``B(X, X) = 1``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from hypkern.numcore import DomainError

ARCOSH_WINDOW = 1e-12
NORM_TOL = 1e-10
ISOMETRY_TOL = 1e-10


class Field(str, enum.Enum):
    REAL = "R"
    COMPLEX = "C"


@dataclass(frozen=True)
class MinkowskiSpace:
    field: Field
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("Hilbert-part dimension must be >= 0")
        object.__setattr__(self, "field", Field(self.field))

    @property
    def dim(self):
        return self.n + 1

    @property
    def dtype(self):
        return np.float64 if self.field is Field.REAL else np.complex128

    def signature(self):
        return np.diag([1.0] + [-1.0] * self.n)

    def origin(self):
        x = np.zeros(self.dim, dtype=self.dtype)
        x[0] = 1.0
        return MinkowskiPoint(self, x)


def _raw(x):
    return x.coords if isinstance(x, MinkowskiPoint) else np.asarray(x)


def mink_form(X, Y):
    """``B(X, Y)`` for points or raw coordinate vectors."""
    x, y = _raw(X), _raw(Y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return complex(np.conj(x[0]) * y[0] - np.vdot(x[1:], y[1:]))


def form_matrix(X, Y=None):
    """Matrix ``B(X_j, Y_k)`` for coordinate arrays with one row per vector."""
    X = np.atleast_2d(X)
    Y = X if Y is None else np.atleast_2d(Y)
    J = np.ones(X.shape[1])
    J[1:] = -1.0
    return (X.conj() * J) @ Y.T


class MinkowskiPoint:
    """A positive vector normalised to ``B(X, X) = 1``."""

    __slots__ = ("space", "coords")

    def __init__(self, space, coords):
        coords = np.asarray(coords, dtype=space.dtype)
        if coords.shape != (space.dim,):
            raise ValueError(f"expected {space.dim} coordinates, got shape {coords.shape}")
        norm = mink_form(coords, coords).real
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"lift is not normalised: B(X, X) = {float(norm)!r}")
        self.space = space
        self.coords = coords

    @classmethod
    def from_vector(cls, space, v, canonical=True):
        """Normalise a positive vector; ``canonical`` rotates the first coordinate onto R_{>0}."""
        v = np.asarray(v, dtype=np.complex128 if space.field is Field.COMPLEX else np.float64)
        norm = mink_form(v, v).real
        if not norm > 0.0:
            raise DomainError(f"vector is not positive: B(X, X) = {float(norm)!r}")
        v = v / math.sqrt(norm)
        if canonical and v[0] != 0:
            v = v * (abs(v[0]) / v[0])
            v[0] = abs(v[0])
        return cls(space, v)

    @classmethod
    def lift(cls, space, u):
        """Canonical-gauge lift ``sqrt(1 + |u|^2) (+) u`` of a Hilbert-part vector."""
        u = np.asarray(u, dtype=space.dtype)
        x0 = math.sqrt(1.0 + float(np.vdot(u, u).real))
        return cls(space, np.concatenate(([x0], u)).astype(space.dtype))

    @property
    def hilbert(self):
        return self.coords[1:]

    def __repr__(self):
        return f"MinkowskiPoint({self.space.field.value}, {self.coords!r})"


def cosh_dist(x, y):
    X, Y = _raw(x), _raw(y)
    bxx, byy = mink_form(X, X).real, mink_form(Y, Y).real
    if not (bxx > 0 and byy > 0):
        raise DomainError("distance needs positive vectors")
    ratio = abs(mink_form(X, Y)) / math.sqrt(bxx * byy)
    if ratio < 1.0:
        if ratio < 1.0 - ARCOSH_WINDOW:
            raise DomainError(f"|B(X,Y)| below 1 ({ratio!r}): not a pair of positive lines")
        return 1.0
    return ratio


def dist(x, y):
    """Hyperbolic distance via ``cosh d = |B(X,Y)| / sqrt(B(X,X) B(Y,Y))``."""
    return math.acosh(cosh_dist(x, y))


def cosh_dist_matrix(P):
    """Clamped ``cosh d`` for all pairs of rows of a coordinate array."""
    B = form_matrix(P)
    nrm = np.sqrt(np.real(np.diag(B)))
    if np.any(~(nrm > 0)):
        raise DomainError("distance needs positive vectors")
    ratio = np.abs(B) / np.outer(nrm, nrm)
    if np.any(ratio < 1.0 - ARCOSH_WINDOW):
        raise DomainError("|B(X,Y)| below 1: not a set of positive lines")
    ratio = np.maximum(ratio, 1.0)
    np.fill_diagonal(ratio, 1.0)
    return ratio


def _arg_of_triple(tp):
    mag = abs(tp)
    if tp.real < -1e-10 * mag:
        raise AssertionError(f"triple product {tp!r} has negative real part")
    return math.atan2(tp.imag, tp.real)


def cartan_arg(x, y, z):
    """Argument of ``B(X,Y) B(Y,Z) B(Z,X)``, a value in (-pi/2, pi/2)."""
    tp = mink_form(x, y) * mink_form(y, z) * mink_form(z, x)
    return _arg_of_triple(tp)


def cartan_tensor(P):
    """Dense alternating tensor of Cartan arguments for the rows of ``P``."""
    B = form_matrix(P)
    T = B[:, :, None] * B[None, :, :] * B.T[:, None, :]
    mag = np.abs(T)
    if np.any(T.real < -1e-10 * mag):
        raise AssertionError("triple product with negative real part")
    A = np.arctan2(T.imag, T.real)
    # exact alternation: average with the antisymmetric images
    A = (A - A.transpose(1, 0, 2) - A.transpose(2, 1, 0) - A.transpose(0, 2, 1)
         + A.transpose(1, 2, 0) + A.transpose(2, 0, 1)) / 6.0
    return A


def tautological_kernel(points, labels=None):
    """The pair (cosh d, Cartan argument) on a list of points."""
    from hypkern.kernels import ComplexHyperbolicKernel

    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    P = np.array([_raw(p) for p in points])
    beta = cosh_dist_matrix(P)
    alpha = {}
    n = len(points)
    if n >= 3 and np.iscomplexobj(P) and np.any(P.imag != 0):
        A = cartan_tensor(P)
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    if A[i, j, k] != 0.0:
                        alpha[(i, j, k)] = float(A[i, j, k])
    if labels is None:
        labels = [str(i) for i in range(n)]
    return ComplexHyperbolicKernel(labels, beta, alpha)


def random_points(space, m, rng=None, scale=1.0):
    """``m`` canonical-gauge points with Gaussian Hilbert parts of the given scale."""
    rng = np.random.default_rng(rng)
    if space.field is Field.REAL:
        U = rng.normal(scale=scale, size=(m, space.n))
    else:
        U = (rng.normal(scale=scale, size=(m, space.n))
             + 1j * rng.normal(scale=scale, size=(m, space.n)))
    return [MinkowskiPoint.lift(space, u) for u in U]


# --------------------------------------------------------------------------
# isometries
# --------------------------------------------------------------------------

class Isometry:
    """A form-preserving matrix ``g`` with ``g* J g = J``."""

    __slots__ = ("space", "matrix")

    def __init__(self, space, matrix):
        g = np.asarray(matrix, dtype=space.dtype)
        if g.shape != (space.dim, space.dim):
            raise ValueError(f"expected a {space.dim}x{space.dim} matrix")
        J = space.signature()
        resid = np.max(np.abs(g.conj().T @ J @ g - J))
        scale = max(1.0, float(np.max(np.abs(g))) ** 2)
        if resid > ISOMETRY_TOL * scale:
            raise DomainError(f"matrix does not preserve the form (residual {resid:.3e})")
        self.space = space
        self.matrix = g

    def __call__(self, p):
        if isinstance(p, MinkowskiPoint):
            return MinkowskiPoint.from_vector(self.space, self.matrix @ p.coords, canonical=False)
        return self.matrix @ np.asarray(p)

    def __matmul__(self, other):
        return Isometry(self.space, self.matrix @ other.matrix)

    @classmethod
    def identity(cls, space):
        return cls(space, np.eye(space.dim))


def boost(space, a, axis=1):
    """Hyperbolic translation of length ``a`` along the geodesic through the origin and ``axis``."""
    g = np.eye(space.dim, dtype=space.dtype)
    g[0, 0] = g[axis, axis] = math.cosh(a)
    g[0, axis] = g[axis, 0] = math.sinh(a)
    return Isometry(space, g)


def hilbert_rotation(space, U):
    """Elliptic isometry acting by the unitary/orthogonal ``U`` on the Hilbert part."""
    g = np.eye(space.dim, dtype=np.complex128)
    g[1:, 1:] = U
    if space.field is Field.REAL:
        g = g.real
    return Isometry(space, g)


def _random_unitary(rng, n, real):
    if n == 0:
        return np.zeros((0, 0))
    Z = rng.normal(size=(n, n))
    if not real:
        Z = Z + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_isometry(space, rng=None, max_boost=1.5):
    """Product of a random elliptic, a boost and another random elliptic element."""
    rng = np.random.default_rng(rng)
    real = space.field is Field.REAL
    k1 = hilbert_rotation(space, _random_unitary(rng, space.n, real))
    k2 = hilbert_rotation(space, _random_unitary(rng, space.n, real))
    g = k1.matrix
    if space.n >= 1:
        g = g @ boost(space, rng.uniform(-max_boost, max_boost)).matrix
    g = g @ k2.matrix
    if not real:
        g = g * np.exp(1j * rng.uniform(0, 2 * math.pi))
    return Isometry(space, g)


@dataclass
class TranslationLength:
    estimate: float
    naive: float
    n_used: int
    cosh_sequence: np.ndarray = field(repr=False)
    monotone: bool = True


def translation_length(g, p, n_max=64):
    """Estimate the translation length from the orbit ``g^n p``, ``n = 1..n_max``.

    ``naive`` is ``log(cosh d(g^N p, p)) / N``. ``estimate`` differences the
    logarithms between ``N/2`` and ``N``, which cancels the additive constant
    in ``log cosh d(g^n p, p) = n l + c + o(1)``.
    """
    if n_max < 8:
        raise ValueError("n_max must be at least 8")
    P = p.coords if isinstance(p, MinkowskiPoint) else np.asarray(p)
    bpp = mink_form(P, P).real
    if not bpp > 0:
        raise DomainError("base point must be a positive vector")
    seq = []
    X = P.copy()
    for n in range(1, n_max + 1):
        X = g.matrix @ X
        # B(g^n P, g^n P) = B(P, P); recomputing it cancels catastrophically
        with np.errstate(over="ignore", invalid="ignore"):
            c = max(1.0, abs(mink_form(X, P)) / bpp) if np.all(np.isfinite(X)) else math.inf
        if not math.isfinite(c) or c > 1e300:
            warnings.warn(f"cosh overflow at n={n}; reducing n_max to {n - 1}", RuntimeWarning)
            break
        seq.append(c)
    seq = np.array(seq)
    N = len(seq)
    if N < 2:
        raise DomainError("orbit overflowed before two iterates")
    logs = np.log(seq)
    half = N // 2
    naive = float(logs[-1] / N)
    estimate = float((logs[-1] - logs[half - 1]) / (N - half))
    monotone = bool(np.all(np.diff(seq) >= -1e-12 * seq[1:]))
    return TranslationLength(max(estimate, 0.0), naive, N, seq, monotone)


# --------------------------------------------------------------------------
# horospherical chart
# --------------------------------------------------------------------------

_S2 = math.sqrt(2.0)


def horo_form(a, b):
    """``x y' + x' y - <v, v'>`` on horospherical coordinates ``(x, y, v)``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(a[0] * b[1] + b[0] * a[1] - a[2:] @ b[2:])


def horo_to_diagonal(h):
    h = np.asarray(h, dtype=float)
    out = h.copy()
    out[0] = (h[0] + h[1]) / _S2
    out[1] = (h[0] - h[1]) / _S2
    return out


def diagonal_to_horo(x):
    x = np.asarray(x, dtype=float)
    out = x.copy()
    out[0] = (x[0] + x[1]) / _S2
    out[1] = (x[0] - x[1]) / _S2
    return out


@dataclass(frozen=True)
class HoroPoint:
    coords: np.ndarray

    def form(self, other):
        return horo_form(self.coords, other.coords if isinstance(other, HoroPoint) else other)

    def to_minkowski(self):
        d = horo_to_diagonal(self.coords)
        return MinkowskiPoint(MinkowskiSpace(Field.REAL, d.size - 1), d)


def horo_point(s, v):
    """``sigma_s(v) = (1/2 (e^s + e^-s |v|^2), e^-s, e^-s v)`` in the basis (x, y, E)."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    em = math.exp(-s)
    x = 0.5 * (math.exp(s) + em * float(v @ v))
    return HoroPoint(np.concatenate(([x, em], em * v)))
