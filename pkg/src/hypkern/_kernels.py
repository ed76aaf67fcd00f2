"""Hot inner loops, each in a numba flavour and a vectorised numpy flavour.

The public dispatchers at the bottom pick one according to
:data:`hypkern._accel.USE_NUMBA`. Both flavours are importable directly so the
test-suite and the benchmark can compare them.
"""
import numpy as np

from hypkern._accel import USE_NUMBA, njit

JACOBI_MAX_SWEEPS = 60
JACOBI_REL_TOL = 1e-15


# --------------------------------------------------------------------------
# cyclic Jacobi for Hermitian matrices
# --------------------------------------------------------------------------

@njit
def jacobi_eigh_nb(a, rel_tol, max_sweeps):
    n = a.shape[0]
    A = a.copy()
    V = np.eye(n, dtype=np.complex128)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += A[i, j].real ** 2 + A[i, j].imag ** 2
    fro = np.sqrt(fro)
    sweeps = 0
    if fro == 0.0:
        return np.zeros(n), V, 0
    tiny = 1e-300
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += A[i, j].real ** 2 + A[i, j].imag ** 2
        if np.sqrt(off) <= rel_tol * fro:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= tiny:
                    continue
                e = apq / mag
                ec = e.conjugate()
                theta = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * ec * akq
                    A[k, q] = s * e * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * e * aqk
                    A[q, k] = s * ec * apk + c * aqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * ec * vkq
                    V[k, q] = s * e * vkp + c * vkq
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i].real
    order = np.argsort(w)
    return w[order], V[:, order], sweeps


def _tournament(n):
    """Round-robin schedule: n-1 rounds of disjoint index pairs (p < q)."""
    m = n + (n % 2)
    arr = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            u, v = arr[i], arr[m - 1 - i]
            if u < n and v < n:
                ps.append(min(u, v))
                qs.append(max(u, v))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        arr = [arr[0], arr[-1]] + arr[1:-1]
    return rounds


def jacobi_eigh_np(a, rel_tol, max_sweeps):
    n = a.shape[0]
    A = np.array(a, dtype=np.complex128, copy=True)
    V = np.eye(n, dtype=np.complex128)
    fro = np.linalg.norm(A)
    if fro == 0.0:
        return np.zeros(n), V, 0
    rounds = _tournament(n) if n > 1 else []
    offmask = ~np.eye(n, dtype=bool)
    sweeps = 0
    for _ in range(max_sweeps):
        if np.linalg.norm(A[offmask]) <= rel_tol * fro:
            break
        sweeps += 1
        for P, Q in rounds:
            apq = A[P, Q]
            mag = np.abs(apq)
            live = mag > 1e-300
            safe = np.where(live, mag, 1.0)
            e = np.where(live, apq / safe, 1.0)
            theta = (A[Q, Q].real - A[P, P].real) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            c = np.where(live, 1.0 / np.sqrt(t * t + 1.0), 1.0)
            s = np.where(live, t * c, 0.0)
            ec = e.conj()
            colp, colq = A[:, P].copy(), A[:, Q].copy()
            A[:, P] = c * colp - s * ec * colq
            A[:, Q] = s * e * colp + c * colq
            rowp, rowq = A[P, :].copy(), A[Q, :].copy()
            A[P, :] = c[:, None] * rowp - (s * e)[:, None] * rowq
            A[Q, :] = (s * ec)[:, None] * rowp + c[:, None] * rowq
            vp, vq = V[:, P].copy(), V[:, Q].copy()
            V[:, P] = c * vp - s * ec * vq
            V[:, Q] = s * e * vp + c * vq
            A[P, Q] = np.where(live, 0.0, A[P, Q])
            A[Q, P] = np.where(live, 0.0, A[Q, P])
            idx = np.concatenate([P, Q])
            A[idx, idx] = A[idx, idx].real
    w = np.real(np.diag(A)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], sweeps


# --------------------------------------------------------------------------
# coboundary of a dense alternating 2-cochain
# --------------------------------------------------------------------------

@njit
def cocycle_residual_nb(alpha):
    n = alpha.shape[0]
    best = 0.0
    arg = np.full(4, -1, dtype=np.int64)
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                for d in range(c + 1, n):
                    r = alpha[b, c, d] - alpha[a, c, d] + alpha[a, b, d] - alpha[a, b, c]
                    if abs(r) > best:
                        best = abs(r)
                        arg[0] = a
                        arg[1] = b
                        arg[2] = c
                        arg[3] = d
    return best, arg


def cocycle_residual_np(alpha):
    n = alpha.shape[0]
    best, arg = 0.0, np.full(4, -1, dtype=np.int64)
    if n < 4:
        return best, arg
    i = np.arange(n)
    inc = (i[:, None, None] < i[None, :, None]) & (i[None, :, None] < i[None, None, :])
    for a in range(n - 3):
        r = (alpha
             - alpha[a][None, :, :]
             + alpha[a][:, None, :]
             - alpha[a][:, :, None])
        mask = inc & (i > a)[:, None, None]
        r = np.where(mask, np.abs(r), 0.0)
        k = int(np.argmax(r))
        if r.flat[k] > best:
            best = float(r.flat[k])
            b, c, d = np.unravel_index(k, r.shape)
            arg = np.array([a, b, c, d], dtype=np.int64)
    return best, arg


# --------------------------------------------------------------------------
# Horner evaluation of sum_{m>=1} coeffs[m-1] z^m
# --------------------------------------------------------------------------

@njit
def series_horner_nb(coeffs, z):
    out = np.empty(z.shape[0], dtype=np.complex128)
    N = coeffs.shape[0]
    for i in range(z.shape[0]):
        acc = 0.0 + 0.0j
        zi = z[i]
        for m in range(N - 1, -1, -1):
            acc = acc * zi + coeffs[m]
        out[i] = acc * zi
    return out


def series_horner_np(coeffs, z):
    acc = np.zeros(z.shape, dtype=np.complex128)
    for m in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * z + coeffs[m]
    return acc * z


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def jacobi_eigh(a, rel_tol=JACOBI_REL_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if USE_NUMBA:
        return jacobi_eigh_nb(a, rel_tol, max_sweeps)
    return jacobi_eigh_np(a, rel_tol, max_sweeps)


def cocycle_residual(alpha):
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    if USE_NUMBA:
        best, arg = cocycle_residual_nb(alpha)
        return float(best), arg
    return cocycle_residual_np(alpha)


def series_horner(coeffs, z):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    z = np.asarray(z, dtype=np.complex128)
    flat = np.ascontiguousarray(z.ravel())
    if USE_NUMBA:
        out = series_horner_nb(coeffs, flat)
    else:
        out = series_horner_np(coeffs, flat)
    return out.reshape(z.shape)
