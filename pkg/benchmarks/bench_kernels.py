"""Compare the numba and numpy flavours of the hot kernels.

Kernel-level timings call both flavours directly in one process. The
end-to-end timing runs ``validate_cht`` in two subprocesses, one of them with
``HYPKERN_DISABLE_NUMBA=1``.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--no-e2e]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from hypkern._kernels import (
    cocycle_residual_nb,
    cocycle_residual_np,
    jacobi_eigh_nb,
    jacobi_eigh_np,
    series_horner_nb,
    series_horner_np,
)
from hypkern.minkowski import Field, MinkowskiSpace, cartan_tensor, random_points
from hypkern.numcore import q_coefficients

E2E = """
import json, time
import numpy as np
from hypkern import backend, tautological_kernel, validate_cht
from hypkern.minkowski import Field, MinkowskiSpace, random_points
rng = np.random.default_rng(1)
Ks = [tautological_kernel(random_points(MinkowskiSpace(Field.COMPLEX, 4), 12, rng)) for _ in range(20)]
validate_cht(Ks[0])
t0 = time.perf_counter()
for K in Ks:
    validate_cht(K)
print(json.dumps({"backend": backend(), "seconds": time.perf_counter() - t0}))
"""


def hermitian(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return np.ascontiguousarray(0.5 * (X + X.conj().T))


def best_of(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def cases(rng):
    for n in (8, 32, 64):
        H = hermitian(rng, n)
        yield f"jacobi n={n}", lambda: jacobi_eigh_nb(H, 1e-15, 60), lambda: jacobi_eigh_np(H, 1e-15, 60)
    for m in (10, 20):
        pts = random_points(MinkowskiSpace(Field.COMPLEX, 3), m, rng)
        A = np.ascontiguousarray(cartan_tensor(np.array([p.coords for p in pts])))
        yield f"cocycle m={m}", lambda: cocycle_residual_nb(A), lambda: cocycle_residual_np(A)
    c = np.ascontiguousarray(q_coefficients(0.5, 4096))
    z = np.ascontiguousarray((rng.uniform(-0.9, 0.9, 400) + 0j))
    yield "q-series 4096 terms x 400", lambda: series_horner_nb(c, z), lambda: series_horner_np(c, z)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true", help="skip the subprocess comparison")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numba':>12s} {'numpy':>12s} {'speedup':>8s}")
    for name, nb, np_ in cases(rng):
        nb()  # compile
        t_nb, t_np = best_of(nb, args.repeat), best_of(np_, args.repeat)
        print(f"{name:28s} {t_nb * 1e6:10.1f}us {t_np * 1e6:10.1f}us {t_np / t_nb:7.1f}x")

    if args.no_e2e:
        return
    print("\nvalidate_cht on 20 twelve-point kernels")
    for flag in ("0", "1"):
        env = dict(os.environ, HYPKERN_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        r = json.loads(out.stdout)
        print(f"  {r['backend']:6s} {r['seconds']:.3f}s")


if __name__ == "__main__":
    main()
