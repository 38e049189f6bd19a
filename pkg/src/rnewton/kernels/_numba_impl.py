"""Numba-compiled implementations of the hot kernels.

Same contracts as rnewton.kernels._numpy_impl. The uniform (integer)
stream is bit-identical to the numpy backend; normal deviates may differ
from it in the last few ulps because libm and numpy SIMD transcendentals
round differently.
"""

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def raw_stream(state, count):
    out = np.empty(count, dtype=np.uint64)
    s = state
    for i in range(count):
        s = s + GOLDEN
        z = s
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        out[i] = z ^ (z >> np.uint64(31))
    return out, s


@njit(cache=True)
def uniforms(state, count):
    z, new_state = raw_stream(state, count)
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        out[i] = np.float64(z[i] >> np.uint64(11)) * INV_2_53
    return out, new_state


@njit(cache=True)
def normal_pairs(state, npairs):
    u, new_state = uniforms(state, 2 * npairs)
    out = np.empty(2 * npairs, dtype=np.float64)
    for i in range(npairs):
        r = np.sqrt(-2.0 * np.log1p(-u[2 * i]))
        ang = (2.0 * np.pi) * u[2 * i + 1]
        out[2 * i] = r * np.cos(ang)
        out[2 * i + 1] = r * np.sin(ang)
    return out, new_state


@njit(cache=True)
def mgs_rows(vectors, drop_tol):
    k, dim = vectors.shape
    basis = np.empty((k, dim), dtype=np.float64)
    count = 0
    for i in range(k):
        w = vectors[i].copy()
        for _ in range(2):
            for j in range(count):
                c = 0.0
                for t in range(dim):
                    c += basis[j, t] * w[t]
                for t in range(dim):
                    w[t] -= c * basis[j, t]
        nrm = 0.0
        for t in range(dim):
            nrm += w[t] * w[t]
        nrm = np.sqrt(nrm)
        if nrm < drop_tol:
            continue
        for t in range(dim):
            basis[count, t] = w[t] / nrm
        count += 1
    return basis[:count].copy()
