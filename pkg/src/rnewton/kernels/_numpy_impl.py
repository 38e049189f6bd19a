"""Vectorized numpy implementations of the hot kernels.

The SplitMix64 stream is counter-based (state advances by a fixed odd
constant per draw), so the whole uniform block is an elementwise integer
function of the draw index. Integer arithmetic is exact, which keeps the
uniform stream bit-identical to the sequential loop in the numba backend.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def raw_stream(state, count):
    """Return (uint64 outputs, advanced state) of the SplitMix64 generator."""
    idx = np.arange(1, int(count) + 1, dtype=np.uint64)
    z = state + idx * GOLDEN
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    z = z ^ (z >> np.uint64(31))
    # Python ints avoid the scalar-overflow warning; the wrap is intended.
    new_state = np.uint64((int(state) + int(count) * int(GOLDEN)) & 0xFFFFFFFFFFFFFFFF)
    return z, new_state


def uniforms(state, count):
    """count doubles in [0, 1) from the top 53 bits of the stream."""
    z, new_state = raw_stream(state, count)
    return (z >> np.uint64(11)).astype(np.float64) * INV_2_53, new_state


def normal_pairs(state, npairs):
    """2*npairs standard normal deviates via Box-Muller on consecutive uniforms."""
    u, new_state = uniforms(state, 2 * int(npairs))
    u1 = u[0::2]
    u2 = u[1::2]
    # 1 - u1 lies in (0, 1], so the log is finite.
    r = np.sqrt(-2.0 * np.log1p(-u1))
    ang = (2.0 * np.pi) * u2
    out = np.empty(2 * int(npairs), dtype=np.float64)
    out[0::2] = r * np.cos(ang)
    out[1::2] = r * np.sin(ang)
    return out, new_state


def mgs_rows(vectors, drop_tol):
    """Modified Gram-Schmidt over the rows of `vectors`.

    Rows whose residual norm falls below drop_tol are dropped. A second
    orthogonalization pass keeps the Gram matrix at the identity to
    round-off even for mildly correlated inputs. Returns the (count, dim)
    array of orthonormal rows.
    """
    k, dim = vectors.shape
    basis = np.empty((k, dim), dtype=np.float64)
    count = 0
    for i in range(k):
        w = vectors[i].astype(np.float64, copy=True)
        if count:
            w -= (basis[:count] @ w) @ basis[:count]
            w -= (basis[:count] @ w) @ basis[:count]
        nrm = np.sqrt(w @ w)
        if nrm < drop_tol:
            continue
        basis[count] = w / nrm
        count += 1
    return basis[:count].copy()
