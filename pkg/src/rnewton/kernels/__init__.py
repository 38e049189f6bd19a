"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time: numba when it is importable,
unless the environment variable RNEWTON_PURE_NUMPY is set to a non-empty
value other than "0", in which case the numpy implementations are used.
`BACKEND` records the choice. Both backends produce bit-identical uniform
integer streams; see benchmarks/bench_kernels.py for a speed comparison.
"""

import os

import numpy as np

from . import _numpy_impl

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _want_pure_numpy():
    flag = os.environ.get("RNEWTON_PURE_NUMPY", "")
    return flag not in ("", "0")


if _want_pure_numpy():
    _impl = _numpy_impl
    BACKEND = "numpy"
else:
    try:
        from . import _numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = _numpy_impl
        BACKEND = "numpy"


def raw_stream(state, count):
    """SplitMix64: `count` uint64 outputs and the advanced state."""
    out, new_state = _impl.raw_stream(np.uint64(state & _MASK64), np.int64(count))
    return out, int(new_state)


def uniforms(state, count):
    """`count` doubles in [0, 1) and the advanced state."""
    out, new_state = _impl.uniforms(np.uint64(state & _MASK64), np.int64(count))
    return out, int(new_state)


def normal_pairs(state, npairs):
    """2*npairs standard normals (Box-Muller) and the advanced state."""
    out, new_state = _impl.normal_pairs(np.uint64(state & _MASK64), np.int64(npairs))
    return out, int(new_state)


def mgs_rows(vectors, drop_tol=1e-12):
    """Orthonormalize rows by modified Gram-Schmidt, dropping near-zero residuals."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float64)
    return _impl.mgs_rows(vectors, float(drop_tol))
