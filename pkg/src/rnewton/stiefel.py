"""Geometry of the product St(p,m) x St(p,n) with four retractions and the
truncated-SVD alignment problem F(P,Q) = Tr(-P^T A Q N) on it.

Product points are stored as a single stacked (m+n) x p matrix whose first
m rows are the P factor; the product metric is the sum of the factor
Frobenius inner products, so the stacked Frobenius form is already it.
"""

import numpy as np
import scipy.linalg

from .core import FieldProblem, Manifold, Point, TangentVector

RETRACTION_KINDS = ("exp", "cayley", "polar", "qf")
_QF_DEGENERATE_TOL = 1e-12


class DegenerateFactor(ValueError):
    """Raised by the Qf retraction when the QR input is column-rank-deficient."""


def sym(M):
    return 0.5 * (M + M.T)


def make_point(P, Q):
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape[1] != Q.shape[1]:
        raise ValueError("factors must share the column count")
    return Point(np.vstack([P, Q]), Manifold.STIEFEL_PRODUCT, split=P.shape[0])


def split(x):
    return x.ambient[: x.split], x.ambient[x.split :]


def project_tangent_factor(P, W):
    """Projector onto the tangent space of one factor: W - P sym(P^T W)."""
    return W - P @ sym(P.T @ W)


def project_tangent(x, W):
    s = x.split
    out = np.empty_like(W, dtype=np.float64)
    out[:s] = project_tangent_factor(x.ambient[:s], W[:s])
    out[s:] = project_tangent_factor(x.ambient[s:], W[s:])
    return out


def qr_posdiag(M):
    """Compact QR with a nonnegative-diagonal triangular factor.

    Columns whose diagonal entry vanishes keep the sign LAPACK produced
    (rank-deficient inputs occur at V=0, where the factor is irrelevant).
    """
    Q, R = np.linalg.qr(M)
    d = np.diag(R).copy()
    s = np.where(d < 0.0, -1.0, 1.0)
    return Q * s, s[:, None] * R


def qf(M):
    """Orthogonal factor of the positive-diagonal QR; signals DegenerateFactor."""
    Q, R = qr_posdiag(M)
    if float(np.min(np.diag(R))) < _QF_DEGENERATE_TOL:
        raise DegenerateFactor("QR input is column-rank-deficient")
    return Q


def _retract_factor(kind, P, V):
    p = P.shape[1]
    if kind == "exp":
        Om = P.T @ V
        K = V - P @ Om
        Qc, R = qr_posdiag(K)
        B = np.zeros((2 * p, 2 * p))
        B[:p, :p] = Om
        B[:p, p:] = -R.T
        B[p:, :p] = R
        E = scipy.linalg.expm(B)
        return P @ E[:p, :p] + Qc @ E[p:, :p]
    if kind == "cayley":
        W = V - 0.5 * P @ (P.T @ V)
        M = np.hstack([W, P])
        N = np.hstack([P, -W])
        A = np.eye(2 * p) - 0.5 * (N.T @ M)
        return P + M @ np.linalg.solve(A, N.T @ P)
    if kind == "polar":
        S = np.eye(p) + V.T @ V
        w, U = np.linalg.eigh(S)
        return (P + V) @ (U * (1.0 / np.sqrt(w))) @ U.T
    if kind == "qf":
        return qf(P + V)
    raise ValueError(f"unknown Stiefel retraction {kind!r}")


def retract(kind, x, v):
    v = np.asarray(v, dtype=np.float64)
    s = x.split
    top = _retract_factor(kind, x.ambient[:s], v[:s])
    bot = _retract_factor(kind, x.ambient[s:], v[s:])
    out = np.vstack([top, bot])
    if not np.all(np.isfinite(out)):
        return None
    return Point(out, Manifold.STIEFEL_PRODUCT, split=s)


def retract_stiefel(kind, P, V):
    """Single-factor retraction on St(p,m), for direct use and testing."""
    return _retract_factor(kind, np.asarray(P, dtype=np.float64),
                           np.asarray(V, dtype=np.float64))


class TsvdProblem:
    """Data of F(P,Q) = Tr(-P^T A Q N): A is m x n (m >= n) and N is a
    diagonal weight with strictly decreasing positive entries."""

    __slots__ = ("A", "N", "dims")

    def __init__(self, A, N):
        A = np.asarray(A, dtype=np.float64)
        N = np.asarray(N, dtype=np.float64).ravel()
        m, n = A.shape
        p = N.shape[0]
        if not p <= n <= m:
            raise ValueError("need p <= n <= m")
        if np.any(N <= 0.0) or np.any(np.diff(N) >= 0.0):
            raise ValueError("N must have strictly decreasing positive diagonal")
        self.A = A
        self.N = N
        self.dims = (m, n, p)


def tsvd_field(problem, x):
    P, Q = split(x)
    A, N = problem.A, problem.N
    AQN = (A @ Q) * N
    AtPN = (A.T @ P) * N
    S1 = sym(P.T @ AQN)
    S2 = sym(Q.T @ AtPN)
    # the blocks are tangent by construction; one projection pass removes
    # the residue that factor-orthonormality drift leaves behind
    top = project_tangent_factor(P, P @ S1 - AQN)
    bot = project_tangent_factor(Q, Q @ S2 - AtPN)
    return TangentVector(np.vstack([top, bot]), x)


def _tsvd_operator(problem, x):
    from .core import TangentOperator

    P, Q = split(x)
    A, N = problem.A, problem.N
    s = x.split
    S1 = sym(P.T @ ((A @ Q) * N))
    S2 = sym(Q.T @ ((A.T @ P) * N))

    def matvec(v):
        U, V = v[:s], v[s:]
        T1 = project_tangent_factor(P, U @ S1 - (A @ V) * N)
        T2 = project_tangent_factor(Q, V @ S2 - (A.T @ U) * N)
        return np.vstack(
            [project_tangent_factor(P, T1), project_tangent_factor(Q, T2)]
        )

    def _batched_project(F, T):
        FtT = np.matmul(F.T, T)
        return T - np.matmul(F, 0.5 * (FtT + np.transpose(FtT, (0, 2, 1))))

    def matstack(stack):
        U, V = stack[:, :s, :], stack[:, s:, :]
        T1 = _batched_project(P, U @ S1 - (A @ V) * N)
        T2 = _batched_project(Q, V @ S2 - (A.T @ U) * N)
        return np.concatenate(
            [_batched_project(P, T1), _batched_project(Q, T2)], axis=1
        )

    return TangentOperator(x, matvec, rmatvec=matvec, matstack=matstack)


def tsvd_operator(problem, x, v):
    va = v.ambient if isinstance(v, TangentVector) else np.asarray(v)
    return TangentVector(_tsvd_operator(problem, x).matvec(va), x)


def tsvd_problem(A, N):
    data = TsvdProblem(A, N)

    def value(x):
        return tsvd_field(data, x)

    def operator(x):
        return _tsvd_operator(data, x)

    def objective(x):
        P, Q = split(x)
        return float(-np.sum(np.diag(P.T @ (data.A @ Q)) * data.N))

    return FieldProblem(
        name="tsvd",
        manifold=Manifold.STIEFEL_PRODUCT,
        value=value,
        operator=operator,
        retract=retract,
        retraction_kinds=RETRACTION_KINDS,
        objective=objective,
    )
