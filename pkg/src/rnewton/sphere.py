"""Geometry of the unit sphere S^n in R^{n+1}, its two retractions, and the
two problem families living on it: a nonconservative tangent field built
from a skew matrix, and the Rayleigh quotient."""

import warnings

import numpy as np
import scipy.linalg

from .core import PIVOT_RTOL, FieldProblem, Manifold, Point, TangentVector

RETRACTION_KINDS = ("exp", "proj")
_ZERO_TOL = 1e-14


def _bordered_solve(pa, M, rhs):
    """Newton solve of the projected operator v -> (I - pp^T) M v restricted
    to the tangent space, via the equivalent ambient bordered system

        [M  p] [v ]   [-rhs]
        [p^T 0] [mu] = [ 0 ],

    whose matrix is singular exactly when the tangent restriction is.
    Returns the tangent solution or None; the caller's residual test stays
    the final arbiter either way.
    """
    n1 = pa.shape[0]
    B = np.empty((n1 + 1, n1 + 1))
    B[:n1, :n1] = M
    B[:n1, n1] = pa
    B[n1, :n1] = pa
    B[n1, n1] = 0.0
    b = np.zeros(n1 + 1)
    b[:n1] = -rhs
    with warnings.catch_warnings():
        # singular systems are expected; the pivot test below decides
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
    if float(np.min(np.abs(np.diag(lu)))) < PIVOT_RTOL * float(np.max(np.abs(B))):
        return None
    v = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)[:n1]
    return _scrub(pa, v - (pa @ v) * pa)


def point(x):
    return Point(np.asarray(x, dtype=np.float64), Manifold.SPHERE)


def project_tangent(p, w):
    """Orthogonal projector (I - pp^T) w onto the tangent space at p."""
    pa = p.ambient if isinstance(p, Point) else np.asarray(p)
    w = np.asarray(w, dtype=np.float64)
    return w - (pa @ w) * pa


def _scrub(pa, w):
    # second projection pass: keeps outputs tangent to roundoff even when
    # the base point itself carries norm drift at the membership tolerance
    return w - (pa @ w) * pa


def retract(kind, p, v):
    """Exp follows the great circle; Proj normalizes p + v."""
    pa = p.ambient
    v = np.asarray(v, dtype=np.float64)
    if kind == "exp":
        nv = np.linalg.norm(v)
        if nv < _ZERO_TOL:
            return p
        out = np.cos(nv) * pa + (np.sin(nv) / nv) * v
        # renormalize so unit-norm drift cannot compound across iterations
        out = out / np.linalg.norm(out)
    elif kind == "proj":
        out = pa + v
        out = out / np.linalg.norm(out)
    else:
        raise ValueError(f"unknown sphere retraction {kind!r}")
    if not np.all(np.isfinite(out)):
        return None
    return Point(out, Manifold.SPHERE)


class SphereProblemNC:
    """X(p) = Q(p - pbar) - <p, Q(p - pbar)> p with Q skew; pbar is a
    singularity of X and X is not a gradient field."""

    __slots__ = ("Q", "pbar")

    def __init__(self, Q, pbar):
        Q = np.asarray(Q, dtype=np.float64)
        pbar = np.asarray(pbar, dtype=np.float64)
        if np.linalg.norm(Q + Q.T) > 1e-12 * max(1.0, np.linalg.norm(Q)):
            raise ValueError("Q must be skew-symmetric")
        if abs(np.linalg.norm(pbar) - 1.0) > 1e-12:
            raise ValueError("pbar must be unit norm")
        self.Q = Q
        self.pbar = pbar


def field_nc(problem, p):
    pa = p.ambient
    w = problem.Q @ (pa - problem.pbar)
    return TangentVector(_scrub(pa, w - (pa @ w) * pa), p)


def field_nc_operator(problem, p, v):
    """Covariant derivative of the field along tangent v: the tangent
    projection of the ambient directional derivative."""
    va = v.ambient if isinstance(v, TangentVector) else np.asarray(v)
    return TangentVector(_nc_operator(problem, p).matvec(va), p)


def _nc_operator(problem, p):
    from .core import TangentOperator

    pa = p.ambient
    Q = problem.Q
    c = float(pa @ (Q @ (pa - problem.pbar)))

    def matvec(v):
        u = Q @ v
        return _scrub(pa, u - (pa @ u) * pa - c * v)

    def rmatvec(u):
        # metric adjoint: (I - pp^T) Q^T u - c u, with Q^T = -Q
        w = Q @ u
        return _scrub(pa, (pa @ w) * pa - w - c * u)

    def matstack(stack):
        W = stack @ Q.T
        W -= np.outer(W @ pa, pa)
        W -= c * stack
        W -= np.outer(W @ pa, pa)
        return W

    def solve(rhs):
        return _bordered_solve(pa, Q - c * np.eye(pa.shape[0]), rhs)

    return TangentOperator(p, matvec, rmatvec=rmatvec, matstack=matstack, solve=solve)


def nonconservative_problem(Q, pbar):
    data = SphereProblemNC(Q, pbar)

    def value(p):
        return field_nc(data, p)

    def operator(p):
        return _nc_operator(data, p)

    prob = FieldProblem(
        name="sphere-nc",
        manifold=Manifold.SPHERE,
        value=value,
        operator=operator,
        retract=retract,
        retraction_kinds=RETRACTION_KINDS,
    )
    return prob


class SphereProblemRayleigh:
    __slots__ = ("A",)

    def __init__(self, A):
        A = np.asarray(A, dtype=np.float64)
        if np.linalg.norm(A - A.T) > 1e-12 * max(1.0, np.linalg.norm(A)):
            raise ValueError("A must be symmetric")
        self.A = A


def rayleigh_value(problem, p):
    pa = p.ambient
    return float(pa @ (problem.A @ pa))


def rayleigh_grad(problem, p):
    pa = p.ambient
    Ap = problem.A @ pa
    return TangentVector(2.0 * _scrub(pa, Ap - (pa @ Ap) * pa), p)


def rayleigh_hess(problem, p, v):
    va = v.ambient if isinstance(v, TangentVector) else np.asarray(v)
    return TangentVector(_rayleigh_operator(problem, p).matvec(va), p)


def _rayleigh_operator(problem, p):
    from .core import TangentOperator

    pa = p.ambient
    A = problem.A
    f = float(pa @ (A @ pa))

    def matvec(v):
        u = A @ v
        return 2.0 * _scrub(pa, u - (pa @ u) * pa - f * v)

    def matstack(stack):
        W = stack @ A
        W -= np.outer(W @ pa, pa)
        W -= f * stack
        W -= np.outer(W @ pa, pa)
        return 2.0 * W

    def solve(rhs):
        return _bordered_solve(pa, 2.0 * (A - f * np.eye(pa.shape[0])), rhs)

    return TangentOperator(p, matvec, rmatvec=matvec, matstack=matstack, solve=solve)


def rayleigh_problem(A):
    data = SphereProblemRayleigh(A)

    def value(p):
        return rayleigh_grad(data, p)

    def operator(p):
        return _rayleigh_operator(data, p)

    def objective(p):
        return rayleigh_value(data, p)

    return FieldProblem(
        name="rayleigh",
        manifold=Manifold.SPHERE,
        value=value,
        operator=operator,
        retract=retract,
        retraction_kinds=RETRACTION_KINDS,
        objective=objective,
    )
