"""SPD cone under the affine-invariant metric: four retractions and the two
academic objectives f1(P) = logdet P + tr P^-1, f2(P) = logdet P - tr P.

Both objectives have the identity as unique critical point. Their gradient
fields and Hessians under the affine metric reduce to Lyapunov equations
that diagonalize in the eigenbasis of P, so Newton systems are solved
structurally instead of through a dense basis assembly.
"""

import numpy as np
import scipy.linalg

from .core import FieldProblem, Manifold, Point, TangentOperator, TangentVector

RETRACTION_KINDS = ("exp-affine", "exp-factored", "second-order", "first-order")
OBJECTIVES = ("f1", "f2")


def sym(M):
    return 0.5 * (M + M.T)


def point(M):
    return Point(sym(np.asarray(M, dtype=np.float64)), Manifold.SPD_CONE)


def _as_point(M):
    if not np.all(np.isfinite(M)):
        return None
    try:
        return Point(sym(M), Manifold.SPD_CONE)
    except (ValueError, np.linalg.LinAlgError):
        return None


def _expm_sym(S):
    w, U = np.linalg.eigh(S)
    with np.errstate(over="ignore"):
        # overflow to inf is fine: _as_point rejects non-finite results
        return (U * np.exp(w)) @ U.T


def retract(kind, x, v):
    v = np.asarray(v, dtype=np.float64)
    P = x.ambient
    if kind == "exp-affine":
        w, U = x.eig()
        if np.any(w <= 0.0):
            return None
        sq = U * np.sqrt(w)
        isq = U * (1.0 / np.sqrt(w))
        inner = sym(isq.T @ v @ isq)
        with np.errstate(over="ignore", invalid="ignore"):
            # extreme steps overflow the exponential; _as_point rejects them
            return _as_point(sq @ _expm_sym(inner) @ sq.T)
    if kind == "exp-factored":
        with np.errstate(over="ignore", invalid="ignore"):
            E = scipy.linalg.expm(np.linalg.solve(P, v))
            return _as_point(P @ E)
    if kind == "second-order":
        half = 0.5 * np.linalg.solve(P, v)
        return _as_point(P + v + v @ half)
    if kind == "first-order":
        out = P + v
        try:
            np.linalg.cholesky(sym(out))
        except np.linalg.LinAlgError:
            return None
        return _as_point(out)
    raise ValueError(f"unknown SPD retraction {kind!r}")


def spd_field(which, x):
    P = x.ambient
    if which == "f1":
        return TangentVector(P - np.eye(P.shape[0]), x)
    if which == "f2":
        return TangentVector(sym(P - P @ P), x)
    raise ValueError(f"unknown objective {which!r}")


def _spd_operator(which, x):
    P = x.ambient
    w, U = x.eig()

    if which == "f1":
        Pinv = x.inv()

        def matvec(v):
            return sym(0.5 * (Pinv @ v + v @ Pinv))

        def matstack(stack):
            return 0.5 * (Pinv @ stack + stack @ Pinv)

        denom = 0.5 * (1.0 / w[:, None] + 1.0 / w[None, :])
    elif which == "f2":

        def matvec(v):
            return sym(-0.5 * (P @ v + v @ P))

        def matstack(stack):
            return -0.5 * (P @ stack + stack @ P)

        denom = -0.5 * (w[:, None] + w[None, :])
    else:
        raise ValueError(f"unknown objective {which!r}")

    def solve(rhs):
        # Returns v with matvec(v) = -rhs; the Lyapunov denominators never
        # vanish on the cone, so the system is always solvable.
        R = U.T @ rhs @ U
        return U @ (-R / denom) @ U.T

    return TangentOperator(x, matvec, rmatvec=matvec, matstack=matstack, solve=solve)


def spd_newton_operator(which, x, v):
    va = v.ambient if isinstance(v, TangentVector) else np.asarray(v)
    return TangentVector(_spd_operator(which, x).matvec(va), x)


def spd_objective_value(which, x):
    L = x.chol()
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    if which == "f1":
        return logdet + float(np.trace(x.inv()))
    if which == "f2":
        return logdet - float(np.trace(x.ambient))
    raise ValueError(f"unknown objective {which!r}")


def spd_problem(which):
    if which not in OBJECTIVES:
        raise ValueError(f"unknown objective {which!r}")

    def value(x):
        return spd_field(which, x)

    def operator(x):
        return _spd_operator(which, x)

    def objective(x):
        return spd_objective_value(which, x)

    return FieldProblem(
        name=f"spd-{which}",
        manifold=Manifold.SPD_CONE,
        value=value,
        operator=operator,
        retract=retract,
        retraction_kinds=RETRACTION_KINDS,
        objective=objective,
    )
