"""Manifold-agnostic core: points, tangent vectors, metrics, tangent bases,
tangent-space linear operators with solves and adjoints, and the merit
function machinery shared by all solvers.

Values are immutable after construction; the private attributes on Point
only cache derived factorizations and never change the value semantics.
"""

import enum
import warnings

import numpy as np
import scipy.linalg

PIVOT_RTOL = 1e-12
RESIDUAL_RTOL = 1e-8
BASIS_DROP_TOL = 1e-12
MEMBERSHIP_TOL = 1e-10
TANGENCY_TOL = 1e-10


class Manifold(enum.Enum):
    SPHERE = "sphere"
    STIEFEL_PRODUCT = "stiefel-product"
    SPD_CONE = "spd-cone"


def _sym(M):
    return 0.5 * (M + M.T)


class Point:
    """A manifold element stored in ambient coordinates.

    ambient: 1-D unit vector (sphere), stacked (m+n) x p matrix with the
    first `split` rows forming the first orthonormal factor (Stiefel
    product), or an n x n SPD matrix (SPD cone). Construction validates
    the membership test of the tag and raises ValueError on failure.
    """

    __slots__ = ("ambient", "manifold", "split", "_chol", "_inv", "_eig")

    def __init__(self, ambient, manifold, split=None):
        ambient = np.asarray(ambient, dtype=np.float64)
        self.ambient = ambient
        self.manifold = manifold
        self.split = split
        self._chol = None
        self._inv = None
        self._eig = None
        if manifold is Manifold.SPHERE:
            if ambient.ndim != 1:
                raise ValueError("sphere points are 1-D vectors")
            if abs(np.linalg.norm(ambient) - 1.0) > MEMBERSHIP_TOL:
                raise ValueError("sphere point is not unit norm")
        elif manifold is Manifold.STIEFEL_PRODUCT:
            if ambient.ndim != 2 or split is None or not 0 < split < ambient.shape[0]:
                raise ValueError("product points are stacked matrices with a split row")
            eye = np.eye(ambient.shape[1])
            for blk in (ambient[:split], ambient[split:]):
                if np.linalg.norm(blk.T @ blk - eye) > MEMBERSHIP_TOL:
                    raise ValueError("factor block does not have orthonormal columns")
        elif manifold is Manifold.SPD_CONE:
            if ambient.ndim != 2 or ambient.shape[0] != ambient.shape[1]:
                raise ValueError("SPD points are square matrices")
            if np.linalg.norm(ambient - ambient.T) > 1e-12 * max(1.0, np.linalg.norm(ambient)):
                raise ValueError("SPD point is not symmetric")
            try:
                self._chol = np.linalg.cholesky(ambient)
            except np.linalg.LinAlgError:
                raise ValueError("matrix is not positive definite") from None
        else:
            raise ValueError(f"unknown manifold tag {manifold!r}")

    def chol(self):
        """Lower Cholesky factor (SPD points only), cached."""
        if self._chol is None:
            self._chol = np.linalg.cholesky(self.ambient)
        return self._chol

    def inv(self):
        """Inverse of an SPD point, cached."""
        if self._inv is None:
            L = self.chol()
            eye = np.eye(self.ambient.shape[0])
            self._inv = scipy.linalg.cho_solve((L, True), eye)
            self._inv = _sym(self._inv)
        return self._inv

    def eig(self):
        """Symmetric eigendecomposition (eigenvalues, eigenvectors), cached."""
        if self._eig is None:
            self._eig = np.linalg.eigh(self.ambient)
        return self._eig

    def __repr__(self):
        return f"Point({self.manifold.value}, shape={self.ambient.shape})"


def _same_base(a, b):
    if a is b:
        return True
    return a.manifold is b.manifold and np.array_equal(a.ambient, b.ambient)


class TangentVector:
    """An ambient array constrained to the tangent space of its base point."""

    __slots__ = ("ambient", "base")

    def __init__(self, ambient, base):
        ambient = np.asarray(ambient, dtype=np.float64)
        self.ambient = ambient
        self.base = base
        scale = max(1.0, float(np.linalg.norm(ambient)))
        m = base.manifold
        if m is Manifold.SPHERE:
            resid = abs(float(base.ambient @ ambient))
        elif m is Manifold.STIEFEL_PRODUCT:
            s = base.split
            resid = max(
                np.linalg.norm(_sym(base.ambient[:s].T @ ambient[:s])),
                np.linalg.norm(_sym(base.ambient[s:].T @ ambient[s:])),
            )
        else:
            resid = np.linalg.norm(ambient - ambient.T)
        if resid > TANGENCY_TOL * scale:
            raise ValueError(f"vector is not tangent (residual {resid:.3e})")

    @property
    def norm(self):
        return np.sqrt(inner(self.base, self, self))

    def __repr__(self):
        return f"TangentVector(base={self.base!r})"


class TangentBasis:
    """d orthonormal tangent vectors at a base point, stored stacked.

    `stack` has shape (d, *ambient_shape); indexing materializes the
    corresponding TangentVector.
    """

    __slots__ = ("base", "stack")

    def __init__(self, base, stack):
        self.base = base
        self.stack = stack

    def __len__(self):
        return self.stack.shape[0]

    def __getitem__(self, i):
        return TangentVector(self.stack[i], self.base)

    @property
    def vectors(self):
        return [self[i] for i in range(len(self))]


class TangentOperator:
    """A linear map on the tangent space at `base`.

    matvec/rmatvec/matstack act on ambient arrays (rmatvec is the metric
    adjoint; matstack applies the map to a stacked (d, ...) batch). When
    `solve` is given it must return v with matvec(v) = -rhs, or None when
    the structured factorization is singular; solve_newton_system applies
    the same residual acceptance test either way.
    """

    __slots__ = ("base", "matvec", "rmatvec", "matstack", "solve")

    def __init__(self, base, matvec, rmatvec=None, matstack=None, solve=None):
        self.base = base
        self.matvec = matvec
        self.rmatvec = rmatvec
        self.matstack = matstack
        self.solve = solve

    def apply(self, v):
        if not _same_base(v.base, self.base):
            raise ValueError("operator and vector have different base points")
        return TangentVector(self.matvec(v.ambient), self.base)

    def apply_adjoint(self, v):
        if not _same_base(v.base, self.base):
            raise ValueError("operator and vector have different base points")
        if self.rmatvec is not None:
            return TangentVector(self.rmatvec(v.ambient), self.base)
        return _adjoint_via_basis(self, v)


class FieldProblem:
    """A vector field X with its covariant-derivative operator and geometry.

    value(p) -> TangentVector, operator(p) -> TangentOperator,
    stationarity(p) -> scalar (norm of X for every built-in family),
    objective(p) -> scalar or None for nonconservative fields,
    retract(kind, p, v_ambient) -> Point, or None for an infeasible step.
    """

    __slots__ = (
        "name",
        "manifold",
        "value",
        "operator",
        "stationarity",
        "objective",
        "retraction_kinds",
        "retract",
    )

    def __init__(self, name, manifold, value, operator, retract, retraction_kinds,
                 objective=None, stationarity=None):
        self.name = name
        self.manifold = manifold
        self.value = value
        self.operator = operator
        self.retract = retract
        self.retraction_kinds = tuple(retraction_kinds)
        self.objective = objective
        if stationarity is None:
            def stationarity(p):
                X = value(p)
                return float(np.sqrt(inner(p, X, X)))
        self.stationarity = stationarity


def inner(p, u, v):
    """Riemannian inner product at p.

    Euclidean/Frobenius for sphere and Stiefel product, the affine
    invariant trace form tr(V P^-1 U P^-1) on the SPD cone.
    """
    ua = u.ambient if isinstance(u, TangentVector) else np.asarray(u)
    va = v.ambient if isinstance(v, TangentVector) else np.asarray(v)
    if isinstance(u, TangentVector) and isinstance(v, TangentVector):
        if not _same_base(u.base, v.base):
            raise ValueError("inner product of vectors at different base points")
    if p.manifold is Manifold.SPD_CONE:
        Pinv = p.inv()
        return float(np.sum((Pinv @ ua @ Pinv) * va))
    return float(ua.ravel() @ va.ravel())


def norm(p, v):
    return float(np.sqrt(max(inner(p, v, v), 0.0)))


def lower_stack(p, stack):
    """Metric index-lowering of a stacked batch: w such that <u, v> = w . v."""
    if p.manifold is Manifold.SPD_CONE:
        Pinv = p.inv()
        return np.matmul(np.matmul(Pinv, stack), Pinv)
    return stack


def _sphere_basis(p):
    from . import kernels

    n1 = p.ambient.shape[0]
    cand = np.eye(n1) - np.outer(p.ambient, p.ambient)
    return kernels.mgs_rows(cand, BASIS_DROP_TOL)


def _stiefel_basis(p):
    from . import kernels

    total, cols = p.ambient.shape
    s = p.split
    stacks = []
    for lo, hi in ((0, s), (s, total)):
        blk = p.ambient[lo:hi]
        rows = hi - lo
        cand = np.zeros((rows * cols, rows, cols))
        r = np.repeat(np.arange(rows), cols)
        c = np.tile(np.arange(cols), rows)
        cand[np.arange(rows * cols), r, c] = 1.0
        # project each canonical unit onto the factor tangent space
        PtE = np.matmul(blk.T, cand)
        cand -= np.matmul(blk, 0.5 * (PtE + np.transpose(PtE, (0, 2, 1))))
        flat = kernels.mgs_rows(cand.reshape(rows * cols, -1), BASIS_DROP_TOL)
        full = np.zeros((flat.shape[0], total, cols))
        full[:, lo:hi, :] = flat.reshape(-1, rows, cols)
        stacks.append(full)
    return np.concatenate(stacks, axis=0)


def _spd_basis(p):
    # Cholesky congruence of the canonical Frobenius-orthonormal symmetric
    # basis: b = L E L^T is exactly orthonormal under the affine metric.
    n = p.ambient.shape[0]
    d = n * (n + 1) // 2
    E = np.zeros((d, n, n))
    k = 0
    off = 1.0 / np.sqrt(2.0)
    for i in range(n):
        E[k, i, i] = 1.0
        k += 1
        for j in range(i + 1, n):
            E[k, i, j] = off
            E[k, j, i] = off
            k += 1
    L = p.chol()
    return np.matmul(np.matmul(L, E), L.T)


def tangent_basis(p):
    """Orthonormal basis of the tangent space at p (Gram matrix = identity)."""
    if p.manifold is Manifold.SPHERE:
        stack = _sphere_basis(p)
    elif p.manifold is Manifold.STIEFEL_PRODUCT:
        stack = _stiefel_basis(p)
    else:
        stack = _spd_basis(p)
    return TangentBasis(p, stack)


def _apply_stack(op, stack):
    if op.matstack is not None:
        return op.matstack(stack)
    return np.stack([op.matvec(stack[i]) for i in range(stack.shape[0])])


def operator_to_matrix(op, basis):
    """Dense matrix M[i][j] = <b_i, op(b_j)> in the given orthonormal basis."""
    if not _same_base(op.base, basis.base):
        raise ValueError("operator and basis have different base points")
    d = len(basis)
    applied = _apply_stack(op, basis.stack)
    low = lower_stack(basis.base, basis.stack)
    return low.reshape(d, -1) @ applied.reshape(d, -1).T


def _adjoint_via_basis(op, v, basis=None):
    basis = basis if basis is not None else tangent_basis(op.base)
    M = operator_to_matrix(op, basis)
    d = len(basis)
    low = lower_stack(basis.base, basis.stack).reshape(d, -1)
    coords = low @ v.ambient.ravel()
    out = np.tensordot(M.T @ coords, basis.stack, axes=1)
    return TangentVector(out, op.base)


def solve_newton_system(op, rhs, basis=None):
    """Solve op(v) = -rhs on the tangent space; None when singular.

    Default route: assemble op over an orthonormal basis and factor with
    dense LU (partial pivoting); singular when any pivot magnitude falls
    below PIVOT_RTOL * max|M|. Operators carrying a structured `solve`
    use it instead. Both routes must pass the residual test
    ||op(v) + rhs|| <= RESIDUAL_RTOL * max(1, ||rhs||).
    """
    p = op.base
    if not _same_base(p, rhs.base):
        raise ValueError("operator and rhs have different base points")
    if op.solve is not None:
        va = op.solve(rhs.ambient)
        if va is None:
            return None
    else:
        if basis is None:
            basis = tangent_basis(p)
        M = operator_to_matrix(op, basis)
        max_m = float(np.max(np.abs(M))) if M.size else 0.0
        if max_m == 0.0:
            return None
        with warnings.catch_warnings():
            # singular inputs are expected here; the pivot test below decides
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        if float(np.min(np.abs(np.diag(lu)))) < PIVOT_RTOL * max_m:
            return None
        d = len(basis)
        low = lower_stack(p, basis.stack).reshape(d, -1)
        coords = scipy.linalg.lu_solve((lu, piv), -(low @ rhs.ambient.ravel()),
                                       check_finite=False)
        va = np.tensordot(coords, basis.stack, axes=1)
    resid = op.matvec(va) + rhs.ambient
    if norm(p, resid) > RESIDUAL_RTOL * max(1.0, norm(p, rhs.ambient)):
        return None
    return TangentVector(va, p)


def merit_value(problem, p, value=None):
    """phi(p) = half the squared manifold norm of X(p)."""
    X = value if value is not None else problem.value(p)
    return 0.5 * inner(p, X, X)


def merit_gradient(problem, p, value=None, op=None, basis=None):
    """grad phi(p), the adjoint of the field operator applied to X(p)."""
    X = value if value is not None else problem.value(p)
    op = op if op is not None else problem.operator(p)
    if op.rmatvec is not None:
        return TangentVector(op.rmatvec(X.ambient), p)
    return _adjoint_via_basis(op, X, basis=basis)
