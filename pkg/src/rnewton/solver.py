"""Pure, damped, and modified damped Newton iterations for vector fields
on manifolds, globalized by Armijo backtracking on phi = ||X||^2 / 2.

The damped variant substitutes -grad phi whenever the Newton system has no
solution; the modified variant additionally distrusts Newton directions
that fail an angle test against the merit gradient.  Every evaluation of
the field (equivalently of phi) is counted; operator applications are not.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import core
from .core import TangentVector

_ANGLE_SLACK = 1e-12


class Algorithm(enum.IntEnum):
    PURE = 1
    DAMPED = 2
    MODIFIED_DAMPED = 3


class Status(enum.Enum):
    CONVERGED = "Converged"
    SMALL_STEP = "SmallStep"
    MAX_ITER = "MaxIter"
    SINGULAR_STOP = "SingularStop"
    CRITICAL_OF_MERIT = "CriticalOfMerit"


@dataclass
class SolverConfig:
    algorithm: Algorithm
    retraction_kind: str
    sigma: float = 1e-3
    theta: float = 0.0
    stat_tol: float = 1e-6
    min_step: float = 1e-10
    max_iter: int = 2000

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        if not 0.0 < self.sigma < 0.5:
            raise ValueError("sigma must lie in (0, 1/2)")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.stat_tol <= 0.0 or self.min_step <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass
class Step:
    """State after one accepted iteration."""

    merit: float
    stationarity: float
    alpha: float
    direction_kind: str
    field_evals_cum: int


@dataclass
class IterationTrace:
    status: Status
    initial_merit: float
    initial_stationarity: float
    steps: list
    final_point: object
    field_evals: int
    points: list = None
    directions: list = None

    @property
    def iterations(self):
        return len(self.steps)

    def merits(self):
        return [self.initial_merit] + [s.merit for s in self.steps]

    def stationarities(self):
        return [self.initial_stationarity] + [s.stationarity for s in self.steps]


def newton_direction(problem, p, value=None, op=None):
    """Solution of X(p) + A(p)v = 0, or None when the system is singular."""
    X = value if value is not None else problem.value(p)
    op = op if op is not None else problem.operator(p)
    return core.solve_newton_system(op, X)


def safeguard_direction(problem, p, value=None, op=None):
    g = core.merit_gradient(problem, p, value=value, op=op)
    return TangentVector(-g.ambient, p)


def angle_test(gradphi, v, theta):
    """True iff <grad phi, v> <= -theta ||grad phi|| ||v||.

    A relative slack absorbs roundoff so that exact collinearity passes at
    theta = 1; zero vectors pass since the inequality degenerates to 0 <= 0.
    """
    p = gradphi.base
    ip = core.inner(p, gradphi, v)
    scale = core.norm(p, gradphi) * core.norm(p, v)
    return ip <= (_ANGLE_SLACK - theta) * scale


def _armijo(problem, retraction, p, va, sigma, min_step, phi0, slope):
    """Backtracking loop; returns (alpha, point, evals) with point None on
    failure so the caller can still account for trial evaluations."""
    evals = 0
    alpha = 1.0
    while alpha >= min_step:
        trial = problem.retract(retraction, p, alpha * va)
        if trial is not None:
            evals += 1
            phi_t = core.merit_value(problem, trial)
            if math.isfinite(phi_t) and phi_t <= phi0 + sigma * alpha * slope:
                return alpha, trial, evals
        alpha *= 0.5
    return None, None, evals


def armijo(problem, retraction, p, v, sigma, min_step, phi0=None, slope=None):
    """Largest alpha = 2^-j accepted by the Armijo test, with the resulting
    point; None once 2^-j falls below min_step.  Infeasible retractions are
    rejected trials."""
    va = v.ambient if isinstance(v, TangentVector) else np.asarray(v)
    if phi0 is None:
        phi0 = core.merit_value(problem, p)
    if slope is None:
        g = core.merit_gradient(problem, p)
        slope = core.inner(p, g, va)
    alpha, pt, _ = _armijo(problem, retraction, p, va, sigma, min_step, phi0, slope)
    if pt is None:
        return None
    return alpha, pt


def run(problem, config, p0, keep_points=False):
    if config.retraction_kind not in problem.retraction_kinds:
        raise ValueError(
            f"retraction {config.retraction_kind!r} not offered by {problem.name}"
        )

    p = p0
    evals = 0
    X = problem.value(p)
    evals += 1
    stat = core.norm(p, X)
    phi = 0.5 * core.inner(p, X, X)

    trace = IterationTrace(
        status=None,
        initial_merit=phi,
        initial_stationarity=stat,
        steps=[],
        final_point=p,
        field_evals=evals,
        points=[p] if keep_points else None,
        directions=[] if keep_points else None,
    )

    while True:
        if stat < config.stat_tol:
            trace.status = Status.CONVERGED
            break
        if len(trace.steps) >= config.max_iter:
            trace.status = Status.MAX_ITER
            break

        op = problem.operator(p)
        v_newton = core.solve_newton_system(op, X)

        if config.algorithm is Algorithm.PURE:
            if v_newton is None:
                trace.status = Status.SINGULAR_STOP
                break
            trial = problem.retract(config.retraction_kind, p, v_newton.ambient)
            if trial is None:
                trace.status = Status.SMALL_STEP
                break
            alpha, kind, direction, p = 1.0, "Newton", v_newton, trial
        else:
            gphi = core.merit_gradient(problem, p, value=X, op=op)
            direction = None
            if v_newton is not None:
                if config.algorithm is Algorithm.DAMPED or angle_test(
                    gphi, v_newton, config.theta
                ):
                    kind = "Newton"
                    direction = v_newton
                    slope = core.inner(p, gphi, direction)
                    if slope >= 0.0:
                        direction = None
            if direction is None:
                gnorm = core.norm(p, gphi)
                if gnorm == 0.0:
                    trace.status = Status.CRITICAL_OF_MERIT
                    break
                kind = "Safeguard"
                direction = TangentVector(-gphi.ambient, p)
                slope = -gnorm * gnorm
            alpha, accepted, trials = _armijo(
                problem,
                config.retraction_kind,
                p,
                direction.ambient,
                config.sigma,
                config.min_step,
                phi,
                slope,
            )
            evals += trials
            if accepted is None:
                trace.field_evals = evals
                trace.status = Status.SMALL_STEP
                break
            p = accepted

        X = problem.value(p)
        evals += 1
        stat = core.norm(p, X)
        phi = 0.5 * core.inner(p, X, X)
        trace.steps.append(Step(phi, stat, alpha, kind, evals))
        trace.final_point = p
        trace.field_evals = evals
        if keep_points:
            trace.points.append(p)
            trace.directions.append(direction)

    trace.field_evals = evals
    return trace
