"""Solver behavior: direction computations, the angle gate, the
backtracking line search on a hand-checkable one-dimensional cone
instance, the status taxonomy, and trace bookkeeping invariants.
"""

import numpy as np
import pytest

from rnewton import bench, solver, spd, sphere
from rnewton.core import TangentVector, inner, merit_gradient
from rnewton.solver import Algorithm, SolverConfig, Status


def spd1(x):
    return spd.point(np.array([[float(x)]]))


def cfg(alg=2, kind="first-order", **kw):
    return SolverConfig(algorithm=alg, retraction_kind=kind, **kw)


# ------------------------------------------------------------- config


def test_config_validation():
    SolverConfig(algorithm=1, retraction_kind="exp")
    with pytest.raises(ValueError):
        SolverConfig(algorithm=4, retraction_kind="exp")
    with pytest.raises(ValueError):
        SolverConfig(algorithm=2, retraction_kind="exp", sigma=0.5)
    with pytest.raises(ValueError):
        SolverConfig(algorithm=2, retraction_kind="exp", sigma=0.0)
    with pytest.raises(ValueError):
        SolverConfig(algorithm=3, retraction_kind="exp", theta=1.5)
    with pytest.raises(ValueError):
        SolverConfig(algorithm=2, retraction_kind="exp", stat_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(algorithm=2, retraction_kind="exp", min_step=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(algorithm=2, retraction_kind="exp", max_iter=-1)


def test_config_coerces_algorithm_enum():
    c = SolverConfig(algorithm=3, retraction_kind="exp")
    assert c.algorithm is Algorithm.MODIFIED_DAMPED


def test_status_strings():
    assert Status.CONVERGED.value == "Converged"
    assert Status.SMALL_STEP.value == "SmallStep"
    assert Status.MAX_ITER.value == "MaxIter"
    assert Status.SINGULAR_STOP.value == "SingularStop"
    assert Status.CRITICAL_OF_MERIT.value == "CriticalOfMerit"


# --------------------------------------------------------- directions


def test_newton_direction_hand_value():
    prob = spd.spd_problem("f1")
    v = solver.newton_direction(prob, spd1(3.0))
    np.testing.assert_allclose(v.ambient, [[-6.0]], rtol=1e-14)


def test_safeguard_direction_hand_value():
    prob = spd.spd_problem("f1")
    d = solver.safeguard_direction(prob, spd1(3.0))
    np.testing.assert_allclose(d.ambient, [[-2.0 / 3.0]], rtol=1e-14)


def test_newton_direction_descends_merit():
    # The descent identity: <grad phi, v_newton> = -||X||^2.
    prob = spd.spd_problem("f2")
    rng = np.random.default_rng(1)
    G = rng.standard_normal((4, 4))
    P = spd.point(G @ G.T + 2.0 * np.eye(4))
    v = solver.newton_direction(prob, P)
    g = merit_gradient(prob, P)
    X = prob.value(P)
    assert inner(P, g, v) == pytest.approx(-inner(P, X, X), rel=1e-10)


# --------------------------------------------------------- angle test


def test_angle_test_descent_cases():
    p = sphere.point(np.array([0.0, 0.0, 1.0]))
    g = TangentVector(np.array([1.0, 0.0, 0.0]), p)
    # strict descent direction passes at theta = 0
    assert solver.angle_test(g, TangentVector(np.array([-1.0, 0.5, 0.0]), p), 0.0)
    # ascent direction fails at theta = 0
    assert not solver.angle_test(g, TangentVector(np.array([1.0, 0.0, 0.0]), p), 0.0)
    # exact collinearity passes even at theta = 1
    assert solver.angle_test(g, TangentVector(np.array([-2.0, 0.0, 0.0]), p), 1.0)
    # orthogonal direction fails any positive theta
    v = TangentVector(np.array([0.0, 1.0, 0.0]), p)
    assert not solver.angle_test(g, v, 0.5)
    assert solver.angle_test(g, v, 0.0)  # degenerate 0 <= 0
    # zero vector passes vacuously
    z = TangentVector(np.zeros(3), p)
    assert solver.angle_test(g, z, 1.0)


def test_angle_test_threshold():
    # cos = -1/sqrt(2) passes theta just below 0.707, fails just above.
    p = sphere.point(np.array([0.0, 0.0, 1.0]))
    g = TangentVector(np.array([1.0, 0.0, 0.0]), p)
    v = TangentVector(np.array([-1.0, 1.0, 0.0]), p)
    assert solver.angle_test(g, v, 0.7)
    assert not solver.angle_test(g, v, 0.71)


# -------------------------------------------------------- line search


def test_armijo_hand_trace_first_step():
    # 1x1 cone at x=3 with Newton step v=-6 under the additive retraction:
    # alpha=1 lands at -3 (infeasible), alpha=1/2 at 0 (infeasible),
    # alpha=1/4 at 1.5 where phi = 1/18 beats 2/9 + 1e-3*(1/4)*(-4/9).
    prob = spd.spd_problem("f1")
    P = spd1(3.0)
    v = solver.newton_direction(prob, P)
    out = solver.armijo(prob, "first-order", P, v, sigma=1e-3, min_step=1e-10)
    assert out is not None
    alpha, pt = out
    assert alpha == 0.25
    assert pt.ambient[0, 0] == pytest.approx(1.5, abs=1e-15)


def test_armijo_returns_none_when_floor_hit():
    prob = spd.spd_problem("f1")
    P = spd1(3.0)
    v = solver.newton_direction(prob, P)
    # min_step above 1/2 leaves only the infeasible alpha=1 trial
    assert solver.armijo(prob, "first-order", P, v, sigma=1e-3, min_step=0.6) is None


def test_armijo_accepts_full_step_near_solution():
    prob = spd.spd_problem("f1")
    P = spd1(1.0 + 1e-3)
    v = solver.newton_direction(prob, P)
    alpha, pt = solver.armijo(prob, "first-order", P, v, sigma=1e-3, min_step=1e-10)
    assert alpha == 1.0


# ------------------------------------------------------------ statuses


def test_run_converged_at_start():
    prob = sphere.rayleigh_problem(np.diag([1.0, 2.0, 3.0]))
    tr = solver.run(prob, cfg(2, "proj"), sphere.point(np.array([1.0, 0.0, 0.0])))
    assert tr.status is Status.CONVERGED
    assert tr.iterations == 0
    assert tr.field_evals == 1
    assert tr.initial_stationarity < 1e-12


def _singular_instance():
    # A = diag(1,1,2) at p = (1,0,1)/sqrt(2): the field X is nonzero and
    # lies in the null space of the Hessian, so Newton has no solution.
    A = np.diag([1.0, 1.0, 2.0])
    prob = sphere.rayleigh_problem(A)
    p = sphere.point(np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0))
    return prob, p


def test_run_singular_stop_pure():
    prob, p = _singular_instance()
    tr = solver.run(prob, cfg(1, "proj"), p)
    assert tr.status is Status.SINGULAR_STOP
    assert tr.iterations == 0


def test_run_critical_of_merit_damped():
    # A zero operator makes grad phi = A*(X) exactly zero while X != 0:
    # the damped safeguard has nowhere to go.
    from rnewton.core import FieldProblem, Manifold, TangentOperator

    def value(p):
        return TangentVector(np.array([0.0, 1.0, 0.0]), p)

    def operator(p):
        zero = lambda w: np.zeros_like(w)
        return TangentOperator(p, zero, rmatvec=zero)

    prob = FieldProblem(
        name="flat",
        manifold=Manifold.SPHERE,
        value=value,
        operator=operator,
        retract=sphere.retract,
        retraction_kinds=sphere.RETRACTION_KINDS,
    )
    tr = solver.run(prob, cfg(2, "proj"), sphere.point(np.array([1.0, 0.0, 0.0])))
    assert tr.status is Status.CRITICAL_OF_MERIT


def test_run_small_step_at_float_critical_point():
    # At the singular instance grad phi vanishes only up to roundoff; the
    # safeguard direction is ~1e-16 and the line search must give up.
    prob, p = _singular_instance()
    tr = solver.run(prob, cfg(2, "proj"), p)
    assert tr.status is Status.SMALL_STEP
    assert tr.iterations == 0


def test_run_max_iter_zero():
    prob = spd.spd_problem("f1")
    tr = solver.run(prob, cfg(2, "first-order", max_iter=0), spd1(3.0))
    assert tr.status is Status.MAX_ITER
    assert tr.iterations == 0


def test_run_small_step_damped():
    prob = spd.spd_problem("f1")
    tr = solver.run(prob, cfg(2, "first-order", min_step=0.6), spd1(3.0))
    assert tr.status is Status.SMALL_STEP


def test_run_small_step_pure_infeasible():
    # Pure Newton from x=3 steps to -3, which first-order cannot retract.
    prob = spd.spd_problem("f1")
    tr = solver.run(prob, cfg(1, "first-order"), spd1(3.0))
    assert tr.status is Status.SMALL_STEP
    assert tr.iterations == 0


def test_run_rejects_foreign_retraction():
    prob = spd.spd_problem("f1")
    with pytest.raises(ValueError):
        solver.run(prob, cfg(2, "qf"), spd1(2.0))


# ----------------------------------------------------- run trajectories


def test_pure_newton_full_steps():
    prob = spd.spd_problem("f1")
    tr = solver.run(prob, cfg(1, "exp-affine"), spd1(3.0))
    assert tr.status is Status.CONVERGED
    assert all(s.alpha == 1.0 for s in tr.steps)
    assert all(s.direction_kind == "Newton" for s in tr.steps)
    # one evaluation per iterate plus the head evaluation
    assert tr.field_evals == tr.iterations + 1


def test_damped_run_merit_decreases():
    prob = spd.spd_problem("f2")
    rng = np.random.default_rng(3)
    G = rng.standard_normal((4, 4))
    P = spd.point(G @ G.T + 2.0 * np.eye(4))
    tr = solver.run(prob, cfg(2, "exp-affine"), P)
    assert tr.status is Status.CONVERGED
    merits = tr.merits()
    assert all(b < a for a, b in zip(merits, merits[1:]))


def test_trace_bookkeeping_invariants():
    prob, p0 = bench.gen_sphere_nc(4, 0)
    tr = solver.run(prob, cfg(2, "proj"), p0)
    assert tr.status is Status.CONVERGED
    assert tr.iterations == len(tr.steps)
    assert len(tr.merits()) == tr.iterations + 1
    cums = [s.field_evals_cum for s in tr.steps]
    assert all(b > a for a, b in zip(cums, cums[1:]))
    assert tr.field_evals == cums[-1]
    # every accepted alpha is an exact power of two
    for s in tr.steps:
        j = round(-np.log2(s.alpha))
        assert s.alpha == 2.0 ** (-j)
    # each iteration costs the head evaluation plus at least one trial
    diffs = np.diff([1] + cums)
    assert np.all(diffs >= 2)
    assert tr.stationarities()[-1] < 1e-6


def test_keep_points_records_trajectory():
    prob = spd.spd_problem("f1")
    tr = solver.run(prob, cfg(2, "exp-affine"), spd1(4.0), keep_points=True)
    assert len(tr.points) == tr.iterations + 1
    assert len(tr.directions) == tr.iterations
    np.testing.assert_allclose(tr.points[-1].ambient, tr.final_point.ambient)
    for d in tr.directions:
        assert isinstance(d, TangentVector)


def test_modified_damped_angle_gate():
    # At P = diag(2,3) on the mixed-sign objective the Newton direction has
    # cos = -6/sqrt(40) = -0.9487 against grad phi: theta=0.9 accepts it,
    # theta=0.9999 forces the safeguard.
    prob = spd.spd_problem("f2")
    P = spd.point(np.diag([2.0, 3.0]))
    tight = solver.run(prob, cfg(3, "exp-affine", theta=0.9999), P)
    loose = solver.run(prob, cfg(3, "exp-affine", theta=0.9), P)
    assert tight.steps[0].direction_kind == "Safeguard"
    assert loose.steps[0].direction_kind == "Newton"
    assert tight.status is Status.CONVERGED
    assert loose.status is Status.CONVERGED


def test_damped_equals_modified_at_theta_zero():
    # With theta = 0 the angle gate only rejects ascent directions, which
    # the damped variant also rejects; the traces must coincide.
    prob, p0 = bench.gen_sphere_nc(3, 1)
    tr2 = solver.run(prob, cfg(2, "exp"), p0)
    tr3 = solver.run(prob, cfg(3, "exp", theta=0.0), p0)
    assert tr2.status is tr3.status
    assert [s.alpha for s in tr2.steps] == [s.alpha for s in tr3.steps]
    np.testing.assert_allclose(
        tr2.final_point.ambient, tr3.final_point.ambient, atol=1e-14
    )


def test_sphere_reference_dimension_two():
    # The n=2 reference configuration: converges quickly and the evaluation
    # count stays near two per iteration plus the head evaluation.
    prob, p0 = bench.gen_sphere_nc(2, 0)
    tr = solver.run(prob, cfg(2, "exp"), p0)
    assert tr.status is Status.CONVERGED
    assert tr.iterations <= 30
    assert tr.field_evals <= 3 * tr.iterations + 1
