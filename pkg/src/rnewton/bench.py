"""Deterministic instance generators, the experiment runner, Dolan-More
performance profiles, robustness tables, and the CSV record format.

Every random quantity is drawn from a counter-based SplitMix64 stream, so
suites are reproducible bit for bit across reruns and platforms; only the
cpu_seconds column of a record is nondeterministic.
"""

import math
import time
from dataclasses import dataclass, fields as _dc_fields

import numpy as np

from . import kernels, solver, spd, sphere, stiefel

EPSILON_SWEEP = tuple(10.0 ** k for k in range(-4, 4))

DESK_SPHERE_NC_DIMS = (2, 50)
DESK_RAYLEIGH_DIMS = (100, 200)
DESK_TSVD_DIMS = ((5, 3, 2), (7, 5, 2), (10, 5, 3), (20, 10, 3))
DESK_SPD_DIMS = (10, 50, 100)

PAPER_SPHERE_NC_DIMS = (2, 50, 500, 1000)
PAPER_RAYLEIGH_DIMS = (500, 750, 1000, 1250, 1500)
PAPER_TSVD_DIMS = DESK_TSVD_DIMS
PAPER_SPD_DIMS = tuple(range(100, 1001, 100))

SUITES = ("sphere-nc", "rayleigh", "tsvd", "spd-f1", "spd-f2")


class Rng:
    """Scalar and bulk random source over one SplitMix64 state.

    Box-Muller produces deviates in pairs; the spare is cached so scalar
    and bulk draws read the same stream.
    """

    __slots__ = ("state", "cached")

    def __init__(self, seed):
        self.state = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.cached = None

    def uniforms(self, count):
        out, self.state = kernels.uniforms(self.state, int(count))
        return out

    def normals(self, count):
        count = int(count)
        out = np.empty(count, dtype=np.float64)
        have = 0
        if self.cached is not None and count > 0:
            out[0] = self.cached
            self.cached = None
            have = 1
        need = count - have
        if need > 0:
            pairs = (need + 1) // 2
            z, self.state = kernels.normal_pairs(self.state, pairs)
            out[have:] = z[:need]
            self.cached = float(z[need]) if 2 * pairs > need else None
        return out

    def normal(self):
        return float(self.normals(1)[0])


def rng_normal(rng):
    """One standard normal deviate; advances the stream."""
    return rng.normal()


def _unit(v):
    return v / np.linalg.norm(v)


def gen_sphere_nc(n, seed):
    """Nonconservative sphere instance on S^n: skew Q from a Gaussian
    matrix, independent unit singularity target and starting point."""
    rng = Rng(seed)
    d = n + 1
    A = rng.normals(d * d).reshape(d, d)
    pbar = _unit(rng.normals(d))
    p0 = _unit(rng.normals(d))
    return sphere.nonconservative_problem(A - A.T, pbar), sphere.point(p0)


def _spd_matrix(family, n, rng):
    if family == 1:
        k = math.ceil(math.sqrt(n)) + 1
        T = 2.0 * np.eye(k) - np.eye(k, k=1) - np.eye(k, k=-1)
        return np.kron(np.eye(k), T) + np.kron(T, np.eye(k))
    if family == 2:
        return np.ones((n, n)) + 2.0 * n * np.eye(n)
    if family == 3:
        return 10.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
    if family == 4:
        A = np.diag(rng.uniforms(n))
        A[0, n - 1] = A[n - 1, 0] = 1.0
        return A
    if family == 5:
        lam = np.logspace(-1.0, 0.0, n)
        G = rng.normals(n * n).reshape(n, n)
        Q, _ = np.linalg.qr(G)
        M = (Q * lam) @ Q.T
        return 0.5 * (M + M.T)
    raise ValueError(f"unknown matrix family {family}")


def gen_spd_matrix(family, n, seed):
    """Symmetric test matrix of one of five families; family 1 is the 2-D
    Poisson matrix of order (ceil(sqrt(n))+1)^2, which may exceed n, and
    family 4 may be indefinite."""
    return _spd_matrix(family, n, Rng(seed))


def gen_rayleigh(family, n, seed):
    """Rayleigh quotient instance: family matrix plus a uniform starting
    point on the sphere; returns (problem, start, matrix)."""
    rng = Rng(seed)
    A = _spd_matrix(family, n, rng)
    p0 = _unit(rng.normals(A.shape[0]))
    return sphere.rayleigh_problem(A), sphere.point(p0), A


def gen_tsvd(m, n, p, seed, epsilon):
    """Low-rank alignment instance with a planted solution: A = P* N Q*^T
    with N = diag(p, ..., 1); the start is qf of an epsilon-perturbation
    of the solution factors.  Returns (problem, start, solution)."""
    rng = Rng(seed)
    Pstar = stiefel.qf(rng.normals(m * p).reshape(m, p))
    Qstar = stiefel.qf(rng.normals(n * p).reshape(n, p))
    mu = np.arange(p, 0, -1, dtype=np.float64)
    A = (Pstar * mu) @ Qstar.T
    P0 = stiefel.qf(Pstar + epsilon * rng.normals(m * p).reshape(m, p))
    Q0 = stiefel.qf(Qstar + epsilon * rng.normals(n * p).reshape(n, p))
    return (
        stiefel.tsvd_problem(A, mu),
        stiefel.make_point(P0, Q0),
        stiefel.make_point(Pstar, Qstar),
    )


def gen_spd_start(family, n, seed):
    """Starting matrix for the SPD suites, drawn from the same families;
    indefinite draws are shifted by (1+|lambda_min|)I onto the cone.
    Returns (point, shift); the point's dimension follows the family."""
    M = gen_spd_matrix(family, n, seed)
    M = 0.5 * (M + M.T)
    shift = 0.0
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        shift = 1.0 + abs(float(np.linalg.eigvalsh(M)[0]))
        M = M + shift * np.eye(M.shape[0])
    return spd.point(M), shift


@dataclass
class BenchmarkRecord:
    problem_id: str
    manifold: str
    family: int
    dims: str
    seed: int
    epsilon: float
    algorithm: int
    retraction: str
    theta: float
    sigma: float
    iters: int
    field_evals: int
    cpu_seconds: float
    status: str
    final_merit: float
    final_stationarity: float


RECORD_FIELDS = tuple(f.name for f in _dc_fields(BenchmarkRecord))
_INT_FIELDS = frozenset(("family", "seed", "algorithm", "iters", "field_evals"))
_FLOAT_FIELDS = frozenset(
    ("epsilon", "theta", "sigma", "cpu_seconds", "final_merit", "final_stationarity")
)


def solver_label(record):
    """Profile/robustness grouping key for a record's solver settings."""
    label = f"alg{record.algorithm}-{record.retraction}"
    if record.algorithm == 3:
        label += f"-theta{record.theta:g}"
    return label


def _timed_run(problem, config, p0):
    t0 = time.perf_counter()
    trace = solver.run(problem, config, p0)
    elapsed = time.perf_counter() - t0
    return trace, elapsed


def _record(problem_id, manifold, family, dims, seed, epsilon, config, trace, elapsed):
    last = trace.steps[-1] if trace.steps else None
    return BenchmarkRecord(
        problem_id=problem_id,
        manifold=manifold,
        family=family,
        dims=dims,
        seed=seed,
        epsilon=epsilon,
        algorithm=int(config.algorithm),
        retraction=config.retraction_kind,
        theta=config.theta,
        sigma=config.sigma,
        iters=trace.iterations,
        field_evals=trace.field_evals,
        cpu_seconds=elapsed,
        status=trace.status.value,
        final_merit=last.merit if last else trace.initial_merit,
        final_stationarity=last.stationarity if last else trace.initial_stationarity,
    )


def _instances(suite, dims, seeds, epsilons):
    """Yield (problem_id, manifold, family, dims_str, seed, epsilon,
    problem, start) in deterministic order."""
    if suite == "sphere-nc":
        for n in dims:
            for s in seeds:
                problem, p0 = gen_sphere_nc(n, s)
                yield (f"spherenc-n{n}-s{s}", "sphere", 0, str(n), s, 0.0,
                       problem, p0)
    elif suite == "rayleigh":
        for family in (1, 2, 3, 4, 5):
            for n in dims:
                for s in seeds:
                    problem, p0, A = gen_rayleigh(family, n, s)
                    N = A.shape[0]
                    yield (f"rayleigh-f{family}-n{N}-s{s}", "sphere", family,
                           str(N), s, 0.0, problem, p0)
    elif suite == "tsvd":
        for m, n, p in dims:
            for eps in epsilons:
                for s in seeds:
                    problem, p0, _ = gen_tsvd(m, n, p, s, eps)
                    yield (f"tsvd-{m}x{n}x{p}-e{eps:g}-s{s}", "stiefel-product",
                           0, f"{m}x{n}x{p}", s, eps, problem, p0)
    elif suite in ("spd-f1", "spd-f2"):
        which = suite[-2:]
        problem = spd.spd_problem(which)
        for family in (1, 2, 3, 4, 5):
            for n in dims:
                for s in seeds:
                    p0, _ = gen_spd_start(family, n, s)
                    N = p0.ambient.shape[0]
                    yield (f"spd{which}-f{family}-n{N}-s{s}", "spd-cone",
                           family, str(N), s, 0.0, problem, p0)
    else:
        raise ValueError(f"unknown suite {suite!r}")


def default_dims(suite, paper_scale=False):
    if suite == "sphere-nc":
        return PAPER_SPHERE_NC_DIMS if paper_scale else DESK_SPHERE_NC_DIMS
    if suite == "rayleigh":
        return PAPER_RAYLEIGH_DIMS if paper_scale else DESK_RAYLEIGH_DIMS
    if suite == "tsvd":
        return PAPER_TSVD_DIMS if paper_scale else DESK_TSVD_DIMS
    if suite in ("spd-f1", "spd-f2"):
        return PAPER_SPD_DIMS if paper_scale else DESK_SPD_DIMS
    raise ValueError(f"unknown suite {suite!r}")


def default_seeds(suite):
    return {"sphere-nc": 10, "rayleigh": 5, "tsvd": 3}.get(suite, 5)


def run_suite(suite, dims=None, seeds=None, epsilons=None, algorithms=(2,),
              retractions=None, theta=0.0, sigma=1e-3, stat_tol=1e-6,
              min_step=1e-10, max_iter=2000, paper_scale=False):
    """One record per (instance x algorithm x retraction), in deterministic
    order; run failures land in the status column, never as exceptions."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    if dims is None:
        dims = default_dims(suite, paper_scale)
    if seeds is None:
        seeds = range(default_seeds(suite))
    elif isinstance(seeds, int):
        seeds = range(seeds)
    if epsilons is None:
        epsilons = EPSILON_SWEEP if suite == "tsvd" else (0.0,)

    records = []
    for pid, manifold, family, dstr, s, eps, problem, p0 in _instances(
        suite, dims, tuple(seeds), tuple(epsilons)
    ):
        kinds = retractions if retractions is not None else problem.retraction_kinds
        for algorithm in algorithms:
            for kind in kinds:
                config = solver.SolverConfig(
                    algorithm=algorithm,
                    retraction_kind=kind,
                    sigma=sigma,
                    theta=theta,
                    stat_tol=stat_tol,
                    min_step=min_step,
                    max_iter=max_iter,
                )
                trace, elapsed = _timed_run(problem, config, p0)
                records.append(
                    _record(pid, manifold, family, dstr, s, eps, config,
                            trace, elapsed)
                )
    return records


class MismatchedProblemSets(ValueError):
    """Solvers in a profile must cover the same problem ids."""


@dataclass
class PerformanceProfile:
    tau_grid: np.ndarray
    curves: dict

    def as_rows(self):
        rows = []
        for label in sorted(self.curves):
            rho = self.curves[label]
            rows.extend(
                (float(tau), label, float(r)) for tau, r in zip(self.tau_grid, rho)
            )
        return rows


def performance_profile(records, metric="cpu_seconds"):
    """Dolan-More profile: rho_s(tau) = fraction of problems whose cost is
    within a factor tau of the per-problem best; failures cost +inf."""
    if metric not in ("cpu_seconds", "iters", "field_evals"):
        raise ValueError(f"unknown metric {metric!r}")

    costs = {}
    for r in records:
        label = solver_label(r)
        cost = float(getattr(r, metric)) if r.status == "Converged" else math.inf
        per = costs.setdefault(label, {})
        if r.problem_id in per:
            raise ValueError(f"duplicate record for {label} on {r.problem_id}")
        per[r.problem_id] = cost
    if not costs:
        raise ValueError("no records")

    labels = sorted(costs)
    ids = sorted(costs[labels[0]])
    for label in labels[1:]:
        if sorted(costs[label]) != ids:
            raise MismatchedProblemSets(
                f"solver {label} covers a different problem set"
            )

    ratios = {}
    for label in labels:
        row = np.empty(len(ids))
        for j, pid in enumerate(ids):
            best = min(costs[lab][pid] for lab in labels)
            cost = costs[label][pid]
            if math.isinf(cost):
                row[j] = math.inf
            elif cost == best:
                row[j] = 1.0
            else:
                row[j] = cost / best
        ratios[label] = row

    finite = sorted(
        {1.0}
        | {float(v) for row in ratios.values() for v in row if math.isfinite(v)}
    )
    tau_grid = np.asarray(finite)
    curves = {
        label: np.array([np.mean(row <= tau) for tau in tau_grid])
        for label, row in ratios.items()
    }
    return PerformanceProfile(tau_grid=tau_grid, curves=curves)


def robustness_table(records):
    """Percent of runs with status Converged per (solver, epsilon) cell,
    as sorted (solver, epsilon, percent) rows."""
    cells = {}
    for r in records:
        key = (solver_label(r), r.epsilon)
        solved, total = cells.get(key, (0, 0))
        cells[key] = (solved + (r.status == "Converged"), total + 1)
    return [
        (label, eps, 100.0 * solved / total)
        for (label, eps), (solved, total) in sorted(cells.items())
    ]


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_records(path, records, config_line=""):
    """CSV with a # config echo line, the exact field-name header, and
    floats at 17 significant digits so read->write round-trips bytewise."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {config_line}\n")
        fh.write(",".join(RECORD_FIELDS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(getattr(r, name)) for name in RECORD_FIELDS) + "\n")


def read_records(path):
    """Inverse of write_records; returns (config_line, records)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError("missing config echo line")
    config_line = lines[0][2:]
    if len(lines) < 2 or lines[1] != ",".join(RECORD_FIELDS):
        raise ValueError("unexpected CSV header")
    records = []
    for line in lines[2:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(RECORD_FIELDS):
            raise ValueError(f"malformed record line: {line!r}")
        kwargs = {}
        for name, text in zip(RECORD_FIELDS, parts):
            if name in _INT_FIELDS:
                kwargs[name] = int(text)
            elif name in _FLOAT_FIELDS:
                kwargs[name] = float(text)
            else:
                kwargs[name] = text
        records.append(BenchmarkRecord(**kwargs))
    return config_line, records


def write_profile(path, profile, config_line=""):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {config_line}\n")
        fh.write("tau,solver,rho\n")
        for tau, label, rho in profile.as_rows():
            fh.write(f"{_fmt(tau)},{label},{_fmt(rho)}\n")


def write_robustness(path, rows, config_line=""):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {config_line}\n")
        fh.write("solver,epsilon,percent_solved\n")
        for label, eps, pct in rows:
            fh.write(f"{label},{_fmt(float(eps))},{_fmt(pct)}\n")
