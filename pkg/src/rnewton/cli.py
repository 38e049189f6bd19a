"""Command-line front end: run benchmark suites to CSV records, then turn
record files into performance profiles or robustness tables."""

import argparse

from . import bench
from .kernels import BACKEND

_SUITE_DEFAULTS = {
    "sphere-nc": {"algorithm": 2, "theta": 0.0},
    "rayleigh": {"algorithm": 2, "theta": 0.0},
    "tsvd": {"algorithm": 3, "theta": 0.9},
    "spd": {"algorithm": 3, "theta": 0.9999},
}


def _parse_dims(suite, text):
    if text is None:
        return None
    if suite == "tsvd":
        out = []
        for item in text.split(","):
            parts = tuple(int(v) for v in item.lower().split("x"))
            if len(parts) != 3:
                raise argparse.ArgumentTypeError(
                    f"tsvd dims must be mxnxp triples, got {item!r}"
                )
            out.append(parts)
        return tuple(out)
    return tuple(int(v) for v in text.split(","))


def _cmd_bench(args):
    defaults = _SUITE_DEFAULTS[args.suite]
    suite = f"spd-{args.objective}" if args.suite == "spd" else args.suite
    algorithm = args.algorithm if args.algorithm else defaults["algorithm"]
    if args.theta is not None:
        theta = args.theta
    else:
        theta = defaults["theta"] if algorithm == 3 else 0.0
    dims = _parse_dims(args.suite, args.dims)
    seeds = range(args.seed, args.seed + bench.default_seeds(suite))
    epsilons = None
    if args.suite == "tsvd" and args.epsilon_sweep:
        epsilons = tuple(float(v) for v in args.epsilon_sweep.split(","))
    retractions = (args.retraction,) if args.retraction else None

    records = bench.run_suite(
        suite,
        dims=dims,
        seeds=seeds,
        epsilons=epsilons,
        algorithms=(algorithm,),
        retractions=retractions,
        theta=theta,
        sigma=args.sigma,
        paper_scale=args.paper_scale,
    )

    resolved_dims = dims if dims is not None else bench.default_dims(
        suite, args.paper_scale
    )
    echo = (
        f"suite={suite} dims={resolved_dims} seeds={seeds.start}..{seeds.stop - 1}"
        f" epsilons={epsilons if epsilons is not None else 'default'}"
        f" algorithm={algorithm} retraction={args.retraction or 'all'}"
        f" theta={theta:g} sigma={args.sigma:g}"
        f" paper_scale={args.paper_scale} backend={BACKEND}"
    )
    out = args.out or f"{suite}-records.csv"
    bench.write_records(out, records, echo)
    solved = sum(r.status == "Converged" for r in records)
    print(f"wrote {len(records)} records to {out} ({solved} converged)")
    return 0


def _cmd_profile(args):
    config_line, records = bench.read_records(args.records)
    profile = bench.performance_profile(records, metric=args.metric)
    out = args.out or "profile.csv"
    bench.write_profile(
        out, profile, f"source={args.records} metric={args.metric} [{config_line}]"
    )
    print(f"wrote profile over {len(profile.curves)} solvers to {out}")
    return 0


def _cmd_robustness(args):
    config_line, records = bench.read_records(args.records)
    rows = bench.robustness_table(records)
    out = args.out or "robustness.csv"
    bench.write_robustness(out, rows, f"source={args.records} [{config_line}]")
    print(f"wrote {len(rows)} robustness cells to {out}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rnewton",
        description="Newton-type solvers for vector fields on manifolds: "
        "benchmark suites, performance profiles, robustness tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench_p = sub.add_parser("bench", help="run a suite and write records CSV")
    suite_sub = bench_p.add_subparsers(dest="suite", required=True)
    for name in ("sphere-nc", "rayleigh", "tsvd", "spd"):
        sp = suite_sub.add_parser(name, help=f"{name} suite")
        sp.add_argument("--algorithm", type=int, choices=(1, 2, 3))
        sp.add_argument("--retraction", help="restrict to one retraction kind")
        sp.add_argument("--theta", type=float)
        sp.add_argument("--sigma", type=float, default=1e-3)
        sp.add_argument("--seed", type=int, default=0, help="base seed")
        sp.add_argument("--dims", help="comma list, e.g. 2,50 or 5x3x2,7x5x2")
        sp.add_argument("--epsilon-sweep", dest="epsilon_sweep",
                        help="comma list of perturbation scales (tsvd only)")
        sp.add_argument("--out", help="records CSV path")
        sp.add_argument("--paper-scale", action="store_true",
                        help="use the full-size dimension grid")
        if name == "spd":
            sp.add_argument("--objective", choices=("f1", "f2"), default="f1")
        sp.set_defaults(func=_cmd_bench)

    prof_p = sub.add_parser("profile", help="performance profile from records")
    prof_p.add_argument("records")
    prof_p.add_argument("--metric", default="cpu_seconds",
                        choices=("cpu_seconds", "iters", "field_evals"))
    prof_p.add_argument("--out")
    prof_p.set_defaults(func=_cmd_profile)

    rob_p = sub.add_parser("robustness", help="percent-solved table from records")
    rob_p.add_argument("records")
    rob_p.add_argument("--out")
    rob_p.set_defaults(func=_cmd_robustness)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
