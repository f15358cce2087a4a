"""Command-line interface.

Subcommands:
  gen      draw a random Rayleigh-fading instance and write it to JSON
  solve    solve an instance file (exit 0 solved / 2 infeasible / 3
           numerical failure)
  certify  check a (instance, solution, dual) triple; prints the JSON
           certificate (exit 0 pass / 1 fail)
  sweep    run a Monte-Carlo rate-target sweep, writing CSV/JSON and an
           optional summary figure
"""

import argparse
import json
import sys

import numpy as np

from . import bench, report
from .certify import certify
from .dual import FixedPointConfig
from .errors import BeamquantError, InfeasibleError, SchemaError
from .model import (
    gamma_from_rate,
    parse_dual,
    parse_instance,
    parse_solution,
    serialize_dual,
    serialize_instance,
    serialize_solution,
)
from .solver import solve

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3


def _cmd_gen(args) -> int:
    rng = bench.instance_rng(args.seed, 0, 0)
    gamma = gamma_from_rate(args.rate_target)
    inst = bench.gen_instance(
        args.M, args.K, args.capacity, args.sigma2, rng,
        sinr_targets=np.full(args.K, gamma),
    )
    with open(args.out, "w") as fh:
        fh.write(serialize_instance(inst))
    return EXIT_OK


def _trace_writer(fh, phase):
    def emit(iteration, vector, residual):
        fh.write(
            json.dumps(
                {
                    "phase": phase,
                    "iteration": iteration,
                    "values": [float(x) for x in vector],
                    "residual": residual,
                }
            )
            + "\n"
        )

    return emit


def _cmd_solve(args) -> int:
    with open(getattr(args, "in"), "r") as fh:
        inst = parse_instance(fh.read())
    config = FixedPointConfig(tol=args.tol, max_iters=args.max_iters)
    trace_fh = open(args.trace, "w") if args.trace else None
    try:
        result = solve(
            inst,
            config,
            dual_trace=_trace_writer(trace_fh, "dual") if trace_fh else None,
            primal_trace=_trace_writer(trace_fh, "primal") if trace_fh else None,
        )
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BeamquantError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        if trace_fh:
            trace_fh.close()
    with open(args.out, "w") as fh:
        fh.write(serialize_solution(result.primal))
    if args.dual_out:
        with open(args.dual_out, "w") as fh:
            fh.write(serialize_dual(result.dual))
    return EXIT_OK


def _cmd_certify(args) -> int:
    with open(args.instance) as fh:
        inst = parse_instance(fh.read())
    with open(args.solution) as fh:
        primal = parse_solution(fh.read())
    with open(args.dual) as fh:
        dual = parse_dual(fh.read())
    cert = certify(inst, primal, dual)
    print(cert.to_json())
    return EXIT_OK if cert.passed else EXIT_FAIL


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        cfg = bench.parse_sweep_config(fh.read())
    records, aggregates = bench.run_sweep(cfg, workers=args.workers)
    with open(args.out_csv, "w") as fh:
        fh.write(bench.records_to_csv(records))
    with open(args.out_json, "w") as fh:
        fh.write(bench.sweep_to_json(cfg, records, aggregates))
    if args.plot:
        report.render_sweep_figure(
            aggregates,
            args.plot,
            title=f"M={cfg.M}, K={cfg.K}, C={cfg.capacity}, {cfg.runs} runs",
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamquant",
        description=(
            "Globally optimal joint beamforming and fronthaul quantization "
            "via dual/primal fixed-point iterations."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--M", type=int, required=True, help="number of relays")
    p.add_argument("--K", type=int, required=True, help="number of users")
    p.add_argument("--capacity", type=float, required=True, help="fronthaul capacity (bits/symbol)")
    p.add_argument("--sigma2", type=float, required=True, help="noise power")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rate-target", type=float, default=1.0, help="per-user rate target (bits/symbol)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("--in", required=True, help="instance JSON file")
    p.add_argument("--out", required=True, help="solution JSON file")
    p.add_argument("--dual-out", default=None, help="optional dual-solution JSON file")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--trace", default=None, help="iteration trace (JSON lines)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("certify", help="certify a solution against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--dual", required=True)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("sweep", help="run a Monte-Carlo rate-target sweep")
    p.add_argument("--config", required=True, help="sweep configuration JSON")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json", required=True)
    p.add_argument("--plot", default=None, help="optional summary figure (PNG)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
