"""Command line interface.

Subcommands: generate, solve, simulate, sweep, plotdata.  Outputs are
files; errors are reported as machine-readable JSON on stderr with a
nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, oracle, simulation
from .auction import solve_centralized
from .problem import (TopologyInstance, build_asymmetric, recover_assignment,
                      total_throughput)
from .radio import RadioParams, build_benefits


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(path)


def cmd_generate(args):
    spec = harness.GeneratorSpec(
        num_aps=args.aps, clients_per_ap=args.clients_per_ap,
        num_relays=args.relays, snr_target_db=args.snr_db,
        layout="grid" if args.grid else "line")
    topo = harness.generate_topology(spec, RadioParams(), args.seed)
    _write(Path(args.out), topo.to_json() + "\n")


def cmd_solve(args):
    params = RadioParams()
    topo = TopologyInstance.from_json(Path(args.topology).read_text())
    benefits = build_benefits(params, topo)
    inst = build_asymmetric(benefits, topo, scale=args.benefit_scale)
    out = Path(args.out_prefix)
    if args.policy == "auction":
        if args.distributed:
            config = simulation.SimConfig(epsilon=args.epsilon)
            res = simulation.run_static(inst, config, args.seed)
            assignment = recover_assignment(inst, res.assigned)
            if args.trace:
                _write(out.with_suffix(".trace.csv"),
                       simulation.trace_to_csv(res.trace))
        else:
            assigned, _ps, _stats, trace = solve_centralized(
                inst, args.epsilon, collect_trace=args.trace)
            assignment = recover_assignment(inst, assigned)
            if args.trace:
                lines = ["iteration,actor,action,object,old_price,new_price"]
                lines += [",".join(str(v) for v in row) for row in trace]
                _write(out.with_suffix(".trace.csv"), "\n".join(lines) + "\n")
    elif args.policy == "optimal":
        assignment = recover_assignment(inst, oracle.solve_exact_mcf(inst).chosen)
    elif args.policy == "rssi":
        assignment = oracle.baseline_rssi(benefits, topo)
    else:
        import random
        assignment = oracle.baseline_random(benefits, topo,
                                            random.Random(args.seed))
    _write(out.with_suffix(".assignment.json"), assignment.to_json() + "\n")
    _write(out.with_suffix(".assignment.csv"), assignment.to_csv())
    print(f"objective_bits_per_s={total_throughput(benefits, assignment):.6g}")


def cmd_simulate(args):
    scn, topo, params = harness.load_scenario(Path(args.scenario))
    net = simulation.DynamicNetwork(params, topo,
                                    benefit_scale=scn.benefit_scale)
    result = simulation.run_dynamic(net, scn,
                                    compute_optima=not args.no_oracle)
    outdir = Path(args.out_dir)
    _write(outdir / "trace.csv", simulation.trace_to_csv(result.trace))
    _write(outdir / "timeseries.csv",
           harness.emit_plotdata([], "dynamic_timeseries",
                                 timeseries=result.timeseries))
    summary = {
        "final_objective": result.final_objective,
        "post_event_accepted_bids": result.post_event_accepted_bids,
        "accepted_bids": result.stats.accepted_bids,
        "total_bids": result.stats.total_bids,
        "messages": result.stats.messages,
        "quiescent_points": [
            {"time_ms": p.time_ms, "objective": p.objective,
             "optimum": p.optimum} for p in result.quiescent_points],
    }
    _write(outdir / "summary.json", json.dumps(summary, indent=2) + "\n")


def cmd_sweep(args):
    doc = json.loads(Path(args.config).read_text())
    gen = harness.GeneratorSpec(**doc.get("generator", {}))
    radio = (RadioParams.from_dict(doc["radio"]) if "radio" in doc
             else RadioParams())
    spec = harness.ExperimentSpec(
        generator=gen, radio=radio,
        epsilons=tuple(doc.get("epsilons", [0.1])),
        repetitions=int(doc.get("repetitions", 100)),
        policies=tuple(doc.get("policies",
                               ["AUCTION", "OPTM", "RSSI", "RAND"])),
        seed=int(doc.get("seed", 0)),
        integer_digits=doc.get("integer_digits"),
        broadcast_prices=bool(doc.get("broadcast_prices", False)))
    rows, timings, summary = harness.run_experiments(spec)
    outdir = Path(args.out_dir)
    _write(outdir / "metrics.csv", harness.metrics_to_csv(rows))
    _write(outdir / "timings.csv", harness.timings_to_csv(timings))
    _write(outdir / "summary.json",
           json.dumps(summary, indent=2, sort_keys=True) + "\n")


def cmd_plotdata(args):
    rows = harness.metrics_from_csv(Path(args.metrics).read_text())
    timings = None
    if args.timings:
        timings = []
        import csv as _csv
        with open(args.timings) as fh:
            for rec in _csv.DictReader(fh):
                timings.append((rec["experiment"], rec["policy"],
                                float(rec["wall_clock_s"])))
    timeseries = None
    if args.timeseries:
        import csv as _csv
        timeseries = []
        with open(args.timeseries) as fh:
            for rec in _csv.DictReader(fh):
                timeseries.append((float(rec["time_ms"]),
                                   float(rec["objective"])))
    text = harness.emit_plotdata(rows, args.kind, timings=timings,
                                 timeseries=timeseries)
    _write(Path(args.out_dir) / f"{args.kind}.csv", text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwassoc",
        description="Joint client association and relay selection via "
                    "distributed auctions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a random topology")
    p.add_argument("--aps", type=int, default=2)
    p.add_argument("--clients-per-ap", type=int, default=5)
    p.add_argument("--relays", type=int, default=4)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--grid", action="store_true",
                   help="grid AP layout instead of a line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one topology with one policy")
    p.add_argument("--topology", required=True)
    p.add_argument("--policy", default="auction",
                   choices=["auction", "optimal", "rssi", "random"])
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--benefit-scale", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--centralized", dest="distributed", action="store_false",
                   help="use the centralized auction instead of the simulator")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="run a dynamic scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-oracle", action="store_true",
                   help="skip per-quiescence exact optima")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte-Carlo experiment sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plotdata", help="export figure CSVs from metrics")
    p.add_argument("--metrics", required=True)
    p.add_argument("--kind", required=True, choices=list(harness.PLOT_KINDS))
    p.add_argument("--timings")
    p.add_argument("--timeseries")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
