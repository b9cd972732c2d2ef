"""Scenario generation, Monte-Carlo experiment runner and plot-data export.

Topologies place K access points in a row (or grid) of overlapping
circular cells whose radius hits a target SNR; clients and relays are
dropped uniformly at random, one uniformly chosen cell each.  The runner
solves every repetition with the selected policies and aggregates the
results into deterministic CSV tables; wall-clock timings go to a
separate file so the metrics stay byte-reproducible.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import time
from dataclasses import dataclass, field, asdict

from . import oracle, simulation
from .errors import ScenarioError
from .problem import (Assignment, TopologyInstance, build_asymmetric,
                      recover_assignment, total_throughput)
from .radio import RadioParams, build_benefits, cell_radius

METRICS_COLUMNS = ["experiment", "epsilon", "num_clients", "num_relays",
                   "num_aps", "policy", "objective", "iterations",
                   "accepted_bids", "gap_to_oracle", "per_ap_counts"]

PLOT_KINDS = ("objective_vs_clients", "objective_vs_aps", "iters_vs_clients",
              "iters_vs_relays", "iters_vs_eps", "gap_vs_eps",
              "dynamic_timeseries", "cpu_cdf")


@dataclass
class GeneratorSpec:
    num_aps: int = 2
    clients_per_ap: int = 5
    num_relays: int = 4
    snr_target_db: float = 10.0
    ap_spacing_factor: float = 1.1
    layout: str = "line"            # or "grid"
    benefit_scale: float = 1e-9     # solver benefit unit per bit/s (Gbit/s)

    def __post_init__(self):
        if self.num_aps < 1:
            raise ScenarioError("need at least one AP")
        if self.num_relays > self.num_aps * self.clients_per_ap:
            raise ScenarioError("more relays than clients")
        if self.layout not in ("line", "grid"):
            raise ScenarioError(f"unknown layout {self.layout!r}")


@dataclass
class ExperimentSpec:
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    radio: RadioParams = field(default_factory=RadioParams)
    epsilons: tuple = (0.1,)
    repetitions: int = 100
    policies: tuple = ("AUCTION", "OPTM", "RSSI", "RAND")
    seed: int = 0
    integer_digits: int | None = None   # integer-benefit regime when set
    broadcast_prices: bool = False
    latency_ms: tuple = (1.0, 5.0)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ScenarioError("repetitions must be >= 1")
        bad = set(self.policies) - {"AUCTION", "OPTM", "RSSI", "RAND"}
        if bad:
            raise ScenarioError(f"unknown policies {sorted(bad)}")


def _uniform_in_disk(rng: random.Random, center, radius):
    r = radius * math.sqrt(rng.random())
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return (center[0] + r * math.cos(theta), center[1] + r * math.sin(theta))


def ap_positions(spec: GeneratorSpec, radius: float):
    spacing = spec.ap_spacing_factor * radius
    if spec.layout == "line":
        return [(k * spacing, 0.0) for k in range(spec.num_aps)]
    side = math.ceil(math.sqrt(spec.num_aps))
    return [((k % side) * spacing, (k // side) * spacing)
            for k in range(spec.num_aps)]


def generate_topology(spec: GeneratorSpec, params: RadioParams,
                      seed: int) -> TopologyInstance:
    """Sample a random topology; eligibility is cell-radius membership."""
    radius = cell_radius(params, spec.snr_target_db)
    aps = ap_positions(spec, radius)
    rng = random.Random(seed)
    num_clients = spec.num_aps * spec.clients_per_ap

    def sample():
        center = aps[rng.randrange(len(aps))]
        return _uniform_in_disk(rng, center, radius)

    clients = [sample() for _ in range(num_clients)]
    relays = [sample() for _ in range(spec.num_relays)]
    return TopologyInstance(clients=clients, relays=relays, aps=aps,
                            radius=radius).validate()


@dataclass
class MetricsRow:
    experiment: str
    epsilon: float
    num_clients: int
    num_relays: int
    num_aps: int
    policy: str
    objective: float
    iterations: int
    accepted_bids: int
    gap_to_oracle: float
    per_ap_counts: str      # "c0|c1|..."


def _instance_for(spec: ExperimentSpec, rep_seed: int):
    topo = generate_topology(spec.generator, spec.radio, rep_seed)
    benefits = build_benefits(spec.radio, topo)
    inst = build_asymmetric(benefits, topo, scale=spec.generator.benefit_scale)
    if spec.integer_digits is not None:
        inst = inst.scaled_to_int(spec.integer_digits)
    return topo, benefits, inst


def _solve_policy(policy, spec, topo, benefits, inst, epsilon, rep_seed):
    """Returns (assignment {i->q} or Assignment, objective, iterations,
    accepted bids)."""
    scale = spec.generator.benefit_scale
    if policy == "AUCTION":
        config = simulation.SimConfig(epsilon=epsilon,
                                      latency_ms=spec.latency_ms,
                                      broadcast_prices=spec.broadcast_prices)
        res = simulation.run_static(inst, config, rep_seed)
        assignment = recover_assignment(inst, res.assigned)
        return assignment, res.objective, res.stats.total_bids, \
            res.stats.accepted_bids
    if policy == "OPTM":
        res = oracle.solve_exact_mcf(inst)
        assignment = recover_assignment(inst, res.chosen)
        return assignment, res.objective, 0, 0
    if policy == "RSSI":
        assignment = oracle.baseline_rssi(benefits, topo)
    else:  # RAND
        assignment = oracle.baseline_random(benefits, topo,
                                            random.Random(rep_seed + 99991))
    objective = total_throughput(benefits, assignment)
    if spec.integer_digits is not None:
        objective = float(round(objective * scale
                                * 10.0 ** spec.integer_digits))
    else:
        objective *= scale
    return assignment, objective, 0, 0


def run_experiments(spec: ExperimentSpec):
    """Run the full sweep.

    Returns (rows, timings, summary): deterministic MetricsRow list, a
    per-run wall-clock list (policy, seconds) and an aggregate summary.
    """
    rows, timings = [], []
    for epsilon in spec.epsilons:
        for rep in range(spec.repetitions):
            rep_seed = spec.seed * 1_000_003 + rep
            topo, benefits, inst = _instance_for(spec, rep_seed)
            exp_id = f"eps{epsilon}-rep{rep}"
            optimum = oracle.solve_exact_mcf(inst).objective
            for policy in spec.policies:
                t0 = time.perf_counter()
                assignment, objective, iterations, accepted = _solve_policy(
                    policy, spec, topo, benefits, inst, epsilon, rep_seed)
                elapsed = time.perf_counter() - t0
                counts = assignment.ap_connection_counts(topo.num_aps)
                rows.append(MetricsRow(
                    experiment=exp_id, epsilon=epsilon,
                    num_clients=topo.num_clients, num_relays=topo.num_relays,
                    num_aps=topo.num_aps, policy=policy, objective=objective,
                    iterations=iterations, accepted_bids=accepted,
                    gap_to_oracle=optimum - objective,
                    per_ap_counts="|".join(str(counts[k])
                                           for k in range(topo.num_aps))))
                timings.append((exp_id, policy, elapsed))
    return rows, timings, summarize(rows)


def summarize(rows) -> dict:
    by_policy = {}
    for r in rows:
        by_policy.setdefault(r.policy, []).append(r)
    summary = {"policies": {}, "per_epsilon": {}}
    for policy, rs in sorted(by_policy.items()):
        objs = [r.objective for r in rs]
        mean = sum(objs) / len(objs)
        var = sum((o - mean) ** 2 for o in objs) / max(len(objs) - 1, 1)
        summary["policies"][policy] = {
            "mean_objective": mean,
            "stderr_objective": math.sqrt(var / len(objs)),
            "mean_iterations": sum(r.iterations for r in rs) / len(rs),
            "max_gap_to_oracle": max(r.gap_to_oracle for r in rs),
        }
    auction = [r for r in rows if r.policy == "AUCTION"]
    for eps in sorted({r.epsilon for r in auction}):
        sel = [r for r in auction if r.epsilon == eps]
        summary["per_epsilon"][str(eps)] = {
            "mean_iterations": sum(r.iterations for r in sel) / len(sel),
            "mean_accepted_bids": sum(r.accepted_bids for r in sel) / len(sel),
            "delta_max": max(r.gap_to_oracle for r in sel),
        }
    return summary


# ----------------------------------------------------------------------
# CSV / JSON plumbing


def metrics_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in METRICS_COLUMNS])
    return buf.getvalue()


def metrics_from_csv(text: str):
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(MetricsRow(
            experiment=rec["experiment"], epsilon=float(rec["epsilon"]),
            num_clients=int(rec["num_clients"]),
            num_relays=int(rec["num_relays"]), num_aps=int(rec["num_aps"]),
            policy=rec["policy"], objective=float(rec["objective"]),
            iterations=int(rec["iterations"]),
            accepted_bids=int(rec["accepted_bids"]),
            gap_to_oracle=float(rec["gap_to_oracle"]),
            per_ap_counts=rec["per_ap_counts"]))
    return rows


def timings_to_csv(timings) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "policy", "wall_clock_s"])
    for exp_id, policy, seconds in timings:
        w.writerow([exp_id, policy, f"{seconds:.6f}"])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    return v


def _mean_series(rows, x_attr, y_attr, policies):
    series = {}
    for r in rows:
        if r.policy not in policies:
            continue
        key = (getattr(r, x_attr), r.policy)
        series.setdefault(key, []).append(getattr(r, y_attr))
    return {key: sum(v) / len(v) for key, v in sorted(series.items())}


def emit_plotdata(rows, kind: str, timings=None, timeseries=None) -> str:
    """Build one figure's CSV from metrics rows (or auxiliary data).

    dynamic_timeseries expects `timeseries` [(time_ms, objective)];
    cpu_cdf expects `timings` rows.
    """
    if kind not in PLOT_KINDS:
        raise ScenarioError(f"unknown plot kind {kind!r}; "
                            f"available: {', '.join(PLOT_KINDS)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")

    if kind == "dynamic_timeseries":
        if not timeseries:
            raise ScenarioError("dynamic_timeseries requires timeseries data")
        w.writerow(["time_ms", "objective"])
        for t, obj in timeseries:
            w.writerow([_fmt(float(t)), _fmt(float(obj))])
        return buf.getvalue()
    if kind == "cpu_cdf":
        if not timings:
            raise ScenarioError("cpu_cdf requires timing data")
        w.writerow(["policy", "wall_clock_s", "cdf"])
        by_policy = {}
        for _e, policy, seconds in timings:
            by_policy.setdefault(policy, []).append(seconds)
        for policy, vals in sorted(by_policy.items()):
            vals.sort()
            for idx, v in enumerate(vals, 1):
                w.writerow([policy, f"{v:.6f}", _fmt(idx / len(vals))])
        return buf.getvalue()

    if not rows:
        raise ScenarioError("no metrics rows to plot")
    policies = sorted({r.policy for r in rows})
    spec_map = {
        "objective_vs_clients": ("num_clients", "objective", policies),
        "objective_vs_aps": ("num_aps", "objective", policies),
        "iters_vs_clients": ("num_clients", "iterations", ["AUCTION"]),
        "iters_vs_relays": ("num_relays", "iterations", ["AUCTION"]),
        "iters_vs_eps": ("epsilon", "iterations", ["AUCTION"]),
        "gap_vs_eps": ("epsilon", "gap_to_oracle", ["AUCTION"]),
    }
    x_attr, y_attr, pol = spec_map[kind]
    xs = {getattr(r, x_attr) for r in rows if r.policy in pol}
    if len(xs) < 1:
        raise ScenarioError(
            f"metrics lack the {x_attr} dimension for {kind}; "
            f"policies present: {policies}")
    if kind == "gap_vs_eps":
        # delta_max per epsilon rather than the mean
        w.writerow(["epsilon", "delta_max"])
        by_eps = {}
        for r in rows:
            if r.policy == "AUCTION":
                by_eps.setdefault(r.epsilon, []).append(r.gap_to_oracle)
        for eps, gaps in sorted(by_eps.items()):
            w.writerow([_fmt(eps), _fmt(max(gaps))])
        return buf.getvalue()
    series = _mean_series(rows, x_attr, y_attr, set(pol))
    w.writerow([x_attr, "policy", f"mean_{y_attr}"])
    for (x, policy), mean in series.items():
        w.writerow([_fmt(x), policy, _fmt(mean)])
    return buf.getvalue()


# ----------------------------------------------------------------------
# scenario documents (dynamic simulation input)


def scenario_to_dict(scn: simulation.Scenario, topo: TopologyInstance,
                     params: RadioParams) -> dict:
    return {
        "schema_version": simulation.SCENARIO_SCHEMA,
        "radio": params.to_dict(),
        "topology": topo.to_dict(),
        "epsilon": scn.epsilon,
        "horizon_slots": scn.horizon_slots,
        "seed": scn.seed,
        "latency_ms": list(scn.latency_ms),
        "slot_ms": scn.slot_ms,
        "broadcast_prices": scn.broadcast_prices,
        "reverse_auction": scn.reverse_auction,
        "benefit_scale": scn.benefit_scale,
        "events": scn.events,
    }


def scenario_from_dict(doc: dict):
    """Returns (Scenario, TopologyInstance, RadioParams)."""
    if doc.get("schema_version") != simulation.SCENARIO_SCHEMA:
        raise ScenarioError(
            f"unsupported scenario schema {doc.get('schema_version')}")
    params = (RadioParams.from_dict(doc["radio"]) if "radio" in doc
              else RadioParams())
    topo_doc = doc.get("topology")
    if topo_doc is None:
        raise ScenarioError("scenario lacks a topology")
    if "generator" in topo_doc:
        gen = GeneratorSpec(**topo_doc["generator"])
        topo = generate_topology(gen, params, int(doc.get("seed", 0)))
        scale = gen.benefit_scale
    else:
        topo = TopologyInstance.from_dict(topo_doc)
        scale = float(doc.get("benefit_scale", 1.0))
    scn = simulation.Scenario(
        epsilon=float(doc.get("epsilon", 0.1)),
        horizon_slots=int(doc.get("horizon_slots", 100)),
        seed=int(doc.get("seed", 0)),
        latency_ms=tuple(doc.get("latency_ms", (1.0, 5.0))),
        slot_ms=float(doc.get("slot_ms", 10.0)),
        broadcast_prices=bool(doc.get("broadcast_prices", False)),
        reverse_auction=bool(doc.get("reverse_auction", True)),
        benefit_scale=scale,
        events=list(doc.get("events", [])),
    )
    return scn, topo, params


def load_scenario(path):
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
