"""Exact solvers and comparison baselines.

The exact optimum comes from a min-cost-flow formulation: each client
supplies one unit, a supersource supplies the Q - M units needed to
saturate every object through zero-cost arcs, and client-object arcs
carry cost -beta.  It is solved by successive shortest paths with
potentials, which also yields exact dual prices.  A brute-force
enumerator cross-checks it at desk scale, and the RAND/RSSI association
policies serve as comparison baselines.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .auction import PriceState
from .errors import SizeError
from .problem import Assignment, AsymmetricInstance, TopologyInstance
from .radio import BenefitTable


@dataclass
class FlowNetwork:
    """Residual graph for the assignment min-cost-flow.

    Node layout: clients, then objects, then the supersource s, then the
    auxiliary super-supply and super-demand nodes used by the solver.
    """

    num_nodes: int
    heads: list = field(default_factory=list)
    caps: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    adj: list = field(default_factory=list)

    def add_arc(self, a: int, b: int, cap: float, cost: float) -> int:
        idx = len(self.heads)
        self.heads += [b, a]
        self.caps += [cap, 0.0]
        self.costs += [cost, -cost]
        self.adj[a].append(idx)
        self.adj[b].append(idx + 1)
        return idx


@dataclass
class OracleResult:
    chosen: dict          # i -> q
    objective: float
    prices: PriceState


def _build_network(inst: AsymmetricInstance):
    m, nobj = inst.num_clients, inst.num_objects
    s = m + nobj
    src, sink = s + 1, s + 2
    net = FlowNetwork(num_nodes=sink + 1)
    net.adj = [[] for _ in range(net.num_nodes)]
    client_arcs = {}
    for i in range(m):
        net.add_arc(src, i, 1.0, 0.0)
    net.add_arc(src, s, float(nobj - m), 0.0)
    for (i, q) in inst.pairs():
        client_arcs[(i, q)] = net.add_arc(i, m + q, 1.0, -inst.beta[(i, q)])
    for q in range(nobj):
        net.add_arc(s, m + q, 1.0, 0.0)
        net.add_arc(m + q, sink, 1.0, 0.0)
    return net, client_arcs, s, src, sink


def solve_exact_mcf(inst: AsymmetricInstance) -> OracleResult:
    """Optimal clients-objects assignment via min-cost flow.

    Runs Dijkstra with node potentials from the super-supply until all
    Q units are routed; flows are integral by construction.  The final
    potentials provide dual prices satisfying 0-CS.
    """
    net, client_arcs, s, src, sink = _build_network(inst)
    m = inst.num_clients
    n_nodes = net.num_nodes
    # initial potentials make every reduced cost non-negative (layered graph)
    h = [0.0] * n_nodes
    for q in range(inst.num_objects):
        best = 0.0
        for i in inst.clients_of(q):
            best = min(best, -inst.beta[(i, q)])
        h[m + q] = best
    h[sink] = min((h[m + q] for q in range(inst.num_objects)), default=0.0)

    need = float(inst.num_objects)
    while need > 0:
        dist = [math.inf] * n_nodes
        prev_arc = [-1] * n_nodes
        dist[src] = 0.0
        pq = [(0.0, src)]
        while pq:
            d, v = heapq.heappop(pq)
            if d > dist[v] + 1e-12:
                continue
            for idx in net.adj[v]:
                if net.caps[idx] <= 0:
                    continue
                w = net.heads[idx]
                nd = d + net.costs[idx] + h[v] - h[w]
                if nd < dist[w] - 1e-12:
                    dist[w] = nd
                    prev_arc[w] = idx
                    heapq.heappush(pq, (nd, w))
        if math.isinf(dist[sink]):
            raise RuntimeError("flow network unexpectedly infeasible")
        # augment along the shortest path by its bottleneck
        bottleneck = need
        v = sink
        while v != src:
            idx = prev_arc[v]
            bottleneck = min(bottleneck, net.caps[idx])
            v = net.heads[idx ^ 1]
        v = sink
        while v != src:
            idx = prev_arc[v]
            net.caps[idx] -= bottleneck
            net.caps[idx ^ 1] += bottleneck
            v = net.heads[idx ^ 1]
        need -= bottleneck
        d_sink = dist[sink]
        for v in range(n_nodes):
            h[v] += dist[v] if math.isfinite(dist[v]) else d_sink

    chosen = {}
    for (i, q), idx in client_arcs.items():
        if net.caps[idx ^ 1] > 0.5:
            chosen[i] = q
    objective = sum(inst.beta[(i, q)] for i, q in chosen.items())
    prices = PriceState(
        prices={q: -h[m + q] for q in range(inst.num_objects)},
        profits={i: h[i] for i in range(m)},
        supersource=-h[s],
    )
    return OracleResult(chosen=chosen, objective=objective, prices=prices)


def solve_exhaustive(inst: AsymmetricInstance) -> OracleResult:
    """Exact optimum by enumerating injective client-object maps.

    Guarded to desk scale (M <= 10, N <= 6).
    """
    if inst.num_clients > 10 or inst.num_relays > 6:
        raise SizeError(
            f"exhaustive search limited to M<=10, N<=6 "
            f"(got M={inst.num_clients}, N={inst.num_relays})")
    best_value = -math.inf
    best: dict = {}
    chosen: dict = {}
    used: set = set()

    def recurse(i: int, value: float):
        nonlocal best_value, best
        if i == inst.num_clients:
            if value > best_value:
                best_value = value
                best = dict(chosen)
            return
        for q in inst.objects_of[i]:
            if q < inst.num_relays and q in used:
                continue
            if q < inst.num_relays:
                used.add(q)
            chosen[i] = q
            recurse(i + 1, value + inst.beta[(i, q)])
            del chosen[i]
            used.discard(q)

    recurse(0, 0.0)
    return OracleResult(chosen=best, objective=best_value, prices=PriceState())


def baseline_rssi(benefits: BenefitTable, topo: TopologyInstance) -> Assignment:
    """Strongest-signal direct association; relays are never used."""
    out = Assignment()
    for i in range(topo.num_clients):
        aps = topo.aps_of_client(i)
        k = max(aps, key=lambda k: (benefits.direct[(i, k)], -k))
        out.direct_pairs.add((i, k))
    return out.validate(topo.num_clients)


def baseline_random(benefits: BenefitTable, topo: TopologyInstance,
                    rng) -> Assignment:
    """Uniformly random direct association among each client's APs."""
    out = Assignment()
    for i in range(topo.num_clients):
        aps = topo.aps_of_client(i)
        out.direct_pairs.add((i, aps[rng.randrange(len(aps))]))
    return out.validate(topo.num_clients)
