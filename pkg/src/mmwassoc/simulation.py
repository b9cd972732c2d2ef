"""Deterministic seeded message-passing simulator for the distributed
auction.

Clients and relays run as asynchronous state machines exchanging BID,
RESPONSE, SURVEY, SURVEY_REPLY and OFFER messages over FIFO links with
seeded uniform latency.  Clients keep stale local price vectors and bid
only while sitting on their direct (virtual) association; relays accept
the highest bid that raises their price by at least epsilon.  In dynamic
mode relays additionally run the reverse auction: an unassigned relay
with a nonzero price surveys its neighbourhood and either attracts its
best client at a reduced price or collapses its price to zero.

The engine is single-threaded; identical (instance, config, seed) runs
produce bit-identical traces.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .auction import PriceState, check_eps_cs, price_ceiling
from .errors import ScenarioError, SimulationError
from .problem import AsymmetricInstance, TopologyInstance
from .radio import RadioParams, rate

VIRTUAL = -1          # sentinel object id: the client's own best-AP association
_TOL = 1e-9

SCENARIO_SCHEMA = 1


@dataclass
class SimConfig:
    epsilon: float = 0.1
    latency_ms: tuple = (1.0, 5.0)
    slot_ms: float = 10.0
    broadcast_prices: bool = False
    reverse_auction: bool = False
    max_events: int = 5_000_000
    check_staleness: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        lo, hi = self.latency_ms
        if not (0 < lo <= hi):
            raise ValueError("latency bounds must satisfy 0 < min <= max")


@dataclass
class SimStats:
    events: int = 0
    messages: int = 0
    total_bids: int = 0
    accepted_bids: int = 0
    rejected_bids: int = 0
    surveys: int = 0
    reverse_connects: int = 0
    staleness_violations: int = 0


class ClientAgent:
    __slots__ = ("cid", "k_star", "beta_direct", "beta_relay", "price_view",
                 "q", "awaiting")

    def __init__(self, cid, k_star, beta_direct, beta_relay):
        self.cid = cid
        self.k_star = k_star
        self.beta_direct = beta_direct
        self.beta_relay = dict(beta_relay)   # relay id -> benefit
        self.price_view = {}                 # relay id -> last known price
        self.q = VIRTUAL
        self.awaiting = None                 # relay id of an outstanding bid

    def value(self):
        if self.q == VIRTUAL:
            return self.beta_direct
        return self.beta_relay[self.q]

    def local_price_of_current(self):
        if self.q == VIRTUAL:
            return 0.0
        return self.price_view.get(self.q, 0.0)


class RelayAgent:
    __slots__ = ("rid", "price", "client", "eligible", "survey_pending",
                 "survey_replies", "offer_pending")

    def __init__(self, rid, eligible, price=0.0):
        self.rid = rid
        self.price = price
        self.client = None
        self.eligible = set(eligible)        # client ids in M(j)
        self.survey_pending = None           # set of client ids awaiting reply
        self.survey_replies = {}
        self.offer_pending = None            # (client id, offered price)


@dataclass
class Message:
    kind: str
    sender: tuple
    receiver: tuple
    payload: dict
    send_time: float


class Simulator:
    """Event-driven core shared by the static and dynamic runners."""

    def __init__(self, config: SimConfig, seed: int):
        import random
        self.config = config
        self.rng = random.Random(seed)
        self.now = 0.0
        self.heap = []          # (time, seq, receiver, Message)
        self.seq = 0
        self.link_clock = {}    # (sender, receiver) -> last scheduled arrival
        self.clients = {}       # cid -> ClientAgent
        self.relays = {}        # rid -> RelayAgent
        self.stats = SimStats()
        self.trace = []         # (time, kind, id, event, object, value, objective)
        self.ceiling = 1.0

    # -- plumbing --------------------------------------------------------

    def _send(self, sender, receiver, kind, **payload):
        lo, hi = self.config.latency_ms
        latency = self.rng.uniform(lo, hi) if hi > lo else lo
        arrive = self.now + latency
        key = (sender, receiver)
        arrive = max(arrive, self.link_clock.get(key, 0.0))
        self.link_clock[key] = arrive
        heapq.heappush(self.heap, (arrive, self.seq, receiver,
                                   Message(kind, sender, receiver, payload, self.now)))
        self.seq += 1
        self.stats.messages += 1

    def _trace(self, kind, actor_id, event, obj="", value="", objective=""):
        self.trace.append((self.now, kind, actor_id, event, obj, value, objective))

    def run(self, t_limit=None):
        """Process events until the queue drains or t_limit is passed."""
        while self.heap:
            t = self.heap[0][0]
            if t_limit is not None and t > t_limit + _TOL:
                return False
            batch = []
            while self.heap and self.heap[0][0] == t:
                batch.append(heapq.heappop(self.heap))
            self.now = t
            groups, order = {}, []
            for (_t, _seq, receiver, msg) in batch:
                if receiver not in groups:
                    groups[receiver] = []
                    order.append(receiver)
                groups[receiver].append(msg)
            for receiver in order:
                self._dispatch(receiver, groups[receiver])
            self.stats.events += len(batch)
            if self.stats.events > self.config.max_events:
                raise SimulationError("simulator event cap exceeded")
            if self.config.check_staleness:
                self._check_staleness()
        return True

    def _dispatch(self, receiver, msgs):
        kind_r, rid = receiver
        if kind_r == "client":
            agent = self.clients.get(rid)
            if agent is None:
                return
            for msg in msgs:
                self._client_msg(agent, msg)
            self._client_react(agent)
        else:
            agent = self.relays.get(rid)
            if agent is None:
                return
            bids = [m for m in msgs if m.kind == "bid"]
            if bids:
                self._relay_bids(agent, bids)
            for msg in msgs:
                if msg.kind == "survey_reply":
                    self._relay_survey_reply(agent, msg)
                elif msg.kind == "offer_ack":
                    self._relay_offer_ack(agent, msg)
                elif msg.kind == "depart":
                    if agent.client == msg.payload["client"]:
                        agent.client = None
            self._relay_maybe_reverse(agent)

    def _check_staleness(self):
        for c in self.clients.values():
            for j, p_local in c.price_view.items():
                r = self.relays.get(j)
                if r is not None and p_local > r.price + _TOL:
                    self.stats.staleness_violations += 1

    # -- client behaviour ------------------------------------------------

    def _client_msg(self, c: ClientAgent, msg: Message):
        kind = msg.kind
        if kind == "response":
            j = msg.payload["object"]
            price = msg.payload["price"]
            c.price_view[j] = price
            if c.awaiting == j:
                c.awaiting = None
                c.q = j if msg.payload["verdict"] == "yes" else VIRTUAL
            elif c.q == j and msg.payload["verdict"] == "no":
                c.q = VIRTUAL    # evicted by a higher bid
        elif kind == "price":
            c.price_view[msg.payload["object"]] = msg.payload["price"]
        elif kind == "survey":
            j = msg.payload["object"]
            self._send(("client", c.cid), msg.sender, "survey_reply",
                       object=j,
                       client=c.cid,
                       beta_relay=c.beta_relay.get(j),
                       beta_current=c.value(),
                       local_price=c.local_price_of_current())
        elif kind == "offer":
            j = msg.payload["object"]
            price = msg.payload["price"]
            offered = c.beta_relay.get(j)
            profit = c.value() - c.local_price_of_current()
            ok = (offered is not None and c.awaiting is None
                  and offered - price >= profit - _TOL)
            if ok:
                old = c.q
                c.q = j
                c.price_view[j] = price
                if old != VIRTUAL and old != j:
                    self._send(("client", c.cid), ("relay", old), "depart",
                               client=c.cid)
            self._send(("client", c.cid), msg.sender, "offer_ack",
                       client=c.cid, object=j,
                       verdict="yes" if ok else "no")

    def _client_react(self, c: ClientAgent):
        """Bid when on the direct association and a relay looks better."""
        if c.awaiting is not None or c.q != VIRTUAL:
            return
        best_j, best_v, second_v = None, -math.inf, -math.inf
        for j in sorted(c.beta_relay):
            v = c.beta_relay[j] - c.price_view.get(j, 0.0)
            if v > best_v:
                best_j, best_v, second_v = j, v, best_v
            elif v > second_v:
                second_v = v
        # bid only when the gain clears epsilon; sub-epsilon differences
        # are already covered by the eps-CS slack and would only churn
        if best_j is None or not best_v > c.beta_direct + self.config.epsilon + _TOL:
            return
        omega = max(c.beta_direct, second_v)
        bid = c.price_view.get(best_j, 0.0) + best_v - omega + self.config.epsilon
        c.awaiting = best_j
        self._trace("client", c.cid, "bid", best_j, bid)
        self._send(("client", c.cid), ("relay", best_j), "bid",
                   client=c.cid, value=bid)

    # -- relay behaviour -------------------------------------------------

    def _relay_bids(self, r: RelayAgent, bids):
        self.stats.total_bids += len(bids)
        best = max(bids, key=lambda m: (m.payload["value"], -m.payload["client"]))
        winner, value = best.payload["client"], best.payload["value"]
        accept = (r.offer_pending is None
                  and value - r.price >= self.config.epsilon - _TOL)
        if accept:
            old_client = r.client
            r.price = value
            r.client = winner
            self.stats.accepted_bids += 1
            self._trace("relay", r.rid, "accept", winner, r.price)
            self._send(("relay", r.rid), ("client", winner), "response",
                       object=r.rid, verdict="yes", price=r.price)
            if old_client is not None and old_client != winner:
                self._send(("relay", r.rid), ("client", old_client), "response",
                           object=r.rid, verdict="no", price=r.price)
            losers = {m.payload["client"] for m in bids} - {winner}
        else:
            self.stats.rejected_bids += len(bids)
            self._trace("relay", r.rid, "reject", winner, r.price)
            losers = {m.payload["client"] for m in bids}
        for cid in sorted(losers):
            self._send(("relay", r.rid), ("client", cid), "response",
                       object=r.rid, verdict="no", price=r.price)
        if accept and self.config.broadcast_prices:
            self._broadcast_price(r, exclude=losers | {winner, r.client})

    def _broadcast_price(self, r: RelayAgent, exclude=frozenset()):
        for cid in sorted(r.eligible - set(exclude)):
            if cid in self.clients:
                self._send(("relay", r.rid), ("client", cid), "price",
                           object=r.rid, price=r.price)

    def _relay_maybe_reverse(self, r: RelayAgent):
        if not self.config.reverse_auction:
            return
        if (r.client is not None or r.price <= _TOL
                or r.survey_pending is not None or r.offer_pending is not None):
            return
        targets = sorted(r.eligible & set(self.clients))
        if not targets:
            r.price = 0.0
            self._trace("relay", r.rid, "reverse_drop", "", 0.0)
            return
        r.survey_pending = set(targets)
        r.survey_replies = {}
        self.stats.surveys += 1
        self._trace("relay", r.rid, "survey", "", r.price)
        for cid in targets:
            self._send(("relay", r.rid), ("client", cid), "survey",
                       object=r.rid)

    def _relay_survey_reply(self, r: RelayAgent, msg: Message):
        if r.survey_pending is None:
            return
        cid = msg.payload["client"]
        r.survey_pending.discard(cid)
        r.survey_replies[cid] = msg.payload
        if r.survey_pending:
            return
        r.survey_pending = None
        replies = r.survey_replies
        r.survey_replies = {}
        if r.client is not None:
            return    # won a bid while surveying
        eps = self.config.epsilon
        margins = {}
        for cid, p in sorted(replies.items()):
            if p["beta_relay"] is None:
                continue
            margin = p["beta_relay"] - (p["beta_current"] - p["local_price"])
            if margin >= eps - _TOL:
                margins[cid] = margin
        lam = 0.0
        if not margins:
            r.price = 0.0
            self._trace("relay", r.rid, "reverse_drop", "", 0.0)
            self._broadcast_price(r)
            return
        best_cid = max(margins, key=lambda c: (margins[c], -c))
        gamma = margins[best_cid]
        others = [v for c, v in margins.items() if c != best_cid]
        omega = max(others) if others else -math.inf
        if lam >= gamma - eps:
            r.price = 0.0
            self._trace("relay", r.rid, "reverse_drop", "", 0.0)
            self._broadcast_price(r)
            return
        if math.isinf(omega):
            new_price = lam    # the gamma - lambda branch of the price rule
        else:
            new_price = gamma - min(gamma - lam, gamma - omega + eps)
        r.offer_pending = (best_cid, new_price)
        self._trace("relay", r.rid, "offer", best_cid, new_price)
        self._send(("relay", r.rid), ("client", best_cid), "offer",
                   object=r.rid, price=new_price)

    def _relay_offer_ack(self, r: RelayAgent, msg: Message):
        if r.offer_pending is None or msg.payload["client"] != r.offer_pending[0]:
            return
        cid, price = r.offer_pending
        r.offer_pending = None
        if msg.payload["verdict"] == "yes":
            r.client = cid
            r.price = price
            self.stats.reverse_connects += 1
            self._trace("relay", r.rid, "reverse_connect", cid, price)
            # announce the decrease: stale-high views would silence bidders
            self._broadcast_price(r, exclude={cid})
        # on decline _relay_maybe_reverse will re-survey with fresh data

    # -- snapshots -------------------------------------------------------

    def wake_all(self):
        for cid in sorted(self.clients):
            self._client_react(self.clients[cid])
        for rid in sorted(self.relays):
            self._relay_maybe_reverse(self.relays[rid])

    def objective(self) -> float:
        return sum(c.value() for c in self.clients.values())

    def assignment_map(self) -> dict:
        """client id -> relay id (or VIRTUAL), consistency-checked."""
        out = {}
        for cid, c in sorted(self.clients.items()):
            out[cid] = c.q
            if c.q != VIRTUAL:
                r = self.relays[c.q]
                if r.client != cid:
                    raise SimulationError(
                        f"client {cid} and relay {c.q} disagree on assignment")
        return out

    def quiescent_row(self):
        self._trace("sim", "", "quiescent", "", "", self.objective())


# ----------------------------------------------------------------------
# static runner


@dataclass
class StaticResult:
    assigned: dict            # i -> q in instance indexing
    price_state: PriceState
    objective: float
    stats: SimStats
    trace: list

    def eps_cs(self, inst: AsymmetricInstance, epsilon: float):
        return check_eps_cs(inst, self.assigned, self.price_state, epsilon)


def _instance_sim(inst: AsymmetricInstance, config: SimConfig, seed: int):
    sim = Simulator(config, seed)
    sim.ceiling = price_ceiling(inst)
    eligible = {j: set() for j in range(inst.num_relays)}
    for i in range(inst.num_clients):
        beta_relay = {q: inst.beta[(i, q)] for q in inst.objects_of[i]
                      if q < inst.num_relays}
        sim.clients[i] = ClientAgent(i, inst.client_ap[i],
                                     inst.beta[(i, inst.virtual_of(i))],
                                     beta_relay)
        for j in beta_relay:
            eligible[j].add(i)
    for j in range(inst.num_relays):
        sim.relays[j] = RelayAgent(j, eligible[j])
    return sim


def bid_bound(inst: AsymmetricInstance, epsilon: float,
              broadcast: bool) -> float:
    """Accepted-bid bound: M*N^2*ceil(spread/eps), N^2*ceil with broadcast."""
    n = inst.num_relays
    steps = math.ceil(inst.beta_spread() / epsilon)
    bound = n * n * steps
    if not broadcast:
        bound *= inst.num_clients
    return bound


def run_static(inst: AsymmetricInstance, config: SimConfig,
               seed: int) -> StaticResult:
    """Run the distributed forward auction to quiescence."""
    sim = _instance_sim(inst, config, seed)
    sim.wake_all()
    sim.run()
    sim.quiescent_row()
    if sim.stats.accepted_bids > bid_bound(inst, config.epsilon,
                                           config.broadcast_prices):
        raise SimulationError("accepted-bid bound exceeded (implementation bug)")
    assigned = {}
    for i, q in sim.assignment_map().items():
        assigned[i] = inst.virtual_of(i) if q == VIRTUAL else q
    prices = {j: sim.relays[j].price for j in range(inst.num_relays)}
    for i in range(inst.num_clients):
        prices[inst.virtual_of(i)] = 0.0
    profits = {i: inst.beta[(i, assigned[i])] - prices[assigned[i]]
               for i in assigned}
    ps = PriceState(prices=prices, profits=profits, supersource=0.0)
    return StaticResult(assigned=assigned, price_state=ps,
                        objective=sim.objective(), stats=sim.stats,
                        trace=sim.trace)


# ----------------------------------------------------------------------
# dynamic network and runner


class DynamicNetwork:
    """Mutable network the dynamic scenario acts on.

    Node ids are stable across joins/leaves; per-client benefit profiles
    are recomputed from positions, blockage and eligibility radius on
    demand.
    """

    def __init__(self, params: RadioParams, topo: TopologyInstance,
                 benefit_scale: float = 1.0):
        self.params = params
        self.scale = benefit_scale
        self.radius = topo.radius
        self.clients = {i: tuple(p) for i, p in enumerate(topo.clients)}
        self.relays = {j: tuple(p) for j, p in enumerate(topo.relays)}
        self.aps = {k: tuple(p) for k, p in enumerate(topo.aps)}
        self.blocked = set(topo.blocked_links)
        self._next_client = len(self.clients)
        self._next_relay = len(self.relays)

    # -- mutation --------------------------------------------------------

    def add_client(self, pos) -> int:
        cid = self._next_client
        self._next_client += 1
        self.clients[cid] = tuple(pos)
        return cid

    def add_relay(self, pos) -> int:
        rid = self._next_relay
        self._next_relay += 1
        self.relays[rid] = tuple(pos)
        return rid

    def remove_client(self, cid: int):
        del self.clients[cid]

    def remove_relay(self, rid: int):
        del self.relays[rid]

    def _link_key(self, a, b):
        return (a, b) if a <= b else (b, a)

    def block(self, a, b):
        self.blocked.add(self._link_key(tuple(a), tuple(b)))

    def unblock(self, a, b):
        self.blocked.discard(self._link_key(tuple(a), tuple(b)))

    # -- geometry and rates ----------------------------------------------

    def _pos(self, node):
        kind, idx = node
        return {"client": self.clients, "relay": self.relays,
                "ap": self.aps}[kind][idx]

    def _rate(self, a, b):
        """Rate of a link, 0.0 if blocked, None if out of range."""
        (xa, ya), (xb, yb) = self._pos(a), self._pos(b)
        d = math.hypot(xa - xb, ya - yb)
        if self.radius is not None and d > self.radius:
            return None
        if self._link_key(a, b) in self.blocked:
            return 0.0
        return rate(self.params, d) if d > 0 else rate(self.params, 1e-9)

    def relay_kstar(self, rid: int):
        """Best AP for a relay: (ap id, rate) or None if unreachable."""
        best = None
        for k in sorted(self.aps):
            r = self._rate(("relay", rid), ("ap", k))
            if r is None:
                continue
            if best is None or r > best[1]:
                best = (k, r)
        return best

    def client_profile(self, cid: int):
        """(k_star, beta_direct, {relay id: benefit}) for one client."""
        best = None
        for k in sorted(self.aps):
            r = self._rate(("client", cid), ("ap", k))
            if r is None:
                continue
            if best is None or r > best[1]:
                best = (k, r)
        k_star = best[0] if best else None
        beta_direct = best[1] * self.scale if best else 0.0
        beta_relay = {}
        for j in sorted(self.relays):
            r_ij = self._rate(("client", cid), ("relay", j))
            if r_ij is None:
                continue
            leg = self.relay_kstar(j)
            if leg is None:
                continue
            beta_relay[j] = min(r_ij, leg[1]) * self.scale
        return k_star, beta_direct, beta_relay

    def max_beta(self) -> float:
        out = 0.0
        for cid in self.clients:
            _k, bd, br = self.client_profile(cid)
            out = max(out, bd, max(br.values(), default=0.0))
        return out

    def snapshot_instance(self):
        """(AsymmetricInstance over active nodes, client ids, relay ids)."""
        client_ids = sorted(self.clients)
        relay_ids = sorted(self.relays)
        rpos = {rid: p for p, rid in enumerate(relay_ids)}
        beta, objects_of, client_ap = {}, [], []
        relay_ap = [(self.relay_kstar(rid) or (None,))[0] for rid in relay_ids]
        n = len(relay_ids)
        for local_i, cid in enumerate(client_ids):
            k_star, bd, br = self.client_profile(cid)
            qs = []
            for rid, val in sorted(br.items()):
                if val > bd:
                    beta[(local_i, rpos[rid])] = val
                    qs.append(rpos[rid])
            beta[(local_i, n + local_i)] = bd
            qs.append(n + local_i)
            objects_of.append(qs)
            client_ap.append(k_star)
        inst = AsymmetricInstance(
            num_clients=len(client_ids), num_relays=n, beta=beta,
            objects_of=objects_of, client_ap=client_ap, relay_ap=relay_ap)
        return inst, client_ids, relay_ids


@dataclass
class Scenario:
    epsilon: float = 0.1
    horizon_slots: int = 100
    seed: int = 0
    latency_ms: tuple = (1.0, 5.0)
    slot_ms: float = 10.0
    broadcast_prices: bool = False
    reverse_auction: bool = True
    benefit_scale: float = 1.0
    events: list = field(default_factory=list)   # dicts with slot + kind

    def config(self, **overrides) -> SimConfig:
        kw = dict(epsilon=self.epsilon, latency_ms=tuple(self.latency_ms),
                  slot_ms=self.slot_ms, broadcast_prices=self.broadcast_prices,
                  reverse_auction=self.reverse_auction)
        kw.update(overrides)
        return SimConfig(**kw)

    def validate(self, net: DynamicNetwork):
        known_kinds = {"client_join", "client_leave", "relay_join",
                       "relay_leave", "blockage"}
        for ev in self.events:
            if ev.get("kind") not in known_kinds:
                raise ScenarioError(f"unknown event kind {ev.get('kind')!r}")
            slot = ev.get("slot")
            if slot is None or not 0 <= slot <= self.horizon_slots:
                raise ScenarioError(f"event slot {slot} outside the horizon")
            if ev["kind"] == "client_leave" and ev.get("client") not in net.clients:
                raise ScenarioError(f"client_leave references unknown client "
                                    f"{ev.get('client')}")
            if ev["kind"] == "relay_leave" and ev.get("relay") not in net.relays:
                raise ScenarioError(f"relay_leave references unknown relay "
                                    f"{ev.get('relay')}")
        return self


@dataclass
class QuiescentPoint:
    time_ms: float
    objective: float
    optimum: float | None = None

    @property
    def gap(self):
        return None if self.optimum is None else self.optimum - self.objective


@dataclass
class DynamicResult:
    timeseries: list          # (time_ms, objective) rows
    quiescent_points: list    # QuiescentPoint
    post_event_accepted_bids: int
    stats: SimStats
    trace: list
    final_objective: float


class DynamicRunner:
    """Drives a Simulator over a DynamicNetwork through timed events."""

    def __init__(self, net: DynamicNetwork, scenario: Scenario,
                 config: SimConfig | None = None,
                 compute_optima: bool = True):
        self.net = net
        self.scenario = scenario.validate(net)
        self.config = config or scenario.config()
        self.compute_optima = compute_optima
        self.sim = Simulator(self.config, scenario.seed)
        self.sim.ceiling = 10.0 * max(net.max_beta(), 1.0)
        self._build_agents()

    def _build_agents(self):
        for cid in sorted(self.net.clients):
            k_star, bd, br = self.net.client_profile(cid)
            self.sim.clients[cid] = ClientAgent(cid, k_star, bd, br)
        for rid in sorted(self.net.relays):
            self.sim.relays[rid] = RelayAgent(rid, set())
        self._refresh()

    def _refresh(self):
        """Recompute agent views after a network change and fix invalidated
        assignments (fallback to direct, unassign the relay)."""
        sim, net = self.sim, self.net
        eligible = {rid: set() for rid in sim.relays}
        for cid, c in sorted(sim.clients.items()):
            k_star, bd, br = net.client_profile(cid)
            old_q_beta = c.beta_relay.get(c.q) if c.q != VIRTUAL else None
            c.k_star, c.beta_direct, c.beta_relay = k_star, bd, br
            c.price_view = {j: p for j, p in c.price_view.items() if j in br}
            for j in br:
                eligible[j].add(cid)
            if c.q != VIRTUAL:
                new_beta = br.get(c.q)
                if new_beta is None or new_beta != old_q_beta \
                        or not new_beta > bd:
                    relay = sim.relays.get(c.q)
                    if relay is not None and relay.client == cid:
                        relay.client = None
                    c.q = VIRTUAL
            if c.awaiting is not None and c.awaiting not in sim.relays:
                c.awaiting = None
        for rid, r in sim.relays.items():
            r.eligible = eligible[rid]

    def _purge_client(self, cid: int):
        c = self.sim.clients.pop(cid)
        if c.q != VIRTUAL:
            relay = self.sim.relays.get(c.q)
            if relay is not None and relay.client == cid:
                relay.client = None
        for r in self.sim.relays.values():
            if r.client == cid:
                r.client = None
            if r.offer_pending is not None and r.offer_pending[0] == cid:
                r.offer_pending = None
            if r.survey_pending is not None:
                r.survey_pending.discard(cid)
                if not r.survey_pending:
                    # deliver the completed survey on the next wake
                    r.survey_pending = None
                    r.survey_replies = {}

    def _purge_relay(self, rid: int):
        self.sim.relays.pop(rid)
        for c in self.sim.clients.values():
            if c.q == rid:
                c.q = VIRTUAL
            if c.awaiting == rid:
                c.awaiting = None
            c.price_view.pop(rid, None)
            c.beta_relay.pop(rid, None)

    def _apply_event(self, ev: dict):
        net, sim = self.net, self.sim
        kind = ev["kind"]
        if kind == "client_join":
            cid = net.add_client(ev["position"])
            k_star, bd, br = net.client_profile(cid)
            sim.clients[cid] = ClientAgent(cid, k_star, bd, br)
        elif kind == "client_leave":
            net.remove_client(ev["client"])
            self._purge_client(ev["client"])
        elif kind == "relay_join":
            rid = net.add_relay(ev["position"])
            price = sim.ceiling if self.config.reverse_auction else 0.0
            sim.relays[rid] = RelayAgent(rid, set(), price=price)
        elif kind == "relay_leave":
            net.remove_relay(ev["relay"])
            self._purge_relay(ev["relay"])
        elif kind == "blockage":
            a, b = ev["link"]
            net.block(tuple(a), tuple(b))
        sim._trace("sim", "", f"event:{kind}", "", "")

    def _record_quiescent(self, points, timeseries):
        obj = self.sim.objective()
        optimum = None
        if self.compute_optima:
            from .oracle import solve_exact_mcf
            inst, _c, _r = self.net.snapshot_instance()
            optimum = solve_exact_mcf(inst).objective
        points.append(QuiescentPoint(self.sim.now, obj, optimum))
        timeseries.append((self.sim.now, obj))
        self.sim.quiescent_row()

    def run(self) -> DynamicResult:
        sim, cfg = self.sim, self.config
        slot = cfg.slot_ms
        timeline = []
        for ev in self.scenario.events:
            timeline.append((ev["slot"] * slot, dict(ev)))
            if ev["kind"] == "blockage":
                end = ev["slot"] * slot + ev.get("duration_ms",
                                                 ev.get("duration_slots", 1) * slot)
                unblock = {"kind": "unblock", "link": ev["link"]}
                timeline.append((end, unblock))
        timeline.sort(key=lambda e: e[0])

        points, timeseries = [], []
        sim.wake_all()
        bids_at_first_event = None
        idx = 0
        while idx < len(timeline):
            t_event = timeline[idx][0]
            drained = sim.run(t_limit=t_event)
            if drained:
                self._record_quiescent(points, timeseries)
            if bids_at_first_event is None:
                bids_at_first_event = sim.stats.accepted_bids
            sim.now = max(sim.now, t_event)
            batch = []
            while idx < len(timeline) and timeline[idx][0] <= t_event + _TOL:
                batch.append(timeline[idx][1])
                idx += 1
            for ev in batch:
                if ev["kind"] == "unblock":
                    a, b = ev["link"]
                    self.net.unblock(tuple(a), tuple(b))
                    sim._trace("sim", "", "event:unblock", "", "")
                else:
                    self._apply_event(ev)
            self._refresh()
            timeseries.append((sim.now, sim.objective()))
            sim.wake_all()
        sim.run()
        self._record_quiescent(points, timeseries)
        if bids_at_first_event is None:
            bids_at_first_event = sim.stats.accepted_bids
        return DynamicResult(
            timeseries=timeseries,
            quiescent_points=points,
            post_event_accepted_bids=sim.stats.accepted_bids - bids_at_first_event,
            stats=sim.stats,
            trace=sim.trace,
            final_objective=sim.objective(),
        )


def run_dynamic(net: DynamicNetwork, scenario: Scenario,
                config: SimConfig | None = None,
                compute_optima: bool = True) -> DynamicResult:
    return DynamicRunner(net, scenario, config, compute_optima).run()


# ----------------------------------------------------------------------
# trace serialization


def trace_to_csv(rows) -> str:
    import csv as _csv
    import io as _io
    buf = _io.StringIO()
    w = _csv.writer(buf, lineterminator="\n")
    w.writerow(["time_ms", "actor_kind", "actor_id", "event", "object",
                "bid_or_price", "objective_if_quiescent"])
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    return v
