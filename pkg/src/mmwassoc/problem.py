"""Network problem model and the clients-objects transformation.

A TopologyInstance carries positions and eligibility; an Assignment is a
feasible set of direct pairs and relay triples.  build_asymmetric turns a
benefit table into the clients-objects instance solved by the auction
and the oracle: objects 0..N-1 are the real relays (each pinned to its
best AP) and object N+i is client i's virtual relay, a stand-in for a
direct association with its best AP.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .errors import FeasibilityError, InstanceError
from .radio import BenefitTable

Node = tuple  # ("client", i) | ("relay", j) | ("ap", k)

TOPOLOGY_SCHEMA = 1
ASSIGNMENT_SCHEMA = 1


def _link_key(a: Node, b: Node):
    return (a, b) if a <= b else (b, a)


@dataclass
class TopologyInstance:
    """Node positions plus connectivity sets.

    Eligibility may be given explicitly; otherwise any pair of nodes
    within `radius` meters of each other is eligible.  With no radius
    either, everything is eligible.
    """

    clients: list          # [(x, y)] in meters
    relays: list
    aps: list
    radius: float | None = None
    client_aps: list | None = None     # K(i): set of AP indices per client
    relay_aps: list | None = None      # K(j)
    client_relays: list | None = None  # N(i)
    blocked_links: set = field(default_factory=set)

    def __post_init__(self):
        if len(self.relays) > len(self.clients):
            raise InstanceError("more relays than clients (N must be <= M)")
        self.blocked_links = {_link_key(tuple(a), tuple(b))
                              for a, b in self.blocked_links}
        if self.client_aps is not None:
            self._check_explicit_sets()

    # -- basic accessors -------------------------------------------------

    @property
    def num_clients(self):
        return len(self.clients)

    @property
    def num_relays(self):
        return len(self.relays)

    @property
    def num_aps(self):
        return len(self.aps)

    def position(self, node: Node):
        kind, idx = node
        pool = {"client": self.clients, "relay": self.relays, "ap": self.aps}[kind]
        return pool[idx]

    def distance(self, a: Node, b: Node) -> float:
        (xa, ya), (xb, yb) = self.position(a), self.position(b)
        return math.hypot(xa - xb, ya - yb)

    def is_blocked(self, a: Node, b: Node) -> bool:
        return _link_key(a, b) in self.blocked_links

    def block(self, a: Node, b: Node):
        self.blocked_links.add(_link_key(a, b))

    def unblock(self, a: Node, b: Node):
        self.blocked_links.discard(_link_key(a, b))

    # -- eligibility -----------------------------------------------------

    def _in_range(self, a: Node, b: Node) -> bool:
        if self.radius is None:
            return True
        return self.distance(a, b) <= self.radius

    def aps_of_client(self, i: int):
        if self.client_aps is not None:
            return sorted(self.client_aps[i])
        return [k for k in range(self.num_aps)
                if self._in_range(("client", i), ("ap", k))]

    def aps_of_relay(self, j: int):
        if self.relay_aps is not None:
            return sorted(self.relay_aps[j])
        return [k for k in range(self.num_aps)
                if self._in_range(("relay", j), ("ap", k))]

    def relays_of_client(self, i: int):
        if self.client_relays is not None:
            return sorted(self.client_relays[i])
        return [j for j in range(self.num_relays)
                if self._in_range(("client", i), ("relay", j))]

    def clients_of_ap(self, k: int):
        return [i for i in range(self.num_clients) if k in self.aps_of_client(i)]

    def clients_of_relay(self, j: int):
        return [i for i in range(self.num_clients) if j in self.relays_of_client(i)]

    def relays_of_ap(self, k: int):
        return [j for j in range(self.num_relays) if k in self.aps_of_relay(j)]

    def validate(self):
        for i in range(self.num_clients):
            if not self.aps_of_client(i):
                raise InstanceError(f"client {i} cannot reach any AP")
        return self

    def _check_explicit_sets(self):
        if self.relay_aps is None or self.client_relays is None:
            raise InstanceError("explicit eligibility requires all three sets")
        for name, sets, count, bound in (
                ("client_aps", self.client_aps, self.num_clients, self.num_aps),
                ("relay_aps", self.relay_aps, self.num_relays, self.num_aps),
                ("client_relays", self.client_relays, self.num_clients, self.num_relays)):
            if len(sets) != count:
                raise InstanceError(f"{name} has {len(sets)} entries, expected {count}")
            for members in sets:
                for m in members:
                    if not 0 <= m < bound:
                        raise InstanceError(f"{name} references index {m} out of range")

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        doc = {
            "schema_version": TOPOLOGY_SCHEMA,
            "clients": [list(p) for p in self.clients],
            "relays": [list(p) for p in self.relays],
            "aps": [list(p) for p in self.aps],
            "radius": self.radius,
            "blocked_links": [[list(a), list(b)] for a, b in sorted(self.blocked_links)],
        }
        if self.client_aps is not None:
            doc["eligibility"] = {
                "client_aps": [sorted(s) for s in self.client_aps],
                "relay_aps": [sorted(s) for s in self.relay_aps],
                "client_relays": [sorted(s) for s in self.client_relays],
            }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TopologyInstance":
        if doc.get("schema_version") != TOPOLOGY_SCHEMA:
            raise InstanceError(f"unsupported topology schema {doc.get('schema_version')}")
        elig = doc.get("eligibility")
        return cls(
            clients=[tuple(p) for p in doc["clients"]],
            relays=[tuple(p) for p in doc["relays"]],
            aps=[tuple(p) for p in doc["aps"]],
            radius=doc.get("radius"),
            client_aps=[set(s) for s in elig["client_aps"]] if elig else None,
            relay_aps=[set(s) for s in elig["relay_aps"]] if elig else None,
            client_relays=[set(s) for s in elig["client_relays"]] if elig else None,
            blocked_links={(tuple(a), tuple(b)) for a, b in doc.get("blocked_links", [])},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TopologyInstance":
        return cls.from_dict(json.loads(text))


@dataclass
class Assignment:
    """Feasible association: direct (client, ap) pairs and
    (client, relay, ap) triples."""

    direct_pairs: set = field(default_factory=set)
    relay_triples: set = field(default_factory=set)

    def clients(self):
        return ({i for (i, _k) in self.direct_pairs}
                | {i for (i, _j, _k) in self.relay_triples})

    def validate(self, num_clients: int | None = None):
        seen = {}
        for (i, k) in self.direct_pairs:
            if i in seen:
                raise FeasibilityError(f"client {i} assigned more than once")
            seen[i] = ("direct", k)
        relays_used = set()
        for (i, j, k) in self.relay_triples:
            if i in seen:
                raise FeasibilityError(f"client {i} assigned more than once")
            seen[i] = ("relayed", j, k)
            if j in relays_used:
                raise FeasibilityError(f"relay {j} assists more than one client")
            relays_used.add(j)
        if num_clients is not None and len(seen) != num_clients:
            missing = sorted(set(range(num_clients)) - set(seen))
            raise FeasibilityError(f"clients {missing} are unassigned")
        return self

    def ap_connection_counts(self, num_aps: int) -> dict:
        counts = {k: 0 for k in range(num_aps)}
        for (_i, k) in self.direct_pairs:
            counts[k] += 1
        for (_i, _j, k) in self.relay_triples:
            counts[k] += 1
        return counts

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": ASSIGNMENT_SCHEMA,
            "direct_pairs": sorted(list(p) for p in self.direct_pairs),
            "relay_triples": sorted(list(t) for t in self.relay_triples),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Assignment":
        if doc.get("schema_version") != ASSIGNMENT_SCHEMA:
            raise FeasibilityError(
                f"unsupported assignment schema {doc.get('schema_version')}")
        return cls(direct_pairs={tuple(p) for p in doc["direct_pairs"]},
                   relay_triples={tuple(t) for t in doc["relay_triples"]})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Assignment":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """One row per client: client, mode, relay (or empty), ap."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["client", "mode", "relay", "ap"])
        rows = [(i, "direct", "", k) for (i, k) in self.direct_pairs]
        rows += [(i, "relayed", j, k) for (i, j, k) in self.relay_triples]
        for row in sorted(rows):
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Assignment":
        out = cls()
        for row in csv.DictReader(io.StringIO(text)):
            i, k = int(row["client"]), int(row["ap"])
            if row["mode"] == "direct":
                out.direct_pairs.add((i, k))
            elif row["mode"] == "relayed":
                out.relay_triples.add((i, int(row["relay"]), k))
            else:
                raise FeasibilityError(f"unknown mode {row['mode']!r}")
        return out


def total_throughput(benefits: BenefitTable, s: Assignment) -> float:
    """Sum of the assigned clients' benefits in bits/s."""
    s.validate()
    total = 0.0
    for (i, k) in s.direct_pairs:
        if (i, k) not in benefits.direct:
            raise FeasibilityError(f"pair ({i}, {k}) is not eligible")
        total += benefits.direct[(i, k)]
    for (i, j, k) in s.relay_triples:
        if (i, j, k) not in benefits.relayed:
            raise FeasibilityError(f"triple ({i}, {j}, {k}) is not eligible")
        total += benefits.relayed[(i, j, k)]
    return total


def best_ap_sets(benefits: BenefitTable, topo: TopologyInstance):
    """Best AP per client and per relay (ties -> lowest AP index)."""
    client_best = {}
    for i in range(topo.num_clients):
        aps = topo.aps_of_client(i)
        if not aps:
            raise InstanceError(f"client {i} has no eligible AP")
        client_best[i] = max(aps, key=lambda k: (benefits.direct[(i, k)], -k))
    relay_best = {}
    for j in range(topo.num_relays):
        aps = topo.aps_of_relay(j)
        if aps:
            relay_best[j] = max(aps, key=lambda k: (benefits.relay_ap[(j, k)], -k))
    return client_best, relay_best


@dataclass
class AsymmetricInstance:
    """Clients-objects instance: M clients, objects 0..N-1 are relays and
    N+i is client i's virtual relay (eligible only to client i)."""

    num_clients: int
    num_relays: int
    beta: dict                 # (i, q) -> benefit
    objects_of: list           # Q(i), ascending; always contains N+i
    client_ap: list            # k_i* per client
    relay_ap: list             # k_j* per relay (None if unreachable)

    @property
    def num_objects(self):
        return self.num_relays + self.num_clients

    def virtual_of(self, i: int) -> int:
        return self.num_relays + i

    def clients_of(self, q: int):
        if q >= self.num_relays:
            return [q - self.num_relays]
        return [i for i in range(self.num_clients) if q in set(self.objects_of[i])]

    def pairs(self):
        for i in range(self.num_clients):
            for q in self.objects_of[i]:
                yield (i, q)

    def beta_spread(self) -> float:
        values = [self.beta[p] for p in self.pairs()]
        return max(values) - min(values) if values else 0.0

    def max_beta(self) -> float:
        return max((self.beta[p] for p in self.pairs()), default=0.0)

    def validate(self):
        for i in range(self.num_clients):
            qs = self.objects_of[i]
            if self.virtual_of(i) not in qs:
                raise InstanceError(f"Q({i}) is missing the virtual object")
            vbeta = self.beta[(i, self.virtual_of(i))]
            for q in qs:
                if q < self.num_relays and not self.beta[(i, q)] > vbeta:
                    raise InstanceError(
                        f"relay {q} in Q({i}) does not strictly improve on direct")
        return self

    def scaled_to_int(self, digits: int = 0) -> "AsymmetricInstance":
        """Integer-benefit copy (multiply by 10**digits and round).

        Rounding may drop a borderline relay below its client's direct
        benefit; such relays are removed from Q(i) to keep the
        strict-improvement invariant.
        """
        from .radio import integer_scaled
        beta = {p: float(integer_scaled(v, digits)) for p, v in self.beta.items()}
        objects_of = []
        for i in range(self.num_clients):
            vq = self.virtual_of(i)
            kept = [q for q in self.objects_of[i]
                    if q >= self.num_relays or beta[(i, q)] > beta[(i, vq)]]
            objects_of.append(kept)
        kept_pairs = {(i, q) for i in range(self.num_clients) for q in objects_of[i]}
        return AsymmetricInstance(
            num_clients=self.num_clients,
            num_relays=self.num_relays,
            beta={p: v for p, v in beta.items() if p in kept_pairs},
            objects_of=objects_of,
            client_ap=list(self.client_ap),
            relay_ap=list(self.relay_ap),
        )


def build_asymmetric(benefits: BenefitTable, topo: TopologyInstance,
                     scale: float = 1.0) -> AsymmetricInstance:
    """Transform benefits into the clients-objects instance.

    A relay enters Q(i) only if its end-to-end rate strictly beats
    client i's best direct rate.  `scale` converts bits/s into the
    benefit unit used by the solvers (e.g. 1e-9 for Gbit/s).
    """
    client_best, relay_best = best_ap_sets(benefits, topo)
    n = topo.num_relays
    beta = {}
    objects_of = []
    for i in range(topo.num_clients):
        direct = benefits.direct[(i, client_best[i])] * scale
        qs = []
        for j in topo.relays_of_client(i):
            if j not in relay_best:
                continue
            val = benefits.relayed[(i, j, relay_best[j])] * scale
            if val > direct:
                beta[(i, j)] = val
                qs.append(j)
        beta[(i, n + i)] = direct
        qs.append(n + i)
        objects_of.append(qs)
    return AsymmetricInstance(
        num_clients=topo.num_clients,
        num_relays=n,
        beta=beta,
        objects_of=objects_of,
        client_ap=[client_best[i] for i in range(topo.num_clients)],
        relay_ap=[relay_best.get(j) for j in range(n)],
    )


def recover_assignment(inst: AsymmetricInstance, y) -> Assignment:
    """Map a feasible clients-objects solution back to pairs/triples.

    `y` is either a {(i, q): 0/1} map or a {i: q} map.
    """
    if y and isinstance(next(iter(y)), tuple):
        chosen = {}
        for (i, q), v in y.items():
            if v:
                if i in chosen:
                    raise FeasibilityError(f"client {i} assigned more than once")
                chosen[i] = q
    else:
        chosen = dict(y)

    if sorted(chosen) != list(range(inst.num_clients)):
        missing = sorted(set(range(inst.num_clients)) - set(chosen))
        raise FeasibilityError(f"clients {missing} are unassigned")
    used = {}
    out = Assignment()
    for i, q in sorted(chosen.items()):
        if q not in inst.objects_of[i]:
            raise FeasibilityError(f"object {q} is not eligible for client {i}")
        if q < inst.num_relays:
            if q in used:
                raise FeasibilityError(f"relay {q} assigned more than once")
            used[q] = i
            out.relay_triples.add((i, q, inst.relay_ap[q]))
        else:
            out.direct_pairs.add((i, inst.client_ap[i]))
    return out.validate(inst.num_clients)


def assignment_value(inst: AsymmetricInstance, chosen: dict) -> float:
    """Objective of a clients-objects assignment {i: q}."""
    return sum(inst.beta[(i, q)] for i, q in chosen.items())


def check_load_balance(samples, num_aps: int) -> dict:
    """Empirical mean connection count per AP over solved assignments."""
    if not samples:
        raise ValueError("no assignment samples")
    totals = {k: 0 for k in range(num_aps)}
    for s in samples:
        for k, c in s.ap_connection_counts(num_aps).items():
            totals[k] += c
    return {k: totals[k] / len(samples) for k in totals}
