"""Centralized forward/reverse auction and the eps-CS certificate.

Solves the clients-objects instance through its dual: clients bid object
prices up until everyone holds an object (forward phase), then overpriced
unassigned objects cut their prices to attract clients (reverse phase).
The final objective is within M*epsilon of the optimum; with integer
benefits and epsilon < 1/M it is exactly optimal.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .errors import SimulationError
from .problem import AsymmetricInstance


@dataclass
class AuctionConfig:
    epsilon: float
    max_iterations: int | None = None  # safety cap; default derived from the instance

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class PriceState:
    prices: dict = field(default_factory=dict)    # q -> price
    profits: dict = field(default_factory=dict)   # i -> profit
    supersource: float = 0.0

    def price(self, q: int) -> float:
        return self.prices.get(q, 0.0)


@dataclass
class AuctionStats:
    forward_bids: int = 0
    reverse_iterations: int = 0
    price_updates: int = 0

    @property
    def iterations(self) -> int:
        return self.forward_bids + self.reverse_iterations


@dataclass
class EpsCSReport:
    ok: bool
    condition: str | None = None   # first violated condition: "a", "b" or "c"
    witness: tuple | None = None
    detail: str = ""


def price_ceiling(inst: AsymmetricInstance) -> float:
    """Finite stand-in for an unbounded bid (10x the largest benefit)."""
    return 10.0 * max(inst.max_beta(), 1.0)


def check_eps_cs(inst: AsymmetricInstance, assigned: dict, ps: PriceState,
                 epsilon: float, tol: float = 1e-9) -> EpsCSReport:
    """Verify the three eps-complementary-slackness conditions.

    `assigned` maps a subset of clients injectively to objects.  Returns
    the first violated condition with a witness pair.
    """
    for i, q in assigned.items():
        lhs = ps.profits.get(i, 0.0) + ps.price(q)
        if abs(lhs - inst.beta[(i, q)]) > tol:
            return EpsCSReport(False, "b", (i, q),
                               f"profit+price {lhs} != beta {inst.beta[(i, q)]}")
    for (i, q) in inst.pairs():
        lhs = ps.profits.get(i, 0.0) + ps.price(q)
        if lhs < inst.beta[(i, q)] - epsilon - tol:
            return EpsCSReport(False, "a", (i, q),
                               f"profit+price {lhs} < beta - eps")
    assigned_objects = set(assigned.values())
    if assigned_objects:
        floor = min(ps.price(q) for q in assigned_objects)
        for q in range(inst.num_objects):
            if q not in assigned_objects and ps.price(q) > floor + tol:
                return EpsCSReport(False, "c", (q,),
                                   f"unassigned price {ps.price(q)} > {floor}")
    return EpsCSReport(True)


def _best_two(inst, i, prices):
    """Best object, its value, and the runner-up value for client i."""
    best_q, best_v, second_v = None, -math.inf, -math.inf
    for q in inst.objects_of[i]:
        v = inst.beta[(i, q)] - prices.get(q, 0.0)
        if v > best_v:
            best_q, best_v, second_v = q, v, best_v
        elif v > second_v:
            second_v = v
    return best_q, best_v, second_v


def solve_forward(inst: AsymmetricInstance, ps: PriceState, assigned: dict,
                  epsilon: float, stats: AuctionStats | None = None,
                  trace: list | None = None, max_iterations: int | None = None):
    """Run the forward phase until every client holds an object.

    Unassigned clients are served FIFO in index order; each bid raises the
    target object's price by at least epsilon and may evict a prior
    holder.  Mutates `ps` and `assigned` in place.
    """
    stats = stats if stats is not None else AuctionStats()
    ceiling = price_ceiling(inst)
    owner = {q: i for i, q in assigned.items()}
    queue = deque(i for i in range(inst.num_clients) if i not in assigned)
    cap = max_iterations or _default_cap(inst, epsilon)
    while queue:
        if stats.forward_bids >= cap:
            raise SimulationError("forward auction exceeded its iteration cap")
        i = queue.popleft()
        q, u, omega = _best_two(inst, i, ps.prices)
        old_price = ps.price(q)
        if math.isinf(omega):
            bid = max(ceiling, old_price + epsilon)
        else:
            bid = old_price + u - omega + epsilon
        prev = owner.get(q)
        if prev is not None:
            del assigned[prev]
            queue.append(prev)
        owner[q] = i
        assigned[i] = q
        ps.prices[q] = bid
        ps.profits[i] = inst.beta[(i, q)] - bid
        stats.forward_bids += 1
        stats.price_updates += 1
        if trace is not None:
            trace.append((stats.iterations, f"client:{i}", "forward_bid",
                          q, old_price, bid))
    return assigned, ps


def solve_reverse(inst: AsymmetricInstance, ps: PriceState, assigned: dict,
                  epsilon: float, stats: AuctionStats | None = None,
                  trace: list | None = None, max_iterations: int | None = None):
    """Run the reverse phase from a full forward-phase assignment.

    lambda is the minimum assigned object price and stays fixed; every
    unassigned object priced above it either attracts its best client or
    drops to lambda.  Mutates `ps` and `assigned` in place.
    """
    stats = stats if stats is not None else AuctionStats()
    owner = {q: i for i, q in assigned.items()}
    lam = min((ps.price(q) for q in owner), default=0.0)
    ps.supersource = lam
    cap = max_iterations or _default_cap(inst, epsilon)
    queue = deque(q for q in range(inst.num_objects)
                  if q not in owner and ps.price(q) > lam)
    while queue:
        if stats.reverse_iterations >= cap:
            raise SimulationError("reverse auction exceeded its iteration cap")
        q = queue.popleft()
        if q in owner or ps.price(q) <= lam:
            continue
        stats.reverse_iterations += 1
        old_price = ps.price(q)
        best_i, gamma, omega = None, -math.inf, -math.inf
        for i in inst.clients_of(q):
            v = inst.beta[(i, q)] - ps.profits.get(i, 0.0)
            if v > gamma:
                best_i, gamma, omega = i, v, gamma
            elif v > omega:
                omega = v
        if best_i is None or lam >= gamma - epsilon:
            ps.prices[q] = lam
            stats.price_updates += 1
            if trace is not None:
                trace.append((stats.iterations, f"object:{q}", "reverse_drop",
                              q, old_price, lam))
            continue
        delta = min(gamma - lam, gamma - omega + epsilon)
        new_price = gamma - delta
        prev_q = assigned.get(best_i)
        if prev_q is not None:
            del owner[prev_q]
            if ps.price(prev_q) > lam:
                queue.append(prev_q)
        owner[q] = best_i
        assigned[best_i] = q
        ps.prices[q] = new_price
        ps.profits[best_i] = inst.beta[(best_i, q)] - new_price
        stats.price_updates += 1
        if trace is not None:
            trace.append((stats.iterations, f"object:{q}", "reverse_attract",
                          q, old_price, new_price))
    return assigned, ps


def solve_centralized(inst: AsymmetricInstance, epsilon: float,
                      config: AuctionConfig | None = None,
                      collect_trace: bool = False):
    """Forward then reverse auction from zero prices.

    Returns (assigned {i: q}, PriceState, AuctionStats, trace rows).
    """
    if config is None:
        config = AuctionConfig(epsilon=epsilon)
    ps = PriceState()
    assigned: dict = {}
    stats = AuctionStats()
    trace: list | None = [] if collect_trace else None
    solve_forward(inst, ps, assigned, epsilon, stats, trace,
                  config.max_iterations)
    solve_reverse(inst, ps, assigned, epsilon, stats, trace,
                  config.max_iterations)
    return assigned, ps, stats, (trace or [])


def _default_cap(inst: AsymmetricInstance, epsilon: float) -> int:
    spread = inst.beta_spread()
    m, n = inst.num_clients, max(inst.num_relays, 1)
    bound = m * n * n * math.ceil(spread / epsilon)
    # allow one bid per client even in the degenerate zero-spread case
    return max(bound, 4 * (m + inst.num_objects), 64)
