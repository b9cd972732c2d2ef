import pytest

from mmwassoc import (AsymmetricInstance, RadioParams, build_asymmetric,
                      build_benefits, solve_exact_mcf)
from mmwassoc.errors import ScenarioError
from mmwassoc.harness import GeneratorSpec, generate_topology
from mmwassoc.problem import TopologyInstance, assignment_value
from mmwassoc.simulation import (VIRTUAL, ClientAgent, DynamicNetwork,
                                 Message, RelayAgent, Scenario, SimConfig,
                                 Simulator, bid_bound, run_dynamic,
                                 run_static, trace_to_csv)

PARAMS = RadioParams()


def _single_client_instance():
    return AsymmetricInstance(
        num_clients=1, num_relays=1,
        beta={(0, 0): 8.0, (0, 1): 5.0},
        objects_of=[[0, 1]], client_ap=[0], relay_ap=[0])


def _random_instance(seed, num_aps=2, clients_per_ap=4, num_relays=4):
    spec = GeneratorSpec(num_aps=num_aps, clients_per_ap=clients_per_ap,
                         num_relays=num_relays)
    topo = generate_topology(spec, PARAMS, seed)
    return build_asymmetric(build_benefits(PARAMS, topo), topo, scale=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        SimConfig(epsilon=0.1, latency_ms=(5.0, 1.0))
    with pytest.raises(ValueError):
        SimConfig(epsilon=0.1, latency_ms=(0.0, 1.0))


def test_first_bid_value_and_acceptance():
    # single client: bid = price + (beta_relay - price) - beta_direct + eps
    inst = _single_client_instance()
    res = run_static(inst, SimConfig(epsilon=0.5), seed=0)
    bids = [row for row in res.trace if row[3] == "bid"]
    assert len(bids) == 1
    assert bids[0][5] == pytest.approx(3.5)
    accepts = [row for row in res.trace if row[3] == "accept"]
    assert len(accepts) == 1
    assert res.assigned == {0: 0}
    assert res.objective == 8.0
    assert res.price_state.price(0) == pytest.approx(3.5)


def test_simultaneous_bids_resolved_by_max_rule():
    # with unit latency both opening bids arrive in the same instant;
    # the relay must take the higher one and turn the other down
    inst = AsymmetricInstance(
        num_clients=2, num_relays=1,
        beta={(0, 0): 8.0, (0, 1): 5.0, (1, 0): 9.0, (1, 2): 5.0},
        objects_of=[[0, 1], [0, 2]], client_ap=[0, 0], relay_ap=[0])
    res = run_static(inst, SimConfig(epsilon=0.5, latency_ms=(1.0, 1.0)),
                     seed=0)
    assert res.assigned == {0: inst.virtual_of(0), 1: 0}
    assert res.objective == 14.0
    assert res.price_state.price(0) == pytest.approx(4.5)
    assert res.stats.total_bids == 2
    assert res.stats.accepted_bids == 1


def test_relay_accept_threshold():
    sim = Simulator(SimConfig(epsilon=1.0, latency_ms=(1.0, 1.0)), seed=0)
    sim.clients[0] = ClientAgent(0, 0, 5.0, {0: 9.0})
    relay = RelayAgent(0, {0}, price=3.0)
    sim.relays[0] = relay

    low = Message("bid", ("client", 0), ("relay", 0),
                  {"client": 0, "value": 3.5}, 0.0)
    sim._relay_bids(relay, [low])
    assert relay.client is None and relay.price == 3.0
    assert sim.stats.rejected_bids == 1

    exact = Message("bid", ("client", 0), ("relay", 0),
                    {"client": 0, "value": 4.0}, 0.0)
    sim._relay_bids(relay, [exact])
    assert relay.client == 0 and relay.price == 4.0
    assert sim.stats.accepted_bids == 1


def test_reverse_survey_price_rule():
    # margins 9 and 4 with lambda = 0, eps = 0.1 -> new price 3.9
    cfg = SimConfig(epsilon=0.1, latency_ms=(1.0, 1.0), reverse_auction=True)
    sim = Simulator(cfg, seed=0)
    c0 = ClientAgent(0, 0, 1.0, {0: 10.0})
    c1 = ClientAgent(1, 0, 1.0, {0: 5.0})
    c0.price_view[0] = 20.0   # stale-high views keep both clients passive
    c1.price_view[0] = 20.0
    sim.clients = {0: c0, 1: c1}
    sim.relays[0] = RelayAgent(0, {0, 1}, price=8.0)
    sim.wake_all()
    sim.run()
    relay = sim.relays[0]
    assert relay.price == pytest.approx(3.9)
    assert relay.client == 0
    assert c0.q == 0
    assert sim.stats.reverse_connects == 1
    assert sim.stats.surveys == 1


def test_reverse_drops_price_without_takers():
    cfg = SimConfig(epsilon=0.1, latency_ms=(1.0, 1.0), reverse_auction=True)
    sim = Simulator(cfg, seed=0)
    c0 = ClientAgent(0, 0, 9.95, {0: 10.0})   # margin 0.05 < eps
    c0.price_view[0] = 20.0
    sim.clients = {0: c0}
    sim.relays[0] = RelayAgent(0, {0}, price=8.0)
    sim.wake_all()
    sim.run()
    assert sim.relays[0].price == 0.0
    assert sim.relays[0].client is None
    assert c0.q == VIRTUAL


def test_static_runs_meet_gap_and_bid_bound():
    for seed in range(20):
        inst = _random_instance(seed)
        optimum = solve_exact_mcf(inst).objective
        for eps in (0.1, 0.5):
            res = run_static(inst, SimConfig(epsilon=eps), seed)
            assert res.objective >= optimum - inst.num_clients * eps - 1e-9
            assert res.objective <= optimum + 1e-9
            assert res.stats.accepted_bids <= bid_bound(inst, eps, False)
            report = res.eps_cs(inst, eps)
            assert report.ok, (seed, eps, report)


def test_static_staleness_invariant():
    for seed in range(10):
        inst = _random_instance(seed)
        res = run_static(inst, SimConfig(epsilon=0.1, check_staleness=True),
                         seed)
        assert res.stats.staleness_violations == 0


def test_static_determinism():
    inst = _random_instance(5)
    cfg = SimConfig(epsilon=0.1)
    a = run_static(inst, cfg, seed=3)
    b = run_static(inst, cfg, seed=3)
    assert trace_to_csv(a.trace) == trace_to_csv(b.trace)
    assert a.assigned == b.assigned
    assert a.stats == b.stats


def test_broadcast_mode_converges_too():
    for seed in range(10):
        inst = _random_instance(seed)
        optimum = solve_exact_mcf(inst).objective
        res = run_static(inst, SimConfig(epsilon=0.1, broadcast_prices=True),
                         seed)
        assert res.objective >= optimum - inst.num_clients * 0.1 - 1e-9
        assert res.eps_cs(inst, 0.1).ok


def test_trace_csv_header():
    inst = _single_client_instance()
    res = run_static(inst, SimConfig(epsilon=0.5), seed=0)
    text = trace_to_csv(res.trace)
    assert text.splitlines()[0] == ("time_ms,actor_kind,actor_id,event,"
                                    "object,bid_or_price,"
                                    "objective_if_quiescent")


# ---------------------------------------------------------------------------
# dynamic runs


def _fresh_net(seed=0, num_aps=2, clients_per_ap=3, num_relays=3):
    spec = GeneratorSpec(num_aps=num_aps, clients_per_ap=clients_per_ap,
                         num_relays=num_relays)
    topo = generate_topology(spec, PARAMS, seed)
    return DynamicNetwork(PARAMS, topo, benefit_scale=1e-9)


def test_scenario_validation_errors():
    net = _fresh_net()
    with pytest.raises(ScenarioError):
        Scenario(events=[{"kind": "teleport", "slot": 1}]).validate(net)
    with pytest.raises(ScenarioError):
        Scenario(horizon_slots=10,
                 events=[{"kind": "client_join", "slot": 99,
                          "position": [0.0, 0.0]}]).validate(net)
    with pytest.raises(ScenarioError):
        Scenario(events=[{"kind": "client_leave", "slot": 1,
                          "client": 999}]).validate(net)
    with pytest.raises(ScenarioError):
        Scenario(events=[{"kind": "relay_leave", "slot": 1,
                          "relay": 999}]).validate(net)


def test_empty_scenario_matches_static_run():
    seed = 2
    net = _fresh_net(seed)
    inst, client_ids, relay_ids = net.snapshot_instance()
    scn = Scenario(epsilon=0.1, seed=seed, events=[], benefit_scale=1e-9)
    dyn = run_dynamic(net, scn, compute_optima=False)
    static = run_static(inst, scn.config(), seed)
    assert dyn.final_objective == pytest.approx(static.objective)
    assert dyn.post_event_accepted_bids == 0
    assert dyn.stats.accepted_bids == static.stats.accepted_bids
    assert len(dyn.quiescent_points) == 1


def test_blockage_forces_relay_detour_then_recovery():
    topo = TopologyInstance(
        clients=[(3.0, 0.0)], relays=[(1.5, 3.0)], aps=[(0.0, 0.0)])
    net = DynamicNetwork(PARAMS, topo, benefit_scale=1e-9)
    inst0, _c, _r = net.snapshot_instance()
    direct = inst0.beta[(0, inst0.virtual_of(0))]
    scn = Scenario(
        epsilon=0.1, horizon_slots=20, seed=0, benefit_scale=1e-9,
        events=[{"kind": "blockage", "slot": 2,
                 "link": [["client", 0], ["ap", 0]], "duration_slots": 3}])
    result = run_dynamic(net, scn)
    # while blocked the client must ride the relay; afterwards it returns
    for point in result.quiescent_points:
        assert point.optimum is not None
        assert point.objective >= point.optimum - 0.1 - 1e-9
    mid = result.quiescent_points[1]
    assert mid.objective > 0.0
    assert mid.objective < direct          # relayed path is the weaker one
    assert result.final_objective == pytest.approx(direct)


def test_client_leave_frees_its_relay():
    topo = TopologyInstance(
        clients=[(3.0, 0.0), (3.1, 0.2)], relays=[(1.5, 0.2)],
        aps=[(0.0, 0.0)])
    net = DynamicNetwork(PARAMS, topo, benefit_scale=1e-9)
    scn = Scenario(
        epsilon=0.1, horizon_slots=20, seed=1, benefit_scale=1e-9,
        events=[{"kind": "client_leave", "slot": 5, "client": 0}])
    result = run_dynamic(net, scn)
    last = result.quiescent_points[-1]
    assert last.objective >= last.optimum - 1 * 0.1 - 1e-9


def test_relay_join_attracts_a_client_via_reverse_auction():
    topo = TopologyInstance(
        clients=[(3.0, 0.0)], relays=[], aps=[(0.0, 0.0)])
    net = DynamicNetwork(PARAMS, topo, benefit_scale=1e-9)
    scn = Scenario(
        epsilon=0.1, horizon_slots=20, seed=4, benefit_scale=1e-9,
        events=[{"kind": "relay_join", "slot": 2, "position": [1.5, 0.1]}])
    result = run_dynamic(net, scn)
    last = result.quiescent_points[-1]
    assert last.objective >= last.optimum - 0.1 - 1e-9
    assert result.stats.reverse_connects >= 1


def test_dynamic_determinism():
    scn_events = [
        {"kind": "client_join", "slot": 3, "position": [1.0, 1.0]},
        {"kind": "relay_join", "slot": 6, "position": [2.0, 0.5]},
        {"kind": "client_leave", "slot": 9, "client": 0},
    ]
    traces = []
    for _ in range(2):
        net = _fresh_net(7)
        scn = Scenario(epsilon=0.1, horizon_slots=20, seed=7,
                       benefit_scale=1e-9, events=list(scn_events))
        result = run_dynamic(net, scn, compute_optima=False)
        traces.append(trace_to_csv(result.trace))
    assert traces[0] == traces[1]


def test_dynamic_gap_after_each_event():
    for seed in range(8):
        net = _fresh_net(seed)
        scn = Scenario(
            epsilon=0.1, horizon_slots=40, seed=seed, benefit_scale=1e-9,
            events=[
                {"kind": "client_join", "slot": 10,
                 "position": [1.0, 0.5]},
                {"kind": "relay_join", "slot": 20,
                 "position": [2.5, -0.5]},
                {"kind": "client_leave", "slot": 30, "client": 1},
            ])
        result = run_dynamic(net, scn)
        m_max = len(net.clients) + 1     # one join, one leave
        for point in result.quiescent_points:
            assert point.objective >= point.optimum - m_max * 0.1 - 1e-9
            assert point.objective <= point.optimum + 1e-9
