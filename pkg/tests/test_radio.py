import math
import random

import pytest

from mmwassoc import (RadioParams, TopologyInstance, build_benefits,
                      cell_radius, integer_scaled, rate, snr)

PARAMS = RadioParams()


def test_reference_snr_matches_frozen_value():
    # hand-computed from the default link budget:
    # 1e-4 * (5e-3)^2 / (16 * pi^2 * 10^(-13.4) * 1e-3/1e6 * 1.2e9)
    got = PARAMS.snr_at_ref()
    assert got == pytest.approx(331.3897, rel=1e-4)
    assert 10.0 * math.log10(got) == pytest.approx(25.2033, abs=1e-3)


def test_cell_radius_closed_form():
    # r = d0 * (snr(d0) / 10^(10/10))^(1/eta) for the 10 dB target
    r = cell_radius(PARAMS, 10.0)
    assert r == pytest.approx(5.7566, abs=1e-3)
    assert snr(PARAMS, r) == pytest.approx(10.0, rel=1e-9)


def test_cell_radius_rejects_unreachable_target():
    with pytest.raises(ValueError):
        cell_radius(PARAMS, 60.0)


def test_snr_clamped_below_reference_distance():
    assert snr(PARAMS, 0.05) == snr(PARAMS, 1e-6) == PARAMS.snr_at_ref()
    assert snr(PARAMS, 1.0) == PARAMS.snr_at_ref()
    assert snr(PARAMS, 1.0001) < PARAMS.snr_at_ref()


def test_snr_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        snr(PARAMS, 0.0)
    with pytest.raises(ValueError):
        snr(PARAMS, -2.0)


def test_rate_monotone_in_distance():
    rng = random.Random(7)
    for _ in range(200):
        d1 = rng.uniform(0.01, 50.0)
        d2 = d1 + rng.uniform(0.0, 50.0)
        assert rate(PARAMS, d2) <= rate(PARAMS, d1) + 1e-9


def test_square_law_pathloss_when_doubling_distance():
    # with eta = 2, doubling the distance quarters the SNR past d0
    for d in (2.0, 3.7, 11.0):
        assert snr(PARAMS, 2 * d) == pytest.approx(snr(PARAMS, d) / 4.0)


def test_pathloss_exponent_validation():
    with pytest.raises(ValueError):
        RadioParams(pathloss_exp=1.5)
    with pytest.raises(ValueError):
        RadioParams(pathloss_exp=6.5)
    RadioParams(pathloss_exp=4.0)  # valid


def test_params_dict_round_trip():
    p = RadioParams(pathloss_exp=3.0, interference_w_per_hz=1e-21)
    assert RadioParams.from_dict(p.to_dict()) == p


def _line_topology():
    return TopologyInstance(
        clients=[(0.0, 1.0), (4.0, 0.5)],
        relays=[(2.0, 0.0)],
        aps=[(0.0, 0.0), (5.0, 0.0)],
        radius=None)


def test_build_benefits_relayed_is_min_of_legs():
    topo = _line_topology()
    table = build_benefits(PARAMS, topo)
    for i in range(topo.num_clients):
        for k in range(topo.num_aps):
            r_ij = rate(PARAMS, topo.distance(("client", i), ("relay", 0)))
            r_jk = table.relay_ap[(0, k)]
            assert table.relayed[(i, 0, k)] == pytest.approx(min(r_ij, r_jk))
            assert table.relayed[(i, 0, k)] <= r_ij + 1e-9
            assert table.relayed[(i, 0, k)] <= r_jk + 1e-9


def test_build_benefits_blocked_link_zero_rate():
    topo = _line_topology()
    topo.block(("client", 0), ("ap", 0))
    table = build_benefits(PARAMS, topo)
    assert table.direct[(0, 0)] == 0.0
    assert table.direct[(0, 1)] > 0.0
    topo.unblock(("client", 0), ("ap", 0))
    assert build_benefits(PARAMS, topo).direct[(0, 0)] > 0.0


def test_build_benefits_blocked_relay_leg_zeroes_the_triple():
    topo = _line_topology()
    topo.block(("client", 0), ("relay", 0))
    table = build_benefits(PARAMS, topo)
    assert table.relayed[(0, 0, 0)] == 0.0
    assert table.relayed[(1, 0, 0)] > 0.0


def test_build_benefits_rejects_coincident_nodes():
    topo = TopologyInstance(clients=[(0.0, 0.0)], relays=[], aps=[(0.0, 0.0)])
    with pytest.raises(ValueError):
        build_benefits(PARAMS, topo)


def test_integer_scaled_rounding():
    assert integer_scaled(10.34, 0) == 10
    assert integer_scaled(10.34, 1) == 103
    assert integer_scaled(10.35, 2) == 1035
    assert integer_scaled(0.4999, 0) == 0
