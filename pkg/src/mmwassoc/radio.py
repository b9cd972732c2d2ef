"""Physical-layer model: SNR, achievable rate and link benefits.

The rate model is a Friis link budget with log-distance path loss.  Below
the far-field reference distance d0 the SNR (and hence the rate) is
clamped at its d0 value, so short links never show unphysical gains.
Blocked links carry zero rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .problem import TopologyInstance

# Default parameter set: 1200 MHz bandwidth, 0.1 mW transmit power,
# -134 dBm/MHz noise floor, unit antenna gains, 5 mm carrier, d0 = 1 m.
_DEFAULT_NOISE = 10.0 ** (-134.0 / 10.0) * 1e-3 / 1e6  # W/Hz


@dataclass(frozen=True)
class RadioParams:
    bandwidth_hz: float = 1.2e9
    tx_power_w: float = 1e-4
    gain_tx: float = 1.0
    gain_rx: float = 1.0
    wavelength_m: float = 5e-3
    ref_distance_m: float = 1.0
    pathloss_exp: float = 2.0
    noise_w_per_hz: float = _DEFAULT_NOISE
    interference_w_per_hz: float = 0.0

    def __post_init__(self):
        for name in ("bandwidth_hz", "tx_power_w", "ref_distance_m", "wavelength_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 2.0 <= self.pathloss_exp <= 6.0:
            raise ValueError("pathloss_exp must lie in [2, 6]")
        if self.noise_w_per_hz <= 0:
            raise ValueError("noise_w_per_hz must be > 0")
        if self.interference_w_per_hz < 0:
            raise ValueError("interference_w_per_hz must be >= 0")

    def snr_at_ref(self) -> float:
        """SNR of a link at (or below) the reference distance d0."""
        num = self.tx_power_w * self.gain_tx * self.gain_rx * self.wavelength_m ** 2
        den = (16.0 * math.pi ** 2
               * (self.noise_w_per_hz + self.interference_w_per_hz)
               * self.bandwidth_hz)
        return num / den

    def to_dict(self) -> dict:
        return {
            "bandwidth_hz": self.bandwidth_hz,
            "tx_power_w": self.tx_power_w,
            "gain_tx": self.gain_tx,
            "gain_rx": self.gain_rx,
            "wavelength_m": self.wavelength_m,
            "ref_distance_m": self.ref_distance_m,
            "pathloss_exp": self.pathloss_exp,
            "noise_w_per_hz": self.noise_w_per_hz,
            "interference_w_per_hz": self.interference_w_per_hz,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadioParams":
        return cls(**{k: float(v) for k, v in data.items()})


def snr(params: RadioParams, d: float) -> float:
    """Linear SNR at distance d (meters); constant for d <= d0."""
    if not d > 0 or not math.isfinite(d):
        raise ValueError(f"distance must be positive and finite, got {d}")
    base = params.snr_at_ref()
    if d <= params.ref_distance_m:
        return base
    return base * (d / params.ref_distance_m) ** (-params.pathloss_exp)


def rate(params: RadioParams, d: float) -> float:
    """Maximum achievable rate in bits/s at distance d (meters)."""
    return params.bandwidth_hz * math.log2(1.0 + snr(params, d))


def cell_radius(params: RadioParams, target_snr_db: float = 10.0) -> float:
    """Distance at which the SNR drops to the given dB target.

    Closed form of snr(r) = target for r >= d0.
    """
    target = 10.0 ** (target_snr_db / 10.0)
    base = params.snr_at_ref()
    if target > base:
        raise ValueError(
            f"SNR target {target_snr_db} dB exceeds the reference-distance "
            f"SNR ({10.0 * math.log10(base):.2f} dB)")
    return params.ref_distance_m * (base / target) ** (1.0 / params.pathloss_exp)


@dataclass
class BenefitTable:
    """Per-link throughput benefits in bits/s.

    direct maps (client, ap) pairs, relayed maps (client, relay, ap)
    triples, and relay_ap holds the relay-to-AP leg rates needed to pick
    each relay's best AP.
    """

    direct: dict = field(default_factory=dict)          # (i, k) -> bits/s
    relayed: dict = field(default_factory=dict)         # (i, j, k) -> bits/s
    relay_ap: dict = field(default_factory=dict)        # (j, k) -> bits/s


def build_benefits(params: RadioParams, topo: "TopologyInstance") -> BenefitTable:
    """Evaluate every eligible direct and relayed link of a topology.

    Blocked links contribute zero rate; the relayed benefit is the
    minimum of its two legs.
    """
    table = BenefitTable()

    def link_rate(a, b):
        if topo.is_blocked(a, b):
            return 0.0
        d = topo.distance(a, b)
        if d <= 0:
            raise ValueError(f"coincident nodes {a} and {b}")
        return rate(params, d)

    for i in range(topo.num_clients):
        for k in topo.aps_of_client(i):
            table.direct[(i, k)] = link_rate(("client", i), ("ap", k))
    for j in range(topo.num_relays):
        for k in topo.aps_of_relay(j):
            table.relay_ap[(j, k)] = link_rate(("relay", j), ("ap", k))
    for i in range(topo.num_clients):
        for j in topo.relays_of_client(i):
            r_ij = link_rate(("client", i), ("relay", j))
            for k in topo.aps_of_relay(j):
                table.relayed[(i, j, k)] = min(r_ij, table.relay_ap[(j, k)])
    return table


def integer_scaled(value: float, digits: int = 0) -> int:
    """Scale a benefit by 10**digits and round to the nearest integer.

    Used to enter the exact-optimality regime of the auction (integer
    benefits with epsilon < 1/M).
    """
    return int(round(value * 10.0 ** digits))


__all__ = [
    "RadioParams", "BenefitTable", "snr", "rate", "cell_radius",
    "build_benefits", "integer_scaled", "replace",
]
