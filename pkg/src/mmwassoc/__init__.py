"""Joint client association and relay selection for mmWave access
networks via distributed auction algorithms."""

from .auction import (AuctionConfig, AuctionStats, PriceState, check_eps_cs,
                      solve_centralized, solve_forward, solve_reverse)
from .oracle import (OracleResult, baseline_random, baseline_rssi,
                     solve_exact_mcf, solve_exhaustive)
from .problem import (Assignment, AsymmetricInstance, TopologyInstance,
                      best_ap_sets, build_asymmetric, check_load_balance,
                      recover_assignment, total_throughput)
from .radio import (BenefitTable, RadioParams, build_benefits, cell_radius,
                    integer_scaled, rate, snr)
from .simulation import (DynamicNetwork, Scenario, SimConfig, run_dynamic,
                         run_static)

__version__ = "0.1.0"

__all__ = [
    "AuctionConfig", "AuctionStats", "PriceState", "check_eps_cs",
    "solve_centralized", "solve_forward", "solve_reverse",
    "OracleResult", "baseline_random", "baseline_rssi", "solve_exact_mcf",
    "solve_exhaustive",
    "Assignment", "AsymmetricInstance", "TopologyInstance", "best_ap_sets",
    "build_asymmetric", "check_load_balance", "recover_assignment",
    "total_throughput",
    "BenefitTable", "RadioParams", "build_benefits", "cell_radius",
    "integer_scaled", "rate", "snr",
    "DynamicNetwork", "Scenario", "SimConfig", "run_dynamic", "run_static",
]
