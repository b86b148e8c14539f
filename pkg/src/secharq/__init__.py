"""Rate adaptation and outage analysis for secure incremental-redundancy HARQ."""

from secharq.channel import (
    DiscreteStateDist,
    MiTrace,
    RayleighParams,
    db_to_linear,
    mutual_info_from_snr,
    sample_snr,
    sample_trace,
    snr_tail,
)
from secharq.protocols import (
    RateSchedule,
    TiedSchedule,
    Variant,
    decode_event,
    secrecy_event,
    session_secure,
    transmission_count,
)
from secharq.analytics import (
    PerformanceReport,
    PrefixProbs,
    connection_outage,
    evaluate_discrete,
    expected_transmissions,
    prefix_probs_discrete,
    secrecy_outage,
    throughput,
)
from secharq.closedform import (
    OutageConstraints,
    compatible,
    max_secrecy_rate_one_tx,
    pco_one_tx,
    pso_one_tx,
    r1_max,
    r1_min,
)
from secharq.montecarlo import McConfig, estimate_joint_secrecy_outage, estimate_prefix_probs, evaluate_rayleigh
from secharq.optimizer import Grids, OptResult, find_r2_star, optimize, optimize_per_rate, tradeoff_curve

__version__ = "0.1.0"

__all__ = [
    "DiscreteStateDist",
    "Grids",
    "McConfig",
    "OptResult",
    "MiTrace",
    "OutageConstraints",
    "PerformanceReport",
    "PrefixProbs",
    "RateSchedule",
    "RayleighParams",
    "TiedSchedule",
    "Variant",
    "compatible",
    "connection_outage",
    "db_to_linear",
    "decode_event",
    "estimate_joint_secrecy_outage",
    "estimate_prefix_probs",
    "evaluate_discrete",
    "evaluate_rayleigh",
    "find_r2_star",
    "expected_transmissions",
    "max_secrecy_rate_one_tx",
    "mutual_info_from_snr",
    "optimize",
    "optimize_per_rate",
    "pco_one_tx",
    "prefix_probs_discrete",
    "pso_one_tx",
    "r1_max",
    "r1_min",
    "sample_snr",
    "sample_trace",
    "secrecy_event",
    "secrecy_outage",
    "session_secure",
    "snr_tail",
    "throughput",
    "tradeoff_curve",
    "transmission_count",
]
