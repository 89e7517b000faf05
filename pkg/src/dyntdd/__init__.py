"""Dynamic TDD uplink/downlink configuration for small-cell networks."""
from .config import ScenarioConfig, parse_config, write_config
from .engine import MetricsReport, Simulation, packet_throughput, run_simulation
from .frame import Link
from .topology import NetworkTopology, PowerConfig, generate_topology

__version__ = "0.1.0"

__all__ = [
    "Link",
    "MetricsReport",
    "NetworkTopology",
    "PowerConfig",
    "ScenarioConfig",
    "Simulation",
    "generate_topology",
    "packet_throughput",
    "parse_config",
    "run_simulation",
    "write_config",
]
