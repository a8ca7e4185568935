"""eedi-lab: finite-blocklength shaping, fiber simulation and EEDI analysis."""

__version__ = "0.1.0"
