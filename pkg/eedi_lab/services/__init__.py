"""eedi-lab services: shaping, metrics, channel simulation and analysis."""
