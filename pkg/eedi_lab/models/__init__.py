"""eedi-lab data models."""
