"""Unit tests for eedi-lab."""
