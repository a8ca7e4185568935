"""Tests for eedi-lab."""
