"""Kubernetes pod/container lifecycle simulation, calibration and planning."""

__version__ = "0.1.0"
